import io
import json

import pytest

from psae.evaluator import PsaeConfig, StructureEvaluator
from psae.server import descriptor, serve


@pytest.fixture(scope="module")
def evaluator(quick_model):
    return StructureEvaluator(quick_model, PsaeConfig(
        calibration_sample_count=500, validation_subset_size=300, seed=0))


def run_session(evaluator, lines):
    rfile = io.StringIO("".join(line + "\n" for line in lines))
    wfile = io.StringIO()
    log = io.StringIO()
    serve(evaluator, rfile, wfile, log=log)
    return [json.loads(l) for l in wfile.getvalue().splitlines()], \
        [json.loads(l) for l in log.getvalue().splitlines()]


class TestProtocol:
    def test_hello_returns_descriptor_with_length(self, evaluator):
        replies, _ = run_session(evaluator, ['{"type":"hello","version":1}'])
        assert replies[0]["type"] == "descriptor"
        assert replies[0]["expected_vector_length"] == 3
        assert replies[0]["deterministic"] is True
        assert replies[0]["concurrent_safe"] is False
        assert replies[0]["value_range"] == [0.0, 1.0]

    def test_eval_round_trip(self, evaluator, tiny3):
        replies, log = run_session(evaluator, [
            '{"type":"hello","version":1}',
            '{"type":"eval","id":1,"structure":[24,48,48]}',
            '{"type":"bye"}',
        ])
        assert replies[1]["type"] == "result" and replies[1]["id"] == 1
        assert replies[1]["fitness"] == pytest.approx(
            evaluator.evaluate(tiny3.base_structure))
        assert log[0]["structure"] == [24, 48, 48]

    def test_wrong_length_error_keeps_serving(self, evaluator):
        replies, _ = run_session(evaluator, [
            '{"type":"eval","id":5,"structure":[24,48]}',
            '{"type":"eval","id":6,"structure":[24,48,48]}',
        ])
        assert replies[0]["type"] == "error" and replies[0]["id"] == 5
        assert replies[1]["type"] == "result" and replies[1]["id"] == 6

    def test_unknown_type_reported(self, evaluator):
        replies, _ = run_session(evaluator, ['{"type":"gossip","id":9}'])
        assert replies[0]["type"] == "error"
        assert "unknown message type" in replies[0]["message"]

    def test_malformed_line_reported(self, evaluator):
        replies, _ = run_session(evaluator, ["{broken"])
        assert replies[0]["type"] == "error"

    def test_fifty_request_session_each_id_answered_once(self, evaluator):
        requests = ['{"type":"hello","version":1}']
        for i in range(1, 51):
            requests.append(json.dumps(
                {"type": "eval", "id": i, "structure": [12, 24, 24]}))
        requests.append('{"type":"bye"}')
        replies, log = run_session(evaluator, requests)
        results = [r for r in replies if r["type"] == "result"]
        assert sorted(r["id"] for r in results) == list(range(1, 51))
        assert sorted(e["id"] for e in log) == list(range(1, 51))
        assert len({r["fitness"] for r in results}) == 1  # deterministic
