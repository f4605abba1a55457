import numpy as np
import pytest

from prunesearch.arch import ArchSpecError, SparsityTargets, StructureError, \
    compute_cost, is_feasible, parse_arch_spec, pruning_rates

from oracles import brute_force_cost

TINY_CHAIN = """
name: chain3
input_shape: [2, 5, 5]
layers:
  - id: image
    kind: input
  - id: conv1
    kind: conv
    inputs: [image]
    kernel_h: 3
    kernel_w: 3
    padding: same
    base_out_channels: 4
    has_bias: true
    has_bn: true
  - id: conv2
    kind: conv
    inputs: [conv1]
    kernel_h: 3
    kernel_w: 3
    padding: valid
    base_out_channels: 6
  - id: head
    kind: fc
    inputs: [conv2]
    base_out_channels: 5
    has_bias: true
"""

RESIDUAL_TOY = """
name: res-toy
input_shape: [2, 6, 6]
layers:
  - id: image
    kind: input
  - id: stem
    kind: conv
    inputs: [image]
    kernel_h: 3
    kernel_w: 3
    padding: same
    base_out_channels: 4
    tie_group: trunk
  - id: inner
    kind: conv
    inputs: [stem]
    kernel_h: 3
    kernel_w: 3
    padding: same
    base_out_channels: 6
  - id: back
    kind: conv
    inputs: [inner]
    kernel_h: 3
    kernel_w: 3
    padding: same
    base_out_channels: 4
    tie_group: trunk
  - id: join
    kind: add
    inputs: [stem, back]
  - id: head
    kind: fc
    inputs: [join]
    base_out_channels: 3
    searchable: false
    has_bias: true
"""


class TestParse:
    def test_t2_base_structure(self, t2):
        assert t2.base_structure == (4, 8)
        assert t2.num_variables == 2

    def test_vgg16_base_structure(self, vgg16):
        assert vgg16.base_structure == (
            64, 64, 128, 128, 256, 256, 256, 512, 512, 512, 512, 512, 512)

    def test_resnet56_tie_groups(self, resnet56):
        assert resnet56.num_variables == 30
        # one tied stage variable plus nine per-block variables per stage
        assert resnet56.base_structure.count(16) == 10
        assert resnet56.base_structure.count(32) == 10
        assert resnet56.base_structure.count(64) == 10

    def test_no_searchable_layers_rejected(self):
        doc = """
name: empty
input_shape: [3, 4, 4]
layers:
  - id: image
    kind: input
  - id: head
    kind: fc
    inputs: [image]
    base_out_channels: 10
    searchable: false
"""
        with pytest.raises(ArchSpecError, match="no searchable layers"):
            parse_arch_spec(doc)

    def test_unknown_field_rejected(self):
        doc = TINY_CHAIN.replace("has_bias: true", "has_bias: true\n    frobnicate: 1", 1)
        with pytest.raises(ArchSpecError, match="unknown fields"):
            parse_arch_spec(doc)

    def test_dangling_input_rejected(self):
        doc = TINY_CHAIN.replace("inputs: [conv1]", "inputs: [convX]")
        with pytest.raises(ArchSpecError, match="does not name an earlier"):
            parse_arch_spec(doc)

    def test_untied_add_rejected(self):
        doc = RESIDUAL_TOY.replace("    tie_group: trunk\n  - id: join",
                                   "  - id: join")
        with pytest.raises(ArchSpecError, match="tie_group"):
            parse_arch_spec(doc)

    def test_groups_must_divide_channels(self):
        doc = TINY_CHAIN.replace("base_out_channels: 6",
                                 "base_out_channels: 6\n    groups: 4")
        with pytest.raises(ArchSpecError, match="groups"):
            parse_arch_spec(doc)

    def test_valid_padding_size_must_be_integral(self):
        doc = TINY_CHAIN.replace("padding: valid",
                                 "padding: valid\n    stride: 3")
        with pytest.raises(ArchSpecError, match="spatial"):
            parse_arch_spec(doc)


class TestCost:
    def test_t2_reference_values(self, t2):
        report = compute_cost(t2, (4, 8))
        assert report.flops == 25344
        assert report.params == 396

    def test_t2_half_first_layer(self, t2):
        assert compute_cost(t2, (2, 8)).flops == 12672

    def test_base_structure_is_base_cost(self, vgg16):
        assert compute_cost(vgg16, vgg16.base_structure) == vgg16.base_cost

    def test_length_mismatch(self, t2):
        with pytest.raises(StructureError, match="entries"):
            compute_cost(t2, (4, 8, 2))

    def test_out_of_range_channel(self, t2):
        with pytest.raises(StructureError):
            compute_cost(t2, (5, 8))
        with pytest.raises(StructureError):
            compute_cost(t2, (0, 8))

    def test_matches_brute_force_on_toy_chain(self):
        spec = parse_arch_spec(TINY_CHAIN)
        rng = np.random.default_rng(7)
        for _ in range(25):
            s = tuple(int(rng.integers(1, c + 1))
                      for c in spec.base_structure)
            report = compute_cost(spec, s)
            macs, weights = brute_force_cost(spec, s)
            assert (report.flops, report.params) == (macs, weights)

    def test_matches_brute_force_with_ties_and_add(self):
        spec = parse_arch_spec(RESIDUAL_TOY)
        assert spec.base_structure == (4, 6)
        for s in [(4, 6), (2, 6), (4, 3), (1, 1), (3, 5)]:
            report = compute_cost(spec, s)
            macs, weights = brute_force_cost(spec, s)
            assert (report.flops, report.params) == (macs, weights)

    def test_monotone_in_every_coordinate(self, vgg16):
        rng = np.random.default_rng(11)
        for _ in range(30):
            s = tuple(int(rng.integers(1, c + 1))
                      for c in vgg16.base_structure)
            t = tuple(int(rng.integers(lo, c + 1))
                      for lo, c in zip(s, vgg16.base_structure))
            cs, ct = compute_cost(vgg16, s), compute_cost(vgg16, t)
            assert cs.flops <= ct.flops
            assert cs.params <= ct.params

    def test_tied_layers_share_channels(self, resnet56):
        spec = resnet56
        s = list(spec.base_structure)
        s[0] = 8  # stage-1 trunk variable
        tied = [l.id for l in spec.layers if l.tie_group == "stage1"]
        assert len(tied) == 10
        for lid in tied:
            assert spec.resolved_channels(lid, s) == 8


class TestRates:
    def test_identity(self, t2):
        assert pruning_rates(t2, (4, 8)) == (0.0, 0.0)

    def test_t2_half_flops(self, t2):
        r_f, r_p = pruning_rates(t2, (2, 8))
        assert r_f == pytest.approx(0.5)
        # params([2,8]) = 9*3*2 + 9*2*8 = 198 -> exactly half of 396
        assert r_p == pytest.approx(0.5)

    def test_t2_quarter(self, t2):
        r_f, r_p = pruning_rates(t2, (2, 4))
        assert r_f == pytest.approx(1 - 8064 / 25344)
        assert r_p == pytest.approx(1 - 126 / 396)

    def test_near_quadratic_scaling(self, vgg16):
        for alpha in (0.25, 0.5, 0.75):
            s = tuple(max(1, round(alpha * c)) for c in vgg16.base_structure)
            _, r_p = pruning_rates(vgg16, s)
            assert abs(r_p - (1 - alpha * alpha)) < 0.1


class TestFeasibility:
    def test_zero_targets_always_feasible(self, t2):
        targets = SparsityTargets(0.0, 0.0)
        assert is_feasible(t2, (4, 8), targets)
        assert is_feasible(t2, (1, 1), targets)

    def test_flops_target(self, t2):
        assert is_feasible(t2, (2, 8), SparsityTargets(0.5, 0.0))
        assert not is_feasible(t2, (3, 8), SparsityTargets(0.5, 0.0))

    def test_both_targets(self, t2):
        # params([2,8]) = 198 of 396, so both rates sit exactly at 0.5
        assert is_feasible(t2, (2, 8), SparsityTargets(0.5, 0.5))
        assert not is_feasible(t2, (2, 8), SparsityTargets(0.5, 0.6))

    def test_targets_validated(self):
        with pytest.raises(ValueError):
            SparsityTargets(flops_rate=1.5)
