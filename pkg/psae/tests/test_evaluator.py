import pytest

from psae.evaluator import PsaeConfig, StructureEvaluator


@pytest.fixture(scope="module")
def evaluator(quick_model):
    config = PsaeConfig(calibration_sample_count=1000,
                        validation_subset_size="all", seed=0)
    return StructureEvaluator(quick_model, config)


class TestEvaluate:
    def test_full_structure_matches_stored_accuracy(self, tiny3, evaluator,
                                                    quick_model):
        got = evaluator.evaluate(tiny3.base_structure)
        assert abs(got - quick_model.accuracy) <= 0.01

    def test_repeatable(self, tiny3, evaluator):
        s = (12, 24, 24)
        assert evaluator.evaluate(s) == evaluator.evaluate(s)

    def test_accuracy_in_unit_interval(self, evaluator):
        for s in [(24, 48, 48), (3, 6, 6), (12, 24, 36)]:
            assert 0.0 <= evaluator.evaluate(s) <= 1.0

    def test_wrong_length_rejected(self, evaluator):
        with pytest.raises(ValueError):
            evaluator.evaluate((24, 48))

    def test_minimum_not_better_than_full_on_most_seeds(self, tiny3,
                                                        trained_models):
        votes = 0
        for seed, model in trained_models.items():
            ev = StructureEvaluator(model, PsaeConfig(
                calibration_sample_count=1000,
                validation_subset_size="all", seed=0))
            full = ev.evaluate(tiny3.base_structure)
            minimum = ev.evaluate((1, 1, 1))
            assert minimum >= 0.0
            votes += minimum <= full
        assert votes >= 3


class TestConfig:
    def test_validation_subset_size_checked(self):
        with pytest.raises(ValueError):
            PsaeConfig(validation_subset_size=0)

    def test_calibration_count_checked(self):
        with pytest.raises(ValueError):
            PsaeConfig(calibration_sample_count=0)

    def test_val_subset_is_seed_stable(self, quick_model, tiny3):
        a = StructureEvaluator(quick_model, PsaeConfig(
            calibration_sample_count=500, validation_subset_size=300,
            seed=4))
        b = StructureEvaluator(quick_model, PsaeConfig(
            calibration_sample_count=500, validation_subset_size=300,
            seed=4))
        assert a.evaluate(tiny3.base_structure) == \
               b.evaluate(tiny3.base_structure)
