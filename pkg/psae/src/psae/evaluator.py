"""Structure evaluation: sample weights, recalibrate, measure accuracy."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, make_dataset
from .model import ReferenceModel, accuracy_on
from .pruning import MODE_L1, sample_weights
from .recalibrate import recalibrate_bn


@dataclass(frozen=True)
class PsaeConfig:
    """Evaluation settings; calibration draws from the training split only."""

    calibration_sample_count: int = 2000
    calibration_batch_size: int = 128
    validation_subset_size: int | str = "all"
    dataset: str = "synthetic"
    seed: int = 0
    selection_mode: str = MODE_L1

    def __post_init__(self) -> None:
        if self.calibration_sample_count < 1:
            raise ValueError("calibration_sample_count must be positive")
        if (self.validation_subset_size != "all"
                and int(self.validation_subset_size) < 1):
            raise ValueError("validation_subset_size must be positive or "
                             "'all'")


@dataclass
class StructureEvaluator:
    """Serves accuracy estimates for structures of one reference model.

    The calibration and validation subsets are drawn once (seeded) and
    reused for every request so estimates stay mutually comparable.
    """

    reference: ReferenceModel
    config: PsaeConfig
    _calibration: np.ndarray = field(init=False, repr=False)
    _val_x: np.ndarray = field(init=False, repr=False)
    _val_y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        dataset: Dataset = make_dataset(self.config.dataset)
        rng = np.random.default_rng(self.config.seed)
        n_calib = min(self.config.calibration_sample_count,
                      len(dataset.train_x))
        calib_idx = rng.choice(len(dataset.train_x), size=n_calib,
                               replace=False)
        self._calibration = dataset.train_x[np.sort(calib_idx)]
        if self.config.validation_subset_size == "all":
            self._val_x, self._val_y = dataset.val_x, dataset.val_y
        else:
            n_val = min(int(self.config.validation_subset_size),
                        len(dataset.val_x))
            val_idx = np.sort(rng.choice(len(dataset.val_x), size=n_val,
                                         replace=False))
            self._val_x = dataset.val_x[val_idx]
            self._val_y = dataset.val_y[val_idx]

    @property
    def num_variables(self) -> int:
        return self.reference.desc.num_variables

    def evaluate(self, structure, selection_seed: int = 0) -> float:
        """Top-1 validation accuracy of the pruned-and-recalibrated model."""
        pruned = sample_weights(self.reference, structure,
                                mode=self.config.selection_mode,
                                selection_seed=selection_seed)
        recalibrate_bn(pruned, self._calibration,
                       self.config.calibration_batch_size)
        return accuracy_on(pruned, self._val_x, self._val_y)
