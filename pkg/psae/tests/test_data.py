import numpy as np
import pytest

from psae.data import IMAGE_SIZE, NUM_CLASSES, make_dataset


def test_shapes_and_types():
    ds = make_dataset(n_train=200, n_val=50)
    assert ds.train_x.shape == (200, 1, IMAGE_SIZE, IMAGE_SIZE)
    assert ds.train_x.dtype == np.float32
    assert ds.train_y.shape == (200,)
    assert ds.val_x.shape == (50, 1, IMAGE_SIZE, IMAGE_SIZE)


def test_labels_in_range():
    ds = make_dataset(n_train=500, n_val=100)
    assert set(np.unique(ds.train_y)) <= set(range(NUM_CLASSES))
    assert len(np.unique(ds.train_y)) == NUM_CLASSES


def test_deterministic():
    a = make_dataset(n_train=100, n_val=20)
    b = make_dataset(n_train=100, n_val=20)
    assert np.array_equal(a.train_x, b.train_x)
    assert np.array_equal(a.val_y, b.val_y)


def test_unknown_name_rejected():
    with pytest.raises(ValueError, match="unknown dataset"):
        make_dataset("cifar10")


def test_classes_are_separable_by_prototype_matching():
    # nearest-prototype classification should beat chance by a wide margin,
    # otherwise the dataset carries no learnable signal
    ds = make_dataset(n_train=2000, n_val=500)
    prototypes = np.stack([
        ds.train_x[ds.train_y == c].mean(axis=0)[0]
        for c in range(NUM_CLASSES)])
    correct = 0
    for img, label in zip(ds.val_x, ds.val_y):
        scores = (prototypes * img[0]).sum(axis=(1, 2))
        correct += int(np.argmax(scores) == label)
    assert correct / len(ds.val_y) > 0.3
