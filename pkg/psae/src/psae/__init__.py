"""Pruned-structure accuracy evaluation over a pretrained reference CNN."""

from .archdesc import ArchDescription, asset_path, load, parse
from .data import Dataset, make_dataset
from .evaluator import PsaeConfig, StructureEvaluator
from .model import ArchNet, ReferenceModel, accuracy_on, load_model, \
    pretrain, save_model
from .pruning import MODE_L1, MODE_RANDOM, filter_l1_norms, random_indices, \
    sample_weights, top_l1_indices
from .recalibrate import bn_layers_in_order, recalibrate_bn
from .server import descriptor, serve, serve_endpoint

__version__ = "0.1.0"
