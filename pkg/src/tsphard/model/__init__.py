from .dataset import Dataset
from .mars import Hinge, MarsModel, Term, fit_mars, predict_mars
from .resampling import (
    SELECTION_THRESHOLD,
    SelectionTrace,
    cross_validate,
    forward_feature_selection,
    kfold_indices,
    weighted_partial_dependence,
)
from .tree import DecisionTree, fit_tree, predict_tree


def model_from_dict(d: dict):
    kind = d.get("type")
    if kind == "mars":
        return MarsModel.from_dict(d)
    if kind == "tree":
        return DecisionTree.from_dict(d)
    raise ValueError(f"unknown model type {kind!r}")
