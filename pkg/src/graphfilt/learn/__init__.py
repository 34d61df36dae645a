"""Data-driven filter estimation and graph convolutional networks."""

from .gnn import (
    GnnLayer,
    GnnModel,
    gcn_shift,
    get_params,
    gnn_forward,
    gnn_init,
    gnn_loss,
    gnn_preset,
    gnn_train,
    loss_and_grad,
    set_params,
)
from .identify import (
    IdentifyResult,
    LiftedSolution,
    blind_deconvolve,
    lifted_objective,
    lifting_operator,
    rank_one_factor,
    system_identify,
)
from .lms import LmsConfig, LmsDivergenceError, LmsResult, lms_diffusion, regressors

__all__ = [
    "GnnLayer", "GnnModel", "gcn_shift", "get_params", "gnn_forward", "gnn_init", "gnn_loss",
    "gnn_preset", "gnn_train", "loss_and_grad", "set_params",
    "IdentifyResult", "LiftedSolution", "blind_deconvolve", "lifted_objective",
    "lifting_operator", "rank_one_factor", "system_identify",
    "LmsConfig", "LmsDivergenceError", "LmsResult", "lms_diffusion", "regressors",
]
