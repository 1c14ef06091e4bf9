"""Sparse graph fairing and semi-supervised graph anomaly detection."""

from .data import AnomalyTask, Dataset, load_dataset, make_anomaly_task, save_dataset
from .evaluate import ExperimentSummary, RunResult, auc, run_experiment, sensitivity_sweep
from .fairing import (
    ConvergenceError,
    FairingConfig,
    SolveReport,
    condition_bound,
    fair_direct,
    fair_jacobi,
    fairing_energy,
    transfer,
)
from .formats import (
    BadMagic,
    CountMismatch,
    DatasetError,
    MissingDatasetFile,
    load_checkpoint,
    read_features,
    save_checkpoint,
    write_features,
)
from .graph_core import (
    EdgeError,
    NormalizedOperator,
    OperatorKind,
    SparseGraph,
    build_graph,
    degrees,
    normalize,
    spmm,
)
from .model import (
    ForwardCache,
    GfcnLayer,
    GfcnParams,
    LossConfig,
    backward,
    gcn_forward,
    gfcn_forward,
    init_params,
    loss,
)
from .optim import AdamState, TrainConfig, TrainingError, adam_step, grid_search, train

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "AnomalyTask",
    "BadMagic",
    "ConvergenceError",
    "CountMismatch",
    "Dataset",
    "DatasetError",
    "EdgeError",
    "ExperimentSummary",
    "FairingConfig",
    "ForwardCache",
    "GfcnLayer",
    "GfcnParams",
    "LossConfig",
    "MissingDatasetFile",
    "NormalizedOperator",
    "OperatorKind",
    "RunResult",
    "SolveReport",
    "SparseGraph",
    "TrainConfig",
    "TrainingError",
    "adam_step",
    "auc",
    "backward",
    "build_graph",
    "condition_bound",
    "degrees",
    "fair_direct",
    "fair_jacobi",
    "fairing_energy",
    "gcn_forward",
    "gfcn_forward",
    "grid_search",
    "init_params",
    "load_checkpoint",
    "load_dataset",
    "loss",
    "make_anomaly_task",
    "normalize",
    "read_features",
    "run_experiment",
    "save_checkpoint",
    "save_dataset",
    "sensitivity_sweep",
    "spmm",
    "train",
    "transfer",
    "write_features",
]
