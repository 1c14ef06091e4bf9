"""Full-batch training with Adam, early stopping, and grid search."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .graph_core import OperatorKind, SparseGraph, normalize
from .model import (
    GfcnLayer,
    GfcnParams,
    LossConfig,
    backward,
    gfcn_forward,
    init_params,
    loss,
)

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


class TrainingError(RuntimeError):
    """Raised when the objective becomes non-finite."""

    def __init__(self, epoch: int, value: float):
        super().__init__(f"non-finite training loss {value} at epoch {epoch}")
        self.epoch = epoch
        self.value = value


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    max_epochs: int = 100
    patience: int = 10
    alpha: float = 4.0
    beta: float = 0.01
    seed: int = 0
    hidden_dims: tuple = (64,)

    def __post_init__(self):
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValueError("learning_rate must be positive and finite")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be non-negative")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if any(int(d) < 1 for d in self.hidden_dims):
            raise ValueError("hidden layer widths must be positive")


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter matrix."""

    m: list
    v: list
    step: int = 0

    @classmethod
    def zeros_like(cls, params: GfcnParams) -> "AdamState":
        m, v = [], []
        for layer in params.layers:
            for w in (layer.theta, layer.theta_skip):
                m.append(np.zeros_like(w))
                v.append(np.zeros_like(w))
        return cls(m=m, v=v, step=0)


def _matrices(params: GfcnParams) -> list:
    out = []
    for layer in params.layers:
        out.append(layer.theta)
        out.append(layer.theta_skip)
    return out


def _rebuild(params: GfcnParams, mats: list) -> GfcnParams:
    layers = [
        GfcnLayer(theta=mats[2 * i], theta_skip=mats[2 * i + 1])
        for i in range(len(params.layers))
    ]
    return GfcnParams(layers=layers, dims=list(params.dims))


def adam_step(
    params: GfcnParams, grads: GfcnParams, state: AdamState, learning_rate: float
) -> tuple:
    """One bias-corrected Adam update. Returns fresh (params, state)."""
    t = state.step + 1
    new_m, new_v, new_w = [], [], []
    for w, g, m, v in zip(_matrices(params), _matrices(grads), state.m, state.v):
        m = BETA1 * m + (1.0 - BETA1) * g
        v = BETA2 * v + (1.0 - BETA2) * g * g
        m_hat = m / (1.0 - BETA1**t)
        v_hat = v / (1.0 - BETA2**t)
        new_m.append(m)
        new_v.append(v)
        new_w.append(w - learning_rate * m_hat / (np.sqrt(v_hat) + EPSILON))
    return _rebuild(params, new_w), AdamState(m=new_m, v=new_v, step=t)


def train(graph: SparseGraph, features: np.ndarray, task, cfg: TrainConfig):
    """Full-batch training with best-validation checkpointing.

    Per epoch: the training loss is measured on the current parameters, the
    Adam update is applied, then the validation loss (data term only, no
    regularizer) is measured on the updated parameters. The parameters with
    the strictly best validation loss are kept; `patience` epochs without
    improvement stop early. Without validation nodes early stopping is
    disabled and the final parameters win.

    Returns (best_params, RunResult).
    """
    from .evaluate import RunResult, auc  # deferred: evaluate imports this module

    if np.asarray(task.train_idx).shape[0] == 0:
        raise ValueError("task has no labeled training nodes")
    op = normalize(graph, OperatorKind.ADJACENCY_NORM)
    x = np.asarray(features, dtype=np.float64)
    dims = [x.shape[1], *[int(d) for d in cfg.hidden_dims], 2]
    params = init_params(dims, skip_dim=x.shape[1], seed=cfg.seed)
    state = AdamState.zeros_like(params)
    train_cfg = LossConfig(alpha=cfg.alpha, beta=cfg.beta)
    val_cfg = LossConfig(alpha=cfg.alpha, beta=0.0)

    labels = task.binary_labels
    has_val = task.val_idx.shape[0] > 0
    best_params = params.copy()
    best_val = math.inf
    streak = 0
    history = []

    for epoch in range(cfg.max_epochs):
        cache = gfcn_forward(op, x, params)
        train_loss = loss(cache, labels, task.train_idx, train_cfg, params)
        if not math.isfinite(train_loss):
            raise TrainingError(epoch, train_loss)
        grads = backward(cache, labels, task.train_idx, train_cfg, params)
        params, state = adam_step(params, grads, state, cfg.learning_rate)

        if has_val:
            val_cache = gfcn_forward(op, x, params)
            val_loss = loss(val_cache, labels, task.val_idx, val_cfg, params)
            if not math.isfinite(val_loss):
                raise TrainingError(epoch, val_loss)
        else:
            val_loss = math.nan
        history.append((epoch, float(train_loss), float(val_loss)))

        if has_val:
            if val_loss < best_val:
                best_val = val_loss
                best_params = params.copy()
                streak = 0
            else:
                streak += 1
                if streak >= cfg.patience:
                    break

    if not has_val or not history:
        best_params = params.copy()

    final_cache = gfcn_forward(op, x, best_params)
    scores = final_cache.probabilities[task.test_idx, 0]
    test_auc = auc(scores, labels[task.test_idx])
    result = RunResult(
        seed=cfg.seed,
        auc=float(test_auc),
        epochs_trained=len(history),
        best_val_loss=(best_val if has_val and history else math.nan),
        history=history,
    )
    return best_params, result


def grid_search(
    graph: SparseGraph,
    features: np.ndarray,
    task,
    alpha_grid,
    beta_grid,
    cfg: TrainConfig,
) -> tuple:
    """Pick (alpha, beta) minimizing best validation loss.

    Ties prefer the smaller beta, then the smaller alpha.
    """
    if task.val_idx.shape[0] == 0:
        raise ValueError("grid search needs a validation split")
    alpha_grid = [float(a) for a in alpha_grid]
    beta_grid = [float(b) for b in beta_grid]
    if not alpha_grid or not beta_grid:
        raise ValueError("grids must be non-empty")
    best = None
    for alpha in alpha_grid:
        for beta in beta_grid:
            trial = replace(cfg, alpha=alpha, beta=beta)
            _, result = train(graph, features, task, trial)
            if math.isnan(result.best_val_loss):
                raise ValueError("grid search needs max_epochs >= 1")
            key = (result.best_val_loss, beta, alpha)
            if best is None or key < best[0]:
                best = (key, alpha, beta)
    return best[1], best[2]
