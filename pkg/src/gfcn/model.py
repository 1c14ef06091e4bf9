"""Graph fairing convolutional network for binary anomaly scoring.

Each layer applies one damped smoothing sweep with learned mixing weights,

    H^(l+1) = act( S H^(l) Theta^(l) + X Theta_skip^(l) ),    H^(0) = X,

where S is the degree-normalized adjacency and the skip term re-injects the
raw features at every depth. Hidden layers use ReLU; the final layer is left
linear and a row-wise softmax turns its two outputs into probabilities, with
column 0 read as the anomaly probability. With identity activations and the
fixed diagonal weights s/(1+s) and 1/(1+s) the network reproduces the Jacobi
fairing sweep layer for layer.

Training minimizes a class-weighted cross entropy over the labeled nodes plus
an L2 penalty on all mixing weights; `backward` computes exact reverse-mode
gradients for it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph_core import NormalizedOperator, OperatorKind, spmm


@dataclass
class GfcnLayer:
    """One layer's mixing weights: hop term (F_in, F_out), skip term (F, F_out)."""

    theta: np.ndarray
    theta_skip: np.ndarray


@dataclass
class GfcnParams:
    """Weights for all layers plus the width sequence ``dims``.

    dims[0] is the input feature width F; dims[l+1] is layer l's output width.
    Every ``theta_skip`` has F rows. The anomaly-detection surface
    (`init_params`, `loss`) additionally requires dims[-1] == 2.
    """

    layers: list[GfcnLayer]
    dims: list[int]

    def __post_init__(self):
        if len(self.dims) < 2 or len(self.layers) != len(self.dims) - 1:
            raise ValueError("need len(dims) >= 2 and one layer per dims step")
        if any(d <= 0 for d in self.dims):
            raise ValueError("dims must be positive")
        f = self.dims[0]
        for l, layer in enumerate(self.layers):
            want = (self.dims[l], self.dims[l + 1])
            if layer.theta.shape != want:
                raise ValueError(f"layer {l}: theta shape {layer.theta.shape} != {want}")
            if layer.theta_skip.shape != (f, self.dims[l + 1]):
                raise ValueError(
                    f"layer {l}: theta_skip shape {layer.theta_skip.shape} != {(f, self.dims[l + 1])}"
                )

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def copy(self) -> "GfcnParams":
        return GfcnParams(
            [GfcnLayer(l.theta.copy(), l.theta_skip.copy()) for l in self.layers],
            list(self.dims),
        )

    def squared_norm(self) -> float:
        """Sum of squared Frobenius norms over every weight matrix."""
        return float(
            sum(np.sum(l.theta**2) + np.sum(l.theta_skip**2) for l in self.layers)
        )


@dataclass
class ForwardCache:
    """Everything `backward` needs from a forward pass."""

    op: NormalizedOperator
    x: np.ndarray
    pre_activations: list[np.ndarray]
    post_activations: list[np.ndarray]
    probabilities: np.ndarray
    activation: str = "relu"


@dataclass(frozen=True)
class LossConfig:
    """alpha weights the anomalous-class log term; beta scales the L2 penalty."""

    alpha: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")


PROB_FLOOR = 1e-12


def init_params(dims, skip_dim: int, seed: int) -> GfcnParams:
    """Glorot-uniform initialization, deterministic in ``seed``.

    Matrices are drawn in layer order (theta then theta_skip) from a single
    seeded stream, each uniform on +-sqrt(6 / (fan_in + fan_out)).
    """
    dims = [int(d) for d in dims]
    if len(dims) < 2:
        raise ValueError("dims must name input width and at least one output width")
    if dims[-1] != 2:
        raise ValueError("final width must be 2 (normal vs anomalous)")
    if skip_dim != dims[0]:
        raise ValueError("skip_dim must equal the input width dims[0]")
    rng = np.random.default_rng(seed)

    def glorot(fan_in, fan_out):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    layers = [
        GfcnLayer(glorot(dims[l], dims[l + 1]), glorot(skip_dim, dims[l + 1]))
        for l in range(len(dims) - 1)
    ]
    return GfcnParams(layers, dims)


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def gfcn_forward(
    op: NormalizedOperator,
    x: np.ndarray,
    params: GfcnParams,
    activation: str = "relu",
) -> ForwardCache:
    """Run the network and keep per-layer tensors for backprop.

    ``activation`` applies to hidden layers only ("relu" or "identity"); the
    final layer is always linear before the row-wise softmax.
    """
    if op.kind is not OperatorKind.ADJACENCY_NORM:
        raise ValueError("gfcn_forward requires the adjacency_norm operator")
    if activation not in ("relu", "identity"):
        raise ValueError(f"unknown activation {activation!r}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape != (op.num_nodes, params.dims[0]):
        raise ValueError(
            f"features must be ({op.num_nodes}, {params.dims[0]}), got {x.shape}"
        )
    pre, post = [], []
    h = x
    last = params.num_layers - 1
    for l, layer in enumerate(params.layers):
        z = spmm(op, h @ layer.theta) + x @ layer.theta_skip
        pre.append(z)
        if l < last and activation == "relu":
            h = np.maximum(z, 0.0)
        else:
            h = z
        post.append(h)
    return ForwardCache(op, x, pre, post, _softmax_rows(post[-1]), activation)


def gcn_forward(op: NormalizedOperator, x: np.ndarray, weights) -> ForwardCache:
    """Baseline two-layer graph convolution softmax(op ReLU(op X W0) W1).

    Uses the renormalized operator and no skip terms; forward only.
    """
    if op.kind is not OperatorKind.GCN_RENORM:
        raise ValueError("gcn_forward requires the gcn_renorm operator")
    weights = list(weights)
    if len(weights) != 2:
        raise ValueError("gcn_forward is the standard two-layer rule")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != op.num_nodes:
        raise ValueError(f"features must be ({op.num_nodes}, F), got {x.shape}")
    z0 = spmm(op, x) @ weights[0]
    h1 = np.maximum(z0, 0.0)
    z1 = spmm(op, h1) @ weights[1]
    return ForwardCache(op, x, [z0, z1], [h1, z1], _softmax_rows(z1))


def _labeled_indices(labeled_mask, num_nodes: int) -> np.ndarray:
    m = np.asarray(labeled_mask)
    if m.dtype == bool:
        if m.shape != (num_nodes,):
            raise ValueError("boolean mask must have one entry per node")
        idx = np.flatnonzero(m)
    else:
        idx = m.astype(np.int64).ravel()
        if idx.size and (idx.min() < 0 or idx.max() >= num_nodes):
            raise ValueError("labeled index out of range")
    if idx.size == 0:
        raise ValueError("labeled set is empty")
    return idx


def loss(
    cache: ForwardCache,
    labels,
    labeled_mask,
    cfg: LossConfig,
    params: GfcnParams,
) -> float:
    """Weighted cross entropy over labeled nodes plus (beta/2) L2 penalty.

    With y=1 anomalous and y_hat the clamped anomaly probability:

        (1/N_l) * sum[ -alpha y log y_hat - (1-y) log(1-y_hat) ]
        + (beta/2) * sum of squared weight norms.
    """
    if cache.probabilities.shape[1] != 2:
        raise ValueError("loss requires two output columns")
    n = cache.probabilities.shape[0]
    idx = _labeled_indices(labeled_mask, n)
    y = np.asarray(labels).astype(np.float64).ravel()
    if y.shape != (n,):
        raise ValueError("labels must have one entry per node")
    y = y[idx]
    y_hat = np.clip(cache.probabilities[idx, 0], PROB_FLOOR, 1.0 - PROB_FLOOR)
    data = np.mean(-cfg.alpha * y * np.log(y_hat) - (1.0 - y) * np.log(1.0 - y_hat))
    return float(data + 0.5 * cfg.beta * params.squared_norm())


def backward(
    cache: ForwardCache,
    labels,
    labeled_mask,
    cfg: LossConfig,
    params: GfcnParams,
) -> GfcnParams:
    """Exact gradients of `loss`, shaped like ``params``.

    The softmax/cross-entropy pair collapses to (P - T) row weights on the
    final pre-activation; the clamp in `loss` is inactive anywhere these
    gradients are meaningful, so it is ignored. The skip-term gradient
    accumulates contributions from every layer.
    """
    if cache.probabilities.shape[1] != 2:
        raise ValueError("backward requires two output columns")
    n, _ = cache.probabilities.shape
    idx = _labeled_indices(labeled_mask, n)
    y = np.asarray(labels).astype(np.float64).ravel()[idx]

    # d data_loss / d logits: per labeled row, weight * (p - onehot) / N_l
    g_logits = np.zeros_like(cache.probabilities)
    p = cache.probabilities[idx]
    target = np.stack([y, 1.0 - y], axis=1)
    weight = np.where(y == 1.0, cfg.alpha, 1.0)[:, None]
    g_logits[idx] = weight * (p - target) / idx.size

    grads: list[GfcnLayer | None] = [None] * params.num_layers
    g = g_logits  # gradient w.r.t. post_activations[l] while walking back
    last = params.num_layers - 1
    for l in range(last, -1, -1):
        if l < last and cache.activation == "relu":
            g = g * (cache.pre_activations[l] > 0.0)  # ReLU mask
        h_in = cache.x if l == 0 else cache.post_activations[l - 1]
        sg = spmm(cache.op, g)  # S is symmetric, so S^T g = S g
        grads[l] = GfcnLayer(
            h_in.T @ sg + cfg.beta * params.layers[l].theta,
            cache.x.T @ g + cfg.beta * params.layers[l].theta_skip,
        )
        if l > 0:
            g = sg @ params.layers[l].theta.T
    return GfcnParams(grads, list(params.dims))
