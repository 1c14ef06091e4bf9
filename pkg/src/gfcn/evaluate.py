"""AUC scoring, multi-seed experiments, and hyperparameter sensitivity sweeps."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, make_anomaly_task
from .optim import TrainConfig, TrainingError, train

CSV_HEADER = "dataset,label_rate,param,value,seed,auc,epochs"


@dataclass
class RunResult:
    """Outcome of a single seeded training run."""

    seed: int
    auc: float
    epochs_trained: int
    best_val_loss: float
    history: list

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "auc": self.auc,
            "epochs_trained": self.epochs_trained,
            "best_val_loss": None
            if self.best_val_loss != self.best_val_loss
            else self.best_val_loss,
        }


@dataclass
class ExperimentSummary:
    """Per-seed results plus their mean and sample standard deviation."""

    dataset: str
    label_rate: float
    mean_auc: float
    std_auc: float
    results: list
    failures: list = field(default_factory=list)

    def to_row(self) -> dict:
        return {
            "dataset": self.dataset,
            "label_rate": self.label_rate,
            "mean_auc": self.mean_auc,
            "std_auc": self.std_auc,
            "n_seeds": len(self.results),
            "failed_seeds": [seed for seed, _ in self.failures],
        }


def auc(scores, labels) -> float:
    """Probability a random anomalous score exceeds a random normal one.

    Mann-Whitney U with midrank tie handling: ties contribute 1/2. Requires
    both classes present, otherwise the quantity is undefined.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ValueError(
            f"scores ({scores.shape[0]}) and labels ({labels.shape[0]}) differ in length"
        )
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    n_pos = int(np.count_nonzero(labels == 1))
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC is undefined with a single class")

    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    n = scores.shape[0]
    # midranks: every member of a tie group gets the group's average 1-based rank
    boundaries = np.flatnonzero(sorted_scores[1:] != sorted_scores[:-1]) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [n]))
    ranks_sorted = np.empty(n, dtype=np.float64)
    for lo, hi in zip(starts, ends):
        ranks_sorted[lo:hi] = 0.5 * (lo + 1 + hi)
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = ranks_sorted

    u = ranks[labels == 1].sum() - 0.5 * n_pos * (n_pos + 1)
    return float(u / (float(n_pos) * float(n_neg)))


def _run_single(
    ds: Dataset, label_rate: float, label_mode: str, cfg: TrainConfig, seed: int
) -> RunResult:
    task = make_anomaly_task(ds, label_rate, seed=seed, label_mode=label_mode)
    _, result = train(ds.graph, ds.features, task, replace(cfg, seed=seed))
    return result


def run_experiment(
    ds: Dataset,
    label_rate: float,
    cfg: TrainConfig,
    n_seeds: int = 10,
    label_mode: str = "normal_only",
    jobs: int = 1,
    allow_failures: bool = False,
) -> ExperimentSummary:
    """Train once per seed (0..n_seeds-1) and aggregate test AUCs.

    The seed drives both the labeled split and the weight init. A numeric
    failure aborts unless allow_failures is set, in which case the seed is
    recorded under failures and excluded from the aggregate.
    """
    if n_seeds < 1:
        raise ValueError("n_seeds must be at least 1")
    seeds = list(range(n_seeds))
    collected: dict = {}
    failures = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            pending = {
                pool.submit(_run_single, ds, label_rate, label_mode, cfg, s): s
                for s in seeds
            }
            for fut in as_completed(pending):
                seed = pending[fut]
                try:
                    collected[seed] = fut.result()
                except TrainingError as e:
                    if not allow_failures:
                        raise
                    failures.append((seed, str(e)))
    else:
        for seed in seeds:
            try:
                collected[seed] = _run_single(ds, label_rate, label_mode, cfg, seed)
            except TrainingError as e:
                if not allow_failures:
                    raise
                failures.append((seed, str(e)))

    results = [collected[s] for s in seeds if s in collected]
    if not results:
        raise TrainingError(0, float("nan"))
    aucs = np.array([r.auc for r in results])
    std = float(aucs.std(ddof=1)) if aucs.size > 1 else 0.0
    failures.sort()
    return ExperimentSummary(
        dataset=ds.name,
        label_rate=float(label_rate),
        mean_auc=float(aucs.mean()),
        std_auc=std,
        results=results,
        failures=failures,
    )


def sensitivity_sweep(
    ds: Dataset,
    rates,
    param: str,
    grid,
    cfg: TrainConfig,
    n_seeds: int = 10,
    label_mode: str = "normal_only",
    jobs: int = 1,
    allow_failures: bool = False,
) -> list:
    """One experiment per (label rate, grid value) cell.

    Every cell reuses seeds 0..n_seeds-1, so cells are paired comparisons.
    Returns [(rate, value, ExperimentSummary), ...] in grid order.
    """
    if param not in ("alpha", "beta"):
        raise ValueError(f"param must be 'alpha' or 'beta', got {param!r}")
    grid = list(grid)
    rates = list(rates)
    if not grid or not rates:
        raise ValueError("rates and grid must be non-empty")
    rows = []
    for rate in rates:
        for value in grid:
            cell_cfg = replace(cfg, **{param: float(value)})
            summary = run_experiment(
                ds,
                rate,
                cell_cfg,
                n_seeds=n_seeds,
                label_mode=label_mode,
                jobs=jobs,
                allow_failures=allow_failures,
            )
            rows.append((float(rate), float(value), summary))
    return rows


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def results_csv(entries) -> str:
    """Per-seed CSV. entries = iterable of (param, value, ExperimentSummary)."""
    lines = [CSV_HEADER]
    for param, value, summary in entries:
        for r in summary.results:
            lines.append(
                ",".join(
                    (
                        summary.dataset,
                        _fmt(summary.label_rate),
                        "" if param is None else str(param),
                        "" if value is None else _fmt(value),
                        str(r.seed),
                        _fmt(r.auc),
                        str(r.epochs_trained),
                    )
                )
            )
    return "\n".join(lines) + "\n"


def experiment_csv(summary: ExperimentSummary) -> str:
    return results_csv([(None, None, summary)])


def sweep_csv(rows, param: str) -> str:
    return results_csv((param, value, summary) for _, value, summary in rows)
