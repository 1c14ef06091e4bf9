"""Acceptance gate: one test (and one printed verdict line) per criterion.

Run with `pytest -v tests/test_acceptance.py` to get the per-criterion
pass/fail listing. The benchmark-reproduction criterion needs converted
datasets; point GFCN_DATA_ROOT at a directory holding cora/, citeseer/ and
pubmed/ in the neutral four-file layout (see the ingest converter), otherwise
those cases skip with an explicit reason.
"""

import json
import os
import time
from pathlib import Path

import numpy as np
import pytest

from gfcn.cli import main
from gfcn.data import Dataset, load_dataset, make_anomaly_task, save_dataset
from gfcn.evaluate import auc as rank_auc
from gfcn.evaluate import run_experiment
from gfcn.fairing import FairingConfig, fair_direct, fair_jacobi, jacobi_iterates
from gfcn.graph_core import OperatorKind, build_graph, normalize, spmm
from gfcn.model import (
    GfcnLayer,
    GfcnParams,
    LossConfig,
    backward,
    gfcn_forward,
    init_params,
    loss,
)
from gfcn.optim import TrainConfig

from helpers import (
    dense_adjacency_norm,
    dense_laplacian_norm,
    path_graph,
    random_graph,
    random_graph_with_edges,
    spectral_fair_oracle,
)
from test_eval import pairwise_auc
from test_optim import two_cluster_dataset

S_VALUES = (0.1, 1.0, 10.0)


def _varied_graphs(count=20, seed=123):
    rng = np.random.default_rng(seed)
    graphs = []
    for i in range(count):
        n = int(rng.integers(2, 101))
        p = float(rng.uniform(0.02, 0.6))
        graphs.append(random_graph(n, p, seed=int(rng.integers(0, 2**31))))
    return graphs


def report(line: str) -> None:
    print(line)


def test_spectral_correctness():
    """fair_direct vs dense eigendecomposition, 20 graphs x s in {0.1,1,10}."""
    started = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for g in _varied_graphs():
        x = rng.normal(size=(g.num_nodes, 3))
        for s in S_VALUES:
            expected = spectral_fair_oracle(g, x, s)
            got, _ = fair_direct(g, x, FairingConfig(s=s, tol=1e-12))
            rel = np.linalg.norm(got - expected) / max(np.linalg.norm(expected), 1e-300)
            worst = max(worst, rel)
            assert rel <= 1e-8, f"relative error {rel} on n={g.num_nodes}, s={s}"
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"spectral check took {elapsed:.1f}s, budget is 10s"
    report(
        f"PASS spectral correctness: worst relative error {worst:.3e} <= 1e-8 "
        f"over 60 solves in {elapsed:.2f}s"
    )


def test_jacobi_convergence():
    """fair_jacobi matches fair_direct; error contraction <= s/(1+s)+1e-6."""
    rng = np.random.default_rng(1)
    worst_rel = 0.0
    worst_margin = -np.inf
    for g in _varied_graphs(count=8, seed=77):
        x = rng.normal(size=(g.num_nodes, 2))
        for s in S_VALUES:
            cfg = FairingConfig(s=s, tol=1e-12)
            direct, _ = fair_direct(g, x, cfg)
            iterative, _ = fair_jacobi(g, x, cfg)
            rel = np.linalg.norm(iterative - direct) / max(
                np.linalg.norm(direct), 1e-300
            )
            worst_rel = max(worst_rel, rel)
            assert rel <= 1e-8

            bound = s / (1.0 + s) + 1e-6
            iterates = jacobi_iterates(g, x, s, num_iters=12)
            errors = [np.linalg.norm(h - direct) for h in iterates]
            floor = 1e-9 * max(np.linalg.norm(direct), 1.0)
            for before, after in zip(errors, errors[1:]):
                if before <= floor:
                    break
                ratio = after / before
                worst_margin = max(worst_margin, ratio - bound)
                assert ratio <= bound, f"contraction {ratio} > {bound} at s={s}"
    report(
        f"PASS jacobi convergence: solver agreement {worst_rel:.3e} <= 1e-8, "
        f"worst contraction margin {worst_margin:.3e} <= 0"
    )


def test_condition_bound():
    """Exact condition number of I+sL <= 1+2s; tight on bipartite paths."""
    for g in _varied_graphs(count=20, seed=5):
        lap = dense_laplacian_norm(g)
        for s in S_VALUES:
            eigs = np.linalg.eigvalsh(np.eye(g.num_nodes) + s * lap)
            kappa = eigs[-1] / eigs[0]
            assert kappa <= 1.0 + 2.0 * s + 1e-9
    for n in (2, 3, 5, 10, 40):
        g = path_graph(n)
        lap = dense_laplacian_norm(g)
        for s in S_VALUES:
            eigs = np.linalg.eigvalsh(np.eye(n) + s * lap)
            kappa = eigs[-1] / eigs[0]
            assert abs(kappa - (1.0 + 2.0 * s)) <= 1e-9, (
                f"path n={n}, s={s}: kappa {kappa} vs bound {1 + 2 * s}"
            )
    report(
        "PASS condition bound: kappa(I+sL) <= 1+2s on 20 random graphs, "
        "equality within 1e-9 on 5 path graphs"
    )


def test_network_matches_jacobi():
    """Diagonal weights + identity activation reproduce the smoothing iterates."""
    rng = np.random.default_rng(3)
    worst = 0.0
    for trial in range(5):
        n = int(rng.integers(4, 40))
        g = random_graph(n, 0.3, seed=trial)
        f = int(rng.integers(2, 6))
        x = rng.normal(size=(n, f))
        s = float(rng.choice(S_VALUES))
        depth = int(rng.integers(1, 5))
        hop = (s / (1.0 + s)) * np.eye(f)
        skip = (1.0 / (1.0 + s)) * np.eye(f)
        params = GfcnParams(
            layers=[GfcnLayer(theta=hop.copy(), theta_skip=skip.copy()) for _ in range(depth)],
            dims=[f] * (depth + 1),
        )
        op = normalize(g, OperatorKind.ADJACENCY_NORM)
        cache = gfcn_forward(op, x, params, activation="identity")
        iterates = jacobi_iterates(g, x, s, num_iters=depth)  # h^1 .. h^depth
        assert len(iterates) == len(cache.pre_activations) == depth
        for layer_out, iterate in zip(cache.pre_activations, iterates):
            gap = np.abs(layer_out - iterate).max()
            worst = max(worst, gap)
            assert gap <= 1e-12
    report(f"PASS network-smoothing equivalence: max abs gap {worst:.3e} <= 1e-12")


def test_gradient_correctness():
    """Analytic gradients vs central finite differences on 5 small instances."""
    instances = [
        (0, 1.0, 0.0),
        (1, 2.5, 0.03),
        (2, 4.0, 0.1),
        (3, 1.5, 0.0),
        (4, 3.0, 0.01),
    ]
    eps = 1e-6
    worst = 0.0
    for seed, alpha, beta in instances:
        rng = np.random.default_rng(seed)
        n = int(rng.integers(8, 16))
        f = int(rng.integers(3, 7))
        g = random_graph(n, 0.35, seed=seed + 50)
        op = normalize(g, OperatorKind.ADJACENCY_NORM)
        x = rng.normal(size=(n, f))
        labels = rng.integers(0, 2, size=n)
        labels[0], labels[1] = 1, 0
        mask = np.zeros(n, dtype=bool)
        mask[: max(3, n // 2)] = True
        params = init_params([f, 4, 2], skip_dim=f, seed=seed)
        cfg = LossConfig(alpha=alpha, beta=beta)
        grads = backward(gfcn_forward(op, x, params), labels, mask, cfg, params)

        def objective(p):
            return loss(gfcn_forward(op, x, p), labels, mask, cfg, p)

        for li, layer in enumerate(params.layers):
            for attr in ("theta", "theta_skip"):
                w = getattr(layer, attr)
                analytic = getattr(grads.layers[li], attr)
                for idx in np.ndindex(w.shape):
                    perturbed = params.copy()
                    getattr(perturbed.layers[li], attr)[idx] += eps
                    up = objective(perturbed)
                    perturbed = params.copy()
                    getattr(perturbed.layers[li], attr)[idx] -= eps
                    down = objective(perturbed)
                    numeric = (up - down) / (2 * eps)
                    rel = abs(analytic[idx] - numeric) / max(abs(numeric), 1e-6)
                    worst = max(worst, rel)
                    assert rel <= 1e-5, (
                        f"seed {seed} {attr}[{idx}]: analytic {analytic[idx]}, "
                        f"numeric {numeric}"
                    )
    report(
        f"PASS gradient correctness: worst relative error {worst:.3e} <= 1e-5 "
        f"on 5 instances including alpha != 1 and beta != 0"
    )


def test_auc_oracle():
    """Rank AUC equals the O(n^2) pairwise oracle on 100 instances with ties."""
    rng = np.random.default_rng(6)
    worst = 0.0
    for trial in range(100):
        n = int(rng.integers(4, 80))
        if trial % 2:
            scores = rng.choice(np.linspace(0.0, 1.0, 5), size=n)
        else:
            scores = rng.normal(size=n)
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        gap = abs(rank_auc(scores, labels) - pairwise_auc(scores, labels))
        worst = max(worst, gap)
        assert gap <= 1e-12
    report(f"PASS auc oracle: max deviation {worst:.3e} <= 1e-12 over 100 instances")


BENCHMARKS = [
    ("cora", 0.05, 87.0),
    ("citeseer", 0.10, 71.0),
    ("pubmed", 0.10, 94.0),
]


def _data_root() -> Path:
    return Path(
        os.environ.get("GFCN_DATA_ROOT", Path(__file__).resolve().parent.parent / "data")
    )


@pytest.mark.parametrize("name,rate,floor", BENCHMARKS, ids=[b[0] for b in BENCHMARKS])
def test_benchmark_reproduction(name, rate, floor):
    """Mean test AUC over 10 seeds with paper defaults meets the floor."""
    directory = _data_root() / name
    if not (directory / "meta.json").is_file():
        pytest.skip(
            f"converted dataset {name!r} not present under {_data_root()} "
            f"(upstream archives are not bundled and this environment has no "
            f"network access; run the ingest converter elsewhere and set "
            f"GFCN_DATA_ROOT)"
        )
    ds = load_dataset(directory)
    cfg = TrainConfig()  # paper defaults: hidden 64, lr 0.05, 100 epochs, patience 10
    outcomes = {}
    for mode in ("normal_only", "both"):
        summary = run_experiment(ds, rate, cfg, n_seeds=10, label_mode=mode)
        outcomes[mode] = 100.0 * summary.mean_auc
        if outcomes[mode] >= floor:
            report(
                f"PASS benchmark {name} rate {rate:g}: mean AUC "
                f"{outcomes[mode]:.1f} >= {floor} ({mode}"
                + (
                    f"; normal_only gave {outcomes['normal_only']:.1f}"
                    if mode == "both"
                    else ""
                )
                + ")"
            )
            return
    pytest.fail(
        f"benchmark {name}: mean AUC {outcomes} below floor {floor} in both modes"
    )


def test_complexity_scaling():
    """Forward wall time stays within 1.5x a linear fit in nnz."""
    rng = np.random.default_rng(9)
    f_in, hidden = 32, 16
    n = 120_000
    sizes = [10_000, 20_000, 40_000, 80_000, 160_000, 320_000, 640_000, 1_000_000]
    times = []
    x = rng.normal(size=(n, f_in))
    params = init_params([f_in, hidden, 2], skip_dim=f_in, seed=0)
    actual_nnz = []
    for nnz_target in sizes:
        g = random_graph_with_edges(n, nnz_target // 2, seed=nnz_target)
        op = normalize(g, OperatorKind.ADJACENCY_NORM)
        actual_nnz.append(g.nnz)
        gfcn_forward(op, x, params)  # warm-up
        best = min(
            _timed_forward(op, x, params) for _ in range(3)
        )
        times.append(best)
    nnz = np.array(actual_nnz, dtype=float)
    t = np.array(times)
    slope, intercept = np.polyfit(nnz, t, 1)
    fit = slope * nnz + intercept
    ratios = t / fit
    assert slope > 0
    assert ratios.max() <= 1.5, f"observed/fit ratios {np.round(ratios, 3)}"
    report(
        f"PASS complexity scaling: max observed/linear-fit ratio "
        f"{ratios.max():.3f} <= 1.5 over nnz {sizes[0]}..{sizes[-1]}"
    )


def _timed_forward(op, x, params):
    started = time.perf_counter()
    gfcn_forward(op, x, params)
    return time.perf_counter() - started


def test_command_determinism(tmp_path, capsys, monkeypatch):
    """Identical command + inputs + seed => byte-identical output files."""
    data_dir = tmp_path / "datasets"
    save_dataset(data_dir / "two-cluster", two_cluster_dataset())
    monkeypatch.setenv("GFCN_DATA_ROOT", str(data_dir))

    collected = []
    for run_dir in (tmp_path / "run1", tmp_path / "run2"):
        run_dir.mkdir()
        monkeypatch.chdir(run_dir)
        argv_sets = [
            "fair two-cluster --s 2 --method jacobi --out faired.bin".split(),
            (
                "train two-cluster --label-rate 0.4 --hidden 8 --epochs 15 "
                "--checkpoint-out model.ckpt --history-out history.jsonl"
            ).split(),
            (
                "experiment two-cluster --label-rate 0.4 --n-seeds 2 --hidden 8 "
                "--epochs 15 --csv-out exp.csv"
            ).split(),
        ]
        stdout_chunks = []
        for argv in argv_sets:
            assert main(argv) == 0
            stdout_chunks.append(capsys.readouterr().out)
        files = {
            name: (run_dir / name).read_bytes()
            for name in (
                "faired.bin",
                "model.ckpt",
                "history.jsonl",
                "history.png",
                "exp.csv",
                "exp.png",
            )
        }
        collected.append((stdout_chunks, files))

    (stdout_a, files_a), (stdout_b, files_b) = collected
    assert stdout_a == stdout_b
    for name in files_a:
        assert files_a[name] == files_b[name], f"{name} differs between reruns"
    report(
        "PASS determinism: fair/train/experiment reruns produced byte-identical "
        "stdout and output files (binary block, checkpoint, history, CSV, PNG)"
    )
