"""Acceptance checks for the library, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line with the measured numbers
and then asserts the criterion, so ``pytest tests/test_acceptance.py -v`` shows
both the verdicts and a pytest status. The desk-scale training, grid and
density checks run real training and take several minutes in total.
"""

import json
import time

import numpy as np
import pytest

from ghmloss import cli
from ghmloss.data import synth_dataset
from ghmloss.embedding import Batch, build_index_sets
from ghmloss.geometric import cosine_proximity
from ghmloss.loss import LossConfig, evaluate, general_metric_loss
from ghmloss.metrics import auc, confusion, metrics
from ghmloss.model import MLPConfig
from ghmloss.probabilistic import (
    EMSettings,
    GMMParams,
    discretize,
    entropy,
    fit_gmm,
    gaussian_kl_closed_form,
    js_divergence,
    js_proximity,
    js_via_entropy,
    kl_divergence,
)
from ghmloss.train import TrainConfig, k_fold_cv
from oracles import (
    central_differences,
    enumerated_likelihood_loss,
    kl_by_quadrature,
    max_relative_error,
    pairwise_auc,
    unit_rows,
)

RESULTS = []


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        RESULTS.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return emit


def gaussian(mu, var):
    return GMMParams(np.array([1.0]), np.array([float(mu)]), np.array([float(np.sqrt(var))]), collapsed=False)


def random_masses(rng, g):
    return rng.dirichlet(np.full(g, 0.5))


# ---------------------------------------------------------------------------


def test_proximity_property_suite(report):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    n_pairs = 1000
    worst_range = worst_self = worst_cos = 0.0
    asymmetric = 0
    for _ in range(n_pairs):
        d = int(rng.integers(4, 65))
        a, b = rng.standard_normal(d), rng.standard_normal(d)
        ab, ba = js_proximity(a, b), js_proximity(b, a)
        asymmetric += ab != ba
        worst_range = max(worst_range, -ab, ab - 1.0)
        worst_self = max(worst_self, js_proximity(a, a))
        scale = rng.uniform(0.01, 100.0)
        c = cosine_proximity(a, b)
        worst_cos = max(worst_cos, abs(c - cosine_proximity(b, a)), abs(c - cosine_proximity(scale * a, b)))

    triples = 0
    violations = 0
    checked = 0
    while triples < 1000:
        pi, pc, pj = (random_masses(rng, 64) for _ in range(3))
        triples += 1
        if entropy((pi + pc) / 2) + entropy((pc + pj) / 2) >= entropy((pi + pj) / 2) + entropy(pc):
            checked += 1
            violations += js_divergence(pi, pj) > js_divergence(pi, pc) + js_divergence(pc, pj) + 1e-9
    elapsed = time.perf_counter() - start

    ok = (worst_range <= 0.0 and asymmetric == 0 and worst_self < 1e-12 and worst_cos <= 1e-12
          and violations == 0 and checked > 0 and elapsed < 60)
    report("proximity properties", ok,
           f"{n_pairs} pairs: range excess {worst_range:.1e}, asymmetric {asymmetric}, max S_p(a,a) {worst_self:.1e}, "
           f"cosine sym/scale err {worst_cos:.1e}; {triples} triples, {checked} meet the entropy condition, "
           f"{violations} violations; {elapsed:.1f}s")
    assert ok


def test_kl_oracle(report):
    closed = gaussian_kl_closed_form(0, 1, 1, 1)
    quad = kl_by_quadrature(0, 1, 1, 1)
    lo, hi, G = -12.0, 13.0, 2048
    grid = kl_divergence(discretize(gaussian(0, 1), lo, hi, G), discretize(gaussian(1, 1), lo, hi, G))

    # Same mean gap of 3; unit variances versus variances of 9.
    narrow = gaussian_kl_closed_form(0, 1, 3, 1)
    wide = gaussian_kl_closed_form(0, 9, 3, 9)
    # Each pair gets a grid spanning 10 standard deviations past both means.
    narrow_grid = kl_divergence(discretize(gaussian(0, 1), -10.0, 13.0, G), discretize(gaussian(3, 1), -10.0, 13.0, G))
    wide_grid = kl_divergence(discretize(gaussian(0, 9), -30.0, 33.0, G), discretize(gaussian(3, 9), -30.0, 33.0, G))

    ok = (abs(closed - 0.5) < 1e-6 and abs(quad - closed) < 1e-6 and abs(grid - 0.5) < 1e-3
          and abs(narrow - 4.5) < 1e-3 and abs(wide - 0.5) < 1e-3
          and abs(narrow_grid - 4.5) < 1e-3 and abs(wide_grid - 0.5) < 1e-3)
    report("KL oracle", ok,
           f"closed form {closed:.9f}, quadrature {quad:.9f}, grid(G=2048) {grid:.6f}; "
           f"gap 3: var 1 -> {narrow:.6f} (grid {narrow_grid:.6f}), var 9 -> {wide:.6f} (grid {wide_grid:.6f})")
    assert ok


def test_brute_force_loss_equivalence(report):
    rng = np.random.default_rng(4)
    worst = 0.0
    sizes = []
    for _ in range(100):
        n = int(rng.integers(2, 6))
        labels = rng.integers(0, 3, n)
        while np.unique(labels).size < 2:
            labels = rng.integers(0, 3, n)
        s = rng.uniform(-1, 1, (n, n))
        s = (s + s.T) / 2
        np.fill_diagonal(s, np.nan)
        ours = general_metric_loss(s, build_index_sets(labels))
        ref = enumerated_likelihood_loss(s.tolist(), labels.tolist())
        worst = max(worst, abs(ours - ref))
        sizes.append(n)
    ok = worst < 1e-9
    report("pair-likelihood loss vs enumeration", ok,
           f"100 instances (N from {min(sizes)} to {max(sizes)}), max abs difference {worst:.2e}")
    assert ok


def test_gradient_check(report):
    start = time.perf_counter()
    # Std floor 0.02 keeps mixture components wider than the grid spacing; see
    # the second line for the default floor.
    resolved = EMSettings(K=2, sigma_floor=0.02)
    worst = 0.0
    rng = np.random.default_rng(11)
    cases = [(lam, mode) for lam in (0.0, 0.5, 1.0) for mode in ("similarity", "literal_eq8")]
    batches = [(Batch(unit_rows(rng, 4, 8), np.array([0, 1, 0, 1])), rng.standard_normal((4, 2))) for _ in range(3)]
    for lam, mode in cases:
        cfg = LossConfig(lam=lam, sign_mode=mode, gmm=resolved)
        for batch, logits in batches:
            ev = evaluate(batch, cfg, logits=logits, with_grad=True)
            d_x, d_z = central_differences(batch, logits, cfg, ev.responsibilities, h=1e-4)
            worst = max(worst, max_relative_error(ev.gradients.d_embeddings, d_x),
                        max_relative_error(ev.gradients.d_logits, d_z))

    default_ratio = []
    default_coarse = 0.0
    for mode in ("similarity", "literal_eq8"):
        cfg = LossConfig(lam=0.5, sign_mode=mode)
        batch, logits = batches[0]
        ev = evaluate(batch, cfg, logits=logits, with_grad=True)
        coarse = max_relative_error(ev.gradients.d_embeddings,
                                    central_differences(batch, logits, cfg, ev.responsibilities, h=1e-4)[0])
        fine = max_relative_error(ev.gradients.d_embeddings,
                                  central_differences(batch, logits, cfg, ev.responsibilities, h=1e-5)[0])
        default_coarse = max(default_coarse, coarse)
        default_ratio.append(coarse / fine)
    elapsed = time.perf_counter() - start

    ok = worst < 1e-4 and elapsed < 60
    report("gradient check", ok,
           f"lambda in {{0, 0.5, 1}} x both sign modes x 3 batches (N=4, d=8, K=2, std floor 0.02): "
           f"max relative error {worst:.2e} at h=1e-4; {elapsed:.1f}s")
    second_order = min(default_ratio) > 50
    report("gradient check, default std floor", second_order,
           f"h=1e-4 error {default_coarse:.2e}; shrinks {min(default_ratio):.0f}x or more at h=1e-5 (second order)")
    assert ok and second_order


def test_js_entropy_identity(report):
    rng = np.random.default_rng(6)
    worst = 0.0
    for k in range(1000):
        if k % 2:
            p, q = random_masses(rng, 256), random_masses(rng, 256)
        else:
            a, b = rng.standard_normal(32), rng.standard_normal(32)
            fa, fb = fit_gmm(a), fit_gmm(b)
            lo = min(fa.means.min(), fb.means.min()) - 6 * max(fa.stds.max(), fb.stds.max())
            hi = max(fa.means.max(), fb.means.max()) + 6 * max(fa.stds.max(), fb.stds.max())
            p, q = discretize(fa, lo, hi), discretize(fb, lo, hi)
        worst = max(worst, abs(js_divergence(p, q) - js_via_entropy(p, q)))
    ok = worst < 1e-9
    report("JS entropy form", ok, f"1000 grid pairs (half random, half fitted mixtures), max difference {worst:.2e}")
    assert ok


def test_desk_scale_training(report):
    ds = synth_dataset(classes=4, per_class=50, dim=16, separation=6.0, noise_std=1.0, seed=0)
    mcfg = MLPConfig(ds.dim, ds.num_classes)
    start = time.perf_counter()
    folds = k_fold_cv(ds, mcfg, TrainConfig(epochs=200, folds=5, loss=LossConfig(beta=1.0, lam=0.5)))
    elapsed = time.perf_counter() - start
    acc = float(np.mean([f.metrics.accuracy for f in folds]))
    area = float(np.mean([f.metrics.auc for f in folds]))
    base = k_fold_cv(ds, mcfg, TrainConfig(epochs=200, folds=5, loss=LossConfig(beta=0.0)))
    base_vals = [v for f in base for v in (f.metrics.accuracy, f.metrics.auc)]
    base_ok = all(0.0 <= v <= 1.0 for v in base_vals)
    ok = acc >= 0.95 and area >= 0.98 and elapsed < 600 and base_ok
    report("desk-scale training", ok,
           f"5-fold mean accuracy {acc:.4f}, mean AUC {area:.4f} in {elapsed:.0f}s; beta=0 baseline accuracy "
           f"{np.mean([f.metrics.accuracy for f in base]):.4f}, AUC {np.mean([f.metrics.auc for f in base]):.4f}")
    assert ok


def test_grid_structure(report, tmp_path):
    # A reduced dataset and schedule keep the 20 cells affordable.
    small = ["--classes", "3", "--per-class", "10", "--dim", "6", "--epochs", "20", "--folds", "2",
             "--hidden", "16", "--embed-dim", "16", "--lr", "1e-3"]
    betas, lams = [0.0, 0.5, 1.0, 2.0], [0.0, 0.25, 0.5, 0.75, 1.0]
    code = cli.main(["grid", *small, "--beta", "0,0.5,1,2", "--lambda", "0,0.25,0.5,0.75,1",
                     "--out", str(tmp_path)])
    doc = json.loads((tmp_path / "results.json").read_text())
    cfg = doc["config"]
    matrix = doc["auc_matrix"]
    failed = sum(c["status"] != "ok" for c in doc["cells"])
    full = len(matrix) == 4 and all(len(r) == 5 and all(v is not None for v in r) for r in matrix)

    ds = cli.load_dataset(cfg)
    worst = 0.0
    for row, beta in enumerate(betas):
        tcfg = cli.train_config(cfg, beta, 1.0)
        tcfg = TrainConfig(**{**tcfg.__dict__, "loss": LossConfig(lam=1.0, beta=beta, geometric_only=True)})
        geo = k_fold_cv(ds, cli.model_config(cfg, ds), tcfg)
        geo_auc = float(np.mean([f.metrics.auc for f in geo]))
        worst = max(worst, abs(geo_auc - matrix[row][lams.index(1.0)]))
    ok = code == 0 and failed == 0 and full and worst <= 1e-9
    report("grid structure", ok,
           f"{len(doc['cells'])} cells, {failed} failed, matrix {len(matrix)}x{len(matrix[0])}; "
           f"lambda=1 column vs geometric-only runs max difference {worst:.1e}")
    assert ok


def test_density_before_after(report, tmp_path, capsys):
    path = tmp_path / "density.jsonl"
    code = cli.main(["density", "--epochs", "200", "--out", str(path), "--json"])
    summary = json.loads(capsys.readouterr().out)
    records = [json.loads(line) for line in path.read_text().splitlines()]
    same_label = len({r["label"] for r in records}) == 1
    ok = code == 0 and len(records) == 4 and same_label and summary["js_after"] < summary["js_before"]
    report("density before/after training", ok,
           f"positive pair {tuple(summary['pair'])}: js_proximity before {summary['js_before']:.6f}, "
           f"after {summary['js_after']:.6f}")
    assert ok


def test_metrics(report):
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(100):
        labels = rng.integers(0, 2, 20).astype(bool)
        labels[:2] = [True, False]
        scores = np.round(rng.uniform(size=20), 1)
        worst = max(worst, abs(auc(scores, labels) - pairwise_auc(scores, labels)))
    counts = confusion([1, 1, 0, 0], [1, 0, 1, 0])
    acc, prec, rec, f1, _ = metrics(counts)
    hand = (counts.TP, counts.TN, counts.FP, counts.FN) == (1, 1, 1, 1) and (acc, prec, rec, f1) == (0.5,) * 4
    ok = worst <= 1e-12 and hand
    report("metrics", ok,
           f"AUC vs pair counting over 100 instances of 20 samples, max difference {worst:.1e}; "
           f"confusion (1,1,1,1) gives accuracy/precision/recall/F1 {acc}, {prec}, {rec}, {f1}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
