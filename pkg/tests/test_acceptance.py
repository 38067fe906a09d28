"""One test per acceptance criterion; each records a PASS/FAIL summary line."""

import numpy as np
import pytest

from conftest import make_dataset
from oracles import central_difference, cubic_im3, mistake_bound, on_segment, time_energy
from rftagid.cli import main
from rftagid.dataset import REFERENCE_POSITION_CM, averaged_spectrum, calibrate_noise_std, kmeans, smote_balance
from rftagid.errors import ValidationError
from rftagid.features import fit_pca
from rftagid.ml import ALGORITHMS
from rftagid.ml.linear import Perceptron, logistic_grad, logistic_loss
from rftagid.ml.study import REGIMES, regime_training_set
from rftagid.nonlin import DIODE_COEFFICIENTS, DeviceModel
from rftagid.synth import Excitation, compute_spectrum, spectrum_energy, synthesize_excitation, tag_response
from test_ml import separable_fixture

FS, N = 1.024e6, 2**16
RUNTIME_BUDGET_S = 300.0


@pytest.mark.slow
def test_criterion_01_static_accuracy_and_runtime(default_study, record):
    acc = {a: default_study.report.accuracy("static", a, "static") for a in ALGORITHMS}
    worst = min(acc, key=acc.get)
    ok = acc[worst] >= 0.98 and default_study.total_seconds <= RUNTIME_BUDGET_S
    record(1, "static accuracy", ok, f"min {worst}={acc[worst]:.4f}, runtime {default_study.total_seconds:.0f}s")
    assert acc[worst] >= 0.98
    assert default_study.total_seconds <= RUNTIME_BUDGET_S


@pytest.mark.slow
def test_criterion_02_degradation_ordering(default_study, record):
    t = default_study.report.table("static")
    bad = [
        a
        for a in ALGORITHMS
        if not (t["static"][a] >= t["small"][a] >= t["large"][a] - 0.02)
    ]
    trees = {a: t["large"][a] for a in ("decision_tree", "random_forest")}
    ok = not bad and min(trees.values()) >= 0.90
    record(2, "degradation ordering", ok, f"order violations {bad or 'none'}, trees on large {trees}")
    assert not bad
    assert min(trees.values()) >= 0.90


@pytest.mark.slow
def test_criterion_03_headline_accuracy(default_study, record):
    r = default_study.report
    cells = {(reg, a): r.accuracy(reg, a, "large") for reg in REGIMES for a in ("decision_tree", "random_forest", "svm_linear")}
    worst = min(cells, key=cells.get)
    record(3, "headline large-perturbation accuracy", cells[worst] >= 0.95, f"worst {worst}={cells[worst]:.4f}")
    assert cells[worst] >= 0.95


def test_criterion_04_im3_oracle(record):
    a3, amp = -0.333, 0.5
    ex = Excitation(((19_500.0, amp), (20_500.0, amp)), FS, N).coherent(16384)
    y = tag_response(synthesize_excitation(ex), DeviceModel((0.0, 0.0, 0.0, a3)))
    spec = compute_spectrum(y, 16384, "hann", sample_rate=FS)
    f1, f2 = ex.frequencies
    target = 20 * np.log10(cubic_im3(a3, amp, amp))
    err = max(abs(spec.magnitudes_db[spec.bin_of(f)] - target) for f in (2 * f1 - f2, 2 * f2 - f1))
    record(4, "IM3 closed form", err <= 0.5, f"max error {err:.2e} dB")
    assert err <= 0.5


@pytest.mark.slow
def test_criterion_05_intermod_more_sensitive_than_fundamentals(default_study, record):
    cfg = default_study.cfg
    devices = cfg.device_models()
    sim = cfg.sim
    noise = calibrate_noise_std(sim, devices, cfg.master_seed)
    ex = sim.excitation()
    f1, f2 = sorted(ex.frequencies)
    d_im3, d_fund = [], []
    for rep in range(100):
        a, b = (averaged_spectrum(d, 4, sim, noise, rep, REFERENCE_POSITION_CM) for d in devices)
        diff = lambda f: abs(b.magnitudes_db[b.bin_of(f)] - a.magnitudes_db[a.bin_of(f)])
        d_im3.append(0.5 * (diff(2 * f1 - f2) + diff(2 * f2 - f1)))
        d_fund.append(0.5 * (diff(f1) + diff(f2)))
    m_im3, m_fund = float(np.mean(d_im3)), float(np.mean(d_fund))
    record(5, "IMP sensitivity", m_im3 > m_fund, f"mean |dIM3| {m_im3:.3f} dB vs |dfund| {m_fund:.3f} dB")
    assert m_im3 > m_fund


def test_criterion_06_logistic_gradient(record):
    rng = np.random.default_rng(6)
    X = rng.normal(size=(100, 4))
    y = (rng.random(100) > 0.5).astype(int)
    errs = []
    for _ in range(20):
        p = rng.normal(size=5)
        num = central_difference(lambda q: logistic_loss(q, X, y), p)
        errs.append(np.linalg.norm(logistic_grad(p, X, y) - num) / max(np.linalg.norm(num), 1e-12))
    worst = max(errs)
    record(6, "logistic gradient check", worst <= 1e-6, f"max relative error {worst:.2e}")
    assert worst <= 1e-6


@pytest.mark.slow
def test_criterion_07_kmeans_fidelity(default_study, record):
    agreement = default_study.report.kmeans_agreement["static"]
    train = default_study.splits.train["static"]
    z = default_study.report.standardizer.transform(train.features)
    hist = kmeans(z, 2, 0).wcss_history
    monotone = all(b <= a + 1e-9 * a for a, b in zip(hist, hist[1:]))
    ok = agreement >= 0.99 and monotone
    record(7, "k-means label fidelity", ok, f"agreement {agreement:.4f}, wcss monotone {monotone}")
    assert agreement >= 0.99
    assert monotone


@pytest.mark.slow
def test_criterion_08_smote(default_study, record):
    for ds in default_study.report.training_sets.values():
        c = ds.class_counts()
        assert c[0] == c[1]
    # shrink one class of the real static features to force oversampling
    train = default_study.splits.train["static"]
    z = default_study.report.standardizer.transform(train.features)
    keep = np.r_[np.flatnonzero(train.truth == 0), np.flatnonzero(train.truth == 1)[:300]]
    ds = make_dataset(z[keep], train.truth[keep])
    out, draw = smote_balance(ds, 8, return_draw=True)
    counts = out.class_counts()
    synth = out.features[out.synthetic]
    convex = all(on_segment(p, ds.features[a], ds.features[b]) for p, a, b in zip(synth, draw.base, draw.neighbor))
    minority = bool(np.all(ds.labels[draw.base] == 1) and np.all(ds.labels[draw.neighbor] == 1))
    ok = counts[0] == counts[1] and convex and minority
    record(8, "SMOTE balance and convexity", ok, f"counts {counts}, {len(synth)} synthetic on segments: {convex}")
    assert counts[0] == counts[1]
    assert convex and minority


@pytest.mark.slow
def test_criterion_09_pca(default_study, record):
    raw = regime_training_set(default_study.cfg, "static", default_study.splits)
    m = fit_pca(raw.features, 2)
    ortho = float(np.max(np.abs(m.components @ m.components.T - np.eye(2))))
    ordered = bool(np.all(np.diff(m.explained_variance) <= 0))
    pc1 = m.project(raw.features)[:, 0]
    a, b = pc1[raw.truth == 0], pc1[raw.truth == 1]
    pooled = np.sqrt(0.5 * (a.var(ddof=1) + b.var(ddof=1)))
    sep = abs(a.mean() - b.mean()) / pooled
    ok = ortho <= 1e-9 and ordered and sep >= 2.0
    record(9, "PCA projection", ok, f"orthonormality err {ortho:.1e}, ordered {ordered}, PC1 separation {sep:.1f}")
    assert ortho <= 1e-9
    assert ordered
    assert sep >= 2.0


def _tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_10_cli_determinism(tmp_path, record):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("samples_per_position: 40\nperturbed_test_per_class: 20\nincreased_per_class: 50\nn_averages: 10\n")
    same = True
    for command in ("simulate", "study"):
        runs = []
        for i in range(2):
            out = tmp_path / f"{command}{i}"
            assert main([command, "--config", str(cfg), "--out", str(out)]) == 0
            runs.append(_tree_bytes(out))
        same &= runs[0] == runs[1] and len(runs[0]) > 0
    record(10, "CLI determinism", same, "simulate and study outputs byte-identical on rerun")
    assert same


def test_criterion_11_perceptron_convergence(record):
    worst = 0.0
    ok = True
    for seed in range(30):
        X, y, w, b = separable_fixture(seed, n=80, d=4)
        p = Perceptron(max_epochs=100_000, seed=seed).fit(X, y)
        bound = mistake_bound(X, y, w, b)
        ok &= p.converged and int(np.sum(p.predict(X) != y)) == 0 and p.n_updates <= bound
        worst = max(worst, p.n_updates / bound)
    record(11, "perceptron convergence", ok, f"30 fixtures, max updates/bound {worst:.3f}")
    assert ok


def test_criterion_12_parseval_and_nyquist(record):
    ex = Excitation(((19_500.0, 0.5), (20_500.0, 0.5)), FS, 16384).coherent(16384)
    y = tag_response(synthesize_excitation(ex), DeviceModel(DIODE_COEFFICIENTS))
    spec = compute_spectrum(y, 16384, "rectangular", sample_rate=FS)
    rel = abs(spectrum_energy(spec, 16384) / time_energy(y) - 1)
    rejected = 0
    for f in (FS / 2, 0.75 * FS, 2 * FS):
        with pytest.raises(ValidationError):
            Excitation(((19_500.0, 0.5), (f, 0.5)), FS, N)
        rejected += 1
    ok = rel <= 1e-3 and rejected == 3
    record(12, "Parseval and Nyquist", ok, f"energy error {rel:.1e}, {rejected}/3 aliasing plans rejected")
    assert rel <= 1e-3
