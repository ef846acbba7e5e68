"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with the measured quantity at its stated tolerance."""

import time

import numpy as np
import pytest

import me_interact as mi
from me_interact.data import FeatureSet, ModuleBlock
from me_interact.interact import default_grids, ebic_select
from me_interact.regulation import lambda_max, lasso_objective


def report(criterion, ok, detail):
    print(f"\nACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


def coordinate_grid_minimum(R, g, lam, span=2.0, step=1e-3):
    """Independent oracle: cyclic exhaustive grid search per coordinate,
    refining the step until it reaches `step`; touches only the objective."""
    q = R.shape[1]
    theta = np.zeros(q)
    resid = g.copy()
    current = lasso_objective(R, g, theta, lam)
    width = 0.5
    grid_step = 0.1
    for _ in range(60):
        changed = False
        for j in range(q):
            col = R[:, j]
            base = resid + col * theta[j]
            ts = np.arange(theta[j] - width, theta[j] + width + grid_step / 2, grid_step)
            ts = np.clip(ts, -span, span)
            # objective along the grid, vectorized
            quad = 0.5 * ((base[:, None] - col[:, None] * ts[None, :]) ** 2).sum(axis=0)
            vals = quad + lam * (np.abs(ts) + np.abs(theta).sum() - abs(theta[j]))
            k = int(np.argmin(vals))
            if vals[k] < current - 1e-15:
                theta[j] = float(ts[k])
                resid = base - col * theta[j]
                current = float(vals[k])
                changed = True
        if not changed:
            if grid_step <= step:
                break
            grid_step = max(grid_step / 10, step)
            width = grid_step * 20
    return current


def test_criterion_1_lasso_correctness():
    rng = np.random.default_rng(1)
    # orthonormal closed form at 1e-10
    worst_closed = 0.0
    solver_time = 0.0
    for _ in range(5):
        A = np.linalg.qr(rng.standard_normal((40, 6)))[0]
        g = rng.standard_normal(40)
        lam = rng.uniform(0.05, 0.5)
        t0 = time.perf_counter()
        theta = mi.lasso_column(A, g, lam)
        solver_time += time.perf_counter() - t0
        corr = A.T @ g
        closed = np.sign(corr) * np.maximum(np.abs(corr) - lam, 0.0)
        worst_closed = max(worst_closed, float(np.abs(theta - closed).max()))
    # 20 random instances against the grid oracle
    worst_gap = -np.inf
    for i in range(20):
        R = rng.standard_normal((30, 5))
        g = rng.standard_normal(30)
        lam = rng.uniform(0.1, 0.8) * lambda_max(R, g)
        t0 = time.perf_counter()
        theta = mi.lasso_column(R, g, lam)
        solver_time += time.perf_counter() - t0
        mine = lasso_objective(R, g, theta, lam)
        oracle = coordinate_grid_minimum(R, g, lam)
        worst_gap = max(worst_gap, mine - oracle)
    ok = worst_closed <= 1e-10 and worst_gap <= 1e-6 and solver_time < 1.0
    report(1, ok, f"orthonormal err {worst_closed:.2e}, objective gap {worst_gap:.2e}, "
                  f"solver time {solver_time:.3f}s")


def test_criterion_2_kkt_audit():
    checked = 0
    all_ok = True
    for pattern, seed in (("Theta1", 0), ("Theta2", 1), ("Theta1", 2)):
        config = mi.SimConfig(theta_pattern=pattern, scale_factor=0.2, seed=seed)
        dataset, _ = mi.generate_dataset(config)
        ds = mi.standardize(dataset)
        reg = mi.estimate_regulation(ds)
        ok, per_col = mi.kkt_check(ds.R, ds.G, reg.lambdas, reg.theta, tol=1e-6)
        all_ok &= bool(ok)
        checked += per_col.size
    report(2, all_ok, f"{checked} regulation columns audited at 1e-6, all pass: {all_ok}")


def jaccard(a, b):
    a, b = set(np.asarray(a).tolist()), set(np.asarray(b).tolist())
    return len(a & b) / len(a | b)


def test_criterion_3_module_recovery():
    t0 = time.perf_counter()
    fractions = []
    for seed in range(10):
        theta, planted = mi.generate_theta("Theta1", 100, 100, seed=seed, size_scale=0.2)
        found = mi.extract_modules(theta, B=100, seed=777 + seed)
        hit = sum(
            max((min(jaccard(m.genes, f.genes), jaccard(m.regulators, f.regulators))
                 for f in found), default=0.0) >= 0.6
            for m in planted
        )
        fractions.append(hit / len(planted))
    mean_frac = float(np.mean(fractions))
    zero = 0
    for t in range(20):
        noise = np.random.default_rng(5000 + t).standard_normal((100, 100))
        zero += len(mi.extract_modules(noise, B=100, seed=6000 + t, max_modules=5)) == 0
    elapsed = time.perf_counter() - t0
    ok = mean_frac >= 0.8 and zero >= 18 and elapsed < 300
    report(3, ok, f"mean recovered fraction {mean_frac:.2f} (>=0.8), "
                  f"noise zero-modules {zero}/20 (>=18), {elapsed:.0f}s (<300)")


def random_instance(seed, n=40, S=2, p_s=2, p_z=5, M=2):
    rng = np.random.default_rng(seed)
    blocks, meta = [], []
    for s in range(S):
        blocks.append(rng.standard_normal((n, p_s)))
        width = p_s + 1
        meta.append(ModuleBlock(
            gene_indices=np.arange(s * width, s * width + p_s),
            regulator_indices=np.array([s * width + p_s]),
            loadings=np.linalg.qr(rng.standard_normal((width, p_s)))[0],
            col_means=np.zeros(width), explained=np.full(p_s, 1 / p_s),
        ))
    Z = rng.standard_normal((n, p_z))
    fs = FeatureSet(X_blocks=blocks, Z=Z, block_meta=meta,
                    z_meta=[("gene", 90 + d) for d in range(p_z)])
    E = rng.standard_normal((n, M))
    y = rng.standard_normal(n)
    return fs, E, y, rng


def test_criterion_4_hierarchy_invariant():
    violations = 0
    fits = 0
    for seed in range(50):
        fs, E, y, rng = random_instance(seed)
        lam1, lam2 = rng.uniform(0.05, 3.0, 2)
        model = mi.cd_fit(fs, E, y, lam1, lam2)
        fits += 1
        for s in range(len(model.beta)):
            if np.any(model.eta[s]) and not np.any(model.beta[s]):
                violations += 1
        bad = np.any(model.tau != 0.0, axis=0) & (model.gamma == 0.0)
        violations += int(bad.sum())
    report(4, violations == 0, f"{fits} fits, {violations} hierarchy violations (exact check)")


def test_criterion_5_objective_monotonicity():
    worst = -np.inf
    for seed in range(50):
        fs, E, y, rng = random_instance(seed + 100, n=45)
        lam1, lam2 = rng.uniform(0.05, 2.0, 2)
        weights = None
        if seed % 2:
            weights = mi.km_weights(np.exp(y), (rng.random(45) < 0.7).astype(float))
        model = mi.cd_fit(fs, E, y, lam1, lam2, weights=weights)
        diffs = np.diff(np.asarray(model.objective_trace))
        if diffs.size:
            worst = max(worst, float(diffs.max()))
    report(5, worst <= 1e-10, f"50 traces (continuous+survival), max increase {worst:.2e} (<=1e-10)")


def test_criterion_6_predictor_oracle():
    worst = 0.0
    for seed in range(20):
        n = int(np.random.default_rng(seed).integers(30, 100))
        fs, E, y, rng = random_instance(seed + 300, n=n, S=3, p_s=4, p_z=10, M=3)
        model = mi.cd_fit(fs, E, y, 0.3, 0.3)
        cols, coefs = [E], [model.alpha]
        for s, X in enumerate(fs.X_blocks):
            cols.append(X)
            coefs.append(model.beta[s])
            for m in range(E.shape[1]):
                cols.append(E[:, m:m + 1] * X)
                coefs.append(model.interaction_coefficients(s, m))
        cols.append(fs.Z)
        coefs.append(model.gamma)
        for m in range(E.shape[1]):
            cols.append(E[:, m:m + 1] * fs.Z)
            coefs.append(model.z_interaction_coefficients(m))
        oracle = np.hstack(cols) @ np.concatenate(coefs)
        worst = max(worst, float(np.abs(mi.predict(model, fs, E) - oracle).max()))
    report(6, worst <= 1e-10, f"20 instances, max |predict - materialized| = {worst:.2e} (<=1e-10)")


def test_criterion_7_survival_consistency():
    worst = 0.0
    for seed in range(5):
        n = 44
        fs, E, y, rng = random_instance(seed + 400, n=n)
        w = mi.km_weights(y, np.ones(n))
        lam1, lam2 = rng.uniform(0.5, 3.0, 2)
        cont = mi.cd_fit(fs, E, y, lam1, lam2)
        surv = mi.cd_fit(fs, E, y, lam1 / n, lam2 / n, weights=w)
        worst = max(worst, float(np.abs(cont.alpha - surv.alpha).max()))
        worst = max(worst, float(np.abs(cont.gamma - surv.gamma).max()))
        worst = max(worst, float(np.abs(cont.tau - surv.tau).max()))
        for s in range(len(cont.beta)):
            worst = max(worst, float(np.abs(cont.beta[s] - surv.beta[s]).max()))
            worst = max(worst, float(np.abs(cont.eta[s] - surv.eta[s]).max()))
    report(7, worst <= 1e-10, f"all-events AFT vs continuous, max coef diff {worst:.2e} (<=1e-10)")


def test_criterion_8_desk_scale_dominance():
    t0 = time.perf_counter()
    config = mi.SimConfig(scale_factor=0.4, seed=0)
    rows, summary, total = mi.run_benchmark(
        config, replicates=10, variants=("proposed", "alt3", "alt4"),
    )
    elapsed = time.perf_counter() - t0
    stats = {s["variant"]: s for s in summary}
    tp_prop = stats["proposed"]["tp_mean"]
    share = tp_prop / total
    ok = (
        tp_prop > stats["alt3"]["tp_mean"]
        and tp_prop > stats["alt4"]["tp_mean"]
        and stats["proposed"]["fp_mean"] < stats["alt4"]["fp_mean"]
        and share >= 0.75
        and elapsed < 3600
        and sum(s["failures"] for s in summary) == 0
    )
    report(8, ok, (
        f"TP prop {tp_prop:.1f} vs alt3 {stats['alt3']['tp_mean']:.1f} / "
        f"alt4 {stats['alt4']['tp_mean']:.1f}; FP prop {stats['proposed']['fp_mean']:.1f} "
        f"< alt4 {stats['alt4']['fp_mean']:.1f}; share {share:.2f} (>=0.75); {elapsed:.0f}s"
    ))


def test_criterion_9_single_fit_runtime():
    config = mi.SimConfig(seed=3)  # full p = q = 500
    dataset, _ = mi.generate_dataset(config)
    t0 = time.perf_counter()
    result = mi.run_pipeline(dataset, "proposed", seed=11)
    elapsed = time.perf_counter() - t0
    ok = elapsed < 300 and len(result.identified_main) > 0
    report(9, ok, f"full proposed pipeline at n=250, p=q=500: {elapsed:.0f}s (<300), "
                  f"{len(result.modules)} modules, {len(result.identified_main)} mains")


def test_criterion_10_null_calibration():
    config = mi.SimConfig(scale_factor=0.2, seed=7)
    dataset, _ = mi.generate_dataset(config)
    ds = mi.standardize(dataset)
    reg = mi.estimate_regulation(ds)
    modules = mi.extract_modules(reg, B=60, seed=13)
    features = mi.assemble_features(ds, modules)
    clean = 0
    for t in range(20):
        y = np.random.default_rng(9000 + t).standard_normal(ds.n)
        g1, g2 = default_grids(features, ds.E, y)
        _, _, model, _ = ebic_select(features, ds.E, y, g1, g2)
        clean += model.nnz_penalized() == 0
    report(10, clean >= 18, f"null outcomes: {clean}/20 selected zero molecular coefficients (>=18)")


def test_criterion_11_metric_sanity():
    rng = np.random.default_rng(12)
    A = rng.standard_normal((20, 3))
    rv_self = mi.rv_coefficient(A, A)
    basis = np.linalg.qr(rng.standard_normal((21, 6)))[0]
    centered = basis - basis.mean(axis=0)
    # build exactly orthogonal centered column spaces
    Qc = np.linalg.qr(centered)[0]
    ortho_val = mi.rv_coefficient(Qc[:, :3], Qc[:, 3:])

    cs = []
    for t in range(50):
        y = rng.uniform(1, 10, 60)
        delta = (rng.random(60) < 0.7).astype(float)
        cs.append(mi.concordance_ipcw(y, delta, rng.standard_normal(60)))
    c_mean = float(np.mean(cs))

    # noiseless saturated toy: outcome an exact function of the unpenalized
    # environment block, so every resampling split predicts perfectly
    n = 40
    G = rng.standard_normal((n, 3))
    R = rng.standard_normal((n, 3))
    E = rng.standard_normal((n, 2))
    dataset = mi.Dataset(G=G, R=R, E=E, Y=E @ np.array([2.0, -1.0]))
    pmse, _, _ = mi.evaluate_resampling(dataset, "alt3", splits=5, seed=5)

    ok = (
        abs(rv_self - 1.0) <= 1e-10
        and abs(ortho_val) <= 1e-10
        and abs(c_mean - 0.5) <= 0.05
        and pmse <= 1e-6
    )
    report(11, ok, f"RV self {rv_self:.12f}, orthogonal {ortho_val:.2e}, "
                   f"null C {c_mean:.3f} (0.5±0.05), noiseless PMSE {pmse:.2e} (<=1e-6)")
