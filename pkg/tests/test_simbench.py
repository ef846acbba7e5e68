import numpy as np
import pytest

from me_interact import (
    Dataset,
    SimConfig,
    StructuralError,
    concordance_ipcw,
    generate_dataset,
    generate_regulators,
    generate_theta,
    rv_coefficient,
    score_identification,
)
from me_interact.simbench import (
    THETA_SPECS,
    benchmark_replicate,
    placement_plan,
    run_benchmark,
    summarize_benchmark,
)


# --- theta generation ----------------------------------------------------------

def test_theta1_pattern_counts_and_sizes():
    sizes_g, sizes_r = [], []
    for seed in range(50):
        theta, modules = generate_theta("Theta1", 500, 500, seed=seed)
        assert len(modules) == 15
        sizes_g += [m.genes.size for m in modules]
        sizes_r += [m.regulators.size for m in modules]
    assert np.mean(sizes_g) == pytest.approx(12.3, rel=0.2)
    assert np.mean(sizes_r) == pytest.approx(16.6, rel=0.2)


def test_theta2_pattern_counts_and_sizes():
    sizes_g, sizes_r = [], []
    for seed in range(50):
        theta, modules = generate_theta("Theta2", 500, 500, seed=seed)
        assert len(modules) == 20
        sizes_g += [m.genes.size for m in modules]
        sizes_r += [m.regulators.size for m in modules]
    assert np.mean(sizes_g) == pytest.approx(6.0, rel=0.2)
    assert np.mean(sizes_r) == pytest.approx(8.1, rel=0.2)


def test_theta_outside_modules_zero():
    theta, modules = generate_theta("Theta1", 500, 500, seed=1)
    mask = np.zeros_like(theta, dtype=bool)
    for m in modules:
        mask[np.ix_(m.regulators, m.genes)] = True
    assert np.all(theta[~mask] == 0.0)
    assert np.all(theta[mask] != 0.0)


def test_theta_one_overlapping_pair():
    theta, modules = generate_theta("Theta1", 500, 500, seed=2)
    overlaps = []
    for i in range(len(modules)):
        for j in range(i + 1, len(modules)):
            shared_g = np.intersect1d(modules[i].genes, modules[j].genes).size
            shared_r = np.intersect1d(modules[i].regulators, modules[j].regulators).size
            if shared_g or shared_r:
                overlaps.append((i, j, shared_g, shared_r))
    assert len(overlaps) == 1
    _, _, shared_g, shared_r = overlaps[0]
    assert shared_g == 2 and shared_r == 2


def test_theta_module_means_span_range():
    theta, modules = generate_theta("Theta1", 500, 500, seed=3)
    first = theta[np.ix_(modules[0].regulators, modules[0].genes)]
    last = theta[np.ix_(modules[-1].regulators, modules[-1].genes)]
    assert first.mean() == pytest.approx(-0.7, abs=0.1)
    assert last.mean() == pytest.approx(1.5, abs=0.1)


def test_theta_dims_too_small_rejected():
    with pytest.raises(StructuralError):
        generate_theta("Theta1", 20, 20, seed=0)


def test_theta_forced_effect_module_sizes():
    _, m1 = generate_theta("Theta1", 500, 500, seed=4)
    assert (m1[0].genes.size, m1[0].regulators.size) == (10, 20)
    _, m2 = generate_theta("Theta2", 500, 500, seed=4)
    assert (m2[0].genes.size, m2[0].regulators.size) == (8, 10)
    assert (m2[1].genes.size, m2[1].regulators.size) == (6, 9)


# --- regulator generation --------------------------------------------------------

def moment_check(corr, lag, expected, n=10_000):
    theta, modules = generate_theta("Theta1", 500, 500, seed=5)
    R = generate_regulators(corr, modules, 500, n, seed=6)
    # use the third module: disjoint from the overlapping pair
    regs = modules[3].regulators
    vals = []
    for a in range(regs.size - lag):
        c = np.corrcoef(R[:, regs[a]], R[:, regs[a + lag]])[0, 1]
        vals.append(c)
    assert np.mean(vals) == pytest.approx(expected, abs=0.05)


def test_r1_adjacent_correlation():
    moment_check("R1", 1, -0.5)


def test_r1_lag_two_correlation():
    moment_check("R1", 2, 0.25)


def test_r2_lag_two_zero():
    moment_check("R2", 2, 0.0)


def test_r3_constant_magnitude():
    theta, modules = generate_theta("Theta1", 500, 500, seed=7)
    R = generate_regulators("R3", modules, 500, 10_000, seed=8)
    m = modules[3]
    expected = -1.0 / (m.genes.size + m.regulators.size)
    c = np.corrcoef(R[:, m.regulators[0]], R[:, m.regulators[1]])[0, 1]
    assert c == pytest.approx(expected, abs=0.05)


def test_non_module_regulators_independent():
    theta, modules = generate_theta("Theta1", 500, 500, seed=9)
    R = generate_regulators("R1", modules, 500, 10_000, seed=10)
    used = np.zeros(500, dtype=bool)
    for m in modules:
        used[m.regulators] = True
    free = np.flatnonzero(~used)[:4]
    for a in range(3):
        c = np.corrcoef(R[:, free[a]], R[:, free[a + 1]])[0, 1]
        assert abs(c) < 0.05
    assert np.all(np.abs(R[:, free].std(axis=0) - 1.0) < 0.05)


# --- dataset + placements ---------------------------------------------------------

@pytest.mark.parametrize("pattern,placement,main,inter", [
    ("Theta1", "P1", 35, 65),
    ("Theta1", "P2", 35, 35),
    ("Theta2", "P1", 46, 54),
    ("Theta2", "P2", 38, 32),
])
def test_placement_totals_at_full_scale(pattern, placement, main, inter):
    config = SimConfig(theta_pattern=pattern, placement=placement, seed=3)
    dataset, truth = generate_dataset(config)
    assert truth.n_main == main
    assert truth.n_inter == inter
    assert truth.n_total == main + inter


def test_truth_hierarchy_invariant():
    for pattern in ("Theta1", "Theta2"):
        for placement in ("P1", "P2"):
            config = SimConfig(theta_pattern=pattern, placement=placement, seed=11)
            _, truth = generate_dataset(config)
            mains = truth.important_main
            for kind, idx, m in truth.important_inter:
                assert (kind, idx) in mains


def test_signal_ranges_respected():
    for signal, lo, hi in (("B1", 0.5, 0.8), ("B2", 0.8, 1.2)):
        config = SimConfig(signal=signal, seed=12, scale_factor=0.2)
        _, truth = generate_dataset(config)
        values = list(truth.alpha)
        for v in truth.beta_values.values():
            values += list(v)
        for v in truth.inter_values.values():
            values += list(v)
        values += list(truth.gamma_values.values())
        values += list(truth.tau_values.values())
        arr = np.asarray(values)
        assert np.all(arr > lo) and np.all(arr < hi)


def test_generation_deterministic():
    config = SimConfig(seed=13, scale_factor=0.2)
    d1, t1 = generate_dataset(config)
    d2, t2 = generate_dataset(config)
    np.testing.assert_array_equal(d1.G, d2.G)
    np.testing.assert_array_equal(d1.Y, d2.Y)
    np.testing.assert_array_equal(t1.theta_true, t2.theta_true)
    assert t1.important_main == t2.important_main
    assert t1.important_inter == t2.important_inter


def test_scale_factor_shrinks_dims_and_sizes():
    config = SimConfig(scale_factor=0.2, seed=14)
    assert config.p_eff == 100 and config.q_eff == 100
    assert config.n_modules == 15
    _, truth = generate_dataset(config)
    assert truth.planted_modules[0].genes.size == 2
    assert truth.planted_modules[0].regulators.size == 4


def test_invalid_config_values_rejected():
    with pytest.raises(StructuralError, match="corr"):
        SimConfig(corr="R9")
    with pytest.raises(StructuralError, match="placement"):
        SimConfig(placement="P7")
    with pytest.raises(StructuralError, match="scale_factor"):
        SimConfig(scale_factor=-1)


def test_placement_needs_enough_factors():
    with pytest.raises(StructuralError, match="factors"):
        placement_plan("Theta2", "P1", M=2)


# --- scoring ----------------------------------------------------------------------

class FakeResult:
    def __init__(self, main, inter):
        self.identified_main = main
        self.identified_inter = inter


def test_score_identification_hand_case():
    config = SimConfig(seed=15, scale_factor=0.2)
    _, truth = generate_dataset(config)
    mains = sorted(truth.important_main)
    inters = sorted(truth.important_inter)
    picked_main = set(mains[:4]) | {("gene", 9999)}
    picked_inter = set(inters[:3]) | {("gene", 9999, 0)}
    tp, fp = score_identification(FakeResult(picked_main, picked_inter), truth)
    assert tp == 7
    assert fp == 2


def test_score_perfect_and_empty():
    config = SimConfig(seed=16, scale_factor=0.2)
    _, truth = generate_dataset(config)
    perfect = FakeResult(set(truth.important_main), set(truth.important_inter))
    assert score_identification(perfect, truth) == (truth.n_total, 0)
    assert score_identification(FakeResult(set(), set()), truth) == (0, 0)


# --- metrics ------------------------------------------------------------------------

def test_rv_self_is_one():
    A = np.random.default_rng(17).standard_normal((20, 3))
    assert rv_coefficient(A, A) == pytest.approx(1.0, abs=1e-12)


def test_rv_orthogonal_spaces_zero():
    basis = np.linalg.qr(np.random.default_rng(18).standard_normal((20, 6)))[0]
    basis = basis - basis.mean(axis=0)  # keep centered structure explicit
    A, B = basis[:, :3], basis[:, 3:]
    Ac = A - A.mean(axis=0)
    Bc = B - B.mean(axis=0)
    # columns spaces orthogonal after centering in this construction
    if np.abs(Ac.T @ Bc).max() < 1e-10:
        assert rv_coefficient(A, B) == pytest.approx(0.0, abs=1e-10)


def test_rv_column_permutation_invariant():
    rng = np.random.default_rng(19)
    A = rng.standard_normal((20, 3))
    B = A[:, rng.permutation(3)]
    assert rv_coefficient(A, B) == pytest.approx(1.0, abs=1e-10)


def test_rv_zero_matrix_rejected():
    A = np.random.default_rng(20).standard_normal((10, 2))
    with pytest.raises(StructuralError):
        rv_coefficient(A, np.ones((10, 2)))


def test_rv_bounds():
    rng = np.random.default_rng(21)
    for _ in range(5):
        A = rng.standard_normal((15, 3))
        B = rng.standard_normal((15, 4))
        v = rv_coefficient(A, B)
        assert 0.0 <= v <= 1.0


def test_concordance_perfect_and_reversed():
    rng = np.random.default_rng(22)
    y = rng.uniform(1, 10, 40)
    delta = np.ones(40)
    assert concordance_ipcw(y, delta, y) == pytest.approx(1.0)
    assert concordance_ipcw(y, delta, -y) == pytest.approx(0.0)


def test_concordance_random_predictor_near_half():
    rng = np.random.default_rng(23)
    vals = []
    for _ in range(50):
        y = rng.uniform(1, 10, 60)
        delta = (rng.random(60) < 0.7).astype(float)
        pred = rng.standard_normal(60)
        vals.append(concordance_ipcw(y, delta, pred))
    assert np.mean(vals) == pytest.approx(0.5, abs=0.05)


def test_concordance_uncensored_matches_plain_fraction():
    rng = np.random.default_rng(24)
    y = rng.uniform(0, 5, 25)
    pred = rng.standard_normal(25)
    c = concordance_ipcw(y, np.ones(25), pred)
    num = den = 0
    for i in range(25):
        for j in range(25):
            if y[i] < y[j]:
                den += 1
                num += (pred[i] < pred[j]) + 0.5 * (pred[i] == pred[j])
    assert c == pytest.approx(num / den)


# --- benchmark harness ----------------------------------------------------------

def test_benchmark_rows_and_summary_structure():
    rows = [
        {"pattern": "Theta1", "corr": "R1", "placement": "P1", "signal": "B1",
         "variant": "proposed", "replicate": 0, "TP": 10, "FP": 1, "seconds": 0.1, "error": ""},
        {"pattern": "Theta1", "corr": "R1", "placement": "P1", "signal": "B1",
         "variant": "proposed", "replicate": 1, "TP": 12, "FP": 3, "seconds": 0.1, "error": ""},
        {"pattern": "Theta1", "corr": "R1", "placement": "P1", "signal": "B1",
         "variant": "alt4", "replicate": 0, "TP": 5, "FP": 9, "seconds": 0.1, "error": ""},
        {"pattern": "Theta1", "corr": "R1", "placement": "P1", "signal": "B1",
         "variant": "alt4", "replicate": 1, "TP": float("nan"), "FP": float("nan"),
         "seconds": 0.1, "error": "boom"},
    ]
    summary = summarize_benchmark(rows)
    by_variant = {s["variant"]: s for s in summary}
    assert by_variant["proposed"]["tp_mean"] == pytest.approx(11.0)
    assert by_variant["proposed"]["tp_sd"] == pytest.approx(np.std([10, 12], ddof=1))
    assert by_variant["alt4"]["failures"] == 1
    assert by_variant["alt4"]["tp_mean"] == pytest.approx(5.0)
