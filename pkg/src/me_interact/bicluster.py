"""Sequential module extraction from the regulation matrix.

One round = sparse 2-means over regulators with per-gene weights, a
permutation null for the weight profile, a two-sample Kolmogorov-Smirnov
stopping test, gene-set selection from the weight gaps, and subtraction of
the found module from the working matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateWeightsError, NumericError, StructuralError

KMEANS_RESTARTS = 10
KMEANS_MAX_ITER = 100
ALTERNATION_ROUNDS = 50


@dataclass
class RegulatoryModule:
    """One bicluster: regulator set C, gene set D, plus extraction context."""

    regulators: np.ndarray
    genes: np.ndarray
    weight_vector: np.ndarray = field(default=None, repr=False)
    ks_pvalue: float = 0.0

    def __post_init__(self):
        self.regulators = np.unique(np.asarray(self.regulators, dtype=np.int64))
        self.genes = np.unique(np.asarray(self.genes, dtype=np.int64))
        if self.regulators.size < 1 or self.genes.size < 1:
            raise StructuralError("module needs at least one regulator and one gene")


def normalize_columns(theta: np.ndarray) -> np.ndarray:
    """Scale each column to unit L2 norm; all-zero columns stay zero."""
    theta = np.asarray(theta, dtype=np.float64)
    norms = np.linalg.norm(theta, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    return theta / safe


def between_cluster_terms(U: np.ndarray, in_small: np.ndarray) -> np.ndarray:
    """Per-gene between-cluster distance terms b_j for a fixed row partition.

    Equals the all-pairs squared-difference form (1/q)*sum_all - (1/q1)*sum_C
    - (1/q2)*sum_Cbar, reduced to 2 * between-cluster sum of squares.
    """
    q = U.shape[0]
    q1 = int(in_small.sum())
    q2 = q - q1
    if q1 == 0 or q2 == 0:
        raise StructuralError("both clusters must be nonempty")
    m_all = U.mean(axis=0)
    m1 = U[in_small].mean(axis=0)
    m2 = U[~in_small].mean(axis=0)
    return 2.0 * (q1 * (m1 - m_all) ** 2 + q2 * (m2 - m_all) ** 2)


def weight_from_terms(b: np.ndarray, l1_bound: float | None = None) -> np.ndarray:
    """Maximize sum(w*b) over the unit L2 ball intersected with w >= 0.

    Closed form w = b+/||b+||; when an L1 bound below sqrt(p) is requested the
    soft-threshold level is found by bisection (the bound at sqrt(p) can never
    bind inside the L2 ball).
    """
    b = np.asarray(b, dtype=np.float64)
    bp = np.maximum(b, 0.0)
    norm = np.linalg.norm(bp)
    if norm <= 0.0:
        raise DegenerateWeightsError("all between-cluster terms are zero")
    w = bp / norm
    if l1_bound is None or w.sum() <= l1_bound:
        return w

    def renorm(delta):
        s = np.maximum(bp - delta, 0.0)
        ns = np.linalg.norm(s)
        return s / ns if ns > 0 else s

    lo, hi = 0.0, float(bp.max())
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if renorm(mid).sum() > l1_bound:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, hi):
            break
    return renorm(hi)


def _lloyd_two(X: np.ndarray, centers: np.ndarray, max_iter: int) -> np.ndarray:
    q = X.shape[0]
    labels = np.zeros(q, dtype=np.int64)
    for _ in range(max_iter):
        d0 = ((X - centers[0]) ** 2).sum(axis=1)
        d1 = ((X - centers[1]) ** 2).sum(axis=1)
        new = np.where(d0 <= d1, 0, 1).astype(np.int64)
        for k in (0, 1):
            if not np.any(new == k):
                # empty-cluster repair: move the point farthest from its centroid
                other = 1 - k
                dist = d0 if other == 0 else d1
                far = int(np.argmax(np.where(new == other, dist, -np.inf)))
                new[far] = k
        if np.array_equal(new, labels):
            labels = new
            break
        labels = new
        for k in (0, 1):
            centers[k] = X[labels == k].mean(axis=0)
    return labels


def _kmeans_two(X: np.ndarray, rng: np.random.Generator, restarts: int) -> tuple[np.ndarray, float]:
    """Best-of-restarts 2-means with k-means++ seeding; maximizes between-SS."""
    q = X.shape[0]
    best_labels = None
    best_obj = -np.inf
    for _ in range(restarts):
        first = int(rng.integers(q))
        d2 = ((X - X[first]) ** 2).sum(axis=1)
        total = d2.sum()
        probs = d2 / total if total > 0 else np.full(q, 1.0 / q)
        second = int(rng.choice(q, p=probs))
        centers = np.stack([X[first].copy(), X[second].copy()])
        labels = _lloyd_two(X, centers, KMEANS_MAX_ITER)
        in_small = labels == 0
        if in_small.all() or not in_small.any():
            continue
        obj = float(between_cluster_terms(X, in_small).sum())
        if obj > best_obj:
            best_obj = obj
            best_labels = labels
    if best_labels is None:
        best_labels = np.zeros(q, dtype=np.int64)
        best_labels[0] = 1
        best_obj = float(between_cluster_terms(X, best_labels == 0).sum())
    return best_labels, best_obj


def sparse_two_means(
    U: np.ndarray,
    seed: int,
    *,
    restarts: int = KMEANS_RESTARTS,
    max_rounds: int = ALTERNATION_ROUNDS,
    l1_bound: float | None = None,
    objective_trace: list | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Alternate weighted 2-means over rows with the closed-form weight update.

    Returns (smaller cluster, larger cluster, gene weights); a size tie puts
    the cluster holding the lowest row index first.  The weighted
    between-cluster objective is nondecreasing over rounds because the
    previous partition always competes with the fresh restarts.
    """
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2 or U.shape[0] < 2:
        raise StructuralError("need a matrix with at least two rows")
    if not np.all(np.isfinite(U)):
        raise NumericError("non-finite entries in clustering input")
    q, p = U.shape
    rng = np.random.default_rng(seed)
    w = np.full(p, 1.0 / math.sqrt(p))
    labels = None
    for _ in range(max_rounds):
        Xw = U * np.sqrt(w)
        new_labels, obj = _kmeans_two(Xw, rng, restarts)
        if labels is not None:
            prev_obj = float(between_cluster_terms(Xw, labels == 0).sum())
            if prev_obj >= obj:
                new_labels, obj = labels, prev_obj
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        b = between_cluster_terms(U, labels == 0)
        w = weight_from_terms(b, l1_bound)
        if objective_trace is not None:
            objective_trace.append(float(w @ b))
    zero_set = np.flatnonzero(labels == 0)
    one_set = np.flatnonzero(labels == 1)
    if zero_set.size < one_set.size:
        small, large = zero_set, one_set
    elif one_set.size < zero_set.size:
        small, large = one_set, zero_set
    else:
        small, large = (zero_set, one_set) if 0 in zero_set else (one_set, zero_set)
    return small, large, w


NULL_MODES = ("row_order", "within_rows")


def _null_weight_profiles(
    U: np.ndarray,
    in_small: np.ndarray,
    B: int,
    seed: int,
    mode: str,
) -> np.ndarray:
    """B sorted null weight profiles with the partition held fixed.

    mode "row_order" shuffles whole rows across the fixed cluster index sets
    (a label-permutation null); "within_rows" shuffles each row's entries
    across columns instead.  Replicate k draws from an independent stream
    seeded seed+k, so parallel evaluation reproduces the sequential result.
    """
    if mode not in NULL_MODES:
        raise StructuralError(f"null mode must be one of {NULL_MODES}, got {mode!r}")
    q, p = U.shape
    out = np.empty((B, p))
    for k in range(1, B + 1):
        rng = np.random.default_rng(seed + k)
        if mode == "row_order":
            Uperm = U[rng.permutation(q)]
        else:
            Uperm = rng.permuted(U, axis=1)
        b = between_cluster_terms(Uperm, in_small)
        bp = np.maximum(b, 0.0)
        norm = np.linalg.norm(bp)
        out[k - 1] = np.sort(bp / norm if norm > 0 else bp)
    return out


def permutation_null_weights(
    U: np.ndarray,
    cluster_small: np.ndarray,
    B: int,
    seed: int,
    mode: str = "row_order",
) -> np.ndarray:
    """Mean sorted null weight profile: the j-th entry averages the j-th
    order statistic of the fixed-partition weights over B permutations."""
    if B < 1:
        raise StructuralError("need at least one permutation replicate")
    U = np.asarray(U, dtype=np.float64)
    in_small = np.zeros(U.shape[0], dtype=bool)
    in_small[np.asarray(cluster_small, dtype=np.int64)] = True
    return _null_weight_profiles(U, in_small, B, seed, mode).mean(axis=0)


def _kolmogorov_sf(t: float) -> float:
    """Survival function of the Kolmogorov distribution, 2*sum (-1)^(k-1) e^(-2k^2 t^2)."""
    if t < 0.05:
        return 1.0
    total = 0.0
    sign = 1.0
    k = 1
    while True:
        term = math.exp(-2.0 * (k * t) ** 2)
        if term < 1e-12:
            break
        total += sign * term
        sign = -sign
        k += 1
    return min(max(2.0 * total, 0.0), 1.0)


def ks_test_two_sample(a, b) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic p-value.

    Effective size n_a*n_b/(n_a+n_b) enters the Kolmogorov series, truncated
    once terms drop below 1e-12.
    """
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise StructuralError("both samples must be nonempty")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    stat = float(np.abs(cdf_a - cdf_b).max())
    n_eff = a.size * b.size / (a.size + b.size)
    pvalue = _kolmogorov_sf(math.sqrt(n_eff) * stat)
    return stat, pvalue


def select_gene_set(w: np.ndarray, w0: np.ndarray) -> np.ndarray:
    """Pick the gene count at the largest drop in the null-adjusted weight
    profile, then return the indices of that many largest weights."""
    w = np.asarray(w, dtype=np.float64)
    w0 = np.asarray(w0, dtype=np.float64)
    p = w.size
    if p < 2 or w0.size != p:
        raise StructuralError("need matched weight vectors of length >= 2")
    excess = np.sort(w) - np.sort(w0)
    # gap(j) = excess[p-j] - excess[p-j-1] for j = 1..p-1 (ascending order stats)
    gaps = excess[1:][::-1] - excess[:-1][::-1]
    j_star = int(np.argmax(gaps)) + 1
    order = np.argsort(-w, kind="stable")
    return np.sort(order[:j_star])


def subtract_module(U: np.ndarray, module: RegulatoryModule) -> np.ndarray:
    """Remove the module's mean shift: on C x D cells, drop the difference of
    cluster-wise column means so that both regulator groups align."""
    U = np.asarray(U, dtype=np.float64)
    q, p = U.shape
    C = module.regulators
    D = module.genes
    if C.size == 0 or D.size == 0:
        raise StructuralError("module index sets must be nonempty")
    if C.min() < 0 or C.max() >= q or D.min() < 0 or D.max() >= p:
        raise StructuralError("module indices out of bounds")
    if C.size == q:
        raise StructuralError("regulator cluster covers all rows; complement is empty")
    mask = np.zeros(q, dtype=bool)
    mask[C] = True
    mean_c = U[np.ix_(mask, D)].mean(axis=0)
    mean_cbar = U[np.ix_(~mask, D)].mean(axis=0)
    out = U.copy()
    out[np.ix_(mask, D)] -= mean_c - mean_cbar
    return out


def extract_modules(
    theta,
    *,
    B: int = 100,
    alpha: float = 0.05,
    max_modules: int = 50,
    seed: int = 0,
    restarts: int = KMEANS_RESTARTS,
    l1_bound: float | None = None,
    normalize: str = "column_l2",
    null_mode: str = "row_order",
) -> list[RegulatoryModule]:
    """Run the sequential bicluster loop until the KS test stops rejecting.

    Accepts a RegulationMatrix or a raw q x p array.  The stopping p-value
    compares the fitted weight profile against the pooled permutation
    profiles; the per-order-statistic mean profile drives gene selection.
    Modules found in later rounds may overlap earlier ones.  Deterministic
    for a fixed seed.
    """
    theta_arr = np.asarray(getattr(theta, "theta", theta), dtype=np.float64)
    if normalize == "column_l2":
        U = normalize_columns(theta_arr)
    elif normalize == "none":
        U = theta_arr.copy()
    else:
        raise StructuralError(f"unknown normalization {normalize!r}")
    if B < 1:
        raise StructuralError("need at least one permutation replicate")
    modules: list[RegulatoryModule] = []
    for s in range(max_modules):
        seed_s = seed + 2_000_003 * s
        try:
            c_small, _, w = sparse_two_means(
                U, seed_s, restarts=restarts, l1_bound=l1_bound
            )
        except DegenerateWeightsError:
            break
        in_small = np.zeros(U.shape[0], dtype=bool)
        in_small[c_small] = True
        profiles = _null_weight_profiles(U, in_small, B, seed_s + 1_000_001, null_mode)
        _, pvalue = ks_test_two_sample(np.sort(w), np.sort(profiles.ravel()))
        if pvalue >= alpha:
            break
        genes = select_gene_set(w, profiles.mean(axis=0))
        module = RegulatoryModule(
            regulators=c_small, genes=genes, weight_vector=w, ks_pvalue=pvalue
        )
        modules.append(module)
        U = subtract_module(U, module)
    return modules
