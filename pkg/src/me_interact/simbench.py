"""Synthetic benchmark: data generation, pipeline variants, and metrics.

Generation follows the block-module recipe: a sparse regulation matrix built
from planted biclusters, regulators drawn per-module from one of three
correlation structures, gene expressions as noisy regulator combinations, and
outcomes from the interaction model on the planted feature blocks.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .bicluster import RegulatoryModule, extract_modules
from .data import Dataset, FeatureSet, standardize
from .errors import PipelineError, StructuralError
from .integrate import (
    assemble_features,
    assemble_individual,
    assemble_raw_groups,
    transform_features,
)
from .interact import (
    SurvivalWeights,
    cd_fit,
    default_grids,
    ebic_select,
    km_weights,
    predict,
)
from .regulation import estimate_regulation

VARIANTS = ("proposed", "alt1", "alt2", "alt3", "alt4")

THETA_SPECS = {
    # base module count, gene-size range, regulator-size range, forced leading sizes
    "Theta1": (15, (8, 17), (12, 21), ((10, 20),)),
    "Theta2": (20, (4, 8), (6, 10), ((8, 10), (6, 9))),
}
MODULE_MEAN_RANGE = (-0.7, 1.5)
MODULE_VALUE_SD = 0.1
SIGNAL_RANGES = {"B1": (0.5, 0.8), "B2": (0.8, 1.2)}


@dataclass(frozen=True)
class SimConfig:
    """Benchmark scenario; scale_factor < 1 shrinks p, q, and module counts."""

    n: int = 250
    p: int = 500
    q: int = 500
    M: int = 5
    theta_pattern: str = "Theta1"
    corr: str = "R1"
    placement: str = "P1"
    signal: str = "B1"
    seed: int = 0
    scale_factor: float = 1.0

    def __post_init__(self):
        if self.theta_pattern not in THETA_SPECS:
            raise StructuralError(
                f"theta_pattern must be one of {sorted(THETA_SPECS)}, got {self.theta_pattern!r}"
            )
        if self.corr not in ("R1", "R2", "R3"):
            raise StructuralError(f"corr must be one of R1, R2, R3, got {self.corr!r}")
        if self.placement not in ("P1", "P2"):
            raise StructuralError(f"placement must be P1 or P2, got {self.placement!r}")
        if self.signal not in SIGNAL_RANGES:
            raise StructuralError(f"signal must be B1 or B2, got {self.signal!r}")
        if self.scale_factor <= 0:
            raise StructuralError("scale_factor must be positive")
        if min(self.n, self.p, self.q, self.M) < 1:
            raise StructuralError("dimensions must be positive")

    @property
    def p_eff(self) -> int:
        return max(1, int(self.p * self.scale_factor + 0.5))

    @property
    def q_eff(self) -> int:
        return max(1, int(self.q * self.scale_factor + 0.5))

    @property
    def n_modules(self) -> int:
        return THETA_SPECS[self.theta_pattern][0]


@dataclass(frozen=True)
class PlacementPlan:
    """Which modules and individual units carry effects, and with which factors."""

    beta_modules: tuple
    eta_factors: dict           # module index -> tuple of factor indices
    gene_units: int
    reg_units: int
    gene_unit_factors: tuple    # per interacting gene unit, tuple of factors
    reg_unit_factors: tuple


def _scale_count(count: int, scale: float) -> int:
    return 0 if count == 0 else max(1, int(count * scale + 0.5))


def placement_plan(pattern: str, placement: str, M: int, scale: float = 1.0) -> PlacementPlan:
    if pattern == "Theta1":
        factors = (0, 1) if placement == "P1" else (0,)
        plan = PlacementPlan(
            beta_modules=(0,),
            eta_factors={0: factors},
            gene_units=5, reg_units=0,
            gene_unit_factors=((0,),) * 5,
            reg_unit_factors=(),
        )
    else:
        if placement == "P1":
            plan = PlacementPlan(
                beta_modules=(0, 1),
                eta_factors={0: (0,)},
                gene_units=11, reg_units=2,
                gene_unit_factors=((0, 1, 2, 3),) * 7,
                reg_unit_factors=((0, 1, 2, 3),) * 2,
            )
        else:
            plan = PlacementPlan(
                beta_modules=(0, 1),
                eta_factors={0: (0,)},
                gene_units=3, reg_units=2,
                gene_unit_factors=((0, 1, 2, 3),) * 3,
                reg_unit_factors=((0, 1),),
            )
    needed = max(
        (max(f, default=0) for f in list(plan.eta_factors.values())
         + list(plan.gene_unit_factors) + list(plan.reg_unit_factors)),
        default=0,
    ) + 1
    if needed > M:
        raise StructuralError(
            f"placement {placement}/{pattern} needs at least {needed} environmental factors, got M={M}"
        )
    if scale != 1.0:
        gene_units = _scale_count(plan.gene_units, scale)
        reg_units = _scale_count(plan.reg_units, scale)
        n_gu = min(gene_units, _scale_count(len(plan.gene_unit_factors), scale))
        n_ru = min(reg_units, _scale_count(len(plan.reg_unit_factors), scale))
        plan = replace(
            plan,
            gene_units=gene_units, reg_units=reg_units,
            gene_unit_factors=plan.gene_unit_factors[:n_gu],
            reg_unit_factors=plan.reg_unit_factors[:n_ru],
        )
    return plan


def _scaled_size(base: int, scale: float) -> int:
    return max(1, int(base * scale + 0.5))


def generate_theta(
    pattern: str,
    p: int,
    q: int,
    seed: int,
    n_modules: int | None = None,
    size_scale: float = 1.0,
) -> tuple[np.ndarray, list[RegulatoryModule]]:
    """Plant the block-structured regulation matrix.

    Leading modules take the fixed effect-carrying sizes; the rest draw sizes
    uniformly from the pattern's ranges.  size_scale < 1 shrinks every module
    proportionally so the pattern's module count fits desk-scale dims.  One
    adjacent non-effect module pair shares genes and regulators (two of each
    at full scale) when the module count allows it.  Module means run
    linearly across the configured range.
    """
    base_count, g_range, r_range, forced = THETA_SPECS[pattern]
    S = base_count if n_modules is None else n_modules
    if S < len(forced):
        raise StructuralError(f"{pattern} needs at least {len(forced)} modules, got {S}")
    rng = np.random.default_rng(seed)
    g_lo, g_hi = _scaled_size(g_range[0], size_scale), _scaled_size(g_range[1], size_scale)
    r_lo, r_hi = _scaled_size(r_range[0], size_scale), _scaled_size(r_range[1], size_scale)
    sizes = []
    for s in range(S):
        if s < len(forced):
            sizes.append((
                _scaled_size(forced[s][0], size_scale),
                _scaled_size(forced[s][1], size_scale),
            ))
        else:
            sizes.append((
                int(rng.integers(g_lo, g_hi + 1)),
                int(rng.integers(r_lo, r_hi + 1)),
            ))
    overlap = _scaled_size(2, size_scale) if size_scale < 1.0 else 2
    overlap_pair = None
    first_free = len(forced)
    if S >= first_free + 2:
        overlap_pair = (first_free, first_free + 1)
        overlap = min(overlap, sizes[first_free][0], sizes[first_free][1],
                      sizes[first_free + 1][0], sizes[first_free + 1][1])
    gene_sets, reg_sets = [], []
    g_cursor = r_cursor = 0
    for s, (gs, rs) in enumerate(sizes):
        g_start, r_start = g_cursor, r_cursor
        if overlap_pair is not None and s == overlap_pair[1]:
            g_start, r_start = g_cursor - overlap, r_cursor - overlap
        gene_sets.append(np.arange(g_start, g_start + gs))
        reg_sets.append(np.arange(r_start, r_start + rs))
        g_cursor, r_cursor = g_start + gs, r_start + rs
    if g_cursor > p or r_cursor > q:
        raise StructuralError(
            f"planted modules need {g_cursor} genes and {r_cursor} regulators, "
            f"but dims are p={p}, q={q}"
        )
    lo, hi = MODULE_MEAN_RANGE
    theta = np.zeros((q, p))
    modules = []
    for s in range(S):
        mean = lo if S == 1 else lo + s * (hi - lo) / (S - 1)
        block = rng.normal(mean, MODULE_VALUE_SD, size=(reg_sets[s].size, gene_sets[s].size))
        theta[np.ix_(reg_sets[s], gene_sets[s])] = block
        modules.append(RegulatoryModule(
            regulators=reg_sets[s], genes=gene_sets[s],
            weight_vector=None, ks_pvalue=0.0,
        ))
    return theta, modules


def _correlation_matrix(corr: str, size: int, module_total: int) -> np.ndarray:
    idx = np.arange(size)
    lag = np.abs(idx[:, None] - idx[None, :])
    if corr == "R1":
        return (-0.5) ** lag
    if corr == "R2":
        out = np.where(lag == 1, -0.5, 0.0)
        np.fill_diagonal(out, 1.0)
        return out
    out = np.where(lag > 0, ((-1.0) ** lag) / module_total, 0.0)
    np.fill_diagonal(out, 1.0)
    return out


def _cholesky_or_repair(sigma: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(sigma)
        floored = np.maximum(vals, 1e-8)
        warnings.warn(
            "correlation matrix not positive definite; eigenvalues floored at 1e-8",
            RuntimeWarning, stacklevel=2,
        )
        return np.linalg.cholesky((vecs * floored) @ vecs.T)


def generate_regulators(
    corr: str,
    modules,
    q: int,
    n: int,
    seed: int,
) -> np.ndarray:
    """Draw regulator rows: per-module multivariate normal blocks with unit
    marginals, independent modules, i.i.d. standard normal elsewhere.
    Columns shared by overlapping modules keep the earlier module's draw."""
    rng = np.random.default_rng(seed)
    out = np.zeros((n, q))
    filled = np.zeros(q, dtype=bool)
    for module in modules:
        C = np.asarray(module.regulators, dtype=np.int64)
        total = C.size + np.asarray(module.genes).size
        sigma = _correlation_matrix(corr, C.size, total)
        L = _cholesky_or_repair(sigma)
        draws = rng.standard_normal((n, C.size)) @ L.T
        fresh = ~filled[C]
        out[:, C[fresh]] = draws[:, fresh]
        filled[C[fresh]] = True
    free = np.flatnonzero(~filled)
    if free.size:
        out[:, free] = rng.standard_normal((n, free.size))
    return out


@dataclass
class GroundTruth:
    """Planted structure and effect bookkeeping for scoring."""

    theta_true: np.ndarray
    planted_modules: list
    important_main: set         # {(kind, index)}
    important_inter: set        # {(kind, index, factor)}
    alpha: np.ndarray
    beta_values: dict           # module index -> PC coefficient vector
    inter_values: dict          # (module, factor) -> effective PC interaction vector
    gamma_values: dict          # (kind, index) -> float
    tau_values: dict            # (kind, index, factor) -> float
    features: FeatureSet
    plan: PlacementPlan

    @property
    def n_main(self) -> int:
        return len(self.important_main)

    @property
    def n_inter(self) -> int:
        return len(self.important_inter)

    @property
    def n_total(self) -> int:
        return self.n_main + self.n_inter


def _module_members(module) -> list:
    out = [("gene", int(j)) for j in module.genes]
    out += [("regulator", int(l)) for l in module.regulators]
    return out


def generate_dataset(config: SimConfig) -> tuple[Dataset, GroundTruth]:
    """Full scenario draw: (G, R, E, Y) dataset plus the planted truth."""
    plan = placement_plan(config.theta_pattern, config.placement, config.M, config.scale_factor)
    theta, modules = generate_theta(
        config.theta_pattern, config.p_eff, config.q_eff, config.seed,
        n_modules=config.n_modules, size_scale=config.scale_factor,
    )
    n = config.n
    R = generate_regulators(config.corr, modules, config.q_eff, n, config.seed + 1)
    G = R @ theta + np.random.default_rng(config.seed + 2).standard_normal((n, config.p_eff))
    E = np.random.default_rng(config.seed + 3).standard_normal((n, config.M))
    stage = standardize(Dataset(G=G, R=R, E=E, Y=np.zeros(n)))
    features = assemble_features(stage, modules)

    lo, hi = SIGNAL_RANGES[config.signal]
    rng = np.random.default_rng(config.seed + 4)
    alpha = rng.uniform(lo, hi, size=config.M)
    y = stage.E @ alpha

    important_main: set = set()
    important_inter: set = set()
    beta_values: dict = {}
    inter_values: dict = {}
    gamma_values: dict = {}
    tau_values: dict = {}

    for s in plan.beta_modules:
        p_s = features.group_sizes[s]
        beta_values[s] = rng.uniform(lo, hi, size=p_s)
        y = y + features.X_blocks[s] @ beta_values[s]
        important_main.update(_module_members(modules[s]))
    for s, factors in plan.eta_factors.items():
        for m in factors:
            coef = rng.uniform(lo, hi, size=features.group_sizes[s])
            inter_values[(s, m)] = coef
            y = y + stage.E[:, m] * (features.X_blocks[s] @ coef)
            important_inter.update((k, i, m) for k, i in _module_members(modules[s]))

    module_genes = np.zeros(config.p_eff, dtype=bool)
    module_regs = np.zeros(config.q_eff, dtype=bool)
    for module in modules:
        module_genes[module.genes] = True
        module_regs[module.regulators] = True
    free_genes = np.flatnonzero(~module_genes)
    free_regs = np.flatnonzero(~module_regs)
    if free_genes.size < plan.gene_units or free_regs.size < plan.reg_units:
        raise StructuralError(
            f"placement needs {plan.gene_units} free genes and {plan.reg_units} free "
            f"regulators, only {free_genes.size}/{free_regs.size} available at these dims"
        )

    unit_list = [("gene", int(j)) for j in free_genes[: plan.gene_units]]
    unit_list += [("regulator", int(l)) for l in free_regs[: plan.reg_units]]
    for kind, idx in unit_list:
        value = rng.uniform(lo, hi)
        gamma_values[(kind, idx)] = value
        col = stage.G[:, idx] if kind == "gene" else stage.R[:, idx]
        y = y + col * value
        important_main.add((kind, idx))
    factor_map = list(plan.gene_unit_factors) + [None] * (plan.gene_units - len(plan.gene_unit_factors))
    factor_map += list(plan.reg_unit_factors) + [None] * (plan.reg_units - len(plan.reg_unit_factors))
    for (kind, idx), factors in zip(unit_list, factor_map):
        if not factors:
            continue
        col = stage.G[:, idx] if kind == "gene" else stage.R[:, idx]
        for m in factors:
            value = rng.uniform(lo, hi)
            tau_values[(kind, idx, m)] = value
            y = y + stage.E[:, m] * col * value
            important_inter.add((kind, idx, m))

    y = y + np.random.default_rng(config.seed + 5).standard_normal(n)
    dataset = Dataset(
        G=G, R=R, E=E, Y=y,
        gene_names=tuple(f"g{j + 1}" for j in range(config.p_eff)),
        regulator_names=tuple(f"r{l + 1}" for l in range(config.q_eff)),
        env_names=tuple(f"e{m + 1}" for m in range(config.M)),
    )
    truth = GroundTruth(
        theta_true=theta, planted_modules=modules,
        important_main=important_main, important_inter=important_inter,
        alpha=alpha, beta_values=beta_values, inter_values=inter_values,
        gamma_values=gamma_values, tau_values=tau_values,
        features=features, plan=plan,
    )
    return dataset, truth


# ---------------------------------------------------------------------------
# Pipeline variants
# ---------------------------------------------------------------------------

@dataclass
class TuningParams:
    """Pipeline-level tuning defaults.

    gamma_ebic and the grid here are calibrated for the benchmark's desk
    scales; ebic_select keeps its own conservative default when called
    directly.  alt4 ignores the EBIC settings and uses K-fold
    cross-validation, the standard tuning for a plain Lasso baseline.
    """

    lambda_rule: str = "per_column_bic"
    fixed_lambda: float | None = None
    n_lambdas: int = 50
    bicluster_B: int = 100
    bicluster_alpha: float = 0.05
    max_modules: int = 50
    pca_threshold: float = 0.80
    grid_size: int = 10
    grid_decades: float = 3.0
    gamma_ebic: float = 0.25
    cd_max_iter: int = 500
    cv_folds: int = 10


def _flat_interaction_design(Z: np.ndarray, E: np.ndarray) -> np.ndarray:
    """[Z | E_1*Z | ... | E_M*Z] for the no-structure baselines."""
    blocks = [Z]
    for m in range(E.shape[1]):
        blocks.append(E[:, m:m + 1] * Z)
    return np.hstack(blocks)


def cv_lasso_flat(
    Z: np.ndarray,
    E: np.ndarray,
    Y: np.ndarray,
    seed: int,
    folds: int = 10,
    n_lambdas: int = 50,
    decades: float = 3.0,
    row_weights: np.ndarray | None = None,
):
    """Plain-Lasso baseline fit: environment coefficients unpenalized, one L1
    penalty over all main and interaction columns, lambda by K-fold CV.

    row_weights (sqrt of subject weights) scale rows once, interactions
    included.  Returns (alpha, flat coefficient vector, lambda)."""
    from .regulation import lasso_column

    n = Y.shape[0]
    u = np.ones(n) if row_weights is None else np.asarray(row_weights, dtype=np.float64)
    W = u[:, None] * _flat_interaction_design(Z, E)
    Ew = u[:, None] * E
    Yw = u * Y
    folds = max(2, min(folds, n))
    assign = np.random.default_rng(seed).permutation(n) % folds
    alpha_full = np.linalg.lstsq(Ew, Yw, rcond=None)[0]
    lam_hi = float(np.abs(W.T @ (Yw - Ew @ alpha_full)).max(initial=0.0))
    if lam_hi <= 0.0:
        return alpha_full, np.zeros(W.shape[1]), 0.0
    lams = np.geomspace(lam_hi, lam_hi / 10 ** decades, n_lambdas)
    errors = np.zeros(n_lambdas)
    fold_counts = np.zeros(n_lambdas, dtype=np.int64)
    for k in range(folds):
        test = assign == k
        train = ~test
        df_cap = max(10, int(0.8 * train.sum()))
        alpha_k, *_ = np.linalg.lstsq(Ew[train], Yw[train], rcond=None)
        resid_train = Yw[train] - Ew[train] @ alpha_k
        W_tr = W[train]
        gram = W_tr.T @ W_tr if W.shape[1] <= 4000 else None
        rtg = W_tr.T @ resid_train
        theta = np.zeros(W.shape[1])
        base = Yw[test] - Ew[test] @ alpha_k
        for i, lam in enumerate(lams):
            theta = lasso_column(W_tr, resid_train, float(lam), theta0=theta, gram=gram, rtg=rtg)
            if np.count_nonzero(theta) > df_cap:
                break
            err = base - W[test] @ theta
            errors[i] += float(err @ err)
            fold_counts[i] += 1
    errors[fold_counts < folds] = np.inf
    best = int(np.argmin(errors))
    lam_star = float(lams[best])
    resid = Yw - Ew @ alpha_full
    gram = W.T @ W if W.shape[1] <= 4000 else None
    rtg_full = W.T @ resid
    theta = np.zeros(W.shape[1])
    for lam in lams[: best + 1]:
        theta = lasso_column(W, resid, float(lam), theta0=theta, gram=gram, rtg=rtg_full)
    return alpha_full, theta, lam_star


@dataclass
class SelectionResult:
    """Identified effect sets plus everything needed to predict new rows."""

    variant: str
    identified_main: set
    identified_inter: set
    model: object
    features: FeatureSet
    modules: list
    regulation: object
    scaler: object
    y_offset: float
    lambda1: float
    lambda2: float
    ebic_table: list
    seconds: float
    survival: bool


def _weighted_mean(y: np.ndarray, weights: SurvivalWeights | None) -> float:
    if weights is None:
        return 0.0
    rho = weights.per_subject
    return float((rho * y).sum() / rho.sum())


def identified_sets(model, features: FeatureSet, M: int) -> tuple[set, set]:
    """Expand module-level selections to member entities; pool with Z columns."""
    main: set = set()
    inter: set = set()
    for s, block in enumerate(features.block_meta):
        members = [("gene", int(j)) for j in block.gene_indices]
        members += [("regulator", int(l)) for l in block.regulator_indices]
        if np.any(model.beta[s]):
            main.update(members)
        for m in range(M):
            if np.any(model.interaction_coefficients(s, m)):
                inter.update((k, i, m) for k, i in members)
    for d, (kind, idx) in enumerate(features.z_meta):
        if model.gamma[d] != 0.0:
            main.add((kind, idx))
        for m in range(M):
            if model.z_interaction_coefficients(m)[d] != 0.0:
                inter.add((kind, idx, m))
    return main, inter


def run_pipeline(
    dataset: Dataset,
    variant: str = "proposed",
    tuning: TuningParams | None = None,
    seed: int = 0,
) -> SelectionResult:
    """Standardize, build features per variant, tune by EBIC, and report
    the identified main effects and interactions."""
    if variant not in VARIANTS:
        raise StructuralError(f"variant must be one of {VARIANTS}, got {variant!r}")
    tuning = tuning or TuningParams()
    t_start = time.perf_counter()
    ds = standardize(dataset)
    weights = km_weights(ds.Y, ds.delta) if ds.survival else None
    y_offset = _weighted_mean(ds.Y, weights)
    y_fit = ds.Y - y_offset

    regulation = None
    modules: list = []
    try:
        if variant in ("proposed", "alt1", "alt2"):
            regulation = estimate_regulation(
                ds, tuning.lambda_rule,
                fixed_lambda=tuning.fixed_lambda, n_lambdas=tuning.n_lambdas,
            )
            modules = extract_modules(
                regulation, B=tuning.bicluster_B, alpha=tuning.bicluster_alpha,
                max_modules=tuning.max_modules, seed=seed,
            )
            if variant == "alt1":
                features = assemble_raw_groups(ds, modules)
            else:
                features = assemble_features(ds, modules, tuning.pca_threshold)
        else:
            features = assemble_individual(ds)
        if variant == "alt4":
            u = np.sqrt(weights.per_subject) if weights is not None else None
            alpha, flat, lam2 = cv_lasso_flat(
                features.Z, ds.E, y_fit,
                seed=seed + 101, folds=tuning.cv_folds,
                n_lambdas=tuning.n_lambdas, decades=tuning.grid_decades,
                row_weights=u,
            )
            p_z = features.p_z
            from .interact import FittedModel

            model = FittedModel(
                alpha=alpha, beta=[], gamma=flat[:p_z].copy(), eta=[],
                tau=np.stack([flat[(m + 1) * p_z:(m + 2) * p_z] for m in range(ds.M)])
                if p_z else np.zeros((ds.M, 0)),
                lambda1=0.0, lambda2=lam2, objective_trace=[], converged=True,
                survival_mode=weights is not None, hierarchical=False,
                group_sizes=[],
            )
            lam1, table = 0.0, []
        else:
            hierarchy = variant in ("proposed", "alt1", "alt3")
            grid1, grid2 = default_grids(
                features, ds.E, y_fit, weights,
                size=tuning.grid_size, decades=tuning.grid_decades,
            )
            lam1, lam2, model, table = ebic_select(
                features, ds.E, y_fit, grid1, grid2,
                gamma_ebic=tuning.gamma_ebic, weights=weights,
                hierarchy=hierarchy, max_iter=tuning.cd_max_iter,
            )
    except PipelineError as exc:
        raise type(exc)(f"[variant {variant}] {exc}") from exc
    main, inter = identified_sets(model, features, ds.M)
    return SelectionResult(
        variant=variant, identified_main=main, identified_inter=inter,
        model=model, features=features, modules=modules, regulation=regulation,
        scaler=ds.scaler, y_offset=y_offset, lambda1=lam1, lambda2=lam2,
        ebic_table=table, seconds=time.perf_counter() - t_start,
        survival=ds.survival,
    )


def predict_rows(result: SelectionResult, G: np.ndarray, R: np.ndarray, E: np.ndarray) -> np.ndarray:
    """Predict outcomes for new raw rows using the fitted transforms."""
    Gs = result.scaler.transform_block("G", G)
    Rs = result.scaler.transform_block("R", R)
    Es = result.scaler.transform_block("E", E)
    blocks, Z = transform_features(result.features, Gs, Rs)
    shell = FeatureSet(
        X_blocks=blocks, Z=Z,
        block_meta=result.features.block_meta, z_meta=result.features.z_meta,
        raw_blocks=result.features.raw_blocks,
    )
    return predict(result.model, shell, Es) + result.y_offset + result.scaler.y_mean


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def score_identification(result: SelectionResult, truth: GroundTruth) -> tuple[int, int]:
    """Pooled true/false positives over main effects and interactions."""
    identified = set(result.identified_main) | set(result.identified_inter)
    true_set = set(truth.important_main) | set(truth.important_inter)
    tp = len(identified & true_set)
    fp = len(identified - true_set)
    return tp, fp


def rv_coefficient(A: np.ndarray, B: np.ndarray) -> float:
    """Matrix correlation tr(AA'BB') / sqrt(tr((AA')^2) tr((BB')^2)) after
    column-centering both inputs."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if B.ndim == 1:
        B = B[:, None]
    if A.shape[0] != B.shape[0]:
        raise StructuralError("row counts differ")
    Ac = A - A.mean(axis=0)
    Bc = B - B.mean(axis=0)
    cross = float(np.linalg.norm(Ac.T @ Bc, "fro") ** 2)
    na = float(np.linalg.norm(Ac.T @ Ac, "fro"))
    nb = float(np.linalg.norm(Bc.T @ Bc, "fro"))
    if na <= 0.0 or nb <= 0.0:
        raise StructuralError("RV coefficient undefined for a zero (constant) matrix")
    return cross / (na * nb)


def _censoring_survival(y: np.ndarray, delta: np.ndarray):
    """Kaplan-Meier estimate of the censoring survivor function; returns a
    callable for left limits G(t-)."""
    order = np.argsort(y, kind="stable")
    ys = y[order]
    cens = 1.0 - delta[order]
    n = y.size
    times = []
    factors = []
    at_risk = n
    i = 0
    while i < n:
        j = i
        d_cens = 0.0
        while j < n and ys[j] == ys[i]:
            d_cens += cens[j]
            j += 1
        if d_cens > 0:
            times.append(ys[i])
            factors.append(1.0 - d_cens / at_risk)
        at_risk -= j - i
        i = j
    times = np.asarray(times)
    surv = np.cumprod(factors) if factors else np.asarray([])

    def G_left(t: float) -> float:
        k = int(np.searchsorted(times, t, side="left"))
        return float(surv[k - 1]) if k > 0 else 1.0

    return G_left


def concordance_ipcw(y: np.ndarray, delta: np.ndarray, pred: np.ndarray) -> float:
    """Censoring-weighted concordance for predicted log survival times.

    A pair (i, j) with an event at y_i < y_j is concordant if the model also
    ranks i before j; each comparable pair carries weight G(y_i-)^-2 from the
    censoring-distribution Kaplan-Meier curve, and pairs past the last event
    time (where G hits zero) drop out.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    delta = np.asarray(delta, dtype=np.float64).reshape(-1)
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    G_left = _censoring_survival(y, delta)
    num = den = 0.0
    for i in np.flatnonzero(delta == 1.0):
        g = G_left(y[i])
        if g <= 0.0:
            continue
        w = 1.0 / (g * g)
        later = y > y[i]
        if not later.any():
            continue
        den += w * later.sum()
        num += w * ((pred[i] < pred[later]).sum() + 0.5 * (pred[i] == pred[later]).sum())
    if den == 0.0:
        raise StructuralError("no comparable pairs for concordance")
    return num / den


def evaluate_resampling(
    dataset: Dataset,
    variant: str,
    splits: int,
    ratio: float = 0.9,
    seed: int = 0,
    tuning: TuningParams | None = None,
):
    """Train/test resampling evaluation: PMSE (continuous) or censored
    concordance (survival), plus per-entity selection frequencies (OOI)."""
    if splits < 1:
        raise StructuralError("need at least one split")
    if not 0.0 < ratio < 1.0:
        raise StructuralError("training ratio must sit strictly between 0 and 1")
    n = dataset.n
    n_train = max(2, int(round(ratio * n)))
    if n_train >= n:
        n_train = n - 1
    metric_values = []
    counts: dict = {}
    skipped = 0
    for k in range(splits):
        rng = np.random.default_rng(seed + k)
        perm = rng.permutation(n)
        train, test = perm[:n_train], perm[n_train:]
        sub = Dataset(
            G=dataset.G[train], R=dataset.R[train], E=dataset.E[train],
            Y=dataset.Y[train],
            delta=dataset.delta[train] if dataset.survival else None,
            gene_names=dataset.gene_names,
            regulator_names=dataset.regulator_names,
            env_names=dataset.env_names,
        )
        if dataset.survival and not np.any(dataset.delta[test] == 1.0):
            skipped += 1
            continue
        result = run_pipeline(sub, variant, tuning, seed=seed + k)
        preds = predict_rows(result, dataset.G[test], dataset.R[test], dataset.E[test])
        if dataset.survival:
            metric_values.append(
                concordance_ipcw(dataset.Y[test], dataset.delta[test], preds)
            )
        else:
            err = preds - dataset.Y[test]
            metric_values.append(float(np.mean(err * err)))
        for entity in set(result.identified_main) | set(result.identified_inter):
            counts[entity] = counts.get(entity, 0) + 1
    used = splits - skipped
    if used == 0:
        raise StructuralError("every split was skipped (no held-out events)")
    ooi = {entity: c / used for entity, c in counts.items()}
    return float(np.mean(metric_values)), ooi, skipped


# ---------------------------------------------------------------------------
# Benchmark harness
# ---------------------------------------------------------------------------

def benchmark_replicate(config: SimConfig, rep: int, variants, tuning: TuningParams | None):
    """One replicate: generate, run each variant, score.  Failures are
    recorded, not raised."""
    cfg = replace(config, seed=config.seed + 1_000_003 * rep)
    dataset, truth = generate_dataset(cfg)
    rows = []
    for variant in variants:
        t0 = time.perf_counter()
        try:
            result = run_pipeline(dataset, variant, tuning, seed=cfg.seed + 17)
            tp, fp = score_identification(result, truth)
            rows.append({
                "pattern": config.theta_pattern, "corr": config.corr,
                "placement": config.placement, "signal": config.signal,
                "variant": variant, "replicate": rep,
                "TP": tp, "FP": fp,
                "seconds": time.perf_counter() - t0, "error": "",
            })
        except PipelineError as exc:
            rows.append({
                "pattern": config.theta_pattern, "corr": config.corr,
                "placement": config.placement, "signal": config.signal,
                "variant": variant, "replicate": rep,
                "TP": math.nan, "FP": math.nan,
                "seconds": time.perf_counter() - t0, "error": str(exc),
            })
    return rows, truth.n_total


def run_benchmark(
    config: SimConfig,
    replicates: int,
    variants=VARIANTS,
    tuning: TuningParams | None = None,
    threads: int = 1,
):
    """Replicate loop (optionally process-parallel; results match sequential
    execution because replicate seeds are derived independently)."""
    if replicates < 1:
        raise StructuralError("need at least one replicate")
    for variant in variants:
        if variant not in VARIANTS:
            raise StructuralError(f"unknown variant {variant!r}")
    all_rows = []
    totals = None
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(benchmark_replicate, config, rep, tuple(variants), tuning)
                for rep in range(replicates)
            ]
            for fut in futures:
                rows, totals = fut.result()
                all_rows.extend(rows)
    else:
        for rep in range(replicates):
            rows, totals = benchmark_replicate(config, rep, tuple(variants), tuning)
            all_rows.extend(rows)
    summary = summarize_benchmark(all_rows)
    return all_rows, summary, totals


def summarize_benchmark(rows) -> list:
    """Mean (sd) of TP and FP per scenario cell and variant."""
    cells: dict = {}
    for row in rows:
        key = (row["pattern"], row["corr"], row["placement"], row["signal"], row["variant"])
        cells.setdefault(key, []).append(row)
    summary = []
    for key in sorted(cells):
        group = cells[key]
        tps = np.asarray([r["TP"] for r in group], dtype=np.float64)
        fps = np.asarray([r["FP"] for r in group], dtype=np.float64)
        good = ~np.isnan(tps)
        summary.append({
            "pattern": key[0], "corr": key[1], "placement": key[2],
            "signal": key[3], "variant": key[4],
            "replicates": len(group), "failures": int((~good).sum()),
            "tp_mean": float(tps[good].mean()) if good.any() else math.nan,
            "tp_sd": float(tps[good].std(ddof=1)) if good.sum() > 1 else 0.0,
            "fp_mean": float(fps[good].mean()) if good.any() else math.nan,
            "fp_sd": float(fps[good].std(ddof=1)) if good.sum() > 1 else 0.0,
        })
    return summary
