"""Hierarchical interaction model: cyclic block coordinate descent with group
kill tests, soft-thresholding, EBIC tuning, and Kaplan-Meier-weighted least
squares for censored outcomes.

Module feature blocks carry a group penalty lambda1*sqrt(p_s) on main effects
and on each environment-specific interaction block; individual features get a
plain L1 penalty lambda2.  Interaction coefficients are decomposed as
beta*eta (modules) and gamma*tau (individual features), so an interaction can
survive only while its molecular main effect does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import FeatureSet
from .errors import AllCensoredError, NumericError, StructuralError

CD_MAX_ITER = 500
CD_REL_TOL = 1e-4


@dataclass(frozen=True)
class SurvivalWeights:
    """Kaplan-Meier subject weights in ascending observed-time order."""

    rho: np.ndarray
    sort_order: np.ndarray  # sorted position -> original row index

    @property
    def per_subject(self) -> np.ndarray:
        out = np.zeros(self.rho.shape[0])
        out[self.sort_order] = self.rho
        return out


def km_weights(y_observed, delta) -> SurvivalWeights:
    """Weights rho_1 = delta_1/n, rho_i = delta_i/(n-i+1) * prod_{i'<i}
    ((n-i')/(n-i'+1))^delta_i', after sorting by observed time (ties: events
    first, then original order)."""
    y = np.asarray(y_observed, dtype=np.float64).reshape(-1)
    d = np.asarray(delta, dtype=np.float64).reshape(-1)
    if y.shape != d.shape or y.size < 1:
        raise StructuralError("outcome and event indicator must share a positive length")
    if not np.all(np.isin(d, (0.0, 1.0))):
        raise StructuralError("event indicator entries must be 0 or 1")
    n = y.size
    order = np.lexsort((np.arange(n), -d, y))
    d_sorted = d[order]
    rho = np.zeros(n)
    running = 1.0
    for i in range(n):
        if d_sorted[i] == 1.0:
            rho[i] = running / (n - i)
        running *= ((n - i - 1) / (n - i)) ** d_sorted[i]
    return SurvivalWeights(rho=rho, sort_order=order)


@dataclass
class FittedModel:
    """Coefficient bundle plus tuning and convergence metadata."""

    alpha: np.ndarray
    beta: list
    gamma: np.ndarray
    eta: list                 # eta[s] is an M x p_s array
    tau: np.ndarray           # M x p_z
    lambda1: float
    lambda2: float
    objective_trace: list
    converged: bool
    survival_mode: bool
    hierarchical: bool = True
    group_sizes: list = field(default_factory=list)
    n_iter: int = 0
    ridge_diagnostic: bool = False

    def interaction_coefficients(self, s: int, m: int) -> np.ndarray:
        """Effective interaction coefficients for module s, factor m."""
        if self.hierarchical:
            return self.beta[s] * self.eta[s][m]
        return self.eta[s][m].copy()

    def z_interaction_coefficients(self, m: int) -> np.ndarray:
        if self.hierarchical:
            return self.gamma * self.tau[m]
        return self.tau[m].copy()

    def nnz_penalized(self) -> int:
        count = int(np.count_nonzero(self.gamma)) + int(np.count_nonzero(self.tau))
        for s in range(len(self.beta)):
            count += int(np.count_nonzero(self.beta[s]))
            count += int(np.count_nonzero(self.eta[s]))
        return count


def _check_dims(features: FeatureSet, E: np.ndarray, Y: np.ndarray):
    n = Y.shape[0]
    if E.shape[0] != n or features.Z.shape[0] != n:
        raise StructuralError("row counts of E, Z, Y disagree")
    for X in features.X_blocks:
        if X.shape[0] != n:
            raise StructuralError("row counts of module blocks and Y disagree")


def predict(model: FittedModel, features: FeatureSet, E: np.ndarray) -> np.ndarray:
    """Evaluate the fitted regression function on natural-scale inputs."""
    E = np.asarray(E, dtype=np.float64)
    n = E.shape[0]
    out = E @ model.alpha
    for s, X in enumerate(features.X_blocks):
        out += X @ model.beta[s]
        for m in range(E.shape[1]):
            coef = model.interaction_coefficients(s, m)
            if np.any(coef):
                out += E[:, m] * (X @ coef)
    if features.p_z:
        out += features.Z @ model.gamma
        for m in range(E.shape[1]):
            coef = model.z_interaction_coefficients(m)
            if np.any(coef):
                out += E[:, m] * (features.Z @ coef)
    return out


def objective(
    model: FittedModel,
    features: FeatureSet,
    E: np.ndarray,
    Y: np.ndarray,
    weights: SurvivalWeights | None = None,
) -> float:
    """Group-norm penalized objective: 0.5 weighted RSS + lambda1 group terms
    + lambda2 L1 terms."""
    resid = np.asarray(Y, dtype=np.float64) - predict(model, features, E)
    if weights is not None:
        resid = np.sqrt(weights.per_subject) * resid
    value = 0.5 * float(resid @ resid)
    M = E.shape[1]
    for s, p_s in enumerate(model.group_sizes):
        root = math.sqrt(p_s)
        value += model.lambda1 * root * float(np.linalg.norm(model.beta[s]))
        for m in range(M):
            value += model.lambda1 * root * float(np.linalg.norm(model.eta[s][m]))
    value += model.lambda2 * float(np.abs(model.gamma).sum())
    value += model.lambda2 * float(np.abs(model.tau).sum())
    return value


def _soft(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def _monitored_penalty(state, lam1, lam2, group_sizes) -> float:
    pen = 0.0
    for s, p_s in enumerate(group_sizes):
        root = math.sqrt(p_s)
        pen += lam1 * root * float(np.abs(state["beta"][s]).sum())
        pen += lam1 * root * float(np.abs(state["eta"][s]).sum())
    pen += lam2 * float(np.abs(state["gamma"]).sum())
    pen += lam2 * float(np.abs(state["tau"]).sum())
    return pen


def _group_cd(W, coef, ytil, thr) -> np.ndarray:
    """One cyclic pass of per-coordinate solves for a small group block."""
    r = ytil - W @ coef
    norms2 = (W * W).sum(axis=0)
    for j in range(coef.shape[0]):
        old = coef[j]
        col = W[:, j]
        if old != 0.0:
            r += col * old
        if norms2[j] > 0.0:
            new = _soft(float(col @ r), thr) / norms2[j]
        else:
            new = 0.0
        if new != 0.0:
            r -= col * new
        coef[j] = new
    return r


def cd_fit(
    features: FeatureSet,
    E: np.ndarray,
    Y: np.ndarray,
    lambda1: float,
    lambda2: float,
    weights: SurvivalWeights | None = None,
    max_iter: int = CD_MAX_ITER,
    *,
    hierarchy: bool = True,
    rel_tol: float = CD_REL_TOL,
    warm: FittedModel | None = None,
) -> FittedModel:
    """Cyclic block coordinate descent over alpha, beta, gamma, eta, tau.

    Survival weights scale rows by sqrt(rho) once up front.  The monitored
    objective (squared-error half-loss plus the effective per-coordinate
    penalties) is nonincreasing across updates; iteration stops when its
    relative change drops below rel_tol.
    """
    E = np.asarray(E, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64).reshape(-1)
    _check_dims(features, E, Y)
    if lambda1 < 0 or lambda2 < 0:
        raise StructuralError("penalty levels must be nonnegative")
    if not (np.all(np.isfinite(E)) and np.all(np.isfinite(Y))):
        raise NumericError("non-finite inputs to cd_fit")
    n, M = E.shape
    S = features.S
    p_z = features.p_z
    group_sizes = features.group_sizes

    if weights is not None:
        rho = weights.per_subject
        if rho.shape[0] != n:
            raise StructuralError("weight vector length differs from row count")
        if not np.any(rho > 0):
            raise AllCensoredError("all subjects censored: Kaplan-Meier weights are identically zero")
        u = np.sqrt(rho)
    else:
        u = np.ones(n)
    Yw = u * Y
    Ew = u[:, None] * E
    Xw = [u[:, None] * X for X in features.X_blocks]
    Zw = u[:, None] * features.Z if p_z else np.empty((n, 0))

    state = {
        "alpha": np.zeros(M),
        "beta": [np.zeros(p_s) for p_s in group_sizes],
        "gamma": np.zeros(p_z),
        "eta": [np.zeros((M, p_s)) for p_s in group_sizes],
        "tau": np.zeros((M, p_z)),
    }
    if warm is not None:
        state["alpha"] = warm.alpha.copy()
        state["beta"] = [b.copy() for b in warm.beta]
        state["gamma"] = warm.gamma.copy()
        state["eta"] = [e.copy() for e in warm.eta]
        state["tau"] = warm.tau.copy()

    EtE = Ew.T @ Ew
    eigs = np.linalg.eigvalsh(EtE)
    ridge = bool(eigs[0] <= 1e-10 * max(eigs[-1], 1.0))
    solve_mat = EtE + 1e-8 * np.eye(M) if ridge else EtE

    def fitted_weighted() -> np.ndarray:
        out = Ew @ state["alpha"]
        for s in range(S):
            out += Xw[s] @ state["beta"][s]
            for m in range(M):
                coef = state["beta"][s] * state["eta"][s][m] if hierarchy else state["eta"][s][m]
                if np.any(coef):
                    out += E[:, m] * (Xw[s] @ coef)
        if p_z:
            out += Zw @ state["gamma"]
            for m in range(M):
                coef = state["gamma"] * state["tau"][m] if hierarchy else state["tau"][m]
                if np.any(coef):
                    out += E[:, m] * (Zw @ coef)
        return out

    res = Yw - fitted_weighted()
    trace = [0.5 * float(res @ res) + _monitored_penalty(state, lambda1, lambda2, group_sizes)]
    converged = False
    thr_groups = [lambda1 * math.sqrt(p_s) for p_s in group_sizes]
    n_iter = 0

    for _ in range(max_iter):
        n_iter += 1
        # (a) environment coefficients by least squares on partial residuals
        ytil = res + Ew @ state["alpha"]
        state["alpha"] = np.linalg.solve(solve_mat, Ew.T @ ytil)
        res = ytil - Ew @ state["alpha"]

        # (b) module main-effect groups
        for s in range(S):
            beta_s = state["beta"][s]
            if hierarchy:
                mult = 1.0 + E @ state["eta"][s]
                W = Xw[s] * mult
            else:
                W = Xw[s]
            ytil = res + W @ beta_s
            if float(np.linalg.norm(W.T @ ytil)) <= thr_groups[s]:
                beta_s[:] = 0.0
                if hierarchy:
                    state["eta"][s][:, :] = 0.0
                res = ytil
            else:
                res = _group_cd(W, beta_s, ytil, thr_groups[s])
                if hierarchy and not beta_s.any():
                    state["eta"][s][:, :] = 0.0

        # (c) individual main effects, screened lasso pass
        if p_z:
            gamma = state["gamma"]
            tau = state["tau"]
            tau_active = np.any(tau != 0.0, axis=0)
            v = Zw.T @ res
            v_fresh = True
            for d in range(p_z):
                if gamma[d] == 0.0 and not tau_active[d]:
                    if not v_fresh:
                        v = Zw.T @ res
                        v_fresh = True
                    if abs(v[d]) <= lambda2:
                        continue
                if hierarchy and tau_active[d]:
                    Wd = Zw[:, d] * (1.0 + E @ tau[:, d])
                else:
                    Wd = Zw[:, d]
                ytil_d = res + Wd * gamma[d]
                wn = float(Wd @ Wd)
                new = _soft(float(Wd @ ytil_d), lambda2) / wn if wn > 0.0 else 0.0
                if new != gamma[d]:
                    res = ytil_d - Wd * new
                    gamma[d] = new
                    v_fresh = False
                if hierarchy and gamma[d] == 0.0 and tau_active[d]:
                    tau[:, d] = 0.0
                    tau_active[d] = False

        # (d) module interaction groups
        for m in range(M):
            Em = E[:, m]
            for s in range(S):
                if hierarchy and not state["beta"][s].any():
                    continue
                eta_sm = state["eta"][s][m]
                if hierarchy:
                    W = (Em[:, None] * Xw[s]) * state["beta"][s][None, :]
                else:
                    W = Em[:, None] * Xw[s]
                ytil = res + W @ eta_sm
                if float(np.linalg.norm(W.T @ ytil)) <= thr_groups[s]:
                    eta_sm[:] = 0.0
                    res = ytil
                else:
                    res = _group_cd(W, eta_sm, ytil, thr_groups[s])

        # (e) individual interaction effects
        if p_z:
            gamma = state["gamma"]
            tau = state["tau"]
            if hierarchy:
                for m in range(M):
                    Em = E[:, m]
                    for d in np.flatnonzero(gamma):
                        Wd = Em * Zw[:, d] * gamma[d]
                        ytil_d = res + Wd * tau[m, d]
                        wn = float(Wd @ Wd)
                        new = _soft(float(Wd @ ytil_d), lambda2) / wn if wn > 0.0 else 0.0
                        res = ytil_d - Wd * new
                        tau[m, d] = new
            else:
                for m in range(M):
                    Em = E[:, m]
                    res_m = Em * res
                    v = Zw.T @ res_m
                    v_fresh = True
                    for d in range(p_z):
                        if tau[m, d] == 0.0:
                            if not v_fresh:
                                v = Zw.T @ (Em * res)
                                v_fresh = True
                            if abs(v[d]) <= lambda2:
                                continue
                        Wd = Em * Zw[:, d]
                        ytil_d = res + Wd * tau[m, d]
                        wn = float(Wd @ Wd)
                        new = _soft(float(Wd @ ytil_d), lambda2) / wn if wn > 0.0 else 0.0
                        if new != tau[m, d]:
                            res = ytil_d - Wd * new
                            tau[m, d] = new
                            v_fresh = False

        q_val = 0.5 * float(res @ res) + _monitored_penalty(state, lambda1, lambda2, group_sizes)
        if not math.isfinite(q_val):
            raise NumericError("objective became non-finite during coordinate descent")
        prev = trace[-1]
        trace.append(q_val)
        if prev == 0.0:
            rel = 0.0 if q_val == 0.0 else math.inf
        else:
            rel = abs(prev - q_val) / abs(prev)
        if rel < rel_tol:
            converged = True
            break

    model = FittedModel(
        alpha=state["alpha"], beta=state["beta"], gamma=state["gamma"],
        eta=state["eta"], tau=state["tau"], lambda1=lambda1, lambda2=lambda2,
        objective_trace=trace, converged=converged,
        survival_mode=weights is not None, hierarchical=hierarchy,
        group_sizes=list(group_sizes), n_iter=n_iter, ridge_diagnostic=ridge,
    )
    _assert_hierarchy(model)
    return model


def _assert_hierarchy(model: FittedModel) -> None:
    """Every fit is audited: interactions may not outlive their main effects."""
    if not model.hierarchical:
        return
    for s in range(len(model.beta)):
        if np.any(model.eta[s]) and not np.any(model.beta[s]):
            raise AssertionError(f"hierarchy violation: eta[{s}] nonzero with beta[{s}] zero")
    bad = np.flatnonzero(np.any(model.tau != 0.0, axis=0) & (model.gamma == 0.0))
    if bad.size:
        raise AssertionError(f"hierarchy violation: tau nonzero with gamma zero at {bad.tolist()}")


def kkt_spot_check(
    model: FittedModel,
    features: FeatureSet,
    E: np.ndarray,
    Y: np.ndarray,
    weights: SurvivalWeights | None = None,
    tol: float = 1e-6,
) -> bool:
    """Verify zeroed groups and coordinates sit inside their thresholds,
    recomputing the weighted residual from scratch."""
    E = np.asarray(E, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64).reshape(-1)
    u = np.sqrt(weights.per_subject) if weights is not None else np.ones(Y.shape[0])
    resid = u * (Y - predict(model, features, E))
    M = E.shape[1]
    ok = True
    for s, p_s in enumerate(model.group_sizes):
        thr = model.lambda1 * math.sqrt(p_s)
        Xws = u[:, None] * features.X_blocks[s]
        if not np.any(model.beta[s]):
            W = Xws if not model.hierarchical else Xws * (1.0 + E @ model.eta[s])
            ok &= float(np.linalg.norm(W.T @ resid)) <= thr + tol
        for m in range(M):
            if np.any(model.eta[s][m]):
                continue
            if model.hierarchical:
                if not np.any(model.beta[s]):
                    continue
                W = (E[:, m][:, None] * Xws) * model.beta[s][None, :]
            else:
                W = E[:, m][:, None] * Xws
            ok &= float(np.linalg.norm(W.T @ resid)) <= thr + tol
    if features.p_z:
        Zw = u[:, None] * features.Z
        for d in range(features.p_z):
            if model.gamma[d] == 0.0:
                ok &= abs(float(Zw[:, d] @ resid)) <= model.lambda2 + tol
        for m in range(M):
            for d in range(features.p_z):
                if model.tau[m, d] != 0.0:
                    continue
                if model.hierarchical:
                    if model.gamma[d] == 0.0:
                        continue
                    Wd = E[:, m] * Zw[:, d] * model.gamma[d]
                else:
                    Wd = E[:, m] * Zw[:, d]
                ok &= abs(float(Wd @ resid)) <= model.lambda2 + tol
    return bool(ok)


def default_grids(
    features: FeatureSet,
    E: np.ndarray,
    Y: np.ndarray,
    weights: SurvivalWeights | None = None,
    size: int = 8,
    decades: float = 2.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Log-spaced grids running from the empirical kill-all levels down the
    requested number of decades."""
    E = np.asarray(E, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64).reshape(-1)
    u = np.sqrt(weights.per_subject) if weights is not None else np.ones(Y.shape[0])
    Yw = u * Y
    Ew = u[:, None] * E
    alpha0, *_ = np.linalg.lstsq(Ew, Yw, rcond=None)
    r0 = Yw - Ew @ alpha0
    if features.S:
        lam1_max = max(
            float(np.linalg.norm((u[:, None] * X).T @ r0)) / math.sqrt(X.shape[1])
            for X in features.X_blocks
        )
        grid1 = np.geomspace(lam1_max, lam1_max / 10 ** decades, size) if lam1_max > 0 else np.array([0.0])
    else:
        grid1 = np.array([0.0])
    if features.p_z:
        lam2_max = float(np.abs((u[:, None] * features.Z).T @ r0).max())
        grid2 = np.geomspace(lam2_max, lam2_max / 10 ** decades, size) if lam2_max > 0 else np.array([0.0])
    else:
        grid2 = np.array([0.0])
    return grid1, grid2


def ebic_select(
    features: FeatureSet,
    E: np.ndarray,
    Y: np.ndarray,
    grid1,
    grid2,
    gamma_ebic: float = 1.0,
    weights: SurvivalWeights | None = None,
    *,
    hierarchy: bool = True,
    max_iter: int = CD_MAX_ITER,
    rel_tol: float = CD_REL_TOL,
):
    """Fit the whole (lambda1, lambda2) grid and keep the EBIC minimizer.

    Rows run over lambda1 in decreasing order; within a row lambda2 decreases
    with warm starts.  EBIC = n log(RSS_w/n) + df (log n + 2 gamma log P_tot)
    with df counting nonzero penalized coefficients plus the E dimension.
    Ties keep the larger lambda1, then the larger lambda2.
    """
    E = np.asarray(E, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64).reshape(-1)
    g1 = np.sort(np.unique(np.asarray(grid1, dtype=np.float64)))[::-1]
    g2 = np.sort(np.unique(np.asarray(grid2, dtype=np.float64)))[::-1]
    if g1.size == 0 or g2.size == 0:
        raise StructuralError("tuning grids must be nonempty")
    n, M = E.shape
    p_total = M + (1 + M) * (sum(features.group_sizes) + features.p_z)
    u = np.sqrt(weights.per_subject) if weights is not None else np.ones(n)
    best = None
    table = []
    for lam1 in g1:
        warm = None
        for lam2 in g2:
            try:
                model = cd_fit(
                    features, E, Y, float(lam1), float(lam2), weights,
                    max_iter=max_iter, hierarchy=hierarchy, rel_tol=rel_tol,
                    warm=warm,
                )
            except (NumericError, StructuralError) as exc:
                raise type(exc)(f"grid cell (lambda1={lam1}, lambda2={lam2}): {exc}") from exc
            warm = model
            resid = u * (Y - predict(model, features, E))
            rss = max(float(resid @ resid), 1e-300)
            df = model.nnz_penalized() + M
            ebic = n * math.log(rss / n) + df * (math.log(n) + 2.0 * gamma_ebic * math.log(p_total))
            table.append((float(lam1), float(lam2), ebic, df, rss, model.converged))
            if best is None or ebic < best[0]:
                best = (ebic, float(lam1), float(lam2), model)
    return best[1], best[2], best[3], table


def coefficient_table(
    model: FittedModel,
    features: FeatureSet,
    gene_names,
    regulator_names,
    env_names,
) -> list:
    """Rows shaped like the published coefficient tables: one header-style row
    for environment main effects, then member-level module rows (module
    coefficients pushed through the PC loadings) and individual-feature rows.
    Zero cells are empty strings; all-zero rows are omitted."""
    M = len(env_names)
    rows = [["", "", "", ""] + [_cell(a) for a in model.alpha]]
    for s, block in enumerate(features.block_meta):
        main_member = block.loadings @ model.beta[s]
        inter_member = [block.loadings @ model.interaction_coefficients(s, m) for m in range(M)]
        if not (np.any(main_member) or any(np.any(v) for v in inter_member)):
            continue
        labels = [("gene", int(j)) for j in block.gene_indices]
        labels += [("regulator", int(l)) for l in block.regulator_indices]
        for i, (kind, idx) in enumerate(labels):
            name = gene_names[idx] if kind == "gene" else regulator_names[idx]
            rows.append(
                [str(s + 1), kind, name, _cell(main_member[i])]
                + [_cell(inter_member[m][i]) for m in range(M)]
            )
    S = features.S
    for d, (kind, idx) in enumerate(features.z_meta):
        inter = [model.z_interaction_coefficients(m)[d] for m in range(M)]
        if model.gamma[d] == 0.0 and not any(inter):
            continue
        name = gene_names[idx] if kind == "gene" else regulator_names[idx]
        rows.append(
            [str(S + d + 1), kind, name, _cell(model.gamma[d])]
            + [_cell(v) for v in inter]
        )
    return rows


def _cell(value: float) -> str:
    return "" if value == 0.0 else format(value, ".17g")
