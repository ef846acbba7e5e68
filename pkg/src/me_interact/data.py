"""Dataset containers, standardization, and delimited-text I/O.

A Dataset bundles the three design matrices (gene expressions G, regulators R,
environmental factors E) with the outcome vector Y and, for survival data, the
event indicator delta.  All downstream stages consume a standardized Dataset.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataFormatError, StructuralError

MANIFEST_KEYS = ("genes", "regulators", "environment", "outcome")


@dataclass(frozen=True)
class Scaler:
    """Per-column standardization statistics, reusable on held-out rows.

    Standard deviations use the n-1 denominator.  Zero-variance columns keep
    sd 1 in the transform (so they map to all-zero) and are flagged here.
    """

    g_mean: np.ndarray
    g_sd: np.ndarray
    r_mean: np.ndarray
    r_sd: np.ndarray
    e_mean: np.ndarray
    e_sd: np.ndarray
    y_mean: float
    zero_variance: dict[str, np.ndarray]

    def transform_block(self, block: str, values: np.ndarray) -> np.ndarray:
        mean, sd = {
            "G": (self.g_mean, self.g_sd),
            "R": (self.r_mean, self.r_sd),
            "E": (self.e_mean, self.e_sd),
        }[block]
        out = (np.asarray(values, dtype=np.float64) - mean) / sd
        zv = self.zero_variance.get(block)
        if zv is not None and zv.size:
            out[:, zv] = 0.0
        return out


@dataclass(frozen=True)
class Dataset:
    """Immutable (G, R, E, Y) bundle; delta present iff survival mode."""

    G: np.ndarray
    R: np.ndarray
    E: np.ndarray
    Y: np.ndarray
    delta: np.ndarray | None = None
    gene_names: tuple[str, ...] | None = None
    regulator_names: tuple[str, ...] | None = None
    env_names: tuple[str, ...] | None = None
    scaler: Scaler | None = None

    def __post_init__(self):
        for name in ("G", "R", "E"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 2:
                raise StructuralError(f"{name} must be a 2-d matrix, got ndim={arr.ndim}")
            object.__setattr__(self, name, arr)
        y = np.ascontiguousarray(self.Y, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "Y", y)
        n = self.G.shape[0]
        if n < 2:
            raise StructuralError(f"need at least 2 subjects, got n={n}")
        for name in ("R", "E"):
            rows = getattr(self, name).shape[0]
            if rows != n:
                raise StructuralError(f"row count mismatch: G has {n} rows, {name} has {rows}")
        if y.shape[0] != n:
            raise StructuralError(f"row count mismatch: G has {n} rows, Y has {y.shape[0]}")
        if min(self.G.shape[1], self.R.shape[1], self.E.shape[1]) < 1:
            raise StructuralError("G, R, E must each have at least one column")
        if self.delta is not None:
            d = np.ascontiguousarray(self.delta, dtype=np.float64).reshape(-1)
            if d.shape[0] != n:
                raise StructuralError(f"row count mismatch: G has {n} rows, delta has {d.shape[0]}")
            if not np.all(np.isin(d, (0.0, 1.0))):
                raise StructuralError("delta entries must be 0 or 1")
            object.__setattr__(self, "delta", d)
            self.delta.setflags(write=False)
        for arr in (self.G, self.R, self.E, self.Y):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.G.shape[0]

    @property
    def p(self) -> int:
        return self.G.shape[1]

    @property
    def q(self) -> int:
        return self.R.shape[1]

    @property
    def M(self) -> int:
        return self.E.shape[1]

    @property
    def survival(self) -> bool:
        return self.delta is not None


def _column_stats(X: np.ndarray):
    mean = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1)
    zero = np.flatnonzero(sd <= 0.0)
    sd_safe = sd.copy()
    sd_safe[zero] = 1.0
    return mean, sd_safe, zero


def standardize(dataset: Dataset) -> Dataset:
    """Return a copy with G, R, E columns at mean 0 / sd 1 (ddof=1).

    Zero-variance columns become all-zero and are flagged in the attached
    Scaler.  Continuous outcomes are centered; survival outcomes are left
    untouched.  Idempotent up to floating-point roundoff.
    """
    stats = {}
    zero_variance = {}
    out = {}
    for name in ("G", "R", "E"):
        X = getattr(dataset, name)
        mean, sd, zero = _column_stats(X)
        Xs = (X - mean) / sd
        if zero.size:
            Xs[:, zero] = 0.0
        stats[name] = (mean, sd)
        zero_variance[name] = zero
        out[name] = Xs
    y_mean = 0.0 if dataset.survival else float(dataset.Y.mean())
    scaler = Scaler(
        g_mean=stats["G"][0], g_sd=stats["G"][1],
        r_mean=stats["R"][0], r_sd=stats["R"][1],
        e_mean=stats["E"][0], e_sd=stats["E"][1],
        y_mean=y_mean, zero_variance=zero_variance,
    )
    return replace(
        dataset, G=out["G"], R=out["R"], E=out["E"],
        Y=dataset.Y - y_mean, scaler=scaler,
    )


def apply_scaler(scaler: Scaler, G: np.ndarray, R: np.ndarray, E: np.ndarray):
    """Standardize new rows with statistics learned elsewhere (e.g. training)."""
    return (
        scaler.transform_block("G", G),
        scaler.transform_block("R", R),
        scaler.transform_block("E", E),
    )


@dataclass(frozen=True)
class ModuleBlock:
    """Provenance and PCA transform for one module's feature block."""

    gene_indices: np.ndarray
    regulator_indices: np.ndarray
    loadings: np.ndarray          # (|genes|+|regulators|) x p_s, orthonormal columns
    col_means: np.ndarray         # centering applied before projection
    explained: np.ndarray         # per-component explained-variance ratios

    @property
    def p_s(self) -> int:
        return self.loadings.shape[1]


@dataclass(frozen=True)
class FeatureSet:
    """Step-II output: per-module PC score blocks plus leftover columns Z.

    z_meta holds ("gene", j) / ("regulator", l) provenance per Z column;
    block_meta maps each score block back to its member genes and regulators.
    """

    X_blocks: list            # list of n x p_s score matrices
    Z: np.ndarray             # n x p_z leftover individual features
    block_meta: list          # list[ModuleBlock]
    z_meta: list              # list[(kind, index)]
    raw_blocks: bool = False  # True when blocks are raw member columns (no PCA)

    @property
    def S(self) -> int:
        return len(self.X_blocks)

    @property
    def p_z(self) -> int:
        return self.Z.shape[1]

    @property
    def group_sizes(self) -> list:
        return [X.shape[1] for X in self.X_blocks]

    @property
    def n(self) -> int:
        return self.Z.shape[0]


# ---------------------------------------------------------------------------
# Delimited-text I/O: comma-separated, one header row, '.' decimal separator.
# ---------------------------------------------------------------------------

def read_matrix_csv(path) -> tuple[np.ndarray, list[str]]:
    """Strict CSV matrix reader returning (values, column names)."""
    rows = []
    try:
        handle = open(path, "r", newline="")
    except OSError as exc:
        raise DataFormatError(f"cannot open file: {exc}", path=str(path)) from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty file (missing header row)", path=str(path)) from None
        width = len(header)
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != width:
                raise DataFormatError(
                    f"ragged row: expected {width} fields, got {len(record)}",
                    path=str(path), line=lineno,
                )
            try:
                rows.append([float(cell) for cell in record])
            except ValueError:
                bad = next(c for c in record if not _is_number(c))
                raise DataFormatError(
                    f"non-numeric cell {bad!r}", path=str(path), line=lineno
                ) from None
    if not rows:
        raise DataFormatError("no data rows", path=str(path))
    return np.asarray(rows, dtype=np.float64), [h.strip() for h in header]


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def write_matrix_csv(path, values: np.ndarray, names) -> None:
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    if values.shape[0] == 1 and len(names) == 1 and values.shape[1] > 1:
        values = values.T
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(names))
        for row in values:
            writer.writerow([_fmt(v) for v in row])


def _fmt(v: float) -> str:
    if math.isfinite(v) and v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return format(v, ".17g")


def read_keyvalue(path) -> dict[str, str]:
    """Parse a `key = value` text file; '#' starts a comment."""
    out = {}
    try:
        handle = open(path, "r")
    except OSError as exc:
        raise DataFormatError(f"cannot open file: {exc}", path=str(path)) from exc
    with handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataFormatError("expected 'key = value'", path=str(path), line=lineno)
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def write_keyvalue(path, mapping: dict) -> None:
    with open(path, "w") as handle:
        for key, value in mapping.items():
            handle.write(f"{key} = {value}\n")


def load_dataset(manifest_path) -> Dataset:
    """Load a Dataset from a manifest of per-matrix CSV paths.

    The manifest names `genes`, `regulators`, `environment`, `outcome` and
    optionally `event_indicator`; relative paths resolve against the manifest
    directory.  Survival mode switches on when `event_indicator` is present.
    """
    from pathlib import Path

    manifest_path = Path(manifest_path)
    entries = read_keyvalue(manifest_path)
    missing = [k for k in MANIFEST_KEYS if k not in entries]
    if missing:
        raise DataFormatError(
            f"manifest missing keys: {', '.join(missing)}", path=str(manifest_path)
        )
    base = manifest_path.parent

    def resolve(key):
        return base / entries[key]

    G, gene_names = read_matrix_csv(resolve("genes"))
    R, regulator_names = read_matrix_csv(resolve("regulators"))
    E, env_names = read_matrix_csv(resolve("environment"))
    Yraw, _ = read_matrix_csv(resolve("outcome"))
    Y = Yraw[:, 0]
    counts = {
        str(resolve("genes")): G.shape[0],
        str(resolve("regulators")): R.shape[0],
        str(resolve("environment")): E.shape[0],
        str(resolve("outcome")): Y.shape[0],
    }
    delta = None
    if "event_indicator" in entries:
        draw, _ = read_matrix_csv(resolve("event_indicator"))
        delta = draw[:, 0]
        counts[str(resolve("event_indicator"))] = delta.shape[0]
    if len(set(counts.values())) > 1:
        detail = ", ".join(f"{path}: {m} rows" for path, m in counts.items())
        raise DataFormatError(f"row-count mismatch across files ({detail})")
    try:
        return Dataset(
            G=G, R=R, E=E, Y=Y, delta=delta,
            gene_names=tuple(gene_names),
            regulator_names=tuple(regulator_names),
            env_names=tuple(env_names),
        )
    except StructuralError as exc:
        raise DataFormatError(str(exc), path=str(manifest_path)) from exc


def save_dataset(dataset: Dataset, out_dir, manifest_name="manifest.txt") -> str:
    """Write the dataset CSVs plus a manifest; returns the manifest path."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gene_names = dataset.gene_names or tuple(f"g{j + 1}" for j in range(dataset.p))
    reg_names = dataset.regulator_names or tuple(f"r{l + 1}" for l in range(dataset.q))
    env_names = dataset.env_names or tuple(f"e{m + 1}" for m in range(dataset.M))
    write_matrix_csv(out / "genes.csv", dataset.G, gene_names)
    write_matrix_csv(out / "regulators.csv", dataset.R, reg_names)
    write_matrix_csv(out / "environment.csv", dataset.E, env_names)
    write_matrix_csv(out / "outcome.csv", dataset.Y.reshape(-1, 1), ["outcome"])
    entries = {
        "genes": "genes.csv",
        "regulators": "regulators.csv",
        "environment": "environment.csv",
        "outcome": "outcome.csv",
    }
    if dataset.delta is not None:
        write_matrix_csv(out / "event_indicator.csv", dataset.delta.reshape(-1, 1), ["event"])
        entries["event_indicator"] = "event_indicator.csv"
    manifest = out / manifest_name
    write_keyvalue(manifest, entries)
    return str(manifest)


def marginal_prescreen(dataset: Dataset, keep: int) -> tuple[Dataset, np.ndarray, np.ndarray]:
    """Keep the `keep` molecular columns with smallest marginal-regression p-values.

    Each G and R column is regressed on Y alone; ranking is by the univariate
    slope t-statistic.  Returns the reduced dataset plus the kept gene and
    regulator index arrays.
    """
    if keep < 1:
        raise StructuralError("prescreen count must be >= 1")
    y = dataset.Y - dataset.Y.mean()
    n = dataset.n

    def tstats(X):
        Xc = X - X.mean(axis=0)
        ssx = (Xc * Xc).sum(axis=0)
        ssx[ssx <= 0] = np.inf
        slope = Xc.T @ y / ssx
        resid = y[:, None] - Xc * slope
        dfree = max(n - 2, 1)
        sigma2 = (resid * resid).sum(axis=0) / dfree
        se = np.sqrt(np.where(np.isfinite(ssx), sigma2 / ssx, np.inf))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(se > 0, np.abs(slope) / se, 0.0)
        return np.nan_to_num(t, nan=0.0, posinf=0.0)

    tg = tstats(dataset.G)
    tr = tstats(dataset.R)
    pooled = np.concatenate([tg, tr])
    order = np.argsort(-pooled, kind="stable")[: min(keep, pooled.size)]
    keep_g = np.sort(order[order < dataset.p])
    keep_r = np.sort(order[order >= dataset.p] - dataset.p)
    if keep_g.size == 0 or keep_r.size == 0:
        raise StructuralError("prescreen removed every gene or every regulator; raise the cut")
    reduced = Dataset(
        G=dataset.G[:, keep_g],
        R=dataset.R[:, keep_r],
        E=dataset.E,
        Y=dataset.Y,
        delta=dataset.delta,
        gene_names=tuple(np.asarray(dataset.gene_names)[keep_g]) if dataset.gene_names else None,
        regulator_names=tuple(np.asarray(dataset.regulator_names)[keep_r]) if dataset.regulator_names else None,
        env_names=dataset.env_names,
    )
    return reduced, keep_g, keep_r
