"""Batch command-line front end.

Subcommands: simulate, fit, predict, evaluate, benchmark.  Every run writes a
run_manifest.json with the resolved configuration, the seed, and sha256
hashes of each artifact, so a run can be reproduced bit-for-bit.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    FeatureSet,
    ModuleBlock,
    Scaler,
    load_dataset,
    marginal_prescreen,
    read_keyvalue,
    read_matrix_csv,
    save_dataset,
)
from .errors import DataFormatError, PipelineError, StructuralError
from .interact import FittedModel, coefficient_table, km_weights, predict
from .integrate import transform_features
from .regulation import write_theta_csv
from .simbench import (
    SelectionResult,
    SimConfig,
    TuningParams,
    VARIANTS,
    evaluate_resampling,
    generate_dataset,
    predict_rows,
    run_benchmark,
    run_pipeline,
    score_identification,
)

CHOICES = {
    "theta_pattern": ("Theta1", "Theta2"),
    "corr": ("R1", "R2", "R3"),
    "placement": ("P1", "P2"),
    "signal": ("B1", "B2"),
    "variant": VARIANTS,
}


class UsageError(Exception):
    pass


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_run_manifest(out_dir: Path, command: str, config: dict, artifacts) -> None:
    payload = {
        "tool": "me-interact",
        "version": __version__,
        "command": command,
        "config": config,
        "artifacts": {name: _sha256(out_dir / name) for name in sorted(artifacts)},
    }
    with open(out_dir / "run_manifest.json", "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _sim_config_from(args) -> SimConfig:
    values = {
        "n": 250, "p": 500, "q": 500, "m": 5,
        "theta_pattern": "Theta1", "corr": "R1",
        "placement": "P1", "signal": "B1", "scale_factor": 1.0,
    }
    if args.config:
        for key, raw in read_keyvalue(args.config).items():
            if key not in values and key not in ("replicates", "variants", "seed"):
                raise UsageError(f"unknown config key {key!r}")
            values[key] = raw
    for key in ("n", "p", "q", "m"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    for key in ("theta_pattern", "corr", "placement", "signal", "scale_factor"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    for key, allowed in CHOICES.items():
        if key in values and str(values[key]) not in allowed:
            raise UsageError(f"invalid {key} {values[key]!r}; allowed values: {', '.join(allowed)}")
    try:
        return SimConfig(
            n=int(values["n"]), p=int(values["p"]), q=int(values["q"]), M=int(values["m"]),
            theta_pattern=str(values["theta_pattern"]), corr=str(values["corr"]),
            placement=str(values["placement"]), signal=str(values["signal"]),
            seed=args.seed, scale_factor=float(values["scale_factor"]),
        )
    except (ValueError, StructuralError) as exc:
        raise UsageError(str(exc)) from exc


def _tuning_from(args) -> TuningParams:
    tuning = TuningParams()
    mapping = {
        "b_permutations": "bicluster_B",
        "alpha": "bicluster_alpha",
        "max_modules": "max_modules",
        "pca_threshold": "pca_threshold",
        "grid_size": "grid_size",
        "grid_decades": "grid_decades",
        "gamma_ebic": "gamma_ebic",
        "lambda_rule": "lambda_rule",
        "fixed_lambda": "fixed_lambda",
        "cd_max_iter": "cd_max_iter",
    }
    for flag, attr in mapping.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(tuning, attr, value)
    return tuning


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    config = _sim_config_from(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset, truth = generate_dataset(config)
    save_dataset(dataset, out)
    write_theta_csv(
        type("", (), {"theta": truth.theta_true, "p": truth.theta_true.shape[1]})(),
        out / "truth_theta.csv",
    )
    module_rows = []
    for s, module in enumerate(truth.planted_modules):
        for j in module.genes:
            module_rows.append([s + 1, "gene", int(j), dataset.gene_names[int(j)]])
        for l in module.regulators:
            module_rows.append([s + 1, "regulator", int(l), dataset.regulator_names[int(l)]])
    _write_csv(out / "truth_modules.csv",
               ["module_id", "entity_type", "entity_index", "entity_name"], module_rows)
    effect_rows = []
    for kind, idx in sorted(truth.important_main):
        name = dataset.gene_names[idx] if kind == "gene" else dataset.regulator_names[idx]
        effect_rows.append(["main", kind, idx, name, ""])
    for kind, idx, m in sorted(truth.important_inter):
        name = dataset.gene_names[idx] if kind == "gene" else dataset.regulator_names[idx]
        effect_rows.append(["inter", kind, idx, name, m + 1])
    _write_csv(out / "truth_effects.csv",
               ["effect", "entity_type", "entity_index", "entity_name", "factor"], effect_rows)
    artifacts = [
        "genes.csv", "regulators.csv", "environment.csv", "outcome.csv",
        "manifest.txt", "truth_theta.csv", "truth_modules.csv", "truth_effects.csv",
    ]
    _write_run_manifest(out, "simulate", {
        "n": config.n, "p": config.p, "q": config.q, "m": config.M,
        "theta_pattern": config.theta_pattern, "corr": config.corr,
        "placement": config.placement, "signal": config.signal,
        "scale_factor": config.scale_factor, "seed": config.seed,
        "effective_dims": {"p": config.p_eff, "q": config.q_eff, "modules": config.n_modules},
        "important_main": truth.n_main, "important_inter": truth.n_inter,
    }, artifacts)
    print(f"simulate: wrote {len(artifacts) + 1} artifacts to {out} "
          f"(p={config.p_eff}, q={config.q_eff}, {truth.n_total} planted effects)")
    return 0


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def _save_model(path: Path, result: SelectionResult, names: dict) -> None:
    scaler = result.scaler
    payload = {
        "variant": result.variant,
        "survival": result.survival,
        "y_offset": result.y_offset,
        "lambda1": result.lambda1,
        "lambda2": result.lambda2,
        "scaler": {
            "g_mean": scaler.g_mean.tolist(), "g_sd": scaler.g_sd.tolist(),
            "r_mean": scaler.r_mean.tolist(), "r_sd": scaler.r_sd.tolist(),
            "e_mean": scaler.e_mean.tolist(), "e_sd": scaler.e_sd.tolist(),
            "y_mean": scaler.y_mean,
            "zero_variance": {k: v.tolist() for k, v in scaler.zero_variance.items()},
        },
        "model": {
            "alpha": result.model.alpha.tolist(),
            "beta": [b.tolist() for b in result.model.beta],
            "gamma": result.model.gamma.tolist(),
            "eta": [e.tolist() for e in result.model.eta],
            "tau": result.model.tau.tolist(),
            "hierarchical": result.model.hierarchical,
            "group_sizes": result.model.group_sizes,
            "converged": result.model.converged,
        },
        "features": {
            "raw_blocks": result.features.raw_blocks,
            "blocks": [
                {
                    "genes": block.gene_indices.tolist(),
                    "regulators": block.regulator_indices.tolist(),
                    "loadings": block.loadings.tolist(),
                    "col_means": block.col_means.tolist(),
                    "explained": block.explained.tolist(),
                }
                for block in result.features.block_meta
            ],
            "z_meta": [[kind, idx] for kind, idx in result.features.z_meta],
        },
        "names": names,
    }
    with open(path, "w") as handle:
        json.dump(payload, handle)
        handle.write("\n")


def _as_matrix(nested, n_rows: int) -> np.ndarray:
    arr = np.asarray(nested, dtype=np.float64)
    if arr.size == 0:
        return np.zeros((n_rows, 0))
    return arr.reshape(n_rows, -1)


def _load_model(path: Path) -> SelectionResult:
    with open(path) as handle:
        payload = json.load(handle)
    sc = payload["scaler"]
    scaler = Scaler(
        g_mean=np.asarray(sc["g_mean"]), g_sd=np.asarray(sc["g_sd"]),
        r_mean=np.asarray(sc["r_mean"]), r_sd=np.asarray(sc["r_sd"]),
        e_mean=np.asarray(sc["e_mean"]), e_sd=np.asarray(sc["e_sd"]),
        y_mean=sc["y_mean"],
        zero_variance={k: np.asarray(v, dtype=np.int64) for k, v in sc["zero_variance"].items()},
    )
    md = payload["model"]
    model = FittedModel(
        alpha=np.asarray(md["alpha"], dtype=np.float64),
        beta=[np.asarray(b, dtype=np.float64) for b in md["beta"]],
        gamma=np.asarray(md["gamma"], dtype=np.float64),
        eta=[_as_matrix(e, len(md["alpha"])) for e in md["eta"]],
        tau=_as_matrix(md["tau"], len(md["alpha"])),
        lambda1=payload["lambda1"], lambda2=payload["lambda2"],
        objective_trace=[], converged=md["converged"],
        survival_mode=payload["survival"], hierarchical=md["hierarchical"],
        group_sizes=md["group_sizes"],
    )
    ft = payload["features"]
    blocks = [
        ModuleBlock(
            gene_indices=np.asarray(b["genes"], dtype=np.int64),
            regulator_indices=np.asarray(b["regulators"], dtype=np.int64),
            loadings=np.asarray(b["loadings"]),
            col_means=np.asarray(b["col_means"]),
            explained=np.asarray(b["explained"]),
        )
        for b in ft["blocks"]
    ]
    features = FeatureSet(
        X_blocks=[], Z=np.empty((0, len(ft["z_meta"]))),
        block_meta=blocks, z_meta=[(k, int(i)) for k, i in ft["z_meta"]],
        raw_blocks=ft["raw_blocks"],
    )
    return SelectionResult(
        variant=payload["variant"], identified_main=set(), identified_inter=set(),
        model=model, features=features, modules=[], regulation=None,
        scaler=scaler, y_offset=payload["y_offset"],
        lambda1=payload["lambda1"], lambda2=payload["lambda2"],
        ebic_table=[], seconds=0.0, survival=payload["survival"],
    )


def _audit_coefficient_csv(path: Path, n_env: int) -> bool:
    """Group-level hierarchy audit straight off the exported CSV: any group
    showing an interaction cell must also show a main-effect cell."""
    groups: dict = {}
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        next(reader)
        for row in reader:
            group = row[0]
            if not group:
                continue
            has_main, has_inter = groups.get(group, (False, False))
            if row[3] != "":
                has_main = True
            if any(cell != "" for cell in row[4:4 + n_env]):
                has_inter = True
            groups[group] = (has_main, has_inter)
    return all(has_main or not has_inter for has_main, has_inter in groups.values())


def cmd_fit(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(args.manifest)
    kept = None
    if args.prescreen:
        dataset, keep_g, keep_r = marginal_prescreen(dataset, args.prescreen)
        kept = {"genes": keep_g.tolist(), "regulators": keep_r.tolist()}
    tuning = _tuning_from(args)
    t0 = time.perf_counter()
    result = run_pipeline(dataset, args.variant, tuning, seed=args.seed)
    elapsed = time.perf_counter() - t0

    gene_names = dataset.gene_names or tuple(f"g{j + 1}" for j in range(dataset.p))
    reg_names = dataset.regulator_names or tuple(f"r{l + 1}" for l in range(dataset.q))
    env_names = dataset.env_names or tuple(f"e{m + 1}" for m in range(dataset.M))
    artifacts = []

    if result.modules:
        module_rows, weight_rows = [], []
        for s, module in enumerate(result.modules):
            for j in module.genes:
                module_rows.append([s + 1, "gene", int(j), gene_names[int(j)]])
            for l in module.regulators:
                module_rows.append([s + 1, "regulator", int(l), reg_names[int(l)]])
            for j, w in enumerate(module.weight_vector):
                weight_rows.append([
                    s + 1, j, gene_names[j],
                    format(w, ".17g"), format(module.ks_pvalue, ".17g"),
                ])
        _write_csv(out / "modules.csv",
                   ["module_id", "entity_type", "entity_index", "entity_name"], module_rows)
        _write_csv(out / "module_weights.csv",
                   ["module_id", "gene_index", "gene_name", "weight", "ks_pvalue"], weight_rows)
        artifacts += ["modules.csv", "module_weights.csv"]
    if result.regulation is not None:
        write_theta_csv(result.regulation, out / "regulation_matrix.csv")
        artifacts.append("regulation_matrix.csv")

    rows = coefficient_table(result.model, result.features, gene_names, reg_names, env_names)
    _write_csv(out / "coefficients.csv",
               ["group", "entity_type", "entity_name", "main"] + list(env_names), rows)
    artifacts.append("coefficients.csv")

    _write_csv(out / "objective_trace.csv", ["iteration", "objective"],
               [[i, format(v, ".17g")] for i, v in enumerate(result.model.objective_trace)])
    _write_csv(out / "ebic_table.csv",
               ["lambda1", "lambda2", "ebic", "df", "rss", "converged"],
               [[format(l1, ".17g"), format(l2, ".17g"), format(e, ".17g"), df,
                 format(rss, ".17g"), int(conv)]
                for l1, l2, e, df, rss, conv in result.ebic_table])
    _write_csv(out / "timing.csv", ["stage", "seconds"],
               [["total", format(elapsed, ".6f")], ["pipeline", format(result.seconds, ".6f")]])
    artifacts += ["objective_trace.csv", "ebic_table.csv", "timing.csv"]

    if result.survival:
        weights = km_weights(dataset.Y, dataset.delta)
        _write_csv(out / "km_weights.csv", ["row", "weight"],
                   [[int(i), format(w, ".17g")]
                    for i, w in enumerate(weights.per_subject)])
        artifacts.append("km_weights.csv")

    _save_model(out / "model.json", result, {
        "genes": list(gene_names), "regulators": list(reg_names), "env": list(env_names),
    })
    artifacts.append("model.json")

    if result.model.hierarchical and not _audit_coefficient_csv(out / "coefficients.csv", dataset.M):
        print("fit: hierarchy audit FAILED on coefficients.csv", file=sys.stderr)
        return 1
    config = {
        "manifest": str(args.manifest), "variant": args.variant, "seed": args.seed,
        "lambda1": result.lambda1, "lambda2": result.lambda2,
        "modules_found": len(result.modules), "prescreen": kept,
        "identified_main": len(result.identified_main),
        "identified_inter": len(result.identified_inter),
    }
    _write_run_manifest(out, "fit", config, artifacts)
    print(
        f"fit[{args.variant}]: {len(result.modules)} modules, "
        f"{len(result.identified_main)} main effects, "
        f"{len(result.identified_inter)} interactions, "
        f"lambda=({result.lambda1:.4g}, {result.lambda2:.4g}), {elapsed:.1f}s"
    )
    return 0


# ---------------------------------------------------------------------------
# predict / evaluate / benchmark
# ---------------------------------------------------------------------------

def _load_matrices_for_predict(manifest_path: Path):
    entries = read_keyvalue(manifest_path)
    base = manifest_path.parent
    for key in ("genes", "regulators", "environment"):
        if key not in entries:
            raise DataFormatError(f"manifest missing key {key}", path=str(manifest_path))
    G, _ = read_matrix_csv(base / entries["genes"])
    R, _ = read_matrix_csv(base / entries["regulators"])
    E, _ = read_matrix_csv(base / entries["environment"])
    return G, R, E


def cmd_predict(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = _load_model(Path(args.model))
    G, R, E = _load_matrices_for_predict(Path(args.manifest))
    preds = predict_rows(result, G, R, E)
    _write_csv(out / "predictions.csv", ["row", "prediction"],
               [[i, format(v, ".17g")] for i, v in enumerate(preds)])
    _write_run_manifest(out, "predict", {
        "model": str(args.model), "manifest": str(args.manifest), "rows": len(preds),
    }, ["predictions.csv"])
    print(f"predict: wrote {len(preds)} predictions to {out}")
    return 0


def cmd_evaluate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(args.manifest)
    tuning = _tuning_from(args)
    metric, ooi, skipped = evaluate_resampling(
        dataset, args.variant, args.splits, args.ratio, seed=args.seed, tuning=tuning,
    )
    name = "C" if dataset.survival else "PMSE"
    _write_csv(out / "evaluation.csv", ["metric", "value", "splits", "skipped"],
               [[name, format(metric, ".17g"), args.splits, skipped]])
    ooi_rows = []
    for entity, freq in sorted(ooi.items(), key=lambda kv: (-kv[1], str(kv[0]))):
        if len(entity) == 2:
            ooi_rows.append(["main", entity[0], entity[1], "", format(freq, ".17g")])
        else:
            ooi_rows.append(["inter", entity[0], entity[1], entity[2] + 1, format(freq, ".17g")])
    _write_csv(out / "ooi.csv", ["effect", "entity_type", "entity_index", "factor", "ooi"], ooi_rows)
    _write_run_manifest(out, "evaluate", {
        "manifest": str(args.manifest), "variant": args.variant,
        "splits": args.splits, "ratio": args.ratio, "seed": args.seed,
        name: metric,
    }, ["evaluation.csv", "ooi.csv"])
    print(f"evaluate[{args.variant}]: {name}={metric:.4f} over {args.splits - skipped} splits "
          f"({skipped} skipped), mean OOI={np.mean(list(ooi.values())) if ooi else 0:.3f}")
    return 0


def cmd_benchmark(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _sim_config_from(args)
    variants = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    for v in variants:
        if v not in VARIANTS:
            raise UsageError(f"invalid variant {v!r}; allowed values: {', '.join(VARIANTS)}")
    tuning = _tuning_from(args)
    rows, summary, total_positives = run_benchmark(
        config, args.replicates, variants, tuning, threads=args.threads,
    )
    _write_csv(out / "benchmark.csv",
               ["pattern", "corr", "placement", "signal", "variant", "replicate",
                "TP", "FP", "seconds"],
               [[r["pattern"], r["corr"], r["placement"], r["signal"], r["variant"],
                 r["replicate"], r["TP"], r["FP"], format(r["seconds"], ".3f")]
                for r in rows])
    _write_csv(out / "summary.csv",
               ["pattern", "corr", "placement", "signal", "variant",
                "replicates", "failures", "tp_mean", "tp_sd", "fp_mean", "fp_sd"],
               [[s["pattern"], s["corr"], s["placement"], s["signal"], s["variant"],
                 s["replicates"], s["failures"],
                 format(s["tp_mean"], ".17g"), format(s["tp_sd"], ".17g"),
                 format(s["fp_mean"], ".17g"), format(s["fp_sd"], ".17g")]
                for s in summary])
    failures = sum(s["failures"] for s in summary)
    _write_run_manifest(out, "benchmark", {
        "n": config.n, "p": config.p, "q": config.q, "m": config.M,
        "theta_pattern": config.theta_pattern, "corr": config.corr,
        "placement": config.placement, "signal": config.signal,
        "scale_factor": config.scale_factor, "seed": config.seed,
        "replicates": args.replicates, "variants": list(variants),
        "total_positives": total_positives, "failures": failures,
    }, ["benchmark.csv", "summary.csv"])
    for s in summary:
        print(f"benchmark[{s['variant']}]: TP {s['tp_mean']:.2f}({s['tp_sd']:.2f}) "
              f"FP {s['fp_mean']:.2f}({s['fp_sd']:.2f}) over {s['replicates']} replicates")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="me-interact",
        description="Regulation-aware molecular-environment interaction analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=1)

    def add_sim_flags(p):
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--p", type=int, default=None)
        p.add_argument("--q", type=int, default=None)
        p.add_argument("--m", type=int, default=None)
        p.add_argument("--theta-pattern", dest="theta_pattern", default=None)
        p.add_argument("--corr", default=None)
        p.add_argument("--placement", default=None)
        p.add_argument("--signal", default=None)
        p.add_argument("--scale-factor", dest="scale_factor", type=float, default=None)

    def add_tuning_flags(p):
        p.add_argument("--b-permutations", dest="b_permutations", type=int, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--max-modules", dest="max_modules", type=int, default=None)
        p.add_argument("--pca-threshold", dest="pca_threshold", type=float, default=None)
        p.add_argument("--grid-size", dest="grid_size", type=int, default=None)
        p.add_argument("--grid-decades", dest="grid_decades", type=float, default=None)
        p.add_argument("--gamma-ebic", dest="gamma_ebic", type=float, default=None)
        p.add_argument("--lambda-rule", dest="lambda_rule",
                       choices=("per_column_bic", "fixed"), default=None)
        p.add_argument("--fixed-lambda", dest="fixed_lambda", type=float, default=None)
        p.add_argument("--cd-max-iter", dest="cd_max_iter", type=int, default=None)

    p_sim = sub.add_parser("simulate", help="generate a synthetic dataset with ground truth")
    add_common(p_sim)
    add_sim_flags(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="run a pipeline variant on a dataset manifest")
    add_common(p_fit)
    p_fit.add_argument("--manifest", required=True)
    p_fit.add_argument("--variant", choices=VARIANTS, default="proposed")
    p_fit.add_argument("--prescreen", type=int, default=None,
                       help="keep only the top-K molecular columns by marginal regression")
    add_tuning_flags(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_pred = sub.add_parser("predict", help="predict outcomes with a saved model")
    add_common(p_pred)
    p_pred.add_argument("--model", required=True, help="model.json from a fit run")
    p_pred.add_argument("--manifest", required=True)
    p_pred.set_defaults(func=cmd_predict)

    p_eval = sub.add_parser("evaluate", help="resampling-based prediction and stability")
    add_common(p_eval)
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--variant", choices=VARIANTS, default="proposed")
    p_eval.add_argument("--splits", type=int, default=200)
    p_eval.add_argument("--ratio", type=float, default=0.9)
    add_tuning_flags(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_bench = sub.add_parser("benchmark", help="replicate generation, fitting, scoring")
    add_common(p_bench)
    add_sim_flags(p_bench)
    p_bench.add_argument("--replicates", type=int, default=10)
    p_bench.add_argument("--variants", default=",".join(VARIANTS))
    add_tuning_flags(p_bench)
    p_bench.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 1
    except PipelineError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
