"""Command-line surface for the profile clustering pipeline.

Subcommands: generate, preprocess, tune, fit, cvi, validate, compare, time.
Every configuration value can be overridden with a flag of the same dotted
name, e.g. ``--validation.trials 50`` or ``--data.synthetic.noise_sigma=0``.
Exit codes: 0 success, 1 data or runtime error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import compare as cmp
from . import cvi as cvi_mod
from .clusterers import ClusteringResult
from .config import framework_specs, load_config
from .dimreduce import FittedReducer, transform
from .errors import ConfigError, LoadclustError
from .profiles import generate_synthetic, ingest_csv, preprocess, write_csv
from .seeding import child_seed_for
from .validation import validate_framework

log = logging.getLogger("loadclust")


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = _build_parser()
    try:
        args, rest = parser.parse_known_args(argv)
        if args.command is None:
            parser.print_help()
            return 2
        overrides = _parse_dotted_overrides(rest)
        if args.seed is not None:
            overrides["seed"] = args.seed
        config = load_config(args.config, overrides)
        return args.func(args, config)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return 2
    except (LoadclustError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loadclust",
        description="Compare clustering frameworks for residential load demand profiles.",
    )
    parser.set_defaults(command=None)
    sub = parser.add_subparsers(dest="command")

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="YAML configuration file")
        p.add_argument("--seed", type=int, help="override the run seed")

    p = sub.add_parser("generate", help="write a synthetic readings CSV")
    common(p)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--truth", help="optional ground-truth JSON path")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("preprocess", help="build the unit-norm median profile matrix")
    common(p)
    p.add_argument("--data", required=True, help="readings CSV path")
    p.add_argument("--out", required=True, help="output profiles CSV path")
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("tune", help="run hyperparameter selection for one framework")
    common(p)
    p.add_argument("--framework", required=True, help="e.g. pca+kmc")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("fit", help="fit one framework and save its artifacts")
    common(p)
    p.add_argument("--framework", required=True, help="e.g. pca+kmc")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("cvi", help="compute validity indices for fitted artifacts")
    common(p)
    p.add_argument("--artifacts", required=True, help="directory written by 'fit'")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_cvi)

    p = sub.add_parser("validate", help="run partition-stability validation for fitted artifacts")
    common(p)
    p.add_argument("--artifacts", required=True, help="directory written by 'fit'")
    p.add_argument("--out", required=True, help="output JSON path")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("compare", help="run the full framework comparison")
    common(p)
    p.add_argument("--out", help="output directory (default from config)")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("time", help="emit the clustering timing table")
    common(p)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_time)

    return parser


def _parse_dotted_overrides(rest: list[str]) -> dict[str, str]:
    """Turn leftover ``--a.b.c value`` / ``--a.b.c=value`` flags into overrides.

    Unknown keys are rejected later, when the override is applied against the
    configuration tree.
    """
    overrides: dict[str, str] = {}
    i = 0
    while i < len(rest):
        token = rest[i]
        if not token.startswith("--"):
            raise ConfigError(f"unexpected argument {token!r}")
        body = token[2:]
        if "=" in body:
            key, value = body.split("=", 1)
            i += 1
        else:
            key = body
            if i + 1 >= len(rest):
                raise ConfigError(f"flag {token!r} needs a value")
            value = rest[i + 1]
            i += 2
        overrides[key] = value
    return overrides


def _resolve_data(config: dict):
    data_cfg = config["data"]
    if data_cfg["source"] == "synthetic":
        syn = data_cfg["synthetic"]
        raw = generate_synthetic(
            n_households=int(syn["n_households"]),
            n_days=int(syn["n_days"]),
            archetypes=int(syn["archetypes"]),
            noise_sigma=float(syn["noise_sigma"]),
            seed=int(config["seed"]),
        )
        skipped = 0
    elif data_cfg["source"] == "csv":
        if not data_cfg["csv_path"]:
            raise ConfigError("data.source is 'csv' but data.csv_path is not set")
        raw, skipped = ingest_csv(data_cfg["csv_path"], int(data_cfg["resolution"]))
        if skipped:
            log.warning("skipped %d malformed rows", skipped)
    else:
        raise ConfigError(f"unknown data.source {data_cfg['source']!r}")
    return raw, preprocess(raw)


def _single_spec(config: dict, name: str):
    config = dict(config)
    config["frameworks"] = [name]
    specs = framework_specs(config)
    return specs[0]


def _cmd_generate(args, config) -> int:
    syn = config["data"]["synthetic"]
    raw = generate_synthetic(
        n_households=int(syn["n_households"]),
        n_days=int(syn["n_days"]),
        archetypes=int(syn["archetypes"]),
        noise_sigma=float(syn["noise_sigma"]),
        seed=int(config["seed"]),
    )
    write_csv(raw, args.out)
    log.info("wrote %d readings for %d households to %s",
             len(raw.readings), len(raw.household_ids()), args.out)
    if args.truth:
        with open(args.truth, "w", encoding="utf-8") as fh:
            json.dump(raw.ground_truth, fh, sort_keys=True, indent=2)
            fh.write("\n")
    return 0


def _cmd_preprocess(args, config) -> int:
    raw, skipped = ingest_csv(args.data, int(config["data"]["resolution"]))
    if skipped:
        log.warning("skipped %d malformed rows", skipped)
    profiles = preprocess(raw)
    header = ["household_id"] + [f"f{i}" for i in range(profiles.d)]
    lines = [",".join(header)]
    for hid, row in zip(profiles.household_ids, profiles.data):
        lines.append(",".join([hid] + [repr(float(v)) for v in row]))
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    log.info("wrote %d x %d profile matrix to %s", profiles.data.shape[0], profiles.d, args.out)
    return 0


def _cmd_tune(args, config) -> int:
    _, profiles = _resolve_data(config)
    spec = _single_spec(config, args.framework)
    fitted = cmp.fit_framework(
        profiles,
        spec,
        int(config["seed"]),
        k_max=int(config["tuning"]["k_max"]),
        n_refs=int(config["tuning"]["n_refs"]),
    )
    os.makedirs(args.out, exist_ok=True)
    doc = {name: t.to_json() for name, t in fitted.tuning.items()}
    doc["resolved"] = fitted.resolved
    with open(os.path.join(args.out, "tuning.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    for name, t in fitted.tuning.items():
        pairs = [f"{float(x)!r},{float(y)!r}" for x, y in zip(t.curve.xs, t.curve.ys)]
        with open(os.path.join(args.out, f"{name}.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(["x,y"] + pairs) + "\n")
    log.info("resolved %s: %s", fitted.name, fitted.resolved)
    return 0


def _cmd_fit(args, config) -> int:
    raw, profiles = _resolve_data(config)
    spec = _single_spec(config, args.framework)
    fitted = cmp.fit_framework(
        profiles,
        spec,
        int(config["seed"]),
        k_max=int(config["tuning"]["k_max"]),
        n_refs=int(config["tuning"]["n_refs"]),
    )
    os.makedirs(args.out, exist_ok=True)
    meta = {
        "framework": args.framework,
        "name": fitted.name,
        "resolved": fitted.resolved,
        "seed": int(config["seed"]),
        "data": config["data"],
    }
    for fname, doc in [
        ("reducer.json", fitted.reducer.to_json()),
        ("result.json", fitted.result.to_json()),
        ("meta.json", meta),
    ]:
        with open(os.path.join(args.out, fname), "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
            fh.write("\n")
    log.info("fitted %s (k=%d) into %s", fitted.name, fitted.result.k, args.out)
    return 0


def _load_artifacts(args, config):
    with open(os.path.join(args.artifacts, "meta.json"), encoding="utf-8") as fh:
        meta = json.load(fh)
    with open(os.path.join(args.artifacts, "reducer.json"), encoding="utf-8") as fh:
        reducer = FittedReducer.from_json(json.load(fh))
    with open(os.path.join(args.artifacts, "result.json"), encoding="utf-8") as fh:
        result = ClusteringResult.from_json(json.load(fh))
    config = dict(config)
    config["data"] = meta["data"]
    config["seed"] = meta["seed"]
    raw, profiles = _resolve_data(config)
    return meta, reducer, result, raw, profiles


def _cmd_cvi(args, config) -> int:
    meta, reducer, result, _, profiles = _load_artifacts(args, config)
    reduced = transform(reducer, profiles.data)
    scores_red = cvi_mod.all_indices(reduced, result, cvi_mod.SPACE_REDUCED)
    scores_orig = cvi_mod.all_indices(profiles.data, result, cvi_mod.SPACE_ORIGINAL)
    lines = [",".join(cmp.CVI_HEADER + ["feature_space"])]
    for scores in (scores_red, scores_orig):
        values = [repr(float(v)) for v in scores.values()]
        lines.append(",".join([meta["name"]] + values + [scores.feature_space]))
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    log.info("wrote validity indices to %s", args.out)
    return 0


def _cmd_validate(args, config) -> int:
    meta, reducer, result, raw, _ = _load_artifacts(args, config)
    reports = {}
    for p in config["validation"]["p"]:
        seed_val = child_seed_for(int(meta["seed"]), f"{meta['framework']}/validate/p={p}")
        rep = validate_framework(
            raw, reducer, result, p=int(p),
            trials=int(config["validation"]["trials"]), seed=seed_val,
        )
        reports[str(p)] = rep.to_json()
        log.info("p=%d: %.2f%% matches", p, rep.pct_matches)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump({"name": meta["name"], "validation": reports}, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return 0


def _cmd_compare(args, config) -> int:
    raw, profiles = _resolve_data(config)
    specs = framework_specs(config)
    report = cmp.run_compare(
        raw,
        profiles,
        specs,
        seed=int(config["seed"]),
        p_values=[int(p) for p in config["validation"]["p"]],
        trials=int(config["validation"]["trials"]),
        k_max=int(config["tuning"]["k_max"]),
        n_refs=int(config["tuning"]["n_refs"]),
        workers=int(config["compare"]["workers"]),
        config_echo=config,
    )
    if config["timing"]["enabled"]:
        # Wall-clock cells vary run to run, so this is off by default to keep
        # report.json byte-reproducible.
        report.timing = cmp.time_frameworks(
            profiles,
            trials=int(config["timing"]["trials"]),
            k=int(config["timing"]["k"]),
            seed=int(config["seed"]),
            pca_target=config["reduction"]["pca_target"],
            fa_target=config["reduction"]["fa_target"],
        )
    out_dir = args.out or config["output"]["dir"]
    cmp.write_report(report, out_dir, plots=bool(config["output"]["plots"]))
    for row in report.rows:
        pcts = {p: f"{rep.pct_matches:.2f}%" for p, rep in row.validations.items()}
        log.info("%-12s k=%d matches=%s", row.framework.name, row.framework.result.k, pcts)
    log.info("report written to %s", out_dir)
    return 0


def _cmd_time(args, config) -> int:
    _, profiles = _resolve_data(config)
    table = cmp.time_frameworks(
        profiles,
        trials=int(config["timing"]["trials"]),
        k=int(config["timing"]["k"]),
        seed=int(config["seed"]),
        pca_target=config["reduction"]["pca_target"],
        fa_target=config["reduction"]["fa_target"],
    )
    text = cmp.timing_csv_text(table)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    log.info("timing table (ms):\n%s", text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
