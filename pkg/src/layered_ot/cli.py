"""Batch front-end: parse scenario configs, orchestrate runs, emit TSV reports.

Config files are flat dotted-key text (``cost.family = quadratic``), one key
per line, ``#`` comments.  Every run writes a ``summary.tsv`` whose check
lines follow the grammar ``CHECK <name> (PASS|FAIL|SKIP) <key=value>*``; with
``--dump-dir`` the plan, the dual potentials and a plottable support table are
written next to it.  Identical config and seed produce byte-identical
summaries.
"""

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .exceptions import ConfigurationError, LayeredOTError
from .uniqueness import reproduce_counterexample, run_theorem_scenario

_COMMON_KEYS = {
    "scenario": str,
    "seed": int,
    "probe.trials": int,
    "probe.tol_face": float,
    "measure.perturb": float,
}

_FLOAT_LIST = "float_list"

SCENARIOS = {
    "t31_layered": {
        "id": "T3.1",
        "describe": "strictly convex cost, source plane vs K stacked layers",
        "keys": {"geometry.K": int, "geometry.n": int, "geometry.grid": int,
                 "cost.family": str, "cost.p": float, "measure.t": _FLOAT_LIST,
                 "measure.layer1_atomic": bool},
        "required": ("cost.family",),
    },
    "t32_tilted": {
        "id": "T3.2",
        "describe": "quadratic cost, tilted target planes with nonorthogonal normals",
        "keys": {"geometry.K": int, "geometry.grid": int, "geometry.perp_layer": int,
                 "geometry.min_normal_dot": float, "measure.t": _FLOAT_LIST,
                 "cost.family": str},
        "required": (),
    },
    "t41_threemarginal": {
        "id": "T4.1",
        "describe": "three-marginal inner-product surplus on K x L layer cells",
        "keys": {"geometry.K": int, "geometry.L": int, "geometry.grid": int,
                 "measure.t": _FLOAT_LIST, "measure.r": _FLOAT_LIST,
                 "cost.family": str},
        "required": (),
    },
    "t53_subtwist": {
        "id": "T5.3",
        "describe": "sub-twist cost with a mixed volume-plus-surface first marginal",
        "keys": {"geometry.grid": int, "geometry.shape": str, "measure.s": float,
                 "geometry.r1": float, "geometry.r2": float,
                 "measure.inner_split": float, "check.gap_samples": int,
                 "check.chart_nodes": int},
        "required": (),
    },
    "t61_boundary": {
        "id": "T6.1/C6.2",
        "describe": "quadratic cost from a mixed measure on a strictly convex body",
        "keys": {"geometry.grid": int, "geometry.shape": str, "measure.s": float,
                 "geometry.r1": float, "geometry.r2": float,
                 "measure.inner_split": float, "check.normal_tol": float,
                 "check.interior_multi_max": float},
        "required": (),
    },
    "cex_atomic": {
        "id": "CEX-A",
        "describe": "segment source vs two atoms: distinct optimal maps",
        "keys": {"geometry.grid": int},
        "required": (),
    },
    "cex_perpendicular": {
        "id": "CEX-P",
        "describe": "perpendicular segments: every coupling is optimal",
        "keys": {"geometry.grid": int},
        "required": (),
    },
}

_THEOREM_OF_SCENARIO = {
    "t31_layered": "T3.1",
    "t32_tilted": "T3.2",
    "t41_threemarginal": "T4.1",
    "t53_subtwist": "T5.3",
    "t61_boundary": "T6.1",
}


def _coerce(raw, kind, path, lineno, key):
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is _FLOAT_LIST:
            return [float(tok) for tok in raw.replace(",", " ").split()]
        return kind(raw)
    except ValueError:
        raise ConfigurationError(
            f"{path}:{lineno}: field {key!r} expects {getattr(kind, '__name__', kind)}, "
            f"got {raw!r}")


def parse_config(path):
    """Parse and schema-validate one scenario config file."""
    entries = {}
    lines = {}
    try:
        with open(path) as fh:
            raw_lines = fh.readlines()
    except OSError as exc:
        raise ConfigurationError(f"{path}: unreadable config ({exc})")
    for lineno, raw in enumerate(raw_lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = text.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigurationError(f"{path}:{lineno}: empty key or value")
        if key in entries:
            raise ConfigurationError(f"{path}:{lineno}: duplicate key {key!r}")
        entries[key] = value
        lines[key] = lineno

    kind = entries.get("scenario")
    if kind is None:
        raise ConfigurationError(f"{path}: missing required field 'scenario'")
    if kind not in SCENARIOS:
        raise ConfigurationError(
            f"{path}:{lines['scenario']}: unknown scenario {kind!r}; "
            f"known: {', '.join(sorted(SCENARIOS))}")
    schema = dict(_COMMON_KEYS)
    schema.update(SCENARIOS[kind]["keys"])
    config = {}
    for key, raw in entries.items():
        if key not in schema:
            raise ConfigurationError(f"{path}:{lines[key]}: unknown field {key!r} "
                                     f"for scenario {kind!r}")
        config[key] = _coerce(raw, schema[key], path, lines[key], key)
    for req in SCENARIOS[kind]["required"]:
        if req not in config:
            raise ConfigurationError(f"{path}: missing required field {req!r} "
                                     f"for scenario {kind!r}")
    if kind == "t32_tilted" and config.get("cost.family", "quadratic") != "quadratic":
        raise ConfigurationError(f"{path}: scenario t32_tilted is quadratic-cost only")
    if kind == "t41_threemarginal" and config.get("cost.family", "surplus3") != "surplus3":
        raise ConfigurationError(f"{path}: scenario t41_threemarginal uses the "
                                 f"three-marginal surplus cost")
    for key, value in config.items():
        if key.endswith("tol_face") and value <= 0:
            raise ConfigurationError(f"{path}:{lines[key]}: tolerances must be positive")
    return kind, config


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, (tuple, list)):
        return ",".join(_fmt(v) for v in value)
    return "_".join(str(value).split())     # keep `key=value` tokens space-free


def _summary_lines(kind, config, checks, hypothesis_checks=()):
    out = [f"# scenario\t{kind}", f"# id\t{SCENARIOS[kind]['id']}"]
    for key in sorted(config):
        out.append(f"# config\t{key} = {_fmt(config[key])}")
    for name, ok in hypothesis_checks:
        out.append(f"HYPOTHESIS {name} {'HOLDS' if ok else 'VIOLATED'}")
    for c in checks:
        detail = " ".join(f"{k}={_fmt(v)}" for k, v in c.details.items())
        out.append(f"CHECK {c.name} {c.status}{(' ' + detail) if detail else ''}")
    return out


def _dump_plan(plan, path):
    with open(path, "w") as fh:
        header = "i\tj\tk\tmass" if plan.arity == 3 else "i\tj\tmass"
        fh.write(f"# {header}\n")
        for idx in sorted(plan.entries):
            cells = "\t".join(str(v) for v in idx)
            fh.write(f"{cells}\t{plan.entries[idx]:.17g}\n")


def _dump_duals(cert, path):
    with open(path, "w") as fh:
        fh.write("# marginal\tindex\tpotential\n")
        for axis, pot in enumerate(cert.potentials):
            for i, v in enumerate(pot):
                fh.write(f"{axis}\t{i}\t{v:.17g}\n")


def _dump_support(plan, path):
    srcs = plan.marginals[0].points
    with open(path, "w") as fh:
        src_cols = "\t".join(f"src_{k}" for k in range(srcs.shape[1]))
        tgt_cols = []
        for axis in range(1, plan.arity):
            d = plan.marginals[axis].points.shape[1]
            tgt_cols += [f"tgt{axis}_{k}" for k in range(d)]
        fh.write(f"# {src_cols}\t" + "\t".join(tgt_cols) + "\tmass\n")
        for idx in sorted(plan.entries):
            row = list(srcs[idx[0]])
            for axis in range(1, plan.arity):
                row.extend(plan.marginals[axis].points[idx[axis]])
            fh.write("\t".join(f"{v:.17g}" for v in row)
                     + f"\t{plan.entries[idx]:.17g}\n")


def run_single(config_path, out_root=None, dump=False, overrides=None):
    """Run one config; returns (exit_code, summary_lines)."""
    try:
        kind, config = parse_config(config_path)
    except ConfigurationError as exc:
        return 2, [f"CONFIG ERROR {exc}"]
    config.update(overrides or {})
    seed_env = os.environ.get("LAYERED_OT_SEED")
    if "seed" not in config and seed_env is not None:
        config["seed"] = int(seed_env)

    try:
        if kind == "cex_atomic":
            report = reproduce_counterexample(
                "atomic", grid=config.get("geometry.grid"),
                seed=config.get("seed", 0), trials=config.get("probe.trials", 20))
            checks, hyp, artifacts = report.checks, [], report.artifacts
        elif kind == "cex_perpendicular":
            report = reproduce_counterexample(
                "perpendicular", grid=config.get("geometry.grid"),
                seed=config.get("seed", 0), trials=config.get("probe.trials", 20))
            checks, hyp, artifacts = report.checks, [], report.artifacts
        else:
            verdict = run_theorem_scenario(_THEOREM_OF_SCENARIO[kind], config)
            checks, hyp, artifacts = verdict.checks, verdict.hypothesis_checks, \
                verdict.artifacts
    except LayeredOTError as exc:
        return 2, [f"CONFIG ERROR {exc}"]

    lines = _summary_lines(kind, config, checks, hyp)
    stem = os.path.splitext(os.path.basename(config_path))[0]
    out_dir = os.path.join(out_root or "layered_ot_runs", stem)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "summary.tsv"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if dump:
        plan = artifacts.get("plan")
        cert = artifacts.get("cert")
        if plan is not None:
            _dump_plan(plan, os.path.join(out_dir, "plan.tsv"))
            _dump_support(plan, os.path.join(out_dir, "plot_support.tsv"))
        if cert is not None:
            _dump_duals(cert, os.path.join(out_dir, "duals.tsv"))
    failed = any(c.status == "FAIL" for c in checks)
    return (1 if failed else 0), lines


def list_scenarios():
    """Stable text listing of the built-in scenario kinds."""
    rows = []
    for name in sorted(SCENARIOS):
        info = SCENARIOS[name]
        rows.append(f"{name:<20} {info['id']:<10} {info['describe']}")
    return "\n".join(rows)


def _parse_args(argv):
    ap = argparse.ArgumentParser(
        prog="layered-ot",
        description="Exact transport scenarios, structure checks and uniqueness probes.")
    ap.add_argument("--config", action="append", default=[],
                    help="scenario config file (repeatable)")
    ap.add_argument("--dump-dir", default=None,
                    help="directory for summaries and plan/dual/support dumps")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    ap.add_argument("--jobs", type=int, default=1, help="run configs concurrently")
    ap.add_argument("--tol-face", type=float, default=None,
                    help="face-probe objective tolerance override")
    ap.add_argument("--trials", type=int, default=None,
                    help="face-probe trial count override")
    ap.add_argument("--list", action="store_true", help="list scenario kinds and exit")
    return ap.parse_args(argv)


def _runner(args_tuple):
    return run_single(*args_tuple)


def main(argv=None):
    args = _parse_args(argv if argv is not None else sys.argv[1:])
    if args.list:
        print(list_scenarios())
        return 0
    if not args.config:
        print("no configs given; use --config PATH or --list", file=sys.stderr)
        return 2
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["probe.trials"] = args.trials
    if args.tol_face is not None:
        if args.tol_face <= 0:
            print("--tol-face must be positive", file=sys.stderr)
            return 2
        overrides["probe.tol_face"] = args.tol_face

    tasks = [(path, args.dump_dir, args.dump_dir is not None, overrides)
             for path in args.config]
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_runner, tasks))
    else:
        results = [_runner(t) for t in tasks]

    worst = 0
    for path, (code, lines) in zip(args.config, results):
        for line in lines:
            print(f"{os.path.basename(path)}: {line}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
