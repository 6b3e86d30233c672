"""Batch runner: ``fitzlab run``, ``fitzlab bench`` and ``fitzlab --list-scenarios``.

Exit codes: 0 when every scenario agrees and matches its expected verdicts,
2 when some verdict is INCONCLUSIVE (and nothing worse happened), 1 on
disagreement, expectation mismatch or runtime error, 64 on an invalid config.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import traceback
from pathlib import Path

import jsonschema
import numpy as np

from .bench import RES_1D, RES_2D, max_disagreement, run_bench, write_bench
from .catalog import (
    DEFAULT_RESOLUTION,
    RunSettings,
    Scenario,
    build_graph,
    build_pair_function,
    load_catalog,
    report_entry,
    run_scenario,
    scenario_from_dict,
)
from .conditions import EXACT_TOL, SOLVER_TOL
from .numerics import ConfigurationError
from .operators import FitzpatrickFunction, SFunction
from .theorems import Agreement

EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_CONFIG = 0, 1, 2, 64
ENGINE_TOL = 1e-9

_BOX = {
    "type": "array",
    "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    "minItems": 2,
    "maxItems": 4,
}
_POS = {"type": "number", "exclusiveMinimum": 0}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["id", "suite"],
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "suite": {"enum": ["theorem1", "theorem2", "br", "proofs"]},
        "description": {"type": "string"},
        "n": {"enum": [1, 2]},
        "resolution": {"type": "integer", "minimum": 2},
        "primal_box": _BOX,
        "region_box": _BOX,
        "dual_box": _BOX,
        "margin": {"type": "number", "minimum": 0},
        "dual_radius": _POS,
        "translation_radius": _POS,
        "eps": _POS,
        "noise": _POS,
        "points": {"type": "integer", "minimum": 1},
        "instances": {"type": "integer", "minimum": 1},
        "maximal": {"type": "boolean"},
        "h": {"type": "object", "required": ["kind"]},
        "graph": {"type": "object", "required": ["kind"]},
        "model": {"type": "object", "required": ["kind"]},
        "expected": {"type": "object", "additionalProperties": {"enum": ["HOLDS", "FAILS", "INCONCLUSIVE"]}},
    },
    "allOf": [
        {"if": {"properties": {"suite": {"const": "theorem1"}}},
         "then": {"required": ["h", "primal_box", "dual_box"]}},
        {"if": {"properties": {"suite": {"const": "theorem2"}}}, "then": {"required": ["graph"]}},
        {"if": {"properties": {"suite": {"const": "br"}}}, "then": {"required": ["model"]}},
    ],
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["seed", "resolution", "scenarios"],
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "resolution": {"type": "integer", "minimum": 2, "maximum": 4096},
        "engine": {"enum": ["bruteforce", "llt"]},
        "translations": {"type": "integer", "minimum": 0, "maximum": 1000},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"exact": _POS, "solver": _POS},
        },
        "slices": {"type": "boolean"},
        "scenarios": {
            "oneOf": [
                {"const": "all"},
                {"type": "array", "minItems": 1, "items": {"oneOf": [{"type": "string"}, SCENARIO_SCHEMA]}},
            ]
        },
    },
}


class ConfigError(ValueError):
    pass


def _field(path) -> str:
    parts = [str(p) for p in path]
    return ".".join(parts) if parts else "<root>"


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse and validate a config; raises :class:`ConfigError` naming the offending field."""
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if isinstance(cfg, dict):
        for key in CONFIG_SCHEMA["required"]:
            if key not in cfg:
                raise ConfigError(f"{source}: field '{key}' is required")
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise ConfigError(f"{source}: field '{_field(err.absolute_path)}': {err.message}")
    return cfg


def select_scenarios(cfg: dict, catalog: dict[str, Scenario]) -> list[Scenario]:
    wanted = cfg["scenarios"]
    if wanted == "all":
        return list(catalog.values())
    out = []
    for i, item in enumerate(wanted):
        if isinstance(item, str):
            if item not in catalog:
                raise ConfigError(f"field 'scenarios.{i}': unknown scenario id {item!r}")
            out.append(catalog[item])
        else:
            try:
                out.append(scenario_from_dict(item))
            except (ConfigurationError, KeyError) as exc:
                raise ConfigError(f"field 'scenarios.{i}': {exc}") from None
    ids = [s.id for s in out]
    if len(set(ids)) != len(ids):
        raise ConfigError("field 'scenarios': duplicate scenario ids")
    return out


def settings_from(cfg: dict) -> RunSettings:
    tol = cfg.get("tolerances", {})
    return RunSettings(
        seed=int(cfg["seed"]),
        resolution=int(cfg["resolution"]),
        engine=cfg.get("engine", "bruteforce"),
        exact_tol=float(tol.get("exact", EXACT_TOL)),
        solver_tol=float(tol.get("solver", SOLVER_TOL)),
        translations=int(cfg.get("translations", 20)),
    )


def _failing_operation(exc: BaseException) -> str:
    frames = [f for f in traceback.extract_tb(exc.__traceback__) if "fitzlab" in f.filename]
    return frames[-1].name if frames else "run"


# ---------------------------------------------------------------------------
# slices


def scenario_slices(sc: Scenario, settings: RunSettings):
    """``(name, functions, p0, direction, s_range, gap_map)`` for one-dimensional scenarios."""
    d = sc.data
    spacing = 1.0 / int(d.get("resolution", settings.resolution))
    if sc.suite == "theorem1" and int(d.get("n", 1)) == 1:
        h, _ = build_pair_function(d["h"], 1, spacing)
        box = np.asarray(d["primal_box"], dtype=float)
        xs = float(np.clip(1.0, box[1, 0], box[1, 1]))
        return [(sc.id, {"h": h}, [0.0, xs], [1.0, 0.0], tuple(box[0]), None)]
    if sc.suite == "theorem2":
        T, _ = build_graph(d["graph"], spacing)
        if T.n != 1:
            return []
        P = T.pairs
        p0 = P[np.argsort(P[:, 0], kind="stable")[P.shape[0] // 2]]
        lo, hi = P[:, 0].min() - 1.0, P[:, 0].max() + 1.0
        funcs = {"phi": FitzpatrickFunction(T), "S": SFunction(T)}
        r = float(np.max(np.abs(P))) + 1.0
        gap = (funcs["phi"], [[-r, r], [-r, r]], P)
        return [(sc.id, funcs, [0.0, p0[1]], [1.0, 0.0], (lo, hi), gap)]
    return []


def write_slices(sc: Scenario, settings: RunSettings, out: Path, figures: bool) -> list[str]:
    from . import plotting

    written = []
    for name, funcs, p0, direction, s_range, gap in scenario_slices(sc, settings):
        sl = plotting.make_slice(name, funcs, p0, direction, s_range)
        written.append(str(plotting.write_slice_csv(sl, out / "slices" / f"{name}.csv").relative_to(out)))
        if figures:
            title = f"{name}: slice x* = {p0[1]:g}"
            written.append(str(plotting.plot_slice(sl, out / "figures" / f"{name}.png", title).relative_to(out)))
            if gap is not None:
                h, box, pts = gap
                path = plotting.plot_gap_map(h, box, pts, out / "figures" / f"{name}_phi_gap.png",
                                             f"{name}: phi_T - pi")
                written.append(str(path.relative_to(out)))
    return written


# ---------------------------------------------------------------------------
# run


SUMMARY_ITEMS = ("A", "B", "item1", "item2", "item3", "item4", "item5", "witnesses",
                 "translation_at_origin", "group_action", "conjugation_translation")


def write_summary(entries: list[dict], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "suite", *SUMMARY_ITEMS, "agreement", "matches_expected"])
        for e in entries:
            if "error" in e:
                w.writerow([e["scenario"], e.get("suite", ""), *[""] * len(SUMMARY_ITEMS), "ERROR", False])
                continue
            items = e["items"]
            w.writerow([e["scenario"], e["suite"], *[items.get(k, "") for k in SUMMARY_ITEMS],
                        e["agreement"], e["matches_expected"]])


def exit_code(entries: list[dict]) -> int:
    if any("error" in e or e["agreement"] == Agreement.DISAGREE.value or not e["matches_expected"] for e in entries):
        return EXIT_FAIL
    if any(e["agreement"] == Agreement.INCONCLUSIVE.value for e in entries):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def run_config(cfg: dict, out: Path, figures: bool = True, log=print) -> int:
    catalog = load_catalog()
    scenarios = select_scenarios(cfg, catalog)
    settings = settings_from(cfg)
    out.mkdir(parents=True, exist_ok=True)
    entries, files = [], []
    for sc in sorted(scenarios, key=lambda s: s.id):
        try:
            rep = run_scenario(sc, settings, catalog)
            entry = report_entry(sc, rep)
        except Exception as exc:  # reported per scenario, the run continues
            op = _failing_operation(exc)
            entry = {"scenario": sc.id, "suite": sc.suite, "error": f"{op}: {type(exc).__name__}: {exc}"}
            log(f"{sc.id}: ERROR in {op}: {exc}", file=sys.stderr)
        else:
            flag = "" if entry["matches_expected"] else "  (expected mismatch)"
            log(f"{sc.id}: {entry['agreement']}{flag}")
        entries.append(entry)
        if cfg.get("slices", True):
            try:
                files.extend(write_slices(sc, settings, out, figures))
            except Exception as exc:
                log(f"{sc.id}: slice output failed: {exc}", file=sys.stderr)
    code = exit_code(entries)
    report = {
        "config": {k: cfg[k] for k in sorted(cfg)},
        "scenarios": entries,
        "exit_code": code,
        "counts": {
            a: sum(1 for e in entries if e.get("agreement") == a)
            for a in ("AGREE", "DISAGREE", "INCONCLUSIVE")
        } | {"errors": sum(1 for e in entries if "error" in e)},
    }
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    write_summary(entries, out / "summary.csv")
    log(f"wrote {out / 'report.json'}, {out / 'summary.csv'} and {len(files)} slice files; exit {code}")
    return code


def _load_config(args) -> dict:
    if args.config is None:
        return {"seed": 0, "resolution": DEFAULT_RESOLUTION, "scenarios": "all"}
    path = Path(args.config)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def cmd_run(args) -> int:
    try:
        cfg = _load_config(args)
        if args.scenario:
            cfg["scenarios"] = list(args.scenario)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("field 'seed': must be an unsigned 64-bit integer")
            cfg["seed"] = args.seed
        select_scenarios(cfg, load_catalog())
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_config(cfg, Path(args.out), figures=not args.no_figures)


def cmd_bench(args) -> int:
    rows = run_bench(RES_1D if not args.quick else RES_1D[:1], RES_2D if not args.quick else RES_2D[:1])
    path = write_bench(rows, Path(args.out) / "bench.csv")
    worst = max_disagreement(rows)
    print(f"wrote {path}; max |llt - bruteforce| = {worst:.3e}")
    return EXIT_OK if worst <= ENGINE_TOL else EXIT_FAIL


def list_scenarios() -> int:
    for sc in load_catalog().values():
        print(f"{sc.id:30s} {sc.suite:9s} {sc.description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fitzlab", description=__doc__.splitlines()[0])
    p.add_argument("--list-scenarios", action="store_true", help="print the bundled catalog and exit")
    sub = p.add_subparsers(dest="command")
    r = sub.add_parser("run", help="run scenarios and write report.json, summary.csv and slices")
    r.add_argument("config", nargs="?", help="JSON config (seed, resolution, scenarios)")
    r.add_argument("--out", default="fitzlab-out", help="output directory")
    r.add_argument("--scenario", action="append", help="bundled scenario id (repeatable); replaces the config list")
    r.add_argument("--seed", type=int, help="override the config seed")
    r.add_argument("--no-figures", action="store_true", help="write CSV slices only, no PNG figures")
    r.add_argument("--list-scenarios", action="store_true", help="print the bundled catalog and exit")
    b = sub.add_parser("bench", help="compare the conjugation engines and write bench.csv")
    b.add_argument("--out", default="fitzlab-out")
    b.add_argument("--quick", action="store_true", help="smallest resolutions only")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_scenarios:
        return list_scenarios()
    if args.command == "run":
        return cmd_run(args)
    if args.command == "bench":
        return cmd_bench(args)
    build_parser().print_help()
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
