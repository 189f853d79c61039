"""Command-line front end.

Four commands: `estimate` runs the requested estimators on a dataset file
and prints an all-pairs contrast table; `simulate` runs a named synthetic
scenario; `plasmode` resamples a source dataset with regenerated
treatment/outcome; `diagnose` summarizes fitted treatment probabilities
as a numeric overlap check.

Every flag can also be supplied through an environment variable with the
MLTE_ prefix (explicit flags win).  Output files embed the tool version,
the resolved configuration, and the seed; they never embed timing or
worker count, so a run is byte-reproducible from (seed, config) alone.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from ._version import __version__
from .learners import fit_propensity
from .reporting import render_contrasts, render_report, render_table, all_pairs_table
from .simengine import (
    METHODS,
    PlasmodeConfig,
    SCENARIO_NAMES,
    ScenarioConfig,
    _apply_methods,
    make_plasmode_generators,
    run_plasmode,
    run_scenario,
)
from .tabular import ContrastSet, load_csv, load_json

__all__ = ["RunConfig", "main", "cmd_estimate", "cmd_simulate", "cmd_plasmode", "cmd_diagnose"]


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved invocation: defaults, environment, and flags merged."""

    command: str
    data: str = None
    treatment: str = None
    outcome: str = None
    covariates: tuple = None
    methods: tuple = METHODS
    regime: str = "mainterms"
    scenario: str = None
    n: int = None
    reps: int = None
    m: int = 1
    bootstrap: int = 200
    seed: int = 1
    workers: int = 1
    out: str = None
    format: str = "text"

    def provenance(self) -> dict:
        """The configuration worth embedding in output files: everything
        that determines the result, nothing that doesn't (worker count,
        output destination)."""
        keep = _PROVENANCE_KEYS[self.command]
        return {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in ((k, getattr(self, k)) for k in keep)
            if v is not None
        }


_PROVENANCE_KEYS = {
    "estimate": (
        "command", "data", "treatment", "outcome", "covariates", "methods",
        "regime", "m", "bootstrap", "seed",
    ),
    "simulate": ("command", "scenario", "methods", "regime", "n", "reps", "m", "bootstrap", "seed"),
    "plasmode": (
        "command", "data", "treatment", "outcome", "covariates", "methods",
        "regime", "n", "reps", "m", "bootstrap", "seed",
    ),
    "diagnose": ("command", "data", "treatment", "outcome", "covariates", "regime", "seed"),
}


_COMMA_OPTS = {"covariates", "methods"}
_INT_OPTS = {"n", "reps", "m", "bootstrap", "seed", "workers"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlte",
        description="Pairwise treatment-effect estimation for multi-level treatments.",
    )
    parser.add_argument("--version", action="version", version=f"mlte {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(p, *names):
        for name in names:
            if name == "data":
                p.add_argument("--data", help="input dataset (.csv or .json)")
            elif name == "treatment":
                p.add_argument("--treatment", help="treatment column name (csv input)")
            elif name == "outcome":
                p.add_argument("--outcome", help="outcome column name (csv input)")
            elif name == "covariates":
                p.add_argument("--covariates", help="comma-separated covariate columns (csv input)")
            elif name == "methods":
                p.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")
            elif name == "regime":
                p.add_argument("--regime", choices=("correct", "mainterms", "ml"))
            elif name == "scenario":
                p.add_argument("--scenario", choices=SCENARIO_NAMES)
            elif name == "n":
                p.add_argument("--n", type=int, help="sample size (simulate) / resample size (plasmode)")
            elif name == "reps":
                p.add_argument("--reps", type=int, help="number of replications")
            elif name == "m":
                p.add_argument("--m", type=int, help="matches per unit")
            elif name == "bootstrap":
                p.add_argument("--bootstrap", type=int, help="bootstrap resamples for stan (default 200)")
            elif name == "seed":
                p.add_argument("--seed", type=int)
            elif name == "workers":
                p.add_argument("--workers", type=int, help="parallel workers (0 = one per core)")
            elif name == "out":
                p.add_argument("--out", help="output file (default: stdout)")
            elif name == "format":
                p.add_argument("--format", choices=("csv", "json", "text"))

    est = sub.add_parser("estimate", help="estimate all pairwise contrasts on a dataset")
    add(est, "data", "treatment", "outcome", "covariates", "methods", "regime", "m",
        "bootstrap", "seed", "workers", "out", "format")
    sim = sub.add_parser("simulate", help="run a synthetic replication study")
    add(sim, "scenario", "methods", "regime", "n", "reps", "m", "bootstrap", "seed",
        "workers", "out", "format")
    pla = sub.add_parser("plasmode", help="run a plasmode replication study from a source dataset")
    add(pla, "data", "treatment", "outcome", "covariates", "methods", "regime", "n",
        "reps", "m", "bootstrap", "seed", "workers", "out", "format")
    dia = sub.add_parser("diagnose", help="summarize fitted treatment-probability overlap")
    add(dia, "data", "treatment", "outcome", "covariates", "regime", "out", "format")
    return parser


def _resolve(args: argparse.Namespace) -> RunConfig:
    values = {"command": args.command}
    for name in (
        "data", "treatment", "outcome", "covariates", "methods", "regime", "scenario",
        "n", "reps", "m", "bootstrap", "seed", "workers", "out", "format",
    ):
        if not hasattr(args, name):
            continue
        value = getattr(args, name)
        if value is None:
            env = os.environ.get("MLTE_" + name.upper())
            if env is not None and env != "":
                value = int(env) if name in _INT_OPTS else env
        if value is None:
            continue
        if name in _COMMA_OPTS and isinstance(value, str):
            value = tuple(part.strip() for part in value.split(",") if part.strip())
        values[name] = value
    if args.command == "simulate":
        values.setdefault("n", 1000)
        values.setdefault("reps", 500)
    elif args.command == "plasmode":
        values.setdefault("n", 2000)
        values.setdefault("reps", 100)
    cfg = RunConfig(**values)
    if cfg.methods is not None:
        unknown = [m for m in cfg.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; expected subset of {METHODS}")
    return cfg


def _load_dataset(cfg: RunConfig):
    if cfg.data is None:
        raise ValueError(f"{cfg.command} requires --data")
    if cfg.data.endswith(".json"):
        return load_json(cfg.data)
    if cfg.treatment is None or cfg.outcome is None or not cfg.covariates:
        raise ValueError("csv input requires --treatment, --outcome and --covariates")
    return load_csv(cfg.data, cfg.treatment, cfg.outcome, list(cfg.covariates))


def _provenance_header(cfg: RunConfig) -> str:
    compact = json.dumps(cfg.provenance(), sort_keys=True, separators=(",", ":"))
    return f"# mlte {__version__}\n# config {compact}\n# seed {cfg.seed}\n"


def _emit(content: str, cfg: RunConfig, stdout_summary: str = None) -> None:
    if cfg.out is None or cfg.out == "-":
        sys.stdout.write(content)
        return
    with open(cfg.out, "w") as fh:
        fh.write(content)
    if stdout_summary:
        sys.stdout.write(stdout_summary)


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def cmd_estimate(cfg: RunConfig) -> int:
    data = _load_dataset(cfg)
    if cfg.regime == "correct":
        raise ValueError("the 'correct' regime only exists inside the simulation engine")
    methods = [m for m in METHODS if m in (cfg.methods or METHODS)]
    pairs = [tuple(p) for p in ContrastSet.all_pairs(data.k).pairs]
    results, failures = _apply_methods(
        data,
        cfg.regime,
        methods,
        pairs,
        truth_out=None,
        truth_prop=None,
        learner_seed=np.random.SeedSequence(cfg.seed, spawn_key=(1, 0)),
        bootstrap_seed=(cfg.seed, 2, 0),
        bootstrap_reps=cfg.bootstrap,
        m=cfg.m,
        metric="euclidean-standardized",
    )
    labels = {code + 1: lab for code, lab in enumerate(data.treatment_labels)}
    tables = []
    for meth in methods:
        ests = [results[(meth, p)] for p in pairs if (meth, p) in results]
        if len(ests) == len(pairs):
            tables.append(all_pairs_table(ests, labels=labels))
    estimands = {t.estimand for t in tables}
    if len(estimands) > 1:
        _warn(
            "results mix estimands: ow/aow target the overlap population, "
            "the other methods the full population; compare within one estimand"
        )
    for meth, message in failures.items():
        _warn(f"method {meth} failed: {message}")
    if cfg.format == "json":
        payload = {
            "version": __version__,
            "config": cfg.provenance(),
            "seed": cfg.seed,
            "failures": failures,
            "tables": [
                {
                    "method": t.method,
                    "estimand": t.estimand,
                    "adjustment": t.adjustment,
                    "rows": [dict(r) for r in t.rows],
                }
                for t in tables
            ],
        }
        content = json.dumps(payload, indent=2, default=list) + "\n"
    elif cfg.format == "csv":
        rows = []
        for t in tables:
            for r in t.rows:
                row = dict(r)
                row["method"] = t.method
                row["estimand"] = t.estimand
                rows.append(row)
        body = render_table(
            rows,
            ("method", "estimand", "label", "estimate", "se", "ci_low", "ci_high", "p", "p_adj"),
            fmt="csv",
        )
        content = _provenance_header(cfg) + body
    else:
        sections = [render_contrasts(t, fmt="text") for t in tables]
        content = _provenance_header(cfg) + "\n".join(sections)
    _emit(content, cfg)
    return 0


def _finish_report(report, cfg: RunConfig) -> int:
    content = render_report(report, fmt=cfg.format)
    if cfg.format in ("csv", "text"):
        content = _provenance_header(cfg) + content
    summary = render_report(report, fmt="text") if cfg.out else None
    _emit(content, cfg, stdout_summary=summary)
    for meth, info in report.method_failures.items():
        _warn(f"method {meth} failed in {info['count']} replication(s): {info['example']}")
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.scenario is None:
        raise ValueError("simulate requires --scenario")
    scen = ScenarioConfig.named(
        cfg.scenario,
        n=cfg.n,
        reps=cfg.reps,
        seed=cfg.seed,
        regime=cfg.regime,
        bootstrap_reps=cfg.bootstrap,
        m=cfg.m,
    )
    report = run_scenario(scen, methods=list(cfg.methods), workers=cfg.workers)
    return _finish_report(report, cfg)


def cmd_plasmode(cfg: RunConfig) -> int:
    source = _load_dataset(cfg)
    gen_out, gen_trt = make_plasmode_generators(source, seed=cfg.seed)
    pcfg = PlasmodeConfig(
        source=source,
        generator_outcome=gen_out,
        generator_treatment=gen_trt,
        resample_size=cfg.n,
        reps=cfg.reps,
        seed=cfg.seed,
        regime=cfg.regime,
        bootstrap_reps=cfg.bootstrap,
        m=cfg.m,
    )
    report = run_plasmode(pcfg, methods=list(cfg.methods), workers=cfg.workers)
    return _finish_report(report, cfg)


_DIAGNOSE_COLUMNS = (
    "level", "label", "min", "q25", "median", "q75", "max",
    "below_1pct", "below_5pct", "arm_min", "arm_max",
)


def cmd_diagnose(cfg: RunConfig) -> int:
    data = _load_dataset(cfg)
    if cfg.regime == "correct":
        raise ValueError("the 'correct' regime only exists inside the simulation engine")
    prop = fit_propensity(data, cfg.regime)
    rows = []
    for lev in range(1, data.k + 1):
        col = prop.probs[:, lev - 1]
        arm = col[data.t == lev]
        qs = np.quantile(col, (0.0, 0.25, 0.5, 0.75, 1.0))
        rows.append(
            {
                "level": lev,
                "label": data.label_of(lev),
                "min": float(qs[0]),
                "q25": float(qs[1]),
                "median": float(qs[2]),
                "q75": float(qs[3]),
                "max": float(qs[4]),
                "below_1pct": int((col < 0.01).sum()),
                "below_5pct": int((col < 0.05).sum()),
                "arm_min": float(arm.min()),
                "arm_max": float(arm.max()),
            }
        )
    if cfg.format == "json":
        payload = {
            "version": __version__,
            "config": cfg.provenance(),
            "seed": cfg.seed,
            "model": prop.description,
            "rows": rows,
        }
        content = json.dumps(payload, indent=2) + "\n"
    else:
        body = render_table(rows, _DIAGNOSE_COLUMNS, fmt=cfg.format)
        content = _provenance_header(cfg) + body
    _emit(content, cfg)
    return 0


_DISPATCH = {
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "plasmode": cmd_plasmode,
    "diagnose": cmd_diagnose,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        return _DISPATCH[cfg.command](cfg)
    except (ValueError, RuntimeError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
