"""Command line front end.

Settings come from flags, then ``CYCLOTOME_*`` environment variables, then an
optional JSON config file (``--config``), then built-in defaults.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import cyclo
from .ball import PrecisionPolicy
from .bounds import plot_samples, samples_csv
from .cases import REGISTRY, run_case
from .cyclo import ConductorOverflow, ParseError, RootSum
from .galois import m_of
from .house import STRICTLY_BETWEEN, UNRESOLVED, classify
from .search import BudgetExceeded, CheckpointMismatch, SearchSpec, enumerate_spec

EXIT_OK = 0
EXIT_CLAIM = 1
EXIT_USAGE = 2
EXIT_UNRESOLVED = 3

ENV_PREFIX = "CYCLOTOME_"

DEFAULTS = {
    "precision_bits": None,
    "workers": os.cpu_count() or 1,
    "checkpoint": None,
    "format": "json",
    "output": None,
    "seed": 0,
    "max_conductor": cyclo.DEFAULT_MAX_CONDUCTOR,
}
CASTS = {"precision_bits": int, "workers": int, "seed": int, "max_conductor": int}


class UsageError(Exception):
    pass


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    s = argparse.SUPPRESS
    p.add_argument("--precision-bits", type=int, default=s, help="working precision for certified evaluation")
    p.add_argument("--workers", type=int, default=s, help="worker processes for searches")
    p.add_argument("--checkpoint", default=s, help="checkpoint file for resumable searches")
    p.add_argument("--format", choices=("json", "csv", "text"), default=s)
    p.add_argument("--output", default=s, help="write output here instead of stdout")
    p.add_argument("--seed", type=int, default=s, help="seed for sampled searches")
    p.add_argument("--max-conductor", type=int, default=s)
    p.add_argument("--config", default=s, help="JSON file with the same keys as the flags")
    p.add_argument("-v", "--verbose", action="store_true", default=s)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="cyclotome", description="Houses and M values of cyclotomic integers.")
    sub = parser.add_subparsers(dest="command", required=True)

    h = sub.add_parser("house", parents=[common], help="certified house and list classification")
    h.add_argument("input", help="cyclotomic integer as N:e^m,...")

    m = sub.add_parser("m", parents=[common], help="exact M value")
    m.add_argument("input")

    r = sub.add_parser("reproduce", parents=[common], help="run registered verification cases")
    r.add_argument("case", nargs="?", choices=sorted(REGISTRY))
    r.add_argument("--all", action="store_true")
    r.add_argument("--samples", type=int, default=None, help="sample count for the sampled part of q420-k-small")

    f = sub.add_parser("plot-f", parents=[common], help="CSV samples of the auxiliary function f")
    f.add_argument("--points", type=int, default=1000)
    f.add_argument("--lo", type=float, default=0.0)
    f.add_argument("--hi", type=float, default=5.04)
    f.add_argument("--exclusion", type=float, default=1e-3, help="skip x this close to a pole")

    e = sub.add_parser("enumerate", parents=[common], help="normalized search over sums of roots of unity")
    e.add_argument("--conductor", type=int, required=True)
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--mode", choices=("full", "sampled"), default="full")
    e.add_argument("--samples", type=int, default=0)
    e.add_argument("--rule", choices=("gcd", "divides"), default="gcd")
    e.add_argument("--ceiling", default="126/25")
    e.add_argument("--no-resume", action="store_true")
    return parser


def resolve_settings(ns: argparse.Namespace, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    settings = dict(DEFAULTS)
    config = getattr(ns, "config", None) or environ.get(ENV_PREFIX + "CONFIG")
    if config:
        try:
            with open(config) as fh:
                data = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {config}: {exc}") from exc
        for key, value in data.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"unknown config key {key!r}")
            settings[key] = value
    for key in DEFAULTS:
        raw = environ.get(ENV_PREFIX + key.upper())
        if raw is not None:
            try:
                settings[key] = CASTS.get(key, str)(raw)
            except ValueError as exc:
                raise UsageError(f"bad value for {ENV_PREFIX}{key.upper()}: {raw!r}") from exc
    for key in DEFAULTS:
        if hasattr(ns, key):
            settings[key] = getattr(ns, key)
    if settings["format"] not in ("json", "csv", "text"):
        raise UsageError(f"unknown format {settings['format']!r}")
    return settings


def _emit(text: str, settings: dict) -> None:
    if settings["output"]:
        with open(settings["output"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _policy(beta: RootSum, settings: dict) -> Optional[PrecisionPolicy]:
    bits = settings["precision_bits"]
    if bits is None:
        return None
    conductor = cyclo.conductor_of(beta)
    return PrecisionPolicy.for_conductor(conductor, bits)


def cmd_house(ns, settings) -> int:
    beta = RootSum.parse(ns.input)
    if beta.is_zero():
        raise UsageError("the house of zero is not defined")
    try:
        policy = _policy(beta, settings)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = classify(beta, policy)
    data = report.to_json()
    if settings["format"] == "json":
        _emit(json.dumps(data, indent=2) + "\n", settings)
    elif settings["format"] == "csv":
        _emit(_csv([list(data), ["" if v is None else v for v in data.values()]]), settings)
    else:
        _emit("".join(f"{k}: {v}\n" for k, v in data.items()), settings)
    if report.status == UNRESOLVED:
        return EXIT_UNRESOLVED
    if report.status == STRICTLY_BETWEEN:
        return EXIT_CLAIM
    return EXIT_OK


def _fraction_text(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def cmd_m(ns, settings) -> int:
    beta = RootSum.parse(ns.input)
    value = _fraction_text(m_of(beta))
    if settings["format"] == "json":
        _emit(json.dumps({"input": str(beta), "m": value}) + "\n", settings)
    elif settings["format"] == "csv":
        _emit(_csv([["input", "m"], [str(beta), value]]), settings)
    else:
        _emit(value + "\n", settings)
    return EXIT_OK


def cmd_reproduce(ns, settings) -> int:
    if ns.all == bool(ns.case):
        raise UsageError("give exactly one of a case id or --all")
    ids = sorted(REGISTRY) if ns.all else [ns.case]
    results = []
    for cid in ids:
        kwargs = {}
        if cid == "q420-k-small":
            kwargs = {"samples": ns.samples, "workers": settings["workers"]}
        result = run_case(cid, **kwargs)
        results.append(result)
        print(result.line(), file=sys.stderr)
    if settings["format"] == "json":
        _emit(json.dumps([r.to_json() for r in results], indent=2) + "\n", settings)
    elif settings["format"] == "csv":
        rows = [["case", "passed", "count", "expected_count", "min"]]
        rows += [[r.case_id, r.passed, r.count, r.expected_count, r.min_value] for r in results]
        _emit(_csv(rows), settings)
    else:
        _emit("".join(r.line() + "\n" for r in results), settings)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CLAIM


def cmd_plot_f(ns, settings) -> int:
    try:
        rows = plot_samples(ns.points, ns.lo, ns.hi, ns.exclusion)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(samples_csv(rows), settings)
    return EXIT_OK


def cmd_enumerate(ns, settings) -> int:
    try:
        spec = SearchSpec(
            ns.conductor,
            ns.k,
            ceiling=Fraction(ns.ceiling),
            mode=ns.mode,
            seed=settings["seed"],
            samples=ns.samples,
            rule=ns.rule,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = enumerate_spec(
        spec, workers=settings["workers"], checkpoint=settings["checkpoint"], resume=not ns.no_resume
    )
    if settings["format"] == "json":
        _emit(json.dumps(result.to_json(), indent=2) + "\n", settings)
    elif settings["format"] == "csv":
        rows = [["beta", "status", "list_value", "house_mid"]]
        for s in result.survivors:
            d = s.report.to_json()
            rows.append([str(s.beta), d["status"], d["list_value"] or "", d["house_mid"]])
        _emit(_csv(rows), settings)
    else:
        _emit("".join(f"{k}: {v}\n" for k, v in result.counts().items()), settings)
    counts = result.status_counts()
    if counts.get(STRICTLY_BETWEEN):
        return EXIT_CLAIM
    if counts.get(UNRESOLVED):
        return EXIT_UNRESOLVED
    return EXIT_OK


COMMANDS = {
    "house": cmd_house,
    "m": cmd_m,
    "reproduce": cmd_reproduce,
    "plot-f": cmd_plot_f,
    "enumerate": cmd_enumerate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING)
    try:
        settings = resolve_settings(ns)
        cyclo.set_max_conductor(settings["max_conductor"])
        return COMMANDS[ns.command](ns, settings)
    except (UsageError, ParseError, ConductorOverflow, CheckpointMismatch, BudgetExceeded) as exc:
        print(f"cyclotome: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        cyclo.set_max_conductor(cyclo.DEFAULT_MAX_CONDUCTOR)


if __name__ == "__main__":
    sys.exit(main())
