"""Command-line front end.

One job document (JSON) or equivalent flags in; one JSON result document
on stdout, a short human summary on stderr. Exit codes: 0 for any clean
verdict, 2 for input errors, 3 for internal budget errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any

from . import __version__
from .arith import FactorizationBudgetExceeded, TableTooLarge
from .detector import (
    CM_CAVEAT,
    DetectorConfig,
    InvalidInput,
    WitnessQuery,
    detect_ec,
    detect_mul,
    find_witness_primes,
    local_detail_json,
    local_report,
)
from .ec_finite import AmbiguousOrder, InternalInconsistency, StructureNotFound
from .ec_rational import CurveQ, torsion_subgroup

MODES = ("ec-detect", "mul-detect", "witness", "local-report", "torsion")
CONFIG_FIELDS = ("prime_bound", "stability_window", "coeff_bound", "saturation_bound", "seed", "worker_count")
EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 2, 3


class ParseError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class JobSpec:
    mode: str
    curve: tuple[int, int] | None = None
    target: Any = None  # point (x, y), rational, or None for infinity
    gens: tuple = ()
    prime: int | None = None
    query: dict | None = None  # witness: I, J, l, M
    config: dict = field(default_factory=dict)


# --- parsing -----------------------------------------------------------------


def parse_rational(value, path: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ParseError(path, f"expected an integer or 'p/q' string, got {value!r}")
    try:
        return Fraction(value.strip() if isinstance(value, str) else value)
    except ZeroDivisionError:
        raise ParseError(path, f"zero denominator in {value!r}")
    except ValueError:
        raise ParseError(path, f"not a rational number: {value!r}")


def parse_int(value, path: str) -> int:
    q = parse_rational(value, path)
    if q.denominator != 1:
        raise ParseError(path, f"expected an integer, got {value!r}")
    return int(q)


def parse_curve(value, path: str = "curve") -> tuple[int, int]:
    if isinstance(value, dict):
        a, b = value.get("a", 0), value.get("b")
        if b is None:
            raise ParseError(path + ".b", "missing")
        return parse_int(a, path + ".a"), parse_int(b, path + ".b")
    if isinstance(value, str):
        parts = [s for s in value.replace(" ", "").split(",") if s]
        value = parts if len(parts) == 2 else parts[0] if parts else ""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ParseError(path, "expected [a, b]")
        return parse_int(value[0], path + "[0]"), parse_int(value[1], path + "[1]")
    # bare b is shorthand for y^2 = x^3 + b
    return 0, parse_int(value, path)


def parse_point(value, path: str):
    if value is None or value == "inf" or value == "infinity":
        return None
    if isinstance(value, str):
        value = value.split(",")
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ParseError(path, f"expected a point [x, y] or 'inf', got {value!r}")
    return parse_rational(value[0], path + "[0]"), parse_rational(value[1], path + "[1]")


def _need(doc: dict, key: str):
    if key not in doc:
        raise ParseError(key, "missing")
    return doc[key]


def parse_job(doc: dict) -> JobSpec:
    """Validate a job document; point membership is checked exactly here."""
    if not isinstance(doc, dict):
        raise ParseError("", "job document must be an object")
    mode = _need(doc, "mode")
    if mode not in MODES:
        raise ParseError("mode", f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    config = {}
    for key, val in (doc.get("config") or {}).items():
        if key == "max_skipped_fraction":
            config[key] = float(val)
        elif key in CONFIG_FIELDS:
            config[key] = parse_int(val, f"config.{key}")
        else:
            raise ParseError(f"config.{key}", "unknown setting")
    if mode == "mul-detect":
        target = parse_rational(_need(doc, "target"), "target")
        gens = tuple(parse_rational(g, f"gens[{i}]") for i, g in enumerate(doc.get("gens", [])))
        return JobSpec(mode, target=target, gens=gens, config=config)
    curve_ab = parse_curve(_need(doc, "curve"))
    try:
        curve = CurveQ(*curve_ab)
    except ValueError as exc:
        raise ParseError("curve", str(exc))
    if mode == "torsion":
        return JobSpec(mode, curve=curve_ab, config=config)
    key = "gens" if mode == "ec-detect" else "points"
    pts = tuple(parse_point(P, f"{key}[{i}]") for i, P in enumerate(doc.get(key, [])))
    target = parse_point(doc.get("target"), "target") if mode == "ec-detect" else None
    named = ([("target", target)] if mode == "ec-detect" else []) + [(f"{key}[{i}]", P) for i, P in enumerate(pts)]
    for name, P in named:
        if not curve.contains(P):
            raise ParseError(name, f"point ({P[0]}, {P[1]}) is not on {curve}")
    if mode == "ec-detect":
        return JobSpec(mode, curve=curve_ab, target=target, gens=pts, config=config)
    if mode == "local-report":
        return JobSpec(mode, curve=curve_ab, gens=pts, prime=parse_int(_need(doc, "prime"), "prime"), config=config)
    q = _need(doc, "query")
    query = {
        "I": sorted(parse_int(i, f"query.I[{k}]") for k, i in enumerate(q.get("I", []))),
        "J": sorted(parse_int(j, f"query.J[{k}]") for k, j in enumerate(q.get("J", []))),
        "l": parse_int(_need(q, "l"), "query.l"),
        "M": parse_int(_need(q, "M"), "query.M"),
    }
    return JobSpec(mode, curve=curve_ab, gens=pts, query=query, config=config)


def _q(v: Fraction) -> str:
    return str(v)


def _point_json(P):
    return "inf" if P is None else [_q(P[0]), _q(P[1])]


def emit_job(job: JobSpec) -> dict:
    """Inverse of parse_job."""
    doc: dict = {"mode": job.mode}
    if job.config:
        doc["config"] = dict(job.config)
    if job.mode == "mul-detect":
        doc["target"] = _q(job.target)
        doc["gens"] = [_q(g) for g in job.gens]
        return doc
    doc["curve"] = list(job.curve)
    if job.mode == "ec-detect":
        doc["target"] = _point_json(job.target)
        doc["gens"] = [_point_json(P) for P in job.gens]
    elif job.mode in ("witness", "local-report"):
        doc["points"] = [_point_json(P) for P in job.gens]
    if job.prime is not None:
        doc["prime"] = job.prime
    if job.query is not None:
        doc["query"] = dict(job.query)
    return doc


# --- running -----------------------------------------------------------------


def _config(job: JobSpec) -> DetectorConfig:
    return DetectorConfig(**job.config)


def _echo_config(cfg: DetectorConfig) -> dict:
    # worker_count is left out so output does not depend on parallelism
    return {
        "prime_bound": cfg.prime_bound,
        "stability_window": cfg.stability_window,
        "coeff_bound": cfg.coeff_bound,
        "saturation_bound": cfg.saturation_bound,
        "max_skipped_fraction": cfg.max_skipped_fraction,
        "seed": cfg.seed,
    }


def _detect_doc(job: JobSpec, verdict, report, cfg: DetectorConfig) -> dict:
    return {
        "mode": job.mode,
        "version": __version__,
        "job": emit_job(replace(job, config={k: v for k, v in job.config.items() if k != "worker_count"})),
        "verdict": verdict.kind,
        "coefficients": list(verdict.coeffs) if hasattr(verdict, "coeffs") else None,
        "witness_prime": getattr(verdict, "witness_prime", None),
        "certificate": getattr(verdict, "certificate", None),
        "local_detail": local_detail_json(getattr(verdict, "local_detail", None)),
        "saturation_multiplier": getattr(verdict, "a", None),
        "reason": getattr(verdict, "reason", None),
        "primes_processed": report.primes_processed,
        "primes_skipped": report.primes_skipped,
        "stability_trace": report.stability_trace,
        "warnings": report.warnings,
        "alarms": report.alarms,
        "caveats": report.caveats,
        "seed": cfg.seed,
        "config": _echo_config(cfg),
        "timing": None,
    }


def run(job: JobSpec) -> tuple[int, dict]:
    """Execute a validated job; returns (exit code, result document)."""
    cfg = _config(job)
    curve = CurveQ(*job.curve) if job.curve else None
    try:
        if job.mode == "ec-detect":
            verdict, report = detect_ec(curve, job.target, list(job.gens), cfg)
            return EXIT_OK, _detect_doc(job, verdict, report, cfg)
        if job.mode == "mul-detect":
            verdict, report = detect_mul(job.target, list(job.gens), cfg)
            return EXIT_OK, _detect_doc(job, verdict, report, cfg)
        if job.mode == "torsion":
            T = torsion_subgroup(curve)
            return EXIT_OK, {
                "mode": job.mode,
                "version": __version__,
                "job": emit_job(job),
                "order": T.order,
                "points": [_point_json(P) for P in T.points],
                "timing": None,
            }
        if job.mode == "local-report":
            return EXIT_OK, {
                "mode": job.mode,
                "version": __version__,
                "job": emit_job(job),
                "report": local_report(curve, list(job.gens), job.prime, cfg.seed),
                "timing": None,
            }
        q = WitnessQuery(job.query["I"], job.query["J"], job.query["l"], job.query["M"], cfg.prime_bound)
        res = find_witness_primes(curve, list(job.gens), q, workers=cfg.worker_count)
        return EXIT_OK, {
            "mode": job.mode,
            "version": __version__,
            "job": emit_job(replace(job, config={k: v for k, v in job.config.items() if k != "worker_count"})),
            "matches": [{"prime": p, "orders": orders} for p, orders in res.matches],
            "scanned": res.scanned,
            "matched": res.matched,
            "density": round(res.density, 12),
            "caveats": [CM_CAVEAT],
            "timing": None,
        }
    except InvalidInput as exc:
        return EXIT_INPUT, _error_doc(job.mode, "input", str(exc))
    except (FactorizationBudgetExceeded, TableTooLarge, AmbiguousOrder, StructureNotFound, InternalInconsistency) as exc:
        return EXIT_INTERNAL, _error_doc(job.mode, "internal", f"{type(exc).__name__}: {exc}")


def _error_doc(mode, kind, message, path=None) -> dict:
    return {"mode": mode, "version": __version__, "error": {"kind": kind, "message": message, "path": path}}


def summarize(doc: dict) -> str:
    if "error" in doc:
        return f"error ({doc['error']['kind']}): {doc['error']['message']}"
    mode = doc["mode"]
    if mode in ("ec-detect", "mul-detect"):
        v = doc["verdict"]
        if v == "dependent":
            line = f"dependent: coefficients {doc['coefficients']}"
        elif v == "independent":
            w = doc["witness_prime"]
            line = f"independent: witness prime {w}" if w else "independent: target is a nontrivial torsion element"
        elif v == "saturation_needed":
            line = f"SATURATION ALARM: {doc['saturation_multiplier']}*P = {doc['coefficients']}"
        else:
            line = f"inconclusive ({doc['reason']})"
        return f"{line}  [{doc['primes_processed']} primes used, {len(doc['primes_skipped'])} skipped]"
    if mode == "witness":
        return f"{doc['matched']} of {doc['scanned']} good primes match (density {doc['density']:.4f})"
    if mode == "torsion":
        return f"torsion subgroup of order {doc['order']}"
    rep = doc["report"]
    if rep["status"] != "ok":
        return f"prime {rep['prime']}: {rep['status']}"
    return f"prime {rep['prime']}: #E = {rep['order']}, structure Z/{rep['structure'][0]} x Z/{rep['structure'][1]}"


# --- argument handling -------------------------------------------------------


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--job", help="JSON job document (flags below override its config)")
    sp.add_argument("--prime-bound", type=int)
    sp.add_argument("--stability-window", type=int)
    sp.add_argument("--coeff-bound", type=int)
    sp.add_argument("--saturation-bound", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int, dest="worker_count")
    sp.add_argument("--json-only", action="store_true", help="suppress the summary on stderr")
    sp.add_argument("--timing", action="store_true", help="record wall time (output is then not reproducible)")
    sp.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lindep",
        description="Detect linear dependence of points on y^2 = x^3 + ax + b over Q, or of "
        "nonzero rationals, using reductions modulo primes. " + CM_CAVEAT,
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="mode", required=True)

    sp = sub.add_parser("run", help="run a job document; the mode comes from the document")
    sp.add_argument("file", help="job document, '-' for stdin")
    _add_common(sp)

    sp = sub.add_parser("ec-detect", help="is TARGET in the subgroup generated by the --gen points?")
    sp.add_argument("--curve", help="'b' or 'a,b' for y^2 = x^3 + ax + b")
    sp.add_argument("--target", help="'x,y' with rational coordinates, or 'inf'")
    sp.add_argument("--gen", action="append", default=None, help="generator 'x,y' (repeatable)")
    _add_common(sp)

    sp = sub.add_parser("mul-detect", help="is TARGET a product of powers of the --gen rationals?")
    sp.add_argument("--target")
    sp.add_argument("--gen", action="append", default=None)
    _add_common(sp)

    sp = sub.add_parser("witness", help="search primes with prescribed l-parts of point orders")
    sp.add_argument("--curve")
    sp.add_argument("--point", action="append", default=None)
    sp.add_argument("-I", dest="I", default=None, help="comma-separated 1-based indices")
    sp.add_argument("-J", dest="J", default=None, help="comma-separated 1-based indices")
    sp.add_argument("-l", dest="l", type=int)
    sp.add_argument("-M", dest="M", type=int)
    _add_common(sp)

    sp = sub.add_parser("local-report", help="group structure and coordinates at one prime")
    sp.add_argument("--curve")
    sp.add_argument("--point", action="append", default=None)
    sp.add_argument("--prime", type=int)
    _add_common(sp)

    sp = sub.add_parser("torsion", help="rational torsion subgroup")
    sp.add_argument("--curve")
    _add_common(sp)
    return ap


def _indices(s: str | None) -> list[str]:
    return [t for t in (s or "").split(",") if t.strip()]


def job_from_args(args: argparse.Namespace) -> JobSpec:
    if args.mode == "run" or args.job:
        path = args.file if args.mode == "run" else args.job
        try:
            text = sys.stdin.read() if path == "-" else open(path).read()
            doc = json.loads(text)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError("", f"cannot read job document: {exc}")
        if args.mode != "run" and isinstance(doc, dict):
            doc.setdefault("mode", args.mode)
            if doc["mode"] != args.mode:
                raise ParseError("mode", f"document mode {doc['mode']!r} does not match subcommand {args.mode!r}")
    else:
        doc = {"mode": args.mode}
        if getattr(args, "curve", None) is not None:
            doc["curve"] = args.curve
        if args.mode == "ec-detect":
            doc["target"] = args.target if args.target is not None else "inf"
            doc["gens"] = args.gen or []
        elif args.mode == "mul-detect":
            if args.target is None:
                raise ParseError("target", "missing")
            doc["target"] = args.target
            doc["gens"] = args.gen or []
        elif args.mode in ("witness", "local-report"):
            doc["points"] = args.point or []
        if args.mode == "local-report" and args.prime is not None:
            doc["prime"] = args.prime
        if args.mode == "witness":
            doc["query"] = {"I": _indices(args.I), "J": _indices(args.J), "l": args.l, "M": args.M}
            for k in ("l", "M"):
                if doc["query"][k] is None:
                    del doc["query"][k]
    job = parse_job(doc)
    overrides = {k: getattr(args, k) for k in CONFIG_FIELDS if getattr(args, k, None) is not None}
    return replace(job, config={**job.config, **overrides})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    start = time.perf_counter()
    try:
        job = job_from_args(args)
        _config(job)
    except ParseError as exc:
        code, doc = EXIT_INPUT, _error_doc(args.mode, "parse", str(exc), exc.path)
    except ValueError as exc:
        code, doc = EXIT_INPUT, _error_doc(args.mode, "input", str(exc))
    else:
        code, doc = run(job)
    if args.timing and "error" not in doc:
        doc["timing"] = {"seconds": round(time.perf_counter() - start, 3)}
    sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    if not args.json_only:
        print(summarize(doc), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
