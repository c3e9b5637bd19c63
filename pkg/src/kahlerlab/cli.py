"""Command-line front end.

Subcommands drive the library modules and print plot-ready CSV or JSON.  No
numerical work happens here — only argument validation, dispatch, caching,
and formatting.

Output layout
-------------
Each command produces one text payload (CSV for sweeps and k-scans, JSON for
verdict-style results).  With ``--out PATH`` the payload is written to PATH
and a JSON run record (input hash, version, timestamps, seed, pass flag) is
written next to it as ``PATH.record.json``; without ``--out`` the payload
goes to stdout and the record to stderr.  Payload bytes are deterministic
for a fixed config; records carry timestamps and are not.

Exit codes: 0 success, 1 invariant/computation failure, 2 invalid config.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .cache import ResultCache, config_hash
from .errors import KahlerLabError, OutOfDomain
from .tolerances import TOL
from .calabi import RuledSurfaceData
from .ckem import (
    SWEEP_CSV_HEADER,
    b_kappa,
    classify,
    interior_min,
    kappa_zero,
    solve_P,
    sweep,
    write_sweep_csv,
)
from .mabuchi import (
    BumpDirection,
    fit_probe_slope,
    probe_summary,
    scale_bump_for_slope,
    unboundedness_probe,
    write_probe_csv,
)
from .quantization import (
    ToyModel,
    balanced_iterate,
    balanced_residual,
    c_top_exact,
    expansion_check,
    fs,
    round_potential,
    sup_grid,
    weighted_scalar_toy,
)
from .verify import all_passed, run_checks, write_check_csv

__all__ = ["main", "RunConfig", "RunRecord"]

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


class ConfigError(Exception):
    """Invalid command-line configuration (exit code 2)."""


# -- config / record ---------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Validated parameter record for one CLI run."""

    command: str
    params: dict[str, Any]

    def __post_init__(self) -> None:
        p = self.params
        for key in ("kappa",):
            if key in p and p[key] is not None and not p[key] > 1.0:
                raise ConfigError(f"{key} must be > 1 (got {p[key]!r})")
        if "kappas" in p:
            if not p["kappas"]:
                raise ConfigError("empty kappa range")
            if min(p["kappas"]) <= 1.0:
                raise ConfigError("all kappa values must be > 1")
        if "p" in p and not math.isfinite(p["p"]):
            raise ConfigError("p must be finite")
        if "b0" in p and not (p["b0"] == math.inf or p["b0"] >= 0.0):
            raise ConfigError("b0 must be >= 0 or inf")
        if "k_list" in p:
            if not p["k_list"] or min(p["k_list"]) < 1:
                raise ConfigError("k values must be >= 1")
        if "genus" in p and p["genus"] < 2:
            raise ConfigError("genus must be >= 2")
        if "degree" in p and p["degree"] < 1:
            raise ConfigError("degree must be >= 1")
        if "tol" in p and p["tol"] is not None and not p["tol"] > 0.0:
            raise ConfigError("tol must be positive")

    def hash(self) -> str:
        return config_hash({"command": self.command, "params": self.params, "version": __version__})


@dataclass(frozen=True)
class RunRecord:
    input_hash: str
    version: str
    created_utc: str
    command: str
    params: dict[str, Any]
    seed: int
    cache_hit: bool
    passed: bool | None
    out_path: str | None

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True, default=str)


def _record(cfg: RunConfig, hit: bool, passed: bool | None, out: str | None) -> RunRecord:
    return RunRecord(
        input_hash=cfg.hash(),
        version=__version__,
        created_utc=_dt.datetime.now(_dt.timezone.utc).isoformat(),
        command=cfg.command,
        params=cfg.params,
        seed=int(cfg.params.get("seed", 0)),
        cache_hit=hit,
        passed=passed,
        out_path=out,
    )


def _emit(payload: str, rec: RunRecord, out: str | None) -> None:
    if out is None:
        sys.stdout.write(payload)
        sys.stderr.write(rec.to_json() + "\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(payload)
        with open(out + ".record.json", "w", encoding="utf-8") as fh:
            fh.write(rec.to_json() + "\n")


# -- range parsing -----------------------------------------------------------


def _parse_kappa_range(text: str) -> list[float]:
    """'a:b:n' -> n equispaced values; 'x,y,z' -> explicit list."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            vals = np.linspace(float(a), float(b), int(n))
            return [float(v) for v in vals]
        return [float(tok) for tok in text.split(",") if tok]
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad kappa range {text!r}: {exc}") from exc


def _parse_k_range(text: str) -> list[int]:
    """'lo:hi' -> doublings lo, 2lo, ... <= hi; 'a,b,c' -> explicit list."""
    try:
        if ":" in text:
            lo, hi = (int(tok) for tok in text.split(":"))
            out = []
            k = lo
            while k <= hi:
                out.append(k)
                k *= 2
            return out
        return [int(tok) for tok in text.split(",") if tok]
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad k range {text!r}: {exc}") from exc


def _parse_b0(text: str) -> float:
    if text.lower() in ("inf", "infinity", "none"):
        return math.inf
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad b0 {text!r}") from exc


# -- commands ----------------------------------------------------------------


def cmd_pkappa(args: argparse.Namespace) -> int:
    if args.kappa_range:
        kappas = _parse_kappa_range(args.kappa_range)
    elif args.kappa is not None:
        kappas = [args.kappa]
    else:
        raise ConfigError("pkappa needs --kappa or --kappa-range")
    cfg = RunConfig(
        "pkappa",
        {"kappas": kappas, "genus": args.genus, "degree": args.degree, "seed": args.seed},
    )
    X = RuledSurfaceData.standard(kappas[0], genus=args.genus, degree=args.degree)
    cache = ResultCache(enabled=not args.no_cache)

    def produce() -> str:
        buf = io.StringIO()
        good: list = []
        errors: list[tuple[float, str]] = []
        for kap in kappas:
            try:
                good.extend(sweep([kap], X))
            except KahlerLabError as exc:
                errors.append((kap, type(exc).__name__))
        write_sweep_csv(good, buf)
        for kap, name in errors:
            buf.write(f"{kap!r},nan,nan,nan,nan,nan,Error:{name}\n")
        return buf.getvalue()

    payload, hit = cache.get_or_make(cfg.hash(), produce, suffix=".csv")
    _emit(payload, _record(cfg, hit, True, args.out), args.out)
    return EXIT_OK


def cmd_kappa0(args: argparse.Namespace) -> int:
    tol = args.tol if args.tol is not None else TOL.kappa_zero_tol
    cfg = RunConfig(
        "kappa0",
        {"genus": args.genus, "degree": args.degree, "tol": tol, "seed": args.seed},
    )
    X = RuledSurfaceData.standard(1.5, genus=args.genus, degree=args.degree)
    cache = ResultCache(enabled=not args.no_cache)

    def produce() -> str:
        k0 = kappa_zero(X, tol=tol)
        m, zm = interior_min(solve_P(k0, b_kappa(k0), X).P)
        rec = {
            "kappa0": k0,
            "min_P": m,
            "argmin_z": zm,
            "label_below": str(classify(1.0 + 0.5 * (k0 - 1.0), X)),
            "label_above": str(classify(k0 + 0.5, X)),
        }
        return json.dumps(rec, sort_keys=True) + "\n"

    payload, hit = cache.get_or_make(cfg.hash(), produce, suffix=".json")
    _emit(payload, _record(cfg, hit, True, args.out), args.out)
    return EXIT_OK


def cmd_mabuchi_probe(args: argparse.Namespace) -> int:
    kappa = args.kappa
    if kappa is None:
        kappa = 0.5 * (1.0 + kappa_zero())
    ks = _parse_k_range(args.k_range) if args.k_range else list(range(0, 65))
    cfg = RunConfig(
        "mabuchi-probe",
        {
            "kappa": kappa,
            "genus": args.genus,
            "degree": args.degree,
            "k_list": [max(k, 1) for k in ks],
            "seed": args.seed,
        },
    )
    X = RuledSurfaceData.standard(kappa, genus=args.genus, degree=args.degree)
    cache = ResultCache(enabled=not args.no_cache)

    def produce() -> str:
        sol = solve_P(kappa, b_kappa(kappa), X)
        label = str(classify(kappa, X))
        _, zm = interior_min(sol.P)
        bump = scale_bump_for_slope(sol, BumpDirection(zm, 0.08), target=-2.0)
        energies = unboundedness_probe(sol, bump, [float(k) for k in ks])
        slope = fit_probe_slope([float(k) for k in ks], energies)
        buf = io.StringIO()
        write_probe_csv([float(k) for k in ks], energies, slope, buf)
        buf.write(probe_summary(kappa, label, energies, slope) + "\n")
        return buf.getvalue()

    payload, hit = cache.get_or_make(cfg.hash(), produce, suffix=".csv")
    _emit(payload, _record(cfg, hit, True, args.out), args.out)
    return EXIT_OK


def cmd_quant_balanced(args: argparse.Namespace) -> int:
    b0 = _parse_b0(args.b0)
    ks = _parse_k_range(args.k_range) if args.k_range else [8, 16, 32]
    tol = args.tol if args.tol is not None else TOL.balanced_tol
    cfg = RunConfig(
        "quant-balanced",
        {"b0": b0, "p": args.p, "k_list": ks, "tol": tol, "seed": args.seed},
    )
    model = ToyModel(b0=b0, p=args.p)
    cache = ResultCache(enabled=not args.no_cache)

    def produce() -> str:
        phi0 = round_potential()
        c = c_top_exact(model)
        mu = sup_grid()
        lines = ["k,n_iter,residual,scal_dev"]
        for k in ks:
            res = balanced_iterate(phi0, k, model, tol=tol)
            resid = balanced_residual(res.H, k, model)
            phi_star = fs(res.H, k, model)
            dev = float(np.max(np.abs(weighted_scalar_toy(phi_star, model)(mu) - c)))
            lines.append(f"{k},{res.n_iter},{resid!r},{dev!r}")
        return "\n".join(lines) + "\n"

    payload, hit = cache.get_or_make(cfg.hash(), produce, suffix=".csv")
    _emit(payload, _record(cfg, hit, True, args.out), args.out)
    return EXIT_OK


def cmd_quant_expansion(args: argparse.Namespace) -> int:
    b0 = _parse_b0(args.b0)
    ks = _parse_k_range(args.k_range) if args.k_range else [8, 16, 32, 64]
    cfg = RunConfig("quant-expansion", {"b0": b0, "p": args.p, "k_list": ks, "seed": args.seed})
    model = ToyModel(b0=b0, p=args.p)
    cache = ResultCache(enabled=not args.no_cache)

    def produce() -> str:
        rep = expansion_check(round_potential(), model, ks)
        slopes = rep.running_slopes()
        lines = ["k,residual_sup,slope_running"]
        for i, k in enumerate(rep.k_list):
            s = slopes[i - 1] if i else math.nan
            lines.append(f"{k},{rep.residual_sup[i]!r},{s!r}")
        lines.append(json.dumps({"slope": rep.slope, "leading_slope": rep.leading_slope}, sort_keys=True))
        return "\n".join(lines) + "\n"

    payload, hit = cache.get_or_make(cfg.hash(), produce, suffix=".csv")
    _emit(payload, _record(cfg, hit, True, args.out), args.out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    tags = args.tags.split(",") if args.tags else None
    cfg = RunConfig(
        "verify",
        {"tags": tags, "breach": args.breach, "seed": args.seed},
    )
    cache = ResultCache(enabled=not args.no_cache)

    try:
        results = run_checks(tags=tags, breach=args.breach)
    except OutOfDomain as exc:
        raise ConfigError(str(exc)) from exc
    buf = io.StringIO()
    write_check_csv(results, buf)
    payload = buf.getvalue()
    ok = all_passed(results)
    cache.store(cfg.hash(), payload, suffix=".csv")
    _emit(payload, _record(cfg, False, ok, args.out), args.out)
    return EXIT_OK if ok else EXIT_FAIL


# -- parser ------------------------------------------------------------------


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--genus", type=int, default=2)
    sp.add_argument("--degree", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0, help="recorded in the run record")
    sp.add_argument("--out", type=str, default=None, help="payload path (default stdout)")
    sp.add_argument("--no-cache", action="store_true", help="bypass the result cache")
    sp.add_argument("--tol", type=float, default=None, help="override the command's tolerance")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kahlerlab", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=f"kahlerlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("pkappa", help="Futaki-curve sweep: one CSV row per kappa")
    sp.add_argument("--kappa", type=float, default=None)
    sp.add_argument("--kappa-range", type=str, default=None, help="'a:b:n' or 'x,y,z'")
    _add_common(sp)
    sp.set_defaults(fn=cmd_pkappa)

    sp = sub.add_parser("kappa0", help="existence threshold by bisection (JSON verdict)")
    _add_common(sp)
    sp.set_defaults(fn=cmd_kappa0)

    sp = sub.add_parser("mabuchi-probe", help="unboundedness probe: CSV (k,energy,slope_fit) + JSON verdict")
    sp.add_argument("--kappa", type=float, default=None, help="default: midpoint of (1, kappa0)")
    sp.add_argument("--k-range", type=str, default=None, help="'lo:hi' doublings or 'a,b,c'")
    _add_common(sp)
    sp.set_defaults(fn=cmd_mabuchi_probe)

    sp = sub.add_parser("quant-balanced", help="balanced-metric iteration scan over k")
    sp.add_argument("--b0", type=str, default="inf", help="weight offset; 'inf' for the unweighted mode")
    sp.add_argument("--p", type=float, default=4.0)
    sp.add_argument("--k-range", type=str, default=None)
    _add_common(sp)
    sp.set_defaults(fn=cmd_quant_balanced)

    sp = sub.add_parser("quant-expansion", help="density expansion residual fit over k")
    sp.add_argument("--b0", type=str, default="1", help="weight offset; 'inf' for the unweighted mode")
    sp.add_argument("--p", type=float, default=4.0)
    sp.add_argument("--k-range", type=str, default=None)
    _add_common(sp)
    sp.set_defaults(fn=cmd_quant_expansion)

    sp = sub.add_parser("verify", help="run the invariant suite; exit 1 on any failure")
    sp.add_argument("--tags", type=str, default=None, help="comma list from: numerics,calabi,ckem,mabuchi,quant,functionals")
    sp.add_argument("--breach", type=str, default=None, help="name of one check whose tolerance is made impossible")
    _add_common(sp)
    sp.set_defaults(fn=cmd_verify)

    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except KahlerLabError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
