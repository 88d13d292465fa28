"""``spa-thermo`` command line: solve, sweep and verify.

Exit codes: 0 success, 1 a verification check failed, 2 bad usage,
3 infeasible U, 4 domain violation, 5 solver failure or other numerical error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import json.encoder
import math
import sys
from pathlib import Path

import numpy as np

from . import verification
from .deform import HqMap, IdentityMap, SupraMap
from .entropy import EntropySpec, renyi, sharma_mittal, supra_extensive, tsallis
from .errors import DomainError, HCViolation, InfeasibleEnergyError, SpaThermoError
from .maxent import DEFAULT_CONFIG, ConstraintKind, SolverConfig, solve_oracle, solve_spa
from .simplex import EnergySpectrum, total_variation
from .thermo import MUTATION_TARGETS, EquilibriumState, mutation, potentials

SCHEMA = "spa-thermo/1"

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_DOMAIN = 4
EXIT_SOLVER = 5

CSV_COLUMNS = ("U", "R_hat", "H_hat", "beta_renyi", "beta_spa", "lnZ_renyi", "lnZ_spa",
               "F_renyi", "F_spa", "C_renyi", "C_spa", "flags")


class UsageError(Exception):
    pass


# -- serialization -----------------------------------------------------------

class _Encoder(json.JSONEncoder):
    """Floats at 17 significant digits, so every value round-trips bit for bit."""

    def iterencode(self, o, _one_shot=False):
        def floatstr(x):
            if not math.isfinite(x):
                raise ValueError(f"non-finite float {x!r} reached the encoder")
            return format(x, ".17g")

        return json.encoder._make_iterencode(
            {} if self.check_circular else None, self.default, json.encoder.encode_basestring_ascii,
            self.indent, floatstr, self.key_separator, self.item_separator, self.sort_keys,
            self.skipkeys, _one_shot)(o, 0)

    def default(self, o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        return super().default(o)


def _sanitize(obj, path, reasons):
    """Replace NaN/Inf with null and record why under ``reasons[path]``."""
    if isinstance(obj, dict):
        return {k: _sanitize(v, f"{path}.{k}" if path else k, reasons) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v, f"{path}[{i}]", reasons) for i, v in enumerate(obj)]
    if isinstance(obj, np.ndarray):
        return _sanitize(obj.tolist(), path, reasons)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            reasons[path] = "non-finite value"
            return None
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(payload: dict) -> str:
    reasons = dict(payload.get("null_reasons", {}))
    clean = _sanitize(payload, "", reasons)
    if reasons:
        clean["null_reasons"] = reasons
    return json.dumps({"schema": SCHEMA, **clean}, cls=_Encoder, indent=2) + "\n"


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return ""
    return format(float(x), ".17g")


# -- configuration -----------------------------------------------------------

def _parse_levels(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad spectrum {text!r}: {exc}") from None


def _read_spectrum_file(path: str) -> list[float]:
    levels = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            levels.append(float(line))
        except ValueError:
            raise UsageError(f"{path}:{lineno}: not a number: {line!r}") from None
    return levels


def _spectrum(args) -> EnergySpectrum:
    if args.spectrum_file:
        levels = _read_spectrum_file(args.spectrum_file)
    elif args.spectrum:
        levels = _parse_levels(args.spectrum)
    else:
        raise UsageError("one of --spectrum or --spectrum-file is required")
    try:
        return EnergySpectrum(levels)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _map(args):
    family = args.family or "identity"
    if family == "identity":
        return IdentityMap()
    if family == "hq":
        if args.q is None:
            raise UsageError("--family hq needs --q")
        return HqMap(args.q)
    if args.r is None or args.alpha is None:
        raise UsageError("--family supra needs --alpha and --r")
    return SupraMap(args.alpha, args.r)


def _solver_config(args) -> SolverConfig:
    names = {f.name: f.type for f in dataclasses.fields(SolverConfig)}
    overrides = {}
    for item in args.tol or []:
        key, sep, value = item.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in names:
            raise UsageError(f"--tol expects KEY=VALUE with KEY in {sorted(names)}, got {item!r}")
        try:
            overrides[key] = int(value) if key == "max_iter" else float(value)
        except ValueError:
            raise UsageError(f"bad value in --tol {item!r}") from None
    return dataclasses.replace(DEFAULT_CONFIG, **overrides)


def _u_grid(spec: str) -> list[float]:
    try:
        a, b, step = (float(v) for v in spec.split(":"))
    except ValueError:
        raise UsageError(f"--U-range expects a:b:step, got {spec!r}") from None
    if not step > 0 or b < a:
        raise UsageError("--U-range needs a <= b and step > 0")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return [a + i * step for i in range(n)]


def _entropy_spec(args) -> EntropySpec:
    alpha = 1.0 if args.alpha is None else args.alpha
    try:
        return EntropySpec(alpha, _map(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- state records -----------------------------------------------------------

_UNAVAILABLE = ("F_renyi", "C_renyi", "F_spa", "C_spa")


def state_record(state: EquilibriumState) -> dict:
    sol = state.solution
    rec = {
        "U": sol.U,
        "alpha": sol.alpha,
        "constraint": sol.constraint.value,
        "map": state.spec.map.to_config(),
        "spectrum": list(sol.spectrum.levels),
        "P_hat": sol.P_hat.tolist(),
        "support": sol.support_mask.tolist(),
        "degenerate": bool(state.degenerate),
        "R_hat": state.R_hat,
        "H_hat": state.H_hat,
        "beta_renyi": state.beta_renyi,
        "beta_spa": state.beta_spa,
        "beta_fd": state.beta_fd,
        "dbeta_dU": state.dbeta_dU,
        "lnZ_renyi": state.lnZ_renyi,
        "lnZ_spa": state.lnZ_spa,
        "F_renyi": state.F_renyi,
        "F_spa": state.F_spa,
        "C_renyi": state.C_renyi,
        "C_spa": state.C_spa,
        "conditions": state.conditions.to_dict() if state.conditions else None,
    }
    reasons = {}
    for key in _UNAVAILABLE:
        if rec[key] is None:
            if state.degenerate:
                reasons[key] = "degenerate: |beta| below guard"
            elif key == "C_spa" and state.conditions is not None and not state.conditions.hc_ok:
                reasons[key] = "hc_violation"
            else:
                reasons[key] = "unavailable"
    for key in ("beta_fd", "dbeta_dU"):
        if rec[key] is None:
            reasons[key] = "finite-difference stencil unavailable"
    if reasons:
        rec["null_reasons"] = reasons
    return rec


def _flags(state: EquilibriumState) -> str:
    flags = []
    if state.degenerate:
        flags.append("degenerate")
    if state.conditions is not None:
        if not state.conditions.lsr_ok:
            flags.append("lsr_fail")
        if state.conditions.hc_margin is None:
            flags.append("hc_unknown")
        elif not state.conditions.hc_ok:
            flags.append("hc_fail")
        if not state.conditions.lsh_ok:
            flags.append("lsh_fail")
    if not state.solution.support_mask.all():
        flags.append("cutoff")
    return ";".join(flags) or "ok"


def _solve_state(spectrum, U, spec, kind, cfg) -> EquilibriumState:
    sol = solve_spa(spectrum, U, spec, kind, cfg)
    return potentials(sol, spec, cfg)


def _error_payload(exc: Exception) -> dict:
    err = {"type": type(exc).__name__, "code": getattr(exc, "code", "usage"), "message": str(exc)}
    if isinstance(exc, DomainError):
        err["value"] = exc.value
        err["domain"] = list(exc.domain)
    if isinstance(exc, HCViolation):
        err["margin"] = exc.margin
    return {"ok": False, "error": err}


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, UsageError):
        return EXIT_USAGE
    if isinstance(exc, InfeasibleEnergyError):
        return EXIT_INFEASIBLE
    if isinstance(exc, DomainError):
        return EXIT_DOMAIN
    return EXIT_SOLVER


# -- commands ----------------------------------------------------------------

def cmd_solve(args, out) -> int:
    if args.U is None:
        raise UsageError("solve needs --U")
    spectrum = _spectrum(args)
    spec = _entropy_spec(args)
    cfg = _solver_config(args)
    kind = ConstraintKind(args.constraint)
    state = _solve_state(spectrum, args.U, spec, kind, cfg)
    payload = {"ok": True, "state": state_record(state)}
    if args.oracle:
        P = solve_oracle(spectrum, args.U, spec.alpha, kind, cfg, seed=args.seed)
        payload["oracle"] = {"P": P.tolist(), "total_variation": total_variation(state.solution.P_hat, P)}
    if args.format == "csv":
        _write_rows(out, [_row(args.U, state=state)])
    else:
        out.write(dumps(payload))
    return EXIT_OK


def _row(U, state=None, error=None) -> dict:
    if state is None:
        row = {c: "" for c in CSV_COLUMNS}
        row["U"] = _fmt(U)
        row["flags"] = f"error:{getattr(error, 'code', 'error')}"
        return row
    row = {"U": _fmt(U), "R_hat": _fmt(state.R_hat), "H_hat": _fmt(state.H_hat),
           "beta_renyi": _fmt(state.beta_renyi), "beta_spa": _fmt(state.beta_spa),
           "lnZ_renyi": _fmt(state.lnZ_renyi), "lnZ_spa": _fmt(state.lnZ_spa),
           "F_renyi": _fmt(state.F_renyi), "F_spa": _fmt(state.F_spa),
           "C_renyi": _fmt(state.C_renyi), "C_spa": _fmt(state.C_spa), "flags": _flags(state)}
    return row


def _write_rows(out, rows):
    w = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


def cmd_sweep(args, out) -> int:
    spectrum = _spectrum(args)
    spec = _entropy_spec(args)
    cfg = _solver_config(args)
    kind = ConstraintKind(args.constraint)
    if args.U_range:
        grid = _u_grid(args.U_range)
    elif args.U is not None:
        grid = [args.U]
    else:
        raise UsageError("sweep needs --U-range a:b:step")
    rows, records = [], []
    for U in grid:
        try:
            state = _solve_state(spectrum, U, spec, kind, cfg)
        except SpaThermoError as exc:
            rows.append(_row(U, error=exc))
            records.append({"U": U, **_error_payload(exc)})
            continue
        rows.append(_row(U, state=state))
        records.append({"ok": True, "state": state_record(state)})
    if args.format == "json":
        out.write(dumps({"ok": True, "rows": records}))
    else:
        _write_rows(out, rows)
    return EXIT_OK


def _extra_reductions(args):
    """Family-specific reductions requested on the command line."""
    out = []
    alphas = [args.alpha] if args.alpha is not None else list(verification.ALPHAS)
    if args.family == "hq" and args.q is not None:
        q = args.q
        if q == 1.0:
            for a in alphas:
                out.append((f"SM equals Renyi (alpha={a}, q=1)",
                            lambda p, a=a: sharma_mittal(p, a, 1.0), lambda p, a=a: renyi(p, a)))
        if args.alpha is not None and q == args.alpha:
            out.append((f"SM equals Tsallis (alpha=q={q})",
                        lambda p: sharma_mittal(p, q, q), lambda p: tsallis(p, q)))
    if args.family == "supra" and args.r is not None and args.alpha is not None:
        a, r = args.alpha, args.r
        if r == a:
            out.append((f"SE equals Renyi (alpha=r={a})",
                        lambda p: supra_extensive(p, a, a), lambda p: renyi(p, a)))
        if r == 1.0:
            out.append((f"SE equals Tsallis (alpha={a}, r=1)",
                        lambda p: supra_extensive(p, a, 1.0), lambda p: tsallis(p, a)))
    return out


def cmd_verify(args, out) -> int:
    cfg = _solver_config(args)
    maps = [_map(args)] if args.family else None
    run = lambda: verification.run_all(seed=args.seed, maps=maps, alpha=args.alpha, size=args.size,
                                       cfg=cfg, extra_reductions=_extra_reductions(args))
    if args.mutate:
        with mutation(args.mutate, args.mutate_rel):
            results = run()
    else:
        results = run()
    passed = all(r.passed for r in results)
    if args.format == "json":
        out.write(dumps({"ok": passed, "seed": args.seed, "mutation": args.mutate,
                         "checks": [r.to_dict() for r in results]}))
    elif args.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(("check", "passed", "worst", "tol", "count"))
        for r in results:
            w.writerow((r.name, int(r.passed), _fmt(r.worst), _fmt(r.tol), r.count))
    else:
        for r in results:
            out.write(r.line() + "\n")
        out.write(f"{'ALL PASS' if passed else 'FAILED'}: "
                  f"{sum(r.passed for r in results)}/{len(results)} checks\n")
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--spectrum", help="comma-separated energy levels, e.g. 0,1,2")
    src.add_argument("--spectrum-file", help="file with one energy level per line")
    common.add_argument("--family", choices=("identity", "hq", "supra"), help="deformation map family")
    common.add_argument("--alpha", type=float, help="Renyi order (default 1)")
    common.add_argument("--q", type=float, help="Sharma-Mittal parameter q")
    common.add_argument("--r", type=float, help="supra-extensive parameter r")
    common.add_argument("--constraint", choices=("linear", "escort"), default="linear")
    common.add_argument("--U", type=float, help="internal energy")
    common.add_argument("--U-range", dest="U_range", help="a:b:step grid of internal energies")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", action="append", metavar="KEY=VALUE",
                        help="solver config override, e.g. root_tol=1e-13 (repeatable)")

    p = argparse.ArgumentParser(prog="spa-thermo",
                                description="Maximum-entropy thermostatistics for SPA entropies.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common], help="solve one instance")
    s.add_argument("--oracle", action="store_true", help="also run the brute-force optimizer")
    s.set_defaults(func=cmd_solve, default_format="json")
    w = sub.add_parser("sweep", parents=[common], help="solve along a U grid")
    w.set_defaults(func=cmd_sweep, default_format="csv")
    v = sub.add_parser("verify", parents=[common], help="run the randomized verification suites")
    v.add_argument("--size", type=int, default=8, help="instances per suite (default 8)")
    v.add_argument("--mutate", choices=MUTATION_TARGETS, help=argparse.SUPPRESS)
    v.add_argument("--mutate-rel", type=float, default=1e-3, help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify, default_format="text")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.format = args.format or args.default_format
    buf = io.StringIO()
    try:
        code = args.func(args, buf)
    except (SpaThermoError, UsageError) as exc:
        code = _exit_code(exc)
        buf = io.StringIO(dumps(_error_payload(exc)))
        sys.stderr.write(f"spa-thermo: {exc}\n")
    text = buf.getvalue()
    if args.out and code in (EXIT_OK, EXIT_VERIFY_FAILED):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
