"""Command-line interface: spectrum, phase shifts, wavefunctions, validation.

Every output file starts with a manifest (command, echoed inputs, tool
version, tolerances). Numbers are written with 17 significant digits so the
text round-trips to the same doubles; there are no timestamps, so equal
inputs give byte-identical files.

Exit codes: 0 success, 1 usage error, 2 numerical failure or failed
validation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .errors import SqrtPotError
from .spectra import (
    K2_TOL,
    bound_spectrum,
    bound_switch_radius,
    bound_wavefunction,
    phase_shift,
    reachable_kappa_min,
    regular_scattering_wavefunction,
    scattering_switch_radius,
)
from .validation import TOLERANCES, run_suite

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _manifest(command: str, inputs: dict, extra: dict | None = None) -> dict:
    m = {"command": command, "inputs": inputs, "tool_version": __version__,
         "tolerances": {"k2_relative": K2_TOL, **TOLERANCES}}
    if extra:
        m.update(extra)
    return m


def _render(manifest: dict, header: Sequence[str], rows: list[list[float]], fmt: str) -> str:
    if fmt == "json":
        doc = {"manifest": manifest, "rows": [dict(zip(header, map(float, r))) for r in rows]}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"
    buf = io.StringIO()
    for line in json.dumps(manifest, indent=1, sort_keys=True).splitlines():
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def read_table(text: str) -> tuple[dict, list[dict]]:
    """Parse CSV or JSON output back into ``(manifest, rows)``."""
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        return doc["manifest"], doc["rows"]
    lines = text.splitlines()
    meta = [ln[2:] for ln in lines if ln.startswith("# ")]
    body = [ln for ln in lines if not ln.startswith("#")]
    rows = [{k: float(v) for k, v in r.items()} for r in csv.DictReader(body)]
    return json.loads("\n".join(meta)), rows


def _emit(text: str, out: str | None):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _positive(name: str, value: float):
    if not (math.isfinite(value) and value > 0):
        raise UsageError(f"{name} must be positive")


def run_spectrum(args) -> int:
    if args.alpha < 0 or args.l < 0 or args.max_levels < 1:
        raise UsageError("need alpha >= 0, l >= 0 and max-levels >= 1")
    _positive("kappa-min", args.kappa_min)
    if not args.kappa_min < args.kappa_max:
        raise UsageError("kappa-min must be below kappa-max")
    inputs = {"alpha": args.alpha, "l": args.l, "kappa_min": args.kappa_min,
              "kappa_max": args.kappa_max, "max_levels": args.max_levels}
    extra = {}
    kmin = args.kappa_min
    if args.alpha > 0:
        reach = reachable_kappa_min(args.alpha)
        if kmin < reach:
            kmin = reach
            extra["kappa_min_effective"] = reach
            extra["note"] = "kappa range clipped to the resolvable region"
    rows = []
    if kmin < args.kappa_max:
        for e in bound_spectrum(args.alpha, args.l, (kmin, args.kappa_max),
                                max_levels=args.max_levels, clip=True):
            rows.append([e.n, e.kappa, e.energy, e.residual])
    text = _render(_manifest("spectrum", inputs, extra), ["n", "kappa", "energy", "residual"],
                   rows, args.format)
    _emit(text, args.out)
    return EXIT_OK


def run_phaseshift(args) -> int:
    if args.alpha < 0 or args.l < 0 or args.k_steps < 1:
        raise UsageError("need alpha >= 0, l >= 0 and k-steps >= 1")
    _positive("k-min", args.k_min)
    if args.k_steps > 1 and not args.k_min < args.k_max:
        raise UsageError("k-min must be below k-max")
    ks = np.linspace(args.k_min, args.k_max, args.k_steps) if args.k_steps > 1 else [args.k_min]
    inputs = {"alpha": args.alpha, "l": args.l, "k_min": args.k_min, "k_max": args.k_max,
              "k_steps": args.k_steps}
    rows = [[p.k, p.delta, p.s_matrix.real, p.s_matrix.imag]
            for p in phase_shift(args.alpha, args.l, [float(k) for k in ks])]
    text = _render(_manifest("phaseshift", inputs), ["k", "delta", "re_s", "im_s"],
                   rows, args.format)
    _emit(text, args.out)
    return EXIT_OK


def run_wavefunction(args) -> int:
    if args.alpha < 0 or args.l < 0 or args.r_steps < 2:
        raise UsageError("need alpha >= 0, l >= 0 and r-steps >= 2")
    _positive("r-min", args.r_min)
    if not args.r_min < args.r_max:
        raise UsageError("r-min must be below r-max")
    if (args.k is None) == (args.kappa_level is None):
        raise UsageError("give exactly one of --k and --kappa-level")
    rs = np.linspace(args.r_min, args.r_max, args.r_steps)
    inputs = {"alpha": args.alpha, "l": args.l, "r_min": args.r_min, "r_max": args.r_max,
              "r_steps": args.r_steps}
    if args.k is not None:
        _positive("k", args.k)
        inputs["k"] = args.k
        r_sw, window = scattering_switch_radius(args.alpha, args.l, args.k)
        vals = [regular_scattering_wavefunction(args.alpha, args.l, args.k, float(r)) for r in rs]
        extra = {"normalization": "u / r^(l+1) -> 1 at the origin"}
    else:
        n = args.kappa_level
        if n < 1:
            raise UsageError("kappa-level must be at least 1")
        if args.alpha == 0:
            raise UsageError("alpha = 0 has no bound states")
        inputs["kappa_level"] = n
        top = 10.0 * args.alpha ** (2.0 / 3.0)
        levels = bound_spectrum(args.alpha, args.l, (reachable_kappa_min(args.alpha), top),
                                max_levels=n)
        match = [e for e in levels if e.n == n]
        if not match:
            raise SqrtPotError(f"level {n} is outside the resolvable region")
        entry = match[0]
        r_sw, window = bound_switch_radius(entry)
        vals = [complex(bound_wavefunction(entry, float(r))) for r in rs]
        extra = {"kappa": entry.kappa, "normalization": "integral of u^2 over r > 0 equals 1"}
    extra.update({"switch_radius": r_sw, "agreement_window": list(window)})
    rows = [[r, v.real, v.imag] for r, v in zip(rs, vals)]
    text = _render(_manifest("wavefunction", inputs, extra), ["r", "re_u", "im_u"],
                   rows, args.format)
    _emit(text, args.out)
    return EXIT_OK


def run_validate(args) -> int:
    results = run_suite(args.suite)
    for r in results:
        print(r.line())
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if passed == len(results) else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sqrtpot", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--alpha", type=float, required=True)
        p.add_argument("--l", type=int, default=0)
        p.add_argument("--out", default=None, help="output path (default: standard output)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("spectrum", help="bound-state levels")
    common(p)
    p.add_argument("--kappa-min", type=float, required=True)
    p.add_argument("--kappa-max", type=float, required=True)
    p.add_argument("--max-levels", type=int, default=10)
    p.set_defaults(func=run_spectrum)

    p = sub.add_parser("phaseshift", help="phase shifts and S-matrix on a k grid")
    common(p)
    p.add_argument("--k-min", type=float, required=True)
    p.add_argument("--k-max", type=float, required=True)
    p.add_argument("--k-steps", type=int, default=10)
    p.set_defaults(func=run_phaseshift)

    p = sub.add_parser("wavefunction", help="radial function on an r grid")
    common(p)
    p.add_argument("--k", type=float, default=None, help="scattering wavenumber")
    p.add_argument("--kappa-level", type=int, default=None, help="bound level index n >= 1")
    p.add_argument("--r-min", type=float, required=True)
    p.add_argument("--r-max", type=float, required=True)
    p.add_argument("--r-steps", type=int, default=200)
    p.set_defaults(func=run_wavefunction)

    p = sub.add_parser("validate", help="run the acceptance battery")
    p.add_argument("--suite", choices=("fast", "full"), default="fast")
    p.set_defaults(func=run_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"sqrtpot: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SqrtPotError, OverflowError, ZeroDivisionError) as exc:
        print(f"sqrtpot: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
