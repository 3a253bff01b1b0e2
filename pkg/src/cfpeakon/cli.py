"""Command-line front end: ``simulate``, ``spectrum``, ``invert``, ``roundtrip``
and ``collide``.

Exit codes: 0 success, 2 input error, 3 integration failure, 4 reconstruction
failure, 5 run ended in a collision, 6 run ended in a mass blow-up.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import re
import sys
import warnings
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .collision import c2_invariant, canonical_form
from .exceptions import CFError, DegenerateCurve, InsufficientMoments, StepFailure
from .flow import IntegratorConfig, Trajectory, integrate, invariant_drift
from .inverse import string_from_weyl, string_to_peakons
from .lax import build_A
from .model import ModelParams, PeakonState
from .poly import PowerSeries
from .spectral import WeylSeries, curve_data, trace_invariants, weyl_series

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTEGRATION = 3
EXIT_RECONSTRUCTION = 4
EXIT_COLLISION = 5
EXIT_BLOWUP = 6

ROUNDTRIP_RTOL = 1e-6


def fmt(value) -> str:
    """17 significant digits, enough to round-trip a double."""
    return "%.17g" % value


class InputError(CFError, ValueError):
    """Malformed configuration or data file."""


# -- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    nu: float
    beta_plus: float
    x: tuple
    m: tuple
    beta_minus: float | None = None
    C: float | None = None
    t_end: float = 1.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 1.0
    collision_gap: float = 1e-9
    mass_cap: float = 1e6

    @property
    def d(self) -> int:
        return len(self.x)

    def state(self) -> PeakonState:
        return PeakonState(self.x, self.m)

    def params(self) -> ModelParams:
        p = ModelParams.for_state(self.state(), self.nu, self.beta_plus, self.C)
        return p

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(self.rel_tol, self.abs_tol, self.max_step, self.collision_gap, self.mass_cap)


_LIST_KEYS = {"x", "m"}
_OPTIONAL = {"beta_minus", "C"}
_REQUIRED = {"nu", "beta_plus", "x", "m"}
_KEYS = [f.name for f in fields(RunConfig)]


def _number(text: str, lineno: int, key: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise InputError(f"line {lineno}: field {key!r}: not a number: {text!r}") from None


def parse_config(text: str) -> RunConfig:
    """Parse ``key=value`` lines; lists are written ``[a, b, ...]``, ``#`` starts a comment.

    ``d`` may be given and must match the list lengths. ``beta_minus`` is
    derived as ``beta_plus + 1`` when absent and checked when present.
    """
    values: dict = {}
    d_declared = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values or (key == "d" and d_declared is not None):
            raise InputError(f"line {lineno}: field {key!r} given twice")
        if key == "d":
            try:
                d_declared = int(value)
            except ValueError:
                raise InputError(f"line {lineno}: field 'd': not an integer: {value!r}") from None
            continue
        if key not in _KEYS:
            raise InputError(f"line {lineno}: unknown field {key!r}")
        if key in _LIST_KEYS:
            match = re.fullmatch(r"\[(.*)\]", value)
            if not match:
                raise InputError(f"line {lineno}: field {key!r}: expected [v1, v2, ...]")
            items = [v.strip() for v in match.group(1).split(",") if v.strip()]
            values[key] = tuple(_number(v, lineno, key) for v in items)
        else:
            values[key] = _number(value, lineno, key)
    missing = _REQUIRED - values.keys()
    if missing:
        raise InputError(f"missing required field(s): {', '.join(sorted(missing))}")
    if len(values["x"]) != len(values["m"]) or not values["x"]:
        raise InputError("fields 'x' and 'm' must be non-empty lists of equal length")
    if d_declared is not None and d_declared != len(values["x"]):
        raise InputError(f"field 'd' = {d_declared} does not match {len(values['x'])} particles")
    if "beta_minus" in values and abs(values["beta_minus"] - values["beta_plus"] - 1) > 1e-12:
        raise InputError("field 'beta_minus': beta_minus - beta_plus must equal 1")
    cfg = RunConfig(**values)
    try:
        cfg.state()
        cfg.params()
        cfg.integrator()
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return cfg


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for key in _KEYS:
        value = getattr(cfg, key)
        if value is None and key in _OPTIONAL:
            continue
        if key in _LIST_KEYS:
            lines.append(f"{key}=[{', '.join(fmt(v) for v in value)}]")
        else:
            lines.append(f"{key}={fmt(value)}")
    return "\n".join(lines) + "\n"


def load_config(path: str) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path!r}: {exc}") from None
    return parse_config(text)


# -- data files --------------------------------------------------------------

def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def write_weyl(path: Path, W: WeylSeries, nu: float) -> None:
    lines = [f"d={W.d} sheet={W.sheet} order={W.order} nu={fmt(nu)} M={fmt(W.M)}"]
    lines += [fmt(c) for c in W.coeffs]
    Path(path).write_text("\n".join(lines) + "\n")


def read_weyl(path: Path) -> tuple[WeylSeries, float]:
    """Read a Weyl file; returns the series and the header's ``nu``."""
    try:
        lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    except OSError as exc:
        raise InputError(f"cannot read Weyl file {path!r}: {exc}") from None
    if not lines:
        raise InputError("empty Weyl file")
    header = {}
    for token in lines[0].split():
        if "=" not in token:
            raise InputError(f"line 1: malformed header token {token!r}")
        k, v = token.split("=", 1)
        header[k] = v
    for key in ("d", "sheet", "order", "nu", "M"):
        if key not in header:
            raise InputError(f"line 1: header lacks {key!r}")
    try:
        d, order = int(header["d"]), int(header["order"])
        nu, M = float(header["nu"]), float(header["M"])
    except ValueError:
        raise InputError("line 1: malformed header value") from None
    if header["sheet"] not in ("upper", "lower"):
        raise InputError(f"line 1: sheet must be upper or lower, got {header['sheet']!r}")
    coeffs = [_number(v, i, "coefficient") for i, v in enumerate(lines[1:], start=2)]
    if len(coeffs) < 2 * d or len(coeffs) < order:
        raise InputError(
            f"insufficient coefficients: {len(coeffs)} given, header order {order}, need at least 2d = {2 * d}"
        )
    series = PowerSeries(coeffs, len(coeffs))
    return WeylSeries(series, header["sheet"], len(coeffs), d, M), nu


# -- commands ----------------------------------------------------------------

def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    changes = {}
    if getattr(args, "t_end", None) is not None:
        changes["t_end"] = args.t_end
    if getattr(args, "rel_tol", None) is not None:
        changes["rel_tol"] = args.rel_tol
    return replace(cfg, **changes) if changes else cfg


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_trajectory(traj: Trajectory, out: Path, form: str) -> list[Path]:
    d = traj.samples[0].d
    t = traj.times
    inv = traj.invariants
    drift = np.abs(inv - inv[0]) / np.maximum(np.abs(inv[0]), 1e-12)
    if form == "json":
        path = out / "trajectory.json"
        doc = {
            "termination": str(traj.termination),
            "t": t.tolist(),
            "x": traj.positions.tolist(),
            "m": traj.masses.tolist(),
            "invariants": inv.tolist(),
            "drift": drift.tolist(),
        }
        path.write_text(json.dumps(doc, indent=1))
        return [path]
    traj_path, drift_path = out / "trajectory.csv", out / "drift.csv"
    header = ["t"] + [f"x_{j + 1}" for j in range(d)] + [f"m_{j + 1}" for j in range(d)]
    write_csv(traj_path, header, np.column_stack([t, traj.positions, traj.masses]))
    write_csv(drift_path, ["t"] + [f"c_{k}" for k in range(d + 1)], np.column_stack([t, drift]))
    return [traj_path, drift_path]


def cmd_simulate(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = _out_dir(args)
    try:
        traj = integrate(cfg.state(), cfg.params(), cfg.t_end, cfg.integrator())
        code = {"reached_t_end": EXIT_OK, "collision": EXIT_COLLISION, "blowup": EXIT_BLOWUP}[traj.termination.kind]
    except StepFailure as exc:
        traj = exc.trajectory
        print(f"integration failed: {exc}", file=sys.stderr)
        code = EXIT_INTEGRATION
    paths = _write_trajectory(traj, out, args.format)
    print(f"termination: {traj.termination}")
    print(f"samples: {len(traj.samples)}")
    if len(traj.samples) > 1:
        print("max relative drift: " + " ".join(fmt(v) for v in invariant_drift(traj)))
    for p in paths:
        print(f"wrote {p}")
    return code


def spectrum_report(cfg: RunConfig) -> dict:
    state, params = cfg.state(), cfg.params()
    A = build_A(state, params)
    warn = None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sd = curve_data(A, params, strict=False)
    if caught:
        warn = str(caught[0].message)
    C_d = sd.C_d
    return {
        "d": state.d,
        "trace_coefficients": trace_invariants(A).tolist(),
        "P_coefficients": [float(c) for c in sd.P.padded(2 * state.d + 1)],
        "branch_points": [[float(r.real), float(r.imag)] for r in sd.branch_points],
        "genus": sd.genus,
        "C_d": C_d,
        "C_d_sign": int(np.sign(C_d)),
        "sheet": sd.sheet,
        "degenerate": sd.degenerate,
        "warning": warn,
    }


def cmd_spectrum(args) -> int:
    report = spectrum_report(load_config(args.config))
    if args.format == "json":
        text = json.dumps(report, indent=1)
    else:
        rows = []
        for key, value in report.items():
            if isinstance(value, list):
                flat = [v for item in value for v in (item if isinstance(item, list) else [item])]
                rows.append(",".join([key] + [fmt(v) for v in flat]))
            elif isinstance(value, float):
                rows.append(f"{key},{fmt(value)}")
            else:
                rows.append(f"{key},{'' if value is None else value}")
        text = "\n".join(rows)
    if args.out:
        path = _out_dir(args) / f"spectrum.{args.format}"
        path.write_text(text + "\n")
        print(f"wrote {path}")
    else:
        print(text)
    return EXIT_OK


def _print_state(state: PeakonState, fh=None) -> None:
    fh = fh or sys.stdout
    print("x: " + " ".join(fmt(v) for v in state.x), file=fh)
    print("m: " + " ".join(fmt(v) for v in state.m), file=fh)


def cmd_invert(args) -> int:
    W, nu = read_weyl(args.weyl)
    if args.nu is not None:
        nu = args.nu
    M = args.M if args.M is not None else W.M
    s = string_from_weyl(W.coeffs, W.d, nu, M)
    state = string_to_peakons(s, nu)
    _print_state(state)
    return EXIT_OK


def forward_weyl(cfg: RunConfig, order: int | None = None) -> WeylSeries:
    state, params = cfg.state(), cfg.params()
    A = build_A(state, params)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sd = curve_data(A, params, strict=False)
    return weyl_series(A, sd, order or 2 * state.d)


def cmd_roundtrip(args) -> int:
    cfg = load_config(args.config)
    state = cfg.state()
    if not state.same_sign():
        print("input error: same-sign masses required for the round trip", file=sys.stderr)
        return EXIT_INPUT
    W = forward_weyl(cfg)
    if args.weyl_out:
        write_weyl(Path(args.weyl_out), W, cfg.nu)
        print(f"wrote {args.weyl_out}")
    s = string_from_weyl(W.coeffs, W.d, cfg.nu, W.M)
    rec = string_to_peakons(s, cfg.nu)
    scale = max(np.abs(state.x).max(), 1.0)
    ex = np.abs(rec.x - state.x) / scale
    em = np.abs(rec.m / state.m - 1)
    for j in range(state.d):
        print(f"x_{j + 1}: {fmt(rec.x[j])} rel_err {fmt(ex[j])}")
    for j in range(state.d):
        print(f"m_{j + 1}: {fmt(rec.m[j])} rel_err {fmt(em[j])}")
    ok = bool(max(ex.max(), em.max()) < ROUNDTRIP_RTOL)
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_RECONSTRUCTION


def cmd_collide(args) -> int:
    cfg = load_config(args.config)
    state, params = cfg.state(), cfg.params()
    C2 = c2_invariant(state, params)
    form = canonical_form(params, state.M, C2)
    doc = {
        "M": state.M,
        "C2": C2,
        "pole_location": form.pole_location,
        "entries": [
            [{"num": [float(v) for v in e.num.coeffs], "den": [float(v) for v in e.den.coeffs]} for e in row]
            for row in form.entries
        ],
    }
    if args.format == "json":
        print(json.dumps(doc, indent=1))
    else:
        print(f"M,{fmt(doc['M'])}")
        print(f"C2,{fmt(C2)}")
        print(f"pole_location,{fmt(form.pole_location)}")
        for i in range(2):
            for j in range(2):
                e = doc["entries"][i][j]
                print(f"A{i + 1}{j + 1}_num," + ",".join(fmt(v) for v in e["num"]))
                print(f"A{i + 1}{j + 1}_den," + ",".join(fmt(v) for v in e["den"]))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfpeakon", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="key=value run configuration")
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("simulate", help="integrate the peakon flow")
    common(p)
    p.add_argument("--t-end", type=float)
    p.add_argument("--rel-tol", type=float)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectrum", help="trace invariants and spectral curve")
    common(p)
    p.set_defaults(func=cmd_spectrum, format="json")

    p = sub.add_parser("invert", help="reconstruct peakons from a Weyl series file")
    common(p, config=False)
    p.add_argument("--weyl", required=True, help="Weyl series file")
    p.add_argument("--nu", type=float, help="override the header's nu")
    p.add_argument("--M", type=float, help="override the header's total mass")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("roundtrip", help="forward map, Weyl series, inversion, comparison")
    common(p)
    p.add_argument("--weyl-out", help="also write the forward Weyl series here")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("collide", help="d=2 collision canonical form")
    common(p)
    p.set_defaults(func=cmd_collide)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InsufficientMoments as exc:
        print(f"input error: insufficient coefficients: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DegenerateCurve as exc:
        print(f"spectral error: {exc}", file=sys.stderr)
        return EXIT_RECONSTRUCTION
    except StepFailure as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except CFError as exc:
        print(f"reconstruction failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RECONSTRUCTION
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
