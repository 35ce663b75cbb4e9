"""Command-line entry point.

    quasiwqed spectrum --config configs/fig2a_spectrum_delta.json --out runs/fig2a
    quasiwqed scatter --set n_qubits=144 --set delta=0.5 --method both --grid linspace:-10:10:401

A config file is JSON with an optional ``command`` name, a ``lattice`` block
(the ``LatticeSpec`` fields) and a ``params`` block for the subcommand.  Flags
on the command line override the file.  Every output file is written next to
a ``<file>.manifest.json`` holding the resolved parameters and its sha256.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .analysis import (
    PHASE_MAP_COLUMNS,
    TRANSMISSION_COLUMNS,
    TailCheckError,
    classify,
    default_map_sizes,
    offset_grid,
    overall_reflection,
    phase_map,
    scaling_fits,
    transmission_vs_size,
)
from .bands import BAND_COLUMNS, SingularQuasimomentum, band_rows, inverse_bands, localization_fraction
from .effective import (
    SPECTRUM_COLUMNS,
    AtFrequency,
    Delta,
    EigensolverError,
    ExceptionalPointError,
    Markov,
    Theta,
    spectrum_sweep,
    sweep_rows,
)
from .green import NearSingularResolvent, scatter_green
from .model import ConfigError, LatticeSpec, approximant_for_eta, fibonacci_approximant
from .transfer import PoleAtResonance, scatter_many

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

NUMERICAL_ERRORS = (
    PoleAtResonance,
    NearSingularResolvent,
    EigensolverError,
    ExceptionalPointError,
    TailCheckError,
    SingularQuasimomentum,
    ArithmeticError,
    np.linalg.LinAlgError,
)


class NumericalFailure(RuntimeError):
    pass


# --- parsing helpers --------------------------------------------------------------


def _number(tok) -> float:
    if isinstance(tok, (int, float)) and not isinstance(tok, bool):
        return float(tok)
    text = str(tok).strip().lower()
    scale = 1.0
    if text.endswith("pi"):
        head = text[:-2].rstrip("*")
        scale, text = math.pi, (head if head else "1")
    try:
        return float(text) * scale
    except ValueError:
        raise ConfigError(f"not a number: {tok!r}") from None


def parse_grid(value, field: str) -> np.ndarray:
    """Grid from a JSON value or a command-line string.

    Accepted forms: a list of numbers; ``{"linspace": [a, b, n], "endpoint": bool}``;
    ``{"offset": [lo, hi, step]}`` for (k + 1/2) * step points; and the strings
    ``linspace:a:b:n``, ``periodic:a:b:n`` (endpoint excluded), ``offset:lo:hi:step``
    or a comma-separated list.  ``pi`` and ``2pi`` are understood.
    """
    try:
        if isinstance(value, str):
            kind, _, rest = value.partition(":")
            if kind in ("linspace", "periodic", "offset"):
                parts = rest.split(":")
                if len(parts) != 3:
                    raise ConfigError(f"expected {kind}:a:b:n")
                if kind == "offset":
                    grid = offset_grid(*(_number(p) for p in parts))
                else:
                    grid = np.linspace(_number(parts[0]), _number(parts[1]), int(parts[2]),
                                       endpoint=kind == "linspace")
            else:
                grid = np.array([_number(p) for p in value.split(",") if p.strip()], float)
        elif isinstance(value, dict):
            unknown = set(value) - {"linspace", "endpoint", "offset"}
            if unknown:
                raise ConfigError(f"unknown grid keys {sorted(unknown)}")
            if "linspace" in value:
                a, b, n = value["linspace"]
                grid = np.linspace(_number(a), _number(b), int(n), endpoint=bool(value.get("endpoint", True)))
            elif "offset" in value:
                grid = offset_grid(*(_number(v) for v in value["offset"]))
            else:
                raise ConfigError("grid object needs 'linspace' or 'offset'")
        elif isinstance(value, (list, tuple)):
            grid = np.array([_number(v) for v in value], float)
        else:
            raise ConfigError(f"unsupported grid {value!r}")
    except ConfigError as exc:
        raise ConfigError(f"{field}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{field}: malformed grid {value!r} ({exc})") from None
    if grid.size == 0:
        raise ConfigError(f"{field}: grid is empty")
    if not np.all(np.isfinite(grid)):
        raise ConfigError(f"{field}: grid has non-finite values")
    return grid


def parse_sizes(value, field: str) -> list[int]:
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    try:
        return [int(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{field}: expected a list of integers, got {value!r}") from None


def load_config(path: str | None, command: str) -> tuple[dict, dict]:
    if path is None:
        return {}, {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be an object")
    unknown = set(data) - {"command", "lattice", "params", "description"}
    if unknown:
        raise ConfigError(f"config: unknown keys {sorted(unknown)}")
    if "command" in data and data["command"] != command:
        raise ConfigError(f"config is for '{data['command']}', not '{command}'")
    return dict(data.get("lattice", {})), dict(data.get("params", {}))


def resolve_lattice(base: dict, overrides: list[str]) -> LatticeSpec:
    lattice = dict(base)
    for item in overrides or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key = key.strip()
        lattice[key] = int(val) if key == "n_qubits" and val.strip().lstrip("-").isdigit() else val.strip()
        if key in ("omega0", "gamma0", "phi", "delta", "theta"):
            lattice[key] = _number(lattice[key])
    if "n_qubits" in lattice and not isinstance(lattice["n_qubits"], int):
        try:
            lattice["n_qubits"] = int(lattice["n_qubits"])
        except (TypeError, ValueError):
            raise ConfigError(f"n_qubits: expected an integer, got {lattice['n_qubits']!r}") from None
    try:
        return LatticeSpec.from_dict(lattice)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"lattice: {exc}") from None


def merge_params(defaults: dict, from_file: dict, from_cli: dict) -> dict:
    unknown = set(from_file) - set(defaults)
    if unknown:
        raise ConfigError(f"params: unknown keys {sorted(unknown)}; allowed {sorted(defaults)}")
    out = dict(defaults)
    out.update(from_file)
    out.update({k: v for k, v in from_cli.items() if v is not None})
    return out


# --- output -----------------------------------------------------------------------


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else None
    return v


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class RunWriter:
    """Writes tables and summaries, each with its own manifest."""

    def __init__(self, out_dir: Path, command: str, params: dict, started: float):
        self.out_dir = out_dir
        self.command = command
        self.params = params
        self.started = started
        self.written: list[Path] = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def table(self, name: str, columns, rows, extra: dict | None = None) -> Path:
        path = self.out_dir / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(columns)
            for row in rows:
                w.writerow([_cell(v) for v in row])
        return self._finish(path, extra)

    def json(self, name: str, payload: dict, extra: dict | None = None) -> Path:
        path = self.out_dir / name
        path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
        return self._finish(path, extra)

    def _finish(self, path: Path, extra: dict | None) -> Path:
        manifest = {
            "command": self.command,
            "params": _jsonable(self.params),
            "artifact": {"file": path.name, "sha256": sha256_file(path)},
            "duration_s": time.perf_counter() - self.started,
            "version": __version__,
        }
        if extra:
            manifest["results"] = _jsonable(extra)
        path.with_name(path.name + ".manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        self.written.append(path)
        return path


@contextmanager
def worker_map(jobs: int):
    if jobs <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield pool.map


# --- commands ---------------------------------------------------------------------


SPECTRUM_DEFAULTS = {"axis": "delta", "grid": None, "phase_mode": "markov", "probabilities": False}


def cmd_spectrum(spec: LatticeSpec, params: dict, writer_factory, jobs: int) -> dict:
    axis = params["axis"]
    if axis not in ("delta", "theta"):
        raise ConfigError(f"params.axis: must be 'delta' or 'theta', got {axis!r}")
    if params["grid"] is None:
        raise ConfigError("params.grid: required")
    grid = parse_grid(params["grid"], "params.grid")
    mode = params["phase_mode"]
    phase_mode = Markov() if mode == "markov" else AtFrequency(_number(mode))
    resolved = dict(params, grid=grid)
    axis_obj = Delta(tuple(grid)) if axis == "delta" else Theta(tuple(grid))
    with worker_map(jobs) as mapper:
        points = spectrum_sweep(spec, axis_obj, mapper=mapper, phase_mode=phase_mode)
    failed = {p.axis_value: p.error for p in points if p.error}
    w = writer_factory(resolved)
    w.table("spectrum.csv", SPECTRUM_COLUMNS, sweep_rows(axis, points),
            {"failed_points": failed, "max_ipr": max(float(p.spectrum.ipr.max()) for p in points if p.spectrum)
             if len(failed) < len(points) else None})
    if params["probabilities"]:
        rows = []
        for p in points:
            if p.spectrum is None:
                continue
            P = p.spectrum.probabilities()
            rows.extend((p.axis_value, n, j + 1, P[n, j]) for n in range(P.shape[0]) for j in range(P.shape[1]))
        w.table("probabilities.csv", ("axis_value", "n", "j", "probability"), rows)
    if failed:
        raise NumericalFailure(f"eigensolver failed at {axis} = {sorted(failed)}")
    return {}


SCATTER_DEFAULTS = {"method": "transfer", "grid": None}
SCATTER_COLUMNS = ("omega", "omega_rel", "re_r", "im_r", "re_t", "im_t", "abs_r2", "abs_t2", "method")


def _green_point(args):
    spec, x = args
    return scatter_green(spec, omega_rel=x)


def cmd_scatter(spec: LatticeSpec, params: dict, writer_factory, jobs: int) -> dict:
    method = params["method"]
    if method not in ("transfer", "green", "both"):
        raise ConfigError(f"params.method: must be transfer, green or both, got {method!r}")
    if params["grid"] is None:
        raise ConfigError("params.grid: required (relative detunings (omega - omega0)/gamma0)")
    x = parse_grid(params["grid"], "params.grid")
    omega = spec.omega0 + spec.gamma0 * x
    results = {}
    if method in ("transfer", "both"):
        results["transfer"] = scatter_many(spec, omega_rel=x)
    if method in ("green", "both"):
        with worker_map(jobs) as mapper:
            rt = list(mapper(_green_point, [(spec, float(v)) for v in x]))
        results["green"] = (np.array([a for a, _ in rt]), np.array([b for _, b in rt]))
    columns = SCATTER_COLUMNS
    extra = {}
    dev = None
    if method == "both":
        dr = np.abs(results["transfer"][0] - results["green"][0])
        dt = np.abs(results["transfer"][1] - results["green"][1])
        dev = (dr, dt)
        columns = columns + ("abs_dr", "abs_dt")
        extra = {"max_abs_dr": float(dr.max()), "max_abs_dt": float(dt.max())}
    rows = []
    for name, (r, t) in results.items():
        for k in range(x.size):
            row = (omega[k], x[k], r[k].real, r[k].imag, t[k].real, t[k].imag, abs(r[k]) ** 2, abs(t[k]) ** 2, name)
            if dev is not None:
                row = row + (dev[0][k], dev[1][k])
            rows.append(row)
    w = writer_factory(dict(params, grid=x))
    w.table("scatter.csv", columns, rows, extra)
    return extra


BANDS_DEFAULTS = {"eta": None, "approximant_index": None, "n_q": 512, "fraction_etas": []}
FRACTION_COLUMNS = ("chi", "eta", "flat", "curved", "indeterminate", "fraction", "fraction_value")


def _fraction_row(args):
    spec, eta, n_q = args
    ap = approximant_for_eta(eta)
    lf = localization_fraction(ap, spec, n_q)
    return (ap.chi, ap.eta, lf.flat, lf.curved, lf.indeterminate, str(lf.fraction), lf.value)


def cmd_bands(spec: LatticeSpec, params: dict, writer_factory, jobs: int) -> dict:
    if params["eta"] is not None and params["approximant_index"] is not None:
        raise ConfigError("params: give either eta or approximant_index, not both")
    try:
        if params["approximant_index"] is not None:
            ap = fibonacci_approximant(int(params["approximant_index"]))
        else:
            ap = approximant_for_eta(int(params["eta"] if params["eta"] is not None else 34))
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from None
    n_q = int(params["n_q"])
    if n_q < 64:
        raise ConfigError(f"params.n_q: must be >= 64, got {n_q}")
    etas = parse_sizes(params["fraction_etas"], "params.fraction_etas")
    bs = inverse_bands(ap, spec, n_q)
    lf = localization_fraction(ap, spec, n_q)
    w = writer_factory(dict(params, eta=ap.eta, chi=ap.chi, n_q=n_q, fraction_etas=etas))
    summary = {
        "chi": ap.chi,
        "eta": ap.eta,
        "flat": lf.flat,
        "curved": lf.curved,
        "indeterminate": lf.indeterminate,
        "fraction": str(lf.fraction),
        "fraction_bounds": [str(b) for b in lf.bounds],
        "ambiguous_steps": len(bs.ambiguous_steps),
    }
    w.table("bands.csv", BAND_COLUMNS, band_rows(bs))
    w.json("bands_summary.json", summary)
    if etas:
        with worker_map(jobs) as mapper:
            rows = list(mapper(_fraction_row, [(spec, e, n_q) for e in etas]))
        w.table("fractions.csv", FRACTION_COLUMNS, rows)
    return summary


OVERALL_DEFAULTS = {"delta_grid": None, "window": 400.0, "epsabs": 1e-6, "tail_rtol": 1e-3}


def _overall_point(args):
    spec, W, epsabs, tail_rtol = args
    try:
        o = overall_reflection(spec, W, epsabs, tail_rtol)
        return (spec.delta, o.value, o.doubled_value, o.tail_change), None
    except TailCheckError as exc:
        return None, str(exc)


def cmd_overall_reflection(spec: LatticeSpec, params: dict, writer_factory, jobs: int) -> dict:
    if params["delta_grid"] is None:
        raise ConfigError("params.delta_grid: required")
    grid = parse_grid(params["delta_grid"], "params.delta_grid")
    W = float(params["window"])
    if W < 20:
        raise ConfigError(f"params.window: must be >= 20 (units of gamma0), got {W}")
    args = [(spec.with_(delta=float(d)), W, float(params["epsabs"]), float(params["tail_rtol"])) for d in grid]
    with worker_map(jobs) as mapper:
        results = list(mapper(_overall_point, args))
    rows = [r for r, _ in results if r is not None]
    errors = [e for _, e in results if e is not None]
    w = writer_factory(dict(params, delta_grid=grid, window=W))
    values = [r[1] for r in rows]
    monotone = all(b > a for a, b in zip(values, values[1:]))
    w.table("overall_reflection.csv", ("delta", "R", "R_doubled_window", "tail_change"), rows,
            {"strictly_increasing": monotone, "errors": errors})
    if errors:
        raise NumericalFailure("; ".join(errors))
    return {"strictly_increasing": monotone}


MOBILITY_DEFAULTS = {
    "mode": "map",
    "delta_grid": None,
    "omega_rel_grid": None,
    "sizes": None,
    "fit_sizes": None,
    "delta": None,
    "omega_rel": None,
    "s_min": 1e-3,
    "r_min": 0.9,
}


def cmd_mobility(spec: LatticeSpec, params: dict, writer_factory, jobs: int) -> dict:
    mode = params["mode"]
    s_min, r_min = float(params["s_min"]), float(params["r_min"])
    if mode == "map":
        for key in ("delta_grid", "omega_rel_grid"):
            if params[key] is None:
                raise ConfigError(f"params.{key}: required for mode=map")
        dg = parse_grid(params["delta_grid"], "params.delta_grid")
        xg = parse_grid(params["omega_rel_grid"], "params.omega_rel_grid")
        if np.any(xg == 0):
            raise ConfigError("params.omega_rel_grid: contains 0 (omega = omega0 exactly); use an offset grid")
        sizes = default_map_sizes() if params["sizes"] is None else parse_sizes(params["sizes"], "params.sizes")
        try:
            with worker_map(jobs) as mapper:
                pm = phase_map(spec, dg, xg, sizes, s_min=s_min, r_min=r_min, mapper=mapper)
        except ValueError as exc:
            raise ConfigError(f"params: {exc}") from None
        w = writer_factory(dict(params, delta_grid=dg, omega_rel_grid=xg, sizes=sizes))
        regions = pm.regions()
        w.table("phase_map.csv", PHASE_MAP_COLUMNS, pm.rows())
        w.json("regions.json", {"n_regions": len(regions), "regions": regions, "sizes": sizes,
                                "s_min": s_min, "r_min": r_min})
        if pm.errors:
            raise NumericalFailure(f"{len(pm.errors)} map cells failed: {sorted(set(pm.errors.values()))}")
        return {"n_regions": len(regions)}

    if mode == "slice":
        if params["omega_rel_grid"] is None:
            raise ConfigError("params.omega_rel_grid: required for mode=slice")
        xg = parse_grid(params["omega_rel_grid"], "params.omega_rel_grid")
        if np.any(xg == 0):
            raise ConfigError("params.omega_rel_grid: contains 0 (omega = omega0 exactly); use an offset grid")
        delta = spec.delta if params["delta"] is None else _number(params["delta"])
        sizes = [144, 233, 377, 610] if params["sizes"] is None else parse_sizes(params["sizes"], "params.sizes")
        fit_sizes = default_map_sizes() if params["fit_sizes"] is None else parse_sizes(params["fit_sizes"], "params.fit_sizes")
        sl = spec.with_(delta=delta)
        try:
            series = transmission_vs_size(sl, xg, sizes)
            recs = scaling_fits(sl, None, fit_sizes, omega_rel=xg)
        except ValueError as exc:
            raise ConfigError(f"params: {exc}") from None
        w = writer_factory(dict(params, delta=delta, omega_rel_grid=xg, sizes=sizes, fit_sizes=fit_sizes))
        w.table("transmission.csv", TRANSMISSION_COLUMNS, series.rows(spec.omega0, spec.gamma0))
        w.table("slice_classes.csv", ("omega_rel", "class", "slope", "fit_r2"),
                [(x, classify(rec, s_min, r_min).value, rec.slope, rec.r2) for x, rec in zip(xg, recs)])
        return {}

    if mode == "cell":
        if params["omega_rel"] is None:
            raise ConfigError("params.omega_rel: required for mode=cell")
        x = _number(params["omega_rel"])
        delta = spec.delta if params["delta"] is None else _number(params["delta"])
        sizes = default_map_sizes() if params["sizes"] is None else parse_sizes(params["sizes"], "params.sizes")
        try:
            rec = scaling_fits(spec.with_(delta=delta), None, sizes, omega_rel=[x])[0]
        except PoleAtResonance:
            raise
        except ValueError as exc:
            raise ConfigError(f"params: {exc}") from None
        w = writer_factory(dict(params, delta=delta, omega_rel=x, sizes=sizes))
        payload = {
            "delta": delta,
            "omega_rel": x,
            "class": classify(rec, s_min, r_min).value,
            "sizes": list(rec.sizes),
            "log1p_rho": list(rec.log1p_rho),
            "slope": rec.slope,
            "intercept": rec.intercept,
            "r": rec.r,
            "saturated": rec.saturated,
        }
        w.json("cell.json", payload)
        return payload

    raise ConfigError(f"params.mode: must be map, slice or cell, got {mode!r}")


COMMANDS: dict[str, tuple[Callable, dict]] = {
    "spectrum": (cmd_spectrum, SPECTRUM_DEFAULTS),
    "scatter": (cmd_scatter, SCATTER_DEFAULTS),
    "bands": (cmd_bands, BANDS_DEFAULTS),
    "overall-reflection": (cmd_overall_reflection, OVERALL_DEFAULTS),
    "mobility": (cmd_mobility, MOBILITY_DEFAULTS),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a lattice field, e.g. --set delta=0.5 (repeatable)")

    p = argparse.ArgumentParser(prog="quasiwqed", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", parents=[common], help="excitation spectrum vs delta or theta")
    s.add_argument("--axis", choices=["delta", "theta"])
    s.add_argument("--grid", help="e.g. linspace:0:0.5:51 or periodic:0:2pi:64")
    s.add_argument("--probabilities", action="store_true", default=None, help="also write |psi_n(j)|^2")

    s = sub.add_parser("scatter", parents=[common], help="reflection and transmission vs frequency")
    s.add_argument("--method", choices=["transfer", "green", "both"])
    s.add_argument("--grid", help="relative detunings (omega - omega0)/gamma0")

    s = sub.add_parser("bands", parents=[common], help="Bloch inverse bands of a rational approximant")
    s.add_argument("--eta", type=int)
    s.add_argument("--approximant-index", type=int, help="n for F_{n+1}/F_n")
    s.add_argument("--n-q", type=int)
    s.add_argument("--fraction-etas", help="comma-separated periods for the fraction table")

    s = sub.add_parser("overall-reflection", parents=[common], help="frequency-integrated reflection vs delta")
    s.add_argument("--delta-grid")
    s.add_argument("--window", type=float, help="half-width in units of gamma0")

    s = sub.add_parser("mobility", parents=[common], help="resistance-scaling phase map, slice or single cell")
    s.add_argument("--mode", choices=["map", "slice", "cell"])
    s.add_argument("--delta-grid")
    s.add_argument("--omega-grid", dest="omega_rel_grid")
    s.add_argument("--sizes")
    s.add_argument("--delta", type=float)
    s.add_argument("--omega-rel", type=float)
    return p


_CLI_KEYS = {
    "spectrum": ("axis", "grid", "probabilities"),
    "scatter": ("method", "grid"),
    "bands": ("eta", "approximant_index", "n_q", "fraction_etas"),
    "overall-reflection": ("delta_grid", "window"),
    "mobility": ("mode", "delta_grid", "omega_rel_grid", "sizes", "delta", "omega_rel"),
}


# chain lengths come from eta or the size list, not from the lattice
_LENGTH_FREE = ("bands", "mobility")


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    fn, defaults = COMMANDS[args.command]
    try:
        if args.jobs < 1:
            raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
        lattice, file_params = load_config(args.config, args.command)
        if args.command in _LENGTH_FREE:
            lattice.setdefault("n_qubits", 0)
        spec = resolve_lattice(lattice, args.set)
        cli_params = {k: getattr(args, k) for k in _CLI_KEYS[args.command]}
        params = merge_params(defaults, file_params, cli_params)

        def writer_factory(resolved):
            full = {"lattice": spec.to_dict(), **resolved}
            return RunWriter(Path(args.out), args.command, full, started)

        fn(spec, params, writer_factory, args.jobs)
    except NUMERICAL_ERRORS + (NumericalFailure,) as exc:
        print(f"quasiwqed {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, TypeError, KeyError) as exc:
        print(f"quasiwqed {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
