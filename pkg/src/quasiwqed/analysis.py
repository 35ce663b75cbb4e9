"""Aggregate observables: overall reflection, resistance scaling and phase maps."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from .model import LatticeSpec, fibonacci_sizes
from .transfer import amplitudes_from_products, chain_products, log1p_rho_from_products, scatter_many

S_MIN = 1e-3
R_MIN = 0.9
DEFAULT_WINDOW = 400.0
MAX_SIZE = 2584


class TailCheckError(RuntimeError):
    pass


# --- overall reflection --------------------------------------------------------

_GL_LO = np.polynomial.legendre.leggauss(8)
_GL_HI = np.polynomial.legendre.leggauss(16)


def adaptive_integrate(
    f: Callable[[np.ndarray], np.ndarray],
    breakpoints: np.ndarray,
    epsabs: float = 1e-6,
    max_rounds: int = 60,
    min_width_rel: float = 1e-10,
) -> tuple[float, float]:
    """Integrate a vectorized ``f`` over panels with nested 8/16-point Gauss-Legendre.

    A panel is accepted once its error estimate ``|I16 - I8|`` is below
    ``epsabs * width / total_width``; otherwise it is bisected.  All panels of
    one round are evaluated in a single call to ``f``.  Panels narrower than
    ``min_width_rel`` times the range are accepted as they stand: below that
    the integrand's own rounding noise dominates the estimate.  Returns
    (value, error estimate).
    """
    edges = np.asarray(breakpoints, dtype=float)
    a, b = edges[:-1], edges[1:]
    total = edges[-1] - edges[0]
    value = 0.0
    err = 0.0
    for _ in range(max_rounds):
        if a.size == 0:
            break
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        xl = mid[:, None] + half[:, None] * _GL_LO[0][None, :]
        xh = mid[:, None] + half[:, None] * _GL_HI[0][None, :]
        vals = f(np.concatenate([xl.ravel(), xh.ravel()]))
        fl = vals[: xl.size].reshape(xl.shape)
        fh = vals[xl.size :].reshape(xh.shape)
        il = half * (fl @ _GL_LO[1])
        ih = half * (fh @ _GL_HI[1])
        e = np.abs(ih - il)
        ok = (e <= epsabs * (b - a) / total) | (b - a <= min_width_rel * total)
        value += float(ih[ok].sum())
        err += float(e[ok].sum())
        a, b = a[~ok], b[~ok]
        m = 0.5 * (a + b)
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
    else:
        if a.size:
            raise RuntimeError(f"adaptive quadrature did not converge ({a.size} panels left)")
    return value, err


def reflectance_integral(spec: LatticeSpec, window: float, epsabs: float = 1e-6) -> float:
    """(1/gamma0) * integral of |r|^2 over omega0 +- window gamma0 (no tail check)."""
    lo = max(-spec.omega0 / spec.gamma0, -window)
    # x = 0 (exact resonance) is always a panel edge, never a node
    inner = min(20.0, window)
    edges = np.unique(np.concatenate([
        np.linspace(lo, -inner, max(2, int(math.ceil((-inner - lo) / 2.0)) + 1)) if lo < -inner else [lo],
        np.linspace(-inner, inner, int(round(2 * inner / 0.05)) + 1),
        np.linspace(inner, window, max(2, int(math.ceil((window - inner) / 2.0)) + 1)),
        [0.0],
    ]))
    edges = edges[(edges >= lo) & (edges <= window)]

    def f(x):
        r, _ = scatter_many(spec, omega_rel=x)
        return np.abs(r) ** 2

    value, _ = adaptive_integrate(f, edges, epsabs)
    return value


@dataclass(frozen=True)
class OverallReflection:
    value: float
    window: float
    doubled_value: float

    @property
    def tail_change(self) -> float:
        return abs(self.doubled_value - self.value) / max(abs(self.doubled_value), 1e-300)


def overall_reflection(
    spec: LatticeSpec,
    window_halfwidth_in_gamma0: float = DEFAULT_WINDOW,
    epsabs: float = 1e-6,
    tail_rtol: float = 1e-3,
) -> OverallReflection:
    """R = (1/gamma0) * integral of |r(omega)|^2 d omega over omega0 +- W gamma0.

    The window is checked by repeating the integral at 2W; a relative change
    above ``tail_rtol`` raises ``TailCheckError``.
    """
    W = float(window_halfwidth_in_gamma0)
    if W < 20:
        raise ValueError(f"window half-width must be >= 20 gamma0, got {W}")
    if spec.n_qubits == 0:
        return OverallReflection(0.0, W, 0.0)
    R = reflectance_integral(spec, W, epsabs)
    R2 = reflectance_integral(spec, 2 * W, epsabs)
    out = OverallReflection(R, W, R2)
    if out.tail_change > tail_rtol:
        raise TailCheckError(
            f"doubling the window from {W:g} to {2 * W:g} gamma0 changed R by {out.tail_change:.2e} "
            f"(> {tail_rtol:g}); widen the window"
        )
    return out


# --- resistance scaling ----------------------------------------------------------


class Phase(str, enum.Enum):
    LOCALIZED = "localized"
    DELOCALIZED = "delocalized"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class FitRecord:
    sizes: tuple[int, ...]
    log1p_rho: tuple[float, ...]
    slope: float
    intercept: float
    r: float
    saturated: bool = False

    @property
    def r2(self) -> float:
        return self.r * self.r


def classify(rec: FitRecord, s_min: float = S_MIN, r_min: float = R_MIN) -> Phase:
    """Pure rule on a fit record: exponential growth of rho means localized."""
    if rec.saturated:
        return Phase.LOCALIZED
    if rec.slope >= s_min and rec.r >= r_min:
        return Phase.LOCALIZED
    if abs(rec.slope) < s_min:
        return Phase.DELOCALIZED
    return Phase.INDETERMINATE


def _check_sizes(sizes: Sequence[int]) -> list[int]:
    sizes = [int(n) for n in sizes]
    fib = set(fibonacci_sizes(MAX_SIZE))
    if len(sizes) < 4:
        raise ValueError(f"need at least 4 sizes, got {sizes}")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"sizes must be strictly increasing, got {sizes}")
    if sizes[-1] > MAX_SIZE:
        raise ValueError(f"largest size must be <= {MAX_SIZE}, got {sizes[-1]}")
    bad = [n for n in sizes if n not in fib]
    if bad:
        raise ValueError(f"sizes must be Fibonacci numbers, got {bad}")
    return sizes


def scaling_fits(spec_template: LatticeSpec, omegas, sizes: Sequence[int], *, omega_rel=None) -> list[FitRecord]:
    """Least-squares fit of ln(1 + rho(N)) against N at each frequency.

    One pass over the longest chain yields every size; ``n_qubits`` of the
    template is ignored.  ``omega_rel`` (detunings in gamma0) replaces
    ``omegas`` when given.
    """
    sizes = _check_sizes(sizes)
    spec = spec_template.with_(n_qubits=sizes[-1])
    if omega_rel is not None:
        omega_rel = np.atleast_1d(np.asarray(omega_rel, dtype=float))
        omegas = spec.omega0 + spec.gamma0 * omega_rel
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    prods = chain_products(spec, omegas, sizes, omega_rel=omega_rel)
    L = np.array([log1p_rho_from_products(*prods[n]) for n in sizes])  # (S, K)
    saturated = np.zeros(omegas.size, bool)
    for n in sizes:
        _, t = amplitudes_from_products(*prods[n])
        saturated |= np.abs(t) ** 2 == 0
    N = np.asarray(sizes, float)
    Nc = N - N.mean()
    Lc = L - L.mean(axis=0)
    slope = (Nc @ Lc) / (Nc @ Nc)
    intercept = L.mean(axis=0) - slope * N.mean()
    denom = np.sqrt((Nc @ Nc) * np.sum(Lc**2, axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(denom > 0, (Nc @ Lc) / np.where(denom > 0, denom, 1.0), 0.0)
    return [
        FitRecord(tuple(sizes), tuple(L[:, k].tolist()), float(slope[k]), float(intercept[k]), float(r[k]), bool(saturated[k]))
        for k in range(omegas.size)
    ]


def classify_scaling(
    spec_template: LatticeSpec,
    omega: float,
    sizes: Sequence[int],
    s_min: float = S_MIN,
    r_min: float = R_MIN,
) -> tuple[Phase, FitRecord]:
    rec = scaling_fits(spec_template, [omega], sizes)[0]
    return classify(rec, s_min, r_min), rec


def default_map_sizes(max_size: int = 987) -> list[int]:
    """Fibonacci ladder 21, 34, ..., max_size."""
    return fibonacci_sizes(max_size, 21)


def offset_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Relative frequencies (k + 1/2) * step inside [lo, hi]; never exactly 0."""
    k0 = math.ceil(lo / step - 0.5)
    k1 = math.floor(hi / step - 0.5)
    return (np.arange(k0, k1 + 1) + 0.5) * step


@dataclass
class PhaseMap:
    delta_grid: np.ndarray
    omega_rel_grid: np.ndarray
    records: list[list[FitRecord | None]]
    s_min: float = S_MIN
    r_min: float = R_MIN
    errors: dict[tuple[int, int], str] = field(default_factory=dict)

    def classes(self, s_min: float | None = None, r_min: float | None = None) -> np.ndarray:
        s_min = self.s_min if s_min is None else s_min
        r_min = self.r_min if r_min is None else r_min
        out = np.empty((len(self.delta_grid), len(self.omega_rel_grid)), dtype=object)
        for i, row in enumerate(self.records):
            for k, rec in enumerate(row):
                out[i, k] = Phase.INDETERMINATE if rec is None else classify(rec, s_min, r_min)
        return out

    def regions(self, s_min: float | None = None, r_min: float | None = None) -> list[dict]:
        """Connected (4-neighbour) localized regions with bounding boxes."""
        # elementwise identity; numpy would compare against str(Phase.LOCALIZED)
        loc = np.vectorize(lambda c: c is Phase.LOCALIZED, otypes=[bool])(self.classes(s_min, r_min))
        lab, n = ndimage.label(loc)
        out = []
        for i in range(1, n + 1):
            ii, kk = np.nonzero(lab == i)
            out.append({
                "cells": int(ii.size),
                "delta_min": float(self.delta_grid[ii.min()]),
                "delta_max": float(self.delta_grid[ii.max()]),
                "omega_rel_min": float(self.omega_rel_grid[kk.min()]),
                "omega_rel_max": float(self.omega_rel_grid[kk.max()]),
            })
        out.sort(key=lambda reg: reg["omega_rel_min"])
        return out

    def rows(self) -> list[tuple]:
        cls = self.classes()
        rows = []
        for i, d in enumerate(self.delta_grid):
            for k, x in enumerate(self.omega_rel_grid):
                rec = self.records[i][k]
                slope = rec.slope if rec else float("nan")
                r2 = rec.r2 if rec else float("nan")
                rows.append((float(d), float(x), cls[i, k].value, slope, r2))
        return rows


PHASE_MAP_COLUMNS = ("delta", "omega_rel", "class", "slope", "fit_r2")


def _map_row(args):
    spec_template, delta, omega_rel, sizes = args
    try:
        return scaling_fits(spec_template.with_(delta=float(delta)), None, sizes, omega_rel=omega_rel), None
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return None, str(exc)


def phase_map(
    spec_template: LatticeSpec,
    delta_grid,
    omega_rel_grid,
    sizes: Sequence[int] | None = None,
    *,
    s_min: float = S_MIN,
    r_min: float = R_MIN,
    mapper=map,
) -> PhaseMap:
    """Classify every (delta, omega) cell by resistance scaling.

    ``omega_rel_grid`` is (omega - omega0)/gamma0 and must not contain 0.
    Rows (one per delta) are independent; ``mapper`` may be parallel and the
    map is assembled in grid order.
    """
    delta_grid = np.asarray(delta_grid, float)
    omega_rel_grid = np.asarray(omega_rel_grid, float)
    if delta_grid.size == 0 or omega_rel_grid.size == 0:
        raise ValueError("phase map grids must be non-empty")
    if np.any(omega_rel_grid == 0):
        raise ValueError("omega grid contains omega0 exactly")
    sizes = default_map_sizes() if sizes is None else _check_sizes(sizes)
    results = list(mapper(_map_row, [(spec_template, d, omega_rel_grid, sizes) for d in delta_grid]))
    records, errors = [], {}
    for i, (recs, err) in enumerate(results):
        if recs is None:
            records.append([None] * omega_rel_grid.size)
            errors.update({(i, k): err for k in range(omega_rel_grid.size)})
        else:
            records.append(recs)
    return PhaseMap(delta_grid, omega_rel_grid, records, s_min, r_min, errors)


TRANSMISSION_COLUMNS = ("omega", "omega_rel", "n_qubits", "abs_t2", "log_abs_t2")


@dataclass
class TransmissionSeries:
    omega_rel: np.ndarray
    sizes: list[int]
    t2: np.ndarray  # (len(sizes), K)
    log_t2: np.ndarray  # ln|t|^2 = -ln(1 + rho); finite past underflow

    def rows(self, omega0: float, gamma0: float) -> list[tuple]:
        return [
            (omega0 + gamma0 * x, float(x), n, float(self.t2[s, k]), float(self.log_t2[s, k]))
            for s, n in enumerate(self.sizes)
            for k, x in enumerate(self.omega_rel)
        ]


def transmission_vs_size(spec_template: LatticeSpec, omega_rel_grid, sizes=(144, 233, 377, 610)) -> TransmissionSeries:
    """|t|^2 on a frequency grid for several chain lengths (one sweep)."""
    sizes = sorted(int(n) for n in sizes)
    fib = set(fibonacci_sizes(MAX_SIZE)) | {0}
    if any(n not in fib for n in sizes):
        raise ValueError(f"sizes must be Fibonacci numbers, got {sizes}")
    x = np.asarray(omega_rel_grid, float)
    spec = spec_template.with_(n_qubits=sizes[-1])
    prods = chain_products(spec, None, sizes, omega_rel=x)
    t2 = np.array([np.abs(amplitudes_from_products(*prods[n])[1]) ** 2 for n in sizes])
    log_t2 = -np.array([log1p_rho_from_products(*prods[n]) for n in sizes])
    return TransmissionSeries(x, sizes, t2, log_t2)
