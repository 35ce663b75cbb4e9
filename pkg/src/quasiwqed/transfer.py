"""Real-space transfer matrices for single-photon scattering.

Each emitter contributes a unimodular 2x2 matrix; the chain matrix is the
ordered product ``M_N ... M_1``.  Products are renormalized every
``RENORM_EVERY`` steps and the discarded magnitude is kept in ``log_scale`` so
chains of a few thousand emitters deep in a localized phase stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import LatticeSpec, qubit_positions

RENORM_EVERY = 32


class PoleAtResonance(ValueError):
    """Photon frequency coincides exactly with the qubit transition."""


@dataclass(frozen=True)
class TransferMatrix2:
    """2x2 matrix ``exp(log_scale) * [[t11, t12], [t21, t22]]``."""

    t11: complex
    t12: complex
    t21: complex
    t22: complex
    log_scale: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([[self.t11, self.t12], [self.t21, self.t22]])

    def det(self) -> complex:
        """Determinant of the unscaled matrix (multiply by exp(2 log_scale))."""
        return self.t11 * self.t22 - self.t12 * self.t21


@dataclass(frozen=True)
class ScatteringAmplitudes:
    kappa: float
    omega: float
    r: complex
    t: complex

    @property
    def reflectance(self) -> float:
        return abs(self.r) ** 2

    @property
    def transmittance(self) -> float:
        return abs(self.t) ** 2

    @property
    def rho(self) -> float:
        return landauer(self.r, self.t)


def landauer(r, t):
    """Dimensionless resistance (1 - |t|^2)/|t|^2.

    The numerator is taken as |r|^2, equal by flux conservation, so that
    rho stays accurate when |t| is close to 1.
    """
    t2 = np.abs(t) ** 2
    r2 = np.abs(r) ** 2
    with np.errstate(divide="ignore"):
        return np.where(t2 > 0, r2 / np.where(t2 > 0, t2, 1.0), np.inf)


def _coupling(omega, spec: LatticeSpec, omega_rel=None):
    """f = i gamma0 / (2 (omega0 - omega)).

    ``omega_rel = (omega - omega0)/gamma0``, when given, supplies the
    detuning directly; narrow resonances are then resolved below the
    spacing of doubles near omega0.
    """
    if omega_rel is not None:
        detuning = -spec.gamma0 * np.asarray(omega_rel, dtype=float)
    else:
        detuning = spec.omega0 - np.asarray(omega, dtype=float)
    if np.any(detuning == 0):
        raise PoleAtResonance(
            f"omega = omega0 = {spec.omega0!r} exactly; f diverges (offset the grid or use the Green-function path)"
        )
    return 1j * spec.gamma0 / (2.0 * detuning)


def emitter_matrix(kappa: float, z: float, spec: LatticeSpec) -> TransferMatrix2:
    """Transfer matrix of a single emitter at position ``z``."""
    if not kappa > 0:
        raise ValueError(f"kappa must be > 0 (right-moving input), got {kappa}")
    f = complex(_coupling(kappa, spec))
    return TransferMatrix2(
        1 + 2 * f,
        2 * f * np.exp(-2j * kappa * z),
        -2 * f * np.exp(2j * kappa * z),
        1 - 2 * f,
        0.0,
    )


def chain_products(
    spec: LatticeSpec,
    omegas: Iterable[float],
    checkpoints: Sequence[int] | None = None,
    omega_rel=None,
) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Renormalized chain products for many frequencies at once.

    Returns ``{n: (T, log_scale)}`` for each checkpoint ``n`` (default: N
    only), where ``T`` has shape ``(K, 2, 2)`` and ``log_scale`` shape
    ``(K,)``.  The chain of ``n`` emitters is the first ``n`` qubits of
    ``spec``, so a single sweep yields every size in ``checkpoints``.
    Pass ``omegas=None`` and ``omega_rel`` to work in detuning units.
    """
    if omega_rel is not None:
        omega_rel = np.atleast_1d(np.asarray(omega_rel, dtype=float))
        omegas = spec.omega0 + spec.gamma0 * omega_rel
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    if np.any(omegas <= 0):
        raise ValueError("photon frequencies must be > 0")
    f2 = 2.0 * _coupling(omegas, spec, omega_rel)
    if checkpoints is None:
        checkpoints = [spec.n_qubits]
    checkpoints = sorted(set(int(n) for n in checkpoints))
    if checkpoints and (checkpoints[0] < 0 or checkpoints[-1] > spec.n_qubits):
        raise ValueError(f"checkpoints must lie in [0, {spec.n_qubits}]")
    z = qubit_positions(spec)

    k = omegas.size
    a = np.ones(k, dtype=complex)
    b = np.zeros(k, dtype=complex)
    c = np.zeros(k, dtype=complex)
    d = np.ones(k, dtype=complex)
    log_scale = np.zeros(k)
    out: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    pending = list(checkpoints)

    def snapshot(n):
        out[n] = (np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2).copy(), log_scale.copy())

    while pending and pending[0] == 0:
        snapshot(pending.pop(0))
    m11 = 1 + f2
    m22 = 1 - f2
    for j in range(1, (checkpoints[-1] if checkpoints else 0) + 1):
        ph = np.exp(2j * omegas * z[j - 1])
        m12 = f2 / ph
        m21 = -f2 * ph
        a, b, c, d = (
            m11 * a + m12 * c,
            m11 * b + m12 * d,
            m21 * a + m22 * c,
            m21 * b + m22 * d,
        )
        if j % RENORM_EVERY == 0:
            s = np.maximum.reduce([np.abs(a), np.abs(b), np.abs(c), np.abs(d)])
            a, b, c, d = a / s, b / s, c / s, d / s
            log_scale += np.log(s)
        while pending and pending[0] == j:
            snapshot(pending.pop(0))
    return out


def chain_matrix(spec: LatticeSpec, kappa: float) -> TransferMatrix2:
    """Chain matrix ``M_N ... M_1`` at a single wavenumber."""
    if not kappa > 0:
        raise ValueError(f"kappa must be > 0 (right-moving input), got {kappa}")
    T, ls = chain_products(spec, [kappa])[spec.n_qubits]
    T = T[0]
    return TransferMatrix2(T[0, 0], T[0, 1], T[1, 0], T[1, 1], float(ls[0]))


def amplitudes_from_products(T: np.ndarray, log_scale: np.ndarray):
    """Reflection and transmission from renormalized chain products.

    ``t = T11 - T12 T21 / T22`` equals ``det(T) / T22`` and det(T) = 1 for
    the true product, so ``t = 1 / T22``; the subtractive form cancels
    catastrophically once the chain localizes.
    """
    t22 = T[..., 1, 1]
    r = -T[..., 1, 0] / t22
    with np.errstate(over="ignore", under="ignore"):
        t = np.exp(-log_scale) / t22
    return r, t


def log1p_rho_from_products(T: np.ndarray, log_scale: np.ndarray) -> np.ndarray:
    """ln(1 + rho) = ln |T22|^2, finite even when |t|^2 underflows."""
    return 2.0 * (np.log(np.abs(T[..., 1, 1])) + log_scale)


def scatter_many(spec: LatticeSpec, omegas=None, *, omega_rel=None) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``(r, t)`` over photon frequencies (or relative detunings)."""
    T, ls = chain_products(spec, omegas, omega_rel=omega_rel)[spec.n_qubits]
    return amplitudes_from_products(T, ls)


def scatter(spec: LatticeSpec, kappa: float) -> ScatteringAmplitudes:
    """Reflection and transmission amplitudes for a right-moving photon."""
    if not kappa > 0:
        raise ValueError(f"kappa must be > 0 (right-moving input), got {kappa}")
    r, t = scatter_many(spec, [kappa])
    if not np.isfinite(r[0]):
        raise ArithmeticError(f"T22 vanished at kappa={kappa!r}; impossible for a lossless chain")
    return ScatteringAmplitudes(kappa, abs(kappa), complex(r[0]), complex(t[0]))


@dataclass(frozen=True)
class Resistance:
    rho: float
    log1p_rho: float
    rho_product: float | None

    @property
    def saturated(self) -> bool:
        return not np.isfinite(self.rho)


def resistance_detail(spec: LatticeSpec, kappa: float) -> Resistance:
    """Landauer resistance with the T12*T21 cross-check value.

    ``rho_product`` is ``Re(T12 T21) exp(2 log_scale)`` when representable,
    otherwise ``None``.
    """
    tm = chain_matrix(spec, kappa)
    T = tm.as_array()
    r, t = amplitudes_from_products(T, np.asarray(tm.log_scale))
    rho = float(landauer(r, t))
    l1p = float(log1p_rho_from_products(T, np.asarray(tm.log_scale)))
    prod = None
    if 2 * tm.log_scale < 700:
        prod = float((tm.t12 * tm.t21).real * np.exp(2 * tm.log_scale))
    return Resistance(rho, l1p, prod)


def resistance(spec: LatticeSpec, kappa: float) -> float:
    """Dimensionless Landauer resistance; ``inf`` once |t|^2 underflows."""
    return resistance_detail(spec, kappa).rho
