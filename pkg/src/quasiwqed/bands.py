"""Bloch bands of rational approximants and the flat/curved inverse-band count."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import FibonacciApproximant, LatticeSpec, reduced_positions

SINGULAR_TOL = 1e-9
GUARD = 1e-6


class SingularQuasimomentum(ValueError):
    pass


class BandLabel(str, enum.Enum):
    FLAT = "flat"
    CURVED = "curved"
    INDETERMINATE = "indeterminate"


def cell_positions(approximant: FibonacciApproximant, spec: LatticeSpec) -> np.ndarray:
    """Sublattice positions l = 1..eta in units of d (beta = chi/eta)."""
    return reduced_positions(approximant.eta, spec.delta, approximant.beta, spec.theta)


def bloch_hamiltonian(q: float, approximant: FibonacciApproximant, spec: LatticeSpec) -> np.ndarray:
    """Hermitian eta x eta Bloch matrix whose eigenvalues are (omega_q - omega0)/gamma0."""
    eta = approximant.eta
    phi = spec.phi
    den = math.cos(q * eta) - math.cos(phi * eta)
    if abs(den) <= SINGULAR_TOL:
        raise SingularQuasimomentum(f"q={q!r} hits the light-line divergence cos(q eta) = cos(phi eta)")
    z = cell_positions(approximant, spec)
    dz = z[None, :] - z[:, None]  # [l, l'] = z_l' - z_l
    return (
        np.sin(phi * np.abs(dz))
        + 1j * math.sin(q * eta) * np.sin(phi * dz) / den
        + math.sin(phi * eta) * np.cos(phi * dz) / den
    )


def singular_quasimomenta(eta: int, phi: float) -> np.ndarray:
    """q in [-pi/eta, pi/eta] with cos(q eta) = cos(phi eta)."""
    a = math.remainder(phi * eta, 2 * math.pi)  # in [-pi, pi]
    return np.unique(np.array([a, -a]) / eta)


def quasimomentum_grid(eta: int, phi: float, n_q: int) -> np.ndarray:
    if n_q < 64:
        raise ValueError(f"n_q must be >= 64, got {n_q}")
    q = np.linspace(-math.pi / eta, math.pi / eta, n_q)
    sing = singular_quasimomenta(eta, phi)
    keep = np.ones(q.size, bool)
    for s in sing:
        keep &= np.abs(q - s) > GUARD
    den = np.cos(q * eta) - np.cos(phi * eta)
    keep &= np.abs(den) > SINGULAR_TOL
    return q[keep]


def _angle(lam: np.ndarray) -> np.ndarray:
    # projective coordinate: lambda = +-inf meet at pi, lambda = 0 (S = +-inf) at 0
    return 2.0 * np.arctan(lam)


def _circ(a, b):
    d = np.abs(a[:, None] - b[None, :]) % (2 * np.pi)
    return np.minimum(d, 2 * np.pi - d)


@dataclass
class BlochBandSet:
    approximant: FibonacciApproximant
    q_grid: np.ndarray
    bands: np.ndarray  # (eta, n_q) lambda_b(q)
    labels: list[BandLabel]
    ambiguous_steps: list[int] = field(default_factory=list)

    @property
    def inverse_bands(self) -> np.ndarray:
        """gamma0 S_b(q) = 1 / lambda_b(q)."""
        with np.errstate(divide="ignore"):
            return 1.0 / self.bands

    def count(self, label: BandLabel) -> int:
        return sum(1 for lab in self.labels if lab == label)


def _classify(lam: np.ndarray) -> BandLabel:
    a = np.abs(lam)
    # gamma0 |S| >= 1 everywhere  <=>  |lambda| <= 1 everywhere
    if a.max() <= 1.0:
        return BandLabel.FLAT
    if a.min() >= 1.0:
        return BandLabel.CURVED
    return BandLabel.INDETERMINATE


def inverse_bands(approximant: FibonacciApproximant, spec: LatticeSpec, n_q: int = 512) -> BlochBandSet:
    """Band structure on a uniform q grid, stitched into continuous bands.

    Stitching matches eigenvalues between neighbouring q points through the
    projective angle 2 arctan(lambda), which is continuous across the
    divergence lambda -> +-inf (S passing through 0) and across exactly dark
    bands (lambda = 0).
    """
    eta = approximant.eta
    q = quasimomentum_grid(eta, spec.phi, n_q)
    eig = np.array([np.linalg.eigvalsh(bloch_hamiltonian(qi, approximant, spec)) for qi in q])
    bands = np.empty((eta, q.size))
    bands[:, 0] = eig[0]
    ambiguous = []
    for i in range(1, q.size):
        prev = _angle(bands[:, i - 1])
        cur = _angle(eig[i])
        cost = _circ(prev, cur)
        rows, cols = linear_sum_assignment(cost)
        bands[rows, i] = eig[i][cols]
        if eta > 1:
            gaps = _circ(cur, cur) + np.eye(eta) * 10
            if gaps.min() < 1e-10:
                ambiguous.append(i)
    labels = [_classify(bands[b]) for b in range(eta)]
    return BlochBandSet(approximant, q, bands, labels, ambiguous)


@dataclass(frozen=True)
class LocalizationFraction:
    flat: int
    curved: int
    indeterminate: int
    eta: int

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.flat, self.eta)

    @property
    def value(self) -> float:
        return self.flat / self.eta

    @property
    def bounds(self) -> tuple[Fraction, Fraction]:
        """Fraction range if every indeterminate band went either way."""
        return Fraction(self.flat, self.eta), Fraction(self.flat + self.indeterminate, self.eta)

    @property
    def determinate(self) -> bool:
        return self.indeterminate == 0


def localization_fraction(approximant: FibonacciApproximant, spec: LatticeSpec, n_q: int = 512) -> LocalizationFraction:
    """Fraction of flat inverse bands (gamma0 |S| >= 1 over the whole zone).

    If stitching hit near-degenerate steps and left bands indeterminate, the
    count falls back to classifying eigenvalues point by point, accepted
    only when the per-q counts are the same at every q.
    """
    bs = inverse_bands(approximant, spec, n_q)
    flat, curved, indet = (bs.count(lab) for lab in BandLabel)
    if indet and bs.ambiguous_steps:
        a = np.abs(bs.bands)
        n_flat = (a <= 1.0).sum(axis=0)
        n_curved = (a >= 1.0).sum(axis=0)
        if n_flat.min() == n_flat.max() and n_curved.min() == n_curved.max() and n_flat[0] + n_curved[0] == bs.bands.shape[0]:
            flat, curved, indet = int(n_flat[0]), int(n_curved[0]), 0
    return LocalizationFraction(flat, curved, indet, approximant.eta)


BAND_COLUMNS = ("q", "band_index", "lambda", "gamma0_S", "label")


def band_rows(bs: BlochBandSet) -> list[tuple]:
    rows = []
    S = bs.inverse_bands
    for b in range(bs.bands.shape[0]):
        for i, qi in enumerate(bs.q_grid):
            rows.append((qi, b, bs.bands[b, i], S[b, i], bs.labels[b].value))
    return rows
