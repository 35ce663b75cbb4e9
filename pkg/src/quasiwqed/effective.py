"""Single-excitation effective Hamiltonian and its spectrum."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import scipy.linalg

from .model import LatticeSpec, qubit_positions


class EigensolverError(RuntimeError):
    pass


class ExceptionalPointError(ValueError):
    pass


@dataclass(frozen=True)
class Markov:
    """Hopping phases evaluated at the transition frequency omega0."""


@dataclass(frozen=True)
class AtFrequency:
    """Hopping phases evaluated at the photon frequency."""

    omega: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"AtFrequency needs omega > 0, got {self.omega}")


PhaseMode = Union[Markov, AtFrequency]


def _wavenumber(spec: LatticeSpec, mode: PhaseMode) -> float:
    return spec.omega0 if isinstance(mode, Markov) else mode.omega


@dataclass(frozen=True, eq=False)
class EffectiveHamiltonian:
    matrix: np.ndarray
    phase_mode: PhaseMode
    spec: LatticeSpec

    @property
    def wavenumber(self) -> float:
        return _wavenumber(self.spec, self.phase_mode)

    def coupling(self) -> np.ndarray:
        """``(H - omega0) / gamma0``: the dimensionless photon-mediated part."""
        return (self.matrix - self.spec.omega0 * np.eye(self.spec.n_qubits)) / self.spec.gamma0


def coupling_matrix(spec: LatticeSpec, k: float, z: np.ndarray | None = None) -> np.ndarray:
    """``-i exp(i k |z_l - z_j|)`` for all pairs, diagonal included."""
    if z is None:
        z = qubit_positions(spec)
    return -1j * np.exp(1j * k * np.abs(z[:, None] - z[None, :]))


def build_effective_hamiltonian(spec: LatticeSpec, phase_mode: PhaseMode = Markov()) -> EffectiveHamiltonian:
    """H[j, l] = omega0 delta_jl - i gamma0 exp(i k |z_l - z_j|).

    ``k`` is omega0 in Markov mode and the photon frequency otherwise.  The
    result is complex symmetric, not Hermitian.
    """
    k = _wavenumber(spec, phase_mode)
    H = spec.gamma0 * coupling_matrix(spec, k)
    H[np.diag_indices_from(H)] = spec.omega0 - 1j * spec.gamma0
    return EffectiveHamiltonian(H, phase_mode, spec)


@dataclass(frozen=True, eq=False)
class ExcitationSpectrum:
    eigenvalues: np.ndarray
    eigenvectors_l2: np.ndarray  # columns
    eigenvectors_sym: np.ndarray  # columns, sum psi^2 = 1; NaN where exceptional
    ipr: np.ndarray
    lifetime_ratio: np.ndarray
    exceptional: np.ndarray  # bool per state
    gamma0: float

    def __len__(self):
        return self.eigenvalues.size

    def probabilities(self) -> np.ndarray:
        """P_n(j) = |psi_n(j)|^2, shape (n_states, n_sites)."""
        return (np.abs(self.eigenvectors_l2) ** 2).T


def ipr(psi) -> float:
    """Inverse participation ratio sum_j |psi_j|^4 of an L2-normalized state."""
    psi = np.asarray(psi)
    norm = float(np.sum(np.abs(psi) ** 2))
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"state not normalized: sum |psi|^2 = {norm!r}")
    return float(np.sum(np.abs(psi) ** 4))


def lifetime_ratio(omega_n: complex, gamma0: float) -> float:
    """tau / tau0 = gamma0 / |Im omega_n|; > 1 subradiant, < 1 superradiant."""
    im = complex(omega_n).imag
    if not im < 0:
        raise ValueError(f"Im(omega_n) must be negative, got {im!r}")
    return gamma0 / abs(im)


def _fingerprint(a: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()[:16]


def eigendecompose(H: EffectiveHamiltonian) -> ExcitationSpectrum:
    """Full eigendecomposition, sorted by ascending Re(omega), then Im(omega).

    The solver works on ``(H - omega0)/gamma0`` to keep rounding relative to
    gamma0 rather than omega0.  Imaginary parts are then taken from the
    radiated power of each eigenvector: with ``H = Hr - i gamma0 C`` and
    ``C[j, l] = cos(k (z_j - z_l))`` positive semidefinite of rank two,

        Im(omega) = -gamma0 (|cos(k z) . psi|^2 + |sin(k z) . psi|^2)

    for unit ``psi``.  This matches the solver's value to rounding but keeps
    the sign right for bulk-localized states whose decay rates sit far below
    machine precision.
    """
    spec = H.spec
    n = spec.n_qubits
    if n < 1:
        raise ValueError("eigendecompose needs at least one qubit")
    K = H.coupling()
    try:
        w, v = scipy.linalg.eig(K, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(f"eigensolver failed for matrix {_fingerprint(H.matrix)}: {exc}") from exc

    order = np.lexsort((w.imag, w.real))
    w, v = w[order], v[:, order]
    v = v / np.linalg.norm(v, axis=0)

    k = H.wavenumber
    z = qubit_positions(spec)
    radiated = np.abs(np.cos(k * z) @ v) ** 2 + np.abs(np.sin(k * z) @ v) ** 2
    eigenvalues = spec.omega0 + spec.gamma0 * (w.real - 1j * radiated)

    sq = np.sum(v * v, axis=0)
    exceptional = np.abs(sq) < 1e-12
    v_sym = np.where(exceptional, np.nan, v / np.sqrt(np.where(exceptional, 1.0, sq)))

    with np.errstate(divide="ignore"):
        life = np.where(radiated > 0, 1.0 / np.where(radiated > 0, radiated, 1.0), np.inf)
    return ExcitationSpectrum(
        eigenvalues=eigenvalues,
        eigenvectors_l2=v,
        eigenvectors_sym=v_sym,
        ipr=np.sum(np.abs(v) ** 4, axis=0),
        lifetime_ratio=life,
        exceptional=exceptional,
        gamma0=spec.gamma0,
    )


def spectrum(spec: LatticeSpec, phase_mode: PhaseMode = Markov()) -> ExcitationSpectrum:
    return eigendecompose(build_effective_hamiltonian(spec, phase_mode))


@dataclass(frozen=True)
class Delta:
    grid: Sequence[float]
    name = "delta"


@dataclass(frozen=True)
class Theta:
    grid: Sequence[float]
    name = "theta"


SPECTRUM_COLUMNS = ("axis_name", "axis_value", "n", "re_omega", "im_omega", "ipr", "lifetime_ratio")


@dataclass
class SweepPoint:
    axis_value: float
    spectrum: ExcitationSpectrum | None
    error: str | None = None


def _sweep_one(args):
    spec, mode = args
    try:
        return spectrum(spec, mode), None
    except (EigensolverError, np.linalg.LinAlgError) as exc:
        return None, str(exc)


def spectrum_sweep(spec_template: LatticeSpec, axis: Union[Delta, Theta], *, mapper=map,
                   phase_mode: PhaseMode = Markov()) -> list[SweepPoint]:
    """Diagonalize the effective Hamiltonian at every grid point.

    ``mapper`` may be a parallel ``map`` (e.g. ``Executor.map``); results
    come back in grid order regardless.
    """
    grid = [float(x) for x in axis.grid]
    if not grid:
        raise ValueError("sweep grid is empty")
    specs = [spec_template.with_(**{axis.name: x}) for x in grid]
    results = list(mapper(_sweep_one, [(s, phase_mode) for s in specs]))
    return [SweepPoint(x, sp, err) for x, (sp, err) in zip(grid, results)]


def sweep_rows(axis_name: str, points: list[SweepPoint]) -> list[tuple]:
    """Flatten a sweep into long-format rows matching ``SPECTRUM_COLUMNS``."""
    rows = []
    for p in points:
        if p.spectrum is None:
            continue
        sp = p.spectrum
        for n in range(len(sp)):
            w = sp.eigenvalues[n]
            rows.append((axis_name, p.axis_value, n, w.real, w.imag, sp.ipr[n], sp.lifetime_ratio[n]))
    return rows


def hermiticity_defect(H: EffectiveHamiltonian) -> float:
    return float(np.linalg.norm(H.matrix - H.matrix.conj().T))

