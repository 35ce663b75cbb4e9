"""Scattering through the excitation Green function G(omega) = (omega - H_eff)^-1.

The effective Hamiltonian here always carries photon-frequency phases
(``AtFrequency``); Markov phases are only for spectral plots.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .effective import AtFrequency, ExceptionalPointError, build_effective_hamiltonian, coupling_matrix, eigendecompose
from .model import LatticeSpec, qubit_positions

COND_LIMIT = 1e14
REFINE_ABOVE = 1000  # chain length past which scatter_green refines by default
REFINE_COND = 1e4  # ... and condition number past which it refines at any length


class NearSingularResolvent(ArithmeticError):
    pass


def _resolvent_operator(spec: LatticeSpec, omega: float, omega_rel: float | None = None) -> np.ndarray:
    """``(omega - H_eff(omega)) / gamma0`` built from the detuning directly."""
    if not omega > 0:
        raise ValueError(f"omega must be > 0, got {omega}")
    x = (omega - spec.omega0) / spec.gamma0 if omega_rel is None else float(omega_rel)
    A = -coupling_matrix(spec, omega)
    A[np.diag_indices_from(A)] += x
    return A


def _lu(A: np.ndarray, omega: float):
    """LU factors and the LAPACK reciprocal condition estimate."""
    lu = scipy.linalg.lu_factor(A, check_finite=True)
    rcond = _rcond_estimate(A, lu)
    if rcond < 1.0 / COND_LIMIT:
        raise NearSingularResolvent(f"omega - H_eff is near singular at omega={omega!r} (rcond={rcond:.3g})")
    return lu, rcond


def _rcond_estimate(A, lu):
    gecon = scipy.linalg.get_lapack_funcs("gecon", (lu[0],))
    anorm = np.linalg.norm(A, 1)
    rcond, _ = gecon(lu[0], anorm, norm="1")
    return rcond


def green_matrix(spec: LatticeSpec, omega: float) -> np.ndarray:
    """G(omega) = (omega I - H_eff(omega))^-1 via LU and N solves."""
    if spec.n_qubits == 0:
        return np.zeros((0, 0), dtype=complex)
    A = _resolvent_operator(spec, omega)
    lu, _ = _lu(A, omega)
    return scipy.linalg.lu_solve(lu, np.eye(spec.n_qubits, dtype=complex)) / spec.gamma0


def scatter_green(spec: LatticeSpec, omega: float | None = None, *, omega_rel: float | None = None,
                  refine: bool | None = None) -> tuple[complex, complex]:
    """(r, t) from the bilinear forms v^T G v and v^H G v, v_j = exp(i omega z_j).

    One factorization and one solve per frequency; G is never formed.
    ``omega_rel`` = (omega - omega0)/gamma0 may be given instead of ``omega``.
    ``refine`` adds one iterative-refinement step with an extended-precision
    residual; by default only for chains longer than ``REFINE_ABOVE`` or
    resolvents with condition number above ``REFINE_COND``.
    """
    if omega_rel is not None:
        omega = spec.omega0 + spec.gamma0 * omega_rel
    if omega is None or not omega > 0:
        raise ValueError(f"omega must be > 0, got {omega}")
    if spec.n_qubits == 0:
        return 0j, 1 + 0j
    A = _resolvent_operator(spec, omega, omega_rel)
    z = qubit_positions(spec)
    v = np.exp(1j * omega * z)
    # gamma0 G = A^-1
    lu, rcond = _lu(A, omega)
    y = scipy.linalg.lu_solve(lu, v)
    if refine is None:
        refine = spec.n_qubits > REFINE_ABOVE or rcond * REFINE_COND < 1.0
    if refine:
        x = (omega - spec.omega0) / spec.gamma0 if omega_rel is None else float(omega_rel)
        y = y + scipy.linalg.lu_solve(lu, _residual_extended(z, omega, x, y))
    return complex(-1j * (v @ y)), complex(1 - 1j * (v.conj() @ y))


def _residual_extended(z: np.ndarray, omega: float, x: float, y: np.ndarray, block: int = 256) -> np.ndarray:
    """``v - A y`` with A and v rebuilt in extended precision, row block by row block.

    Rounding the phases omega |z_j - z_l| to double breaks the lossless
    structure of A by ~N eps; one refinement step against the extended
    operator restores flux conservation for chains of a few thousand sites.
    """
    L = np.longdouble
    zl = z.astype(L)
    wl = L(omega)
    yr, yi = y.real.astype(L), y.imag.astype(L)
    out = np.empty(z.size, dtype=complex)
    for start in range(0, z.size, block):
        sl = slice(start, start + block)
        ph = wl * np.abs(zl[sl, None] - zl[None, :])
        # A = x I + i exp(i ph)
        ar, ai = -np.sin(ph), np.cos(ph)
        rows = np.arange(ph.shape[0])
        ar[rows, rows + start] += L(x)
        vr, vi = np.cos(wl * zl[sl]), np.sin(wl * zl[sl])
        out[sl] = (vr - (ar @ yr - ai @ yi)) + 1j * (vi - (ar @ yi + ai @ yr))
    return out


def reflection_green(spec: LatticeSpec, omega: float) -> complex:
    """r = -i gamma0 sum_{j,j'} G_{jj'} exp(i omega (z_j + z_j'))."""
    return scatter_green(spec, omega)[0]


def transmission_green(spec: LatticeSpec, omega: float) -> complex:
    """t = 1 - i gamma0 sum_{j,j'} G_{jj'} exp(i omega (z_j' - z_j))."""
    return scatter_green(spec, omega)[1]


def modal_terms(spec: LatticeSpec, omega: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-eigenstate contributions to r, and the eigenvalues they belong to.

    The spectrum is recomputed at the photon frequency so the expansion is
    exact.  Refuses when a state sits at an exceptional point.
    """
    sp = eigendecompose(build_effective_hamiltonian(spec, AtFrequency(omega)))
    if sp.exceptional.any():
        idx = np.flatnonzero(sp.exceptional).tolist()
        raise ExceptionalPointError(
            f"states {idx} are at an exceptional point (sum psi^2 ~ 0); use the direct solve instead"
        )
    v = np.exp(1j * omega * qubit_positions(spec))
    proj = v @ sp.eigenvectors_sym
    terms = -1j * spec.gamma0 * proj**2 / (omega - sp.eigenvalues)
    return terms, sp.eigenvalues


def reflection_modal(spec: LatticeSpec, omega: float) -> complex:
    """r = -i gamma0 sum_n (sum_j psi_n(j) e^{i omega z_j})^2 / (omega - omega_n)."""
    if not omega > 0:
        raise ValueError(f"omega must be > 0, got {omega}")
    if spec.n_qubits == 0:
        return 0j
    terms, _ = modal_terms(spec, omega)
    return complex(terms.sum())
