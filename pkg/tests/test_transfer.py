import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import eval_chebyu

from quasiwqed.model import Golden, LatticeSpec, Rational, qubit_positions
from quasiwqed.transfer import (
    PoleAtResonance,
    chain_matrix,
    chain_products,
    emitter_matrix,
    landauer,
    log1p_rho_from_products,
    resistance,
    resistance_detail,
    scatter,
    scatter_many,
)

small_specs = st.builds(
    LatticeSpec,
    n_qubits=st.integers(1, 80),
    phi=st.floats(0.1, 6.0),
    delta=st.floats(0.0, 0.5),
    beta=st.sampled_from([Golden(), Rational(13, 8)]),
    theta=st.floats(0.0, 6.28),
)
detunings = st.floats(-30, 30).filter(lambda x: abs(x) > 1e-6)


def single_emitter(detuning, z, omega0=100.0, gamma0=0.01):
    """Textbook two-level scatterer: r = -i G e^{2i w z} / (w - w0 + i G), t = 1 + r e^{-2i w z}."""
    omega = omega0 + detuning
    r = -1j * gamma0 * np.exp(2j * omega * z) / (detuning + 1j * gamma0)
    return r, 1 + r * np.exp(-2j * omega * z)


def uniform_chain_oracle(spec, omega):
    """delta = 0: T = U_N (M0 P)^(N-1) M0 U_1^-1 with the power from Chebyshev polynomials."""
    n, d = spec.n_qubits, spec.spacing
    f = 1j * spec.gamma0 / (2 * (spec.omega0 - omega))
    M0 = np.array([[1 + 2 * f, 2 * f], [-2 * f, 1 - 2 * f]])
    P = np.diag([np.exp(1j * omega * d), np.exp(-1j * omega * d)])
    A = M0 @ P
    x = (np.trace(A) / 2).real  # f is imaginary, so the trace is real
    An = eval_chebyu(n - 2, x) * A - eval_chebyu(n - 3, x) * np.eye(2) if n >= 3 else np.linalg.matrix_power(A, n - 1)
    U = lambda z: np.diag([np.exp(-1j * omega * z), np.exp(1j * omega * z)])
    T = U(n * d) @ An @ M0 @ np.linalg.inv(U(d))
    return -T[1, 0] / T[1, 1], 1 / T[1, 1]


def test_single_emitter_closed_form():
    spec = LatticeSpec(1, delta=0.3, theta=1.0)
    z = qubit_positions(spec)[0]
    x = np.linspace(-25, 25, 100)
    r, t = scatter_many(spec, omega_rel=x)
    r0, t0 = single_emitter(0.01 * x, z)
    assert np.allclose(r, r0, rtol=1e-12, atol=0)
    assert np.allclose(t, t0, rtol=1e-12, atol=0)


def test_single_emitter_reflects_fully_at_resonance():
    spec = LatticeSpec(1)
    for eps in (1e-6, -1e-6):
        r, _ = scatter_many(spec, omega_rel=[eps])
        assert abs(r[0]) ** 2 == pytest.approx(1.0, abs=1e-6)


def test_exact_resonance_raises():
    with pytest.raises(PoleAtResonance):
        scatter(LatticeSpec(3), 100.0)
    with pytest.raises(PoleAtResonance):
        scatter_many(LatticeSpec(3), omega_rel=[0.0])


def test_negative_wavenumber_rejected():
    with pytest.raises(ValueError):
        scatter(LatticeSpec(3), -100.0)
    with pytest.raises(ValueError):
        emitter_matrix(0.0, 0.1, LatticeSpec(1))


@pytest.mark.parametrize("n", [2, 3, 8, 55, 144])
@pytest.mark.parametrize("phi", [0.4, 1.0, 2.5])
def test_uniform_chain_matches_chebyshev_oracle(n, phi):
    spec = LatticeSpec(n, phi=phi)
    for x in np.linspace(-7.3, 7.1, 23):
        omega = 100 + 0.01 * x
        r, t = scatter_many(spec, [omega])
        r0, t0 = uniform_chain_oracle(spec, omega)
        assert abs(r[0] - r0) <= 1e-9 * max(1.0, abs(r0))
        assert abs(t[0] - t0) <= 1e-9 * max(abs(t0), 1e-300) + 1e-12


def test_emitter_matrix_is_unimodular():
    spec = LatticeSpec(1)
    for w in (99.9, 100.003, 100.5):
        m = emitter_matrix(w, 0.37, spec)
        assert m.det() == pytest.approx(1.0, abs=1e-13)


def test_chain_matrix_determinant_small_chains():
    # det = 1 holds to rounding relative to the size of the two products it subtracts
    spec = LatticeSpec(50, delta=0.4)
    for x in (-5.5, -0.3, 0.7, 9.1):
        tm = chain_matrix(spec, 100 + 0.01 * x)
        scale = (abs(tm.t11 * tm.t22) + abs(tm.t12 * tm.t21)) * np.exp(2 * tm.log_scale)
        assert abs(tm.det() * np.exp(2 * tm.log_scale) - 1) <= 1e-12 * scale


@given(small_specs, detunings)
def test_flux_conservation(spec, x):
    r, t = scatter_many(spec, omega_rel=[x])
    assert abs(abs(r[0]) ** 2 + abs(t[0]) ** 2 - 1) < 1e-10


@given(small_specs, st.lists(detunings, min_size=1, max_size=8))
def test_vectorized_matches_scalar(spec, xs):
    r, t = scatter_many(spec, omega_rel=xs)
    for k, x in enumerate(xs):
        rs, ts = scatter_many(spec, omega_rel=[x])
        assert r[k] == rs[0] and t[k] == ts[0]


def test_checkpoints_equal_separate_chains():
    spec = LatticeSpec(100, delta=0.5)
    x = np.array([-3.3, 0.45, 4.1])
    prods = chain_products(spec, None, [13, 40, 100], omega_rel=x)
    for n in (13, 40, 100):
        T, ls = chain_products(spec.with_(n_qubits=n), None, omega_rel=x)[n]
        assert np.allclose(prods[n][0], T) and np.allclose(prods[n][1], ls)


def test_empty_chain_is_transparent():
    r, t = scatter_many(LatticeSpec(0), omega_rel=[1.5])
    assert r[0] == 0 and t[0] == 1


def test_landauer_small_and_saturated():
    assert landauer(1e-9, np.sqrt(1 - 1e-18)) == pytest.approx(1e-18, rel=1e-12)
    assert np.isinf(landauer(1.0, 0.0))


def test_resistance_survives_underflow():
    # deep in the gap of a long chain |t|^2 underflows but ln(1 + rho) stays finite
    spec = LatticeSpec(2584, delta=0.2)
    det = resistance_detail(spec, 100 + 0.01 * 0.05)
    assert det.saturated and np.isinf(resistance(spec, 100 + 0.01 * 0.05))
    assert np.isfinite(det.log1p_rho) and det.log1p_rho > 745
    assert det.rho_product is None


def test_rho_product_cross_check():
    spec = LatticeSpec(34, delta=0.25)
    for x in (-6.0, -0.2, 3.3):
        det = resistance_detail(spec, 100 + 0.01 * x)
        # |T12 T21| = |T22|^2 - 1 = rho for det T = 1, |T12| = |T21|
        assert abs(det.rho_product) == pytest.approx(det.rho, rel=1e-8)
        assert det.log1p_rho == pytest.approx(np.log1p(det.rho), rel=1e-10)


def test_log1p_rho_matches_direct():
    spec = LatticeSpec(144, delta=0.5)
    x = np.linspace(-9.95, 9.95, 50)
    T, ls = chain_products(spec, None, omega_rel=x)[144]
    r, t = scatter_many(spec, omega_rel=x)
    ok = np.abs(t) > 1e-100
    assert np.allclose(log1p_rho_from_products(T, ls)[ok], -np.log(np.abs(t[ok]) ** 2), rtol=1e-10)


def test_emitter_matrix_unimodular_over_random_draws():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        spec = LatticeSpec(1, omega0=rng.uniform(1, 500), gamma0=rng.uniform(1e-4, 1.0), phi=rng.uniform(0.1, 6))
        reach = min(50.0, 0.9 * spec.omega0 / spec.gamma0)
        w = spec.omega0 + spec.gamma0 * rng.uniform(-reach, reach)
        m = emitter_matrix(w, rng.uniform(-10, 10), spec)
        scale = abs(m.t11 * m.t22) + abs(m.t12 * m.t21)
        assert abs(m.det() - 1) <= 1e-14 * scale


@pytest.mark.parametrize("x", [-1.0, 1.0])
def test_single_emitter_half_reflection_at_one_linewidth(x):
    spec = LatticeSpec(1, delta=0.4)
    r, t = scatter_many(spec, omega_rel=[x])
    assert abs(r[0]) ** 2 == pytest.approx(0.5, abs=1e-14)
    assert landauer(r, t)[0] == pytest.approx(1.0, rel=1e-13)
    # through an absolute frequency the detuning carries ~omega0/gamma0 ulps of error
    assert resistance(spec, 100 + 0.01 * x) == pytest.approx(1.0, rel=1e-10)


def test_uniform_chain_reflects_inside_gap():
    r, _ = scatter_many(LatticeSpec(200), omega_rel=[-0.3, -0.1, 0.05, 0.2, 0.4])
    assert np.all(np.abs(r) ** 2 > 0.999)


@given(
    st.builds(
        LatticeSpec,
        n_qubits=st.integers(1, 233),
        delta=st.floats(0.0, 0.5),
        phi=st.floats(0.3, 3.0),
        theta=st.floats(0.0, 6.28),
    ),
    detunings,
)
def test_landauer_agrees_with_off_diagonal_product(spec, x):
    det = resistance_detail(spec, spec.omega0 + spec.gamma0 * x)
    assert det.rho >= 0
    if det.rho_product is not None and np.isfinite(det.rho):
        assert det.rho_product == pytest.approx(det.rho, rel=1e-8, abs=1e-300)
