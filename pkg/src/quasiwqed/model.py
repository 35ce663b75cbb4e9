"""Lattice configuration, qubit positions and Fibonacci approximants.

Units: hbar = 1 and c = 1, so the photon wavenumber equals its frequency and
the mean spacing is ``d = phi / omega0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Mapping, Union

import numpy as np

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


class ConfigError(ValueError):
    """Invalid lattice configuration."""


@dataclass(frozen=True)
class Golden:
    """Irrational modulation frequency (1 + sqrt 5) / 2."""

    @property
    def value(self) -> float:
        return GOLDEN

    def __str__(self) -> str:
        return "golden"


@dataclass(frozen=True)
class Rational:
    """Rational modulation frequency chi / eta with gcd(chi, eta) = 1."""

    chi: int
    eta: int

    def __post_init__(self):
        if self.chi < 1 or self.eta < 1:
            raise ConfigError(f"rational beta needs positive integers, got {self.chi}/{self.eta}")
        if math.gcd(self.chi, self.eta) != 1:
            raise ConfigError(f"rational beta {self.chi}/{self.eta} is not in lowest terms")

    @property
    def value(self) -> float:
        return self.chi / self.eta

    def __str__(self) -> str:
        return f"{self.chi}/{self.eta}"


Beta = Union[Golden, Rational]


def parse_beta(text: Union[str, Beta]) -> Beta:
    """Parse ``"golden"`` or ``"p/q"``."""
    if isinstance(text, (Golden, Rational)):
        return text
    s = str(text).strip().lower()
    if s == "golden":
        return Golden()
    try:
        frac = Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"beta: expected 'golden' or 'p/q', got {text!r}") from exc
    p, q = s.split("/") if "/" in s else (s, "1")
    chi, eta = int(p), int(q)
    if (chi, eta) != (frac.numerator, frac.denominator):
        raise ConfigError(f"beta: {text!r} is not in lowest terms")
    return Rational(chi, eta)


@dataclass(frozen=True)
class LatticeSpec:
    n_qubits: int
    omega0: float = 100.0
    gamma0: float = 0.01
    phi: float = 1.0
    delta: float = 0.0
    beta: Beta = field(default_factory=Golden)
    theta: float = 0.0

    def __post_init__(self):
        if isinstance(self.beta, str):
            object.__setattr__(self, "beta", parse_beta(self.beta))
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 0:
            raise ConfigError(f"n_qubits: must be a non-negative integer, got {self.n_qubits!r}")
        object.__setattr__(self, "n_qubits", int(self.n_qubits))
        for name in ("omega0", "gamma0", "phi"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigError(f"{name}: must be > 0, got {v!r}")
        if not (np.isfinite(self.delta) and self.delta >= 0):
            raise ConfigError(f"delta: must be >= 0, got {self.delta!r}")
        if not (np.isfinite(self.theta) and 0 <= self.theta < 2 * math.pi):
            raise ConfigError(f"theta: must lie in [0, 2pi), got {self.theta!r}")

    @property
    def spacing(self) -> float:
        return spacing_from_phase(self.omega0, self.phi)

    def with_(self, **changes) -> "LatticeSpec":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "omega0": self.omega0,
            "gamma0": self.gamma0,
            "phi": self.phi,
            "delta": self.delta,
            "beta": str(self.beta),
            "theta": self.theta,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LatticeSpec":
        known = {"n_qubits", "omega0", "gamma0", "phi", "delta", "beta", "theta"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "n_qubits" not in data:
            raise ConfigError("n_qubits: required")
        kwargs = dict(data)
        if "beta" in kwargs:
            kwargs["beta"] = parse_beta(kwargs["beta"])
        for name in ("omega0", "gamma0", "phi", "delta", "theta"):
            if name in kwargs:
                try:
                    kwargs[name] = float(kwargs[name])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"{name}: not a number: {kwargs[name]!r}") from exc
        return cls(**kwargs)


@dataclass(frozen=True)
class FibonacciApproximant:
    index: int
    chi: int
    eta: int

    @property
    def beta(self) -> Rational:
        return Rational(self.chi, self.eta)

    @property
    def value(self) -> float:
        return self.chi / self.eta


def fibonacci(n: int) -> int:
    """F_n with F_1 = F_2 = 1."""
    if n < 1:
        raise ValueError(f"Fibonacci index must be >= 1, got {n}")
    a, b = 1, 1
    for _ in range(n - 1):
        a, b = b, a + b
    return a


def fibonacci_approximant(n: int) -> FibonacciApproximant:
    """Rational approximant F_{n+1}/F_n of the golden ratio."""
    if n < 2:
        raise ValueError(f"approximant index must be >= 2, got {n}")
    return FibonacciApproximant(n, fibonacci(n + 1), fibonacci(n))


def approximant_for_eta(eta: int) -> FibonacciApproximant:
    """Approximant whose denominator is the Fibonacci number ``eta`` (eta = 1 gives 2/1)."""
    n = 2
    while fibonacci(n) < eta:
        n += 1
    if fibonacci(n) != eta:
        raise ValueError(f"{eta} is not a Fibonacci number")
    return fibonacci_approximant(n)


def fibonacci_sizes(max_size: int, min_size: int = 1) -> list[int]:
    """Distinct Fibonacci numbers in [min_size, max_size], ascending."""
    out = []
    n = 2
    while (f := fibonacci(n)) <= max_size:
        if f >= min_size:
            out.append(f)
        n += 1
    return out


def spacing_from_phase(omega0: float, phi: float) -> float:
    """Mean spacing ``d = phi / omega0`` (c = 1)."""
    if not omega0 > 0 or not phi > 0:
        raise ConfigError(f"omega0 and phi must be positive, got {omega0}, {phi}")
    return phi / omega0


def reduced_positions(n: int, delta: float, beta: Beta, theta: float) -> np.ndarray:
    """Positions in units of d: ``j + delta cos(2 pi beta j + theta)``, j = 1..n."""
    j = np.arange(1, n + 1, dtype=float)
    if isinstance(beta, Rational):
        # reduce 2 pi chi j / eta modulo 2 pi exactly so the pattern is strictly eta-periodic
        arg = 2.0 * np.pi * (((beta.chi * np.arange(1, n + 1)) % beta.eta) / beta.eta)
    else:
        arg = 2.0 * np.pi * beta.value * j
    return j + delta * np.cos(arg + theta)


def qubit_positions(spec: LatticeSpec) -> np.ndarray:
    """Qubit coordinates z_j = d [j + delta cos(2 pi beta j + theta)] for j = 1..N.

    Positions need not be sorted for large ``delta``; consumers only use
    absolute separations.
    """
    return spec.spacing * reduced_positions(spec.n_qubits, spec.delta, spec.beta, spec.theta)
