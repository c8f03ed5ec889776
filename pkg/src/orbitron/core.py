"""Reduced phase space, body parameters, and conserved quantities.

The reduced state of a magnetized symmetric top moving in an axisymmetric
field is the tuple (x, p, nu, pi): position and linear momentum of the center
of mass together with the symmetry-axis direction and the angular momentum in
the body-adapted reduction.  The component of angular momentum along the axis,
nu . pi, is a Casimir of the reduced bracket, so the spin about the axis
enters the dynamics only through the conserved combination C2 = nu . pi.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

__all__ = [
    "ReducedState",
    "BodyParams",
    "Multipliers",
    "Potential",
    "casimirs",
    "momentum_j3",
    "hamiltonian",
    "augmented_hamiltonian",
    "axial_symmetry_residual",
]

E3 = np.array([0.0, 0.0, 1.0])


def _vec3(v, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class ReducedState:
    """A point (x, p, nu, pi) of the twelve dimensional reduced phase space."""

    x: np.ndarray
    p: np.ndarray
    nu: np.ndarray
    pi: np.ndarray

    def __post_init__(self) -> None:
        for name in ("x", "p", "nu", "pi"):
            object.__setattr__(self, name, _vec3(getattr(self, name), name))

    def as_vector(self) -> np.ndarray:
        """Pack the state into a flat vector (x, p, nu, pi)."""
        return np.concatenate([self.x, self.p, self.nu, self.pi])

    @staticmethod
    def from_vector(y: np.ndarray) -> "ReducedState":
        y = np.asarray(y, dtype=float)
        if y.shape != (12,):
            raise ValueError(f"state vector must have 12 components, got {y.shape}")
        return ReducedState(y[0:3], y[3:6], y[6:9], y[9:12])


@dataclass(frozen=True)
class BodyParams:
    """Mass and inertia data of the top plus the ambient gravity.

    I3 is the moment of inertia about the symmetry axis.  It never enters the
    reduced equations of motion; it is used only when the optional Casimir
    spin energy is added to reported energies.
    """

    M: float = 1.0
    I_perp: float = 1.0
    I3: float = 1.0
    mu: float = 1.0
    g: float = 0.0

    def __post_init__(self) -> None:
        if not (self.M > 0 and self.I_perp > 0 and self.I3 > 0 and self.mu > 0):
            raise ValueError("M, I_perp, I3 and mu must all be positive")
        if self.g < 0:
            raise ValueError("g must be non-negative")


@dataclass(frozen=True)
class Multipliers:
    """Lagrange multipliers of an augmented Hamiltonian h - omega J3 + lambda1 C1 + lambda2 C2.

    lambda_ is the derived combination 2 lambda1 - lambda2**2 I_perp that
    appears throughout the stability conditions; use :meth:`build` to keep the
    three values consistent.
    """

    omega: float
    lambda1: float
    lambda2: float
    lambda_: float

    @staticmethod
    def build(omega: float, lambda1: float, lambda2: float, I_perp: float) -> "Multipliers":
        return Multipliers(omega, lambda1, lambda2, 2.0 * lambda1 - lambda2**2 * I_perp)

    @staticmethod
    def from_lambda(omega: float, lambda_: float, lambda2: float, I_perp: float) -> "Multipliers":
        """Build from the derived combination, solving for lambda1."""
        return Multipliers(omega, 0.5 * (lambda_ + lambda2**2 * I_perp), lambda2, lambda_)


class Potential(Protocol):
    """Anything that can report V(x, nu) and its two gradients."""

    def value(self, x: np.ndarray, nu: np.ndarray) -> float: ...

    def grad_x(self, x: np.ndarray, nu: np.ndarray) -> np.ndarray: ...

    def grad_nu(self, x: np.ndarray, nu: np.ndarray) -> np.ndarray: ...


def casimirs(s: ReducedState) -> tuple[float, float]:
    """Return (C1, C2) = (nu . nu, nu . pi)."""
    return float(s.nu @ s.nu), float(s.nu @ s.pi)


def momentum_j3(s: ReducedState) -> float:
    """Axial momentum J3 = pi3 + x1 p2 - x2 p1 conserved by axisymmetry."""
    return float(s.pi[2] + s.x[0] * s.p[1] - s.x[1] * s.p[0])


def hamiltonian(
    s: ReducedState,
    b: BodyParams,
    V: Potential,
    include_casimir: bool = False,
) -> float:
    """Reduced energy p**2/(2M) + pi**2/(2 I_perp) + V(x, nu).

    The spin term (1/(2 I3) - 1/(2 I_perp)) (nu . pi)**2 is a function of the
    Casimir C2 and therefore generates no motion; it is excluded by default
    and added back only when ``include_casimir`` is set, so that reported
    energies match the full top.
    """
    h = float(s.p @ s.p) / (2.0 * b.M) + float(s.pi @ s.pi) / (2.0 * b.I_perp)
    h += V.value(s.x, s.nu)
    if include_casimir:
        c2 = float(s.nu @ s.pi)
        h += (0.5 / b.I3 - 0.5 / b.I_perp) * c2**2
    return h


def augmented_hamiltonian(
    s: ReducedState,
    b: BodyParams,
    V: Potential,
    m: Multipliers,
    include_casimir: bool = False,
) -> float:
    """h - omega J3 + lambda1 C1 + lambda2 C2, whose critical points are relative equilibria."""
    c1, c2 = casimirs(s)
    return (
        hamiltonian(s, b, V, include_casimir)
        - m.omega * momentum_j3(s)
        + m.lambda1 * c1
        + m.lambda2 * c2
    )


def axial_symmetry_residual(V: Potential, s: ReducedState) -> float:
    """Generator of simultaneous rotation of x and nu applied to V.

    Vanishes identically for an axisymmetric potential:
    x1 dV/dx2 - x2 dV/dx1 + nu1 dV/dnu2 - nu2 dV/dnu1 = 0.
    """
    gx = V.grad_x(s.x, s.nu)
    gn = V.grad_nu(s.x, s.nu)
    return float(
        s.x[0] * gx[1] - s.x[1] * gx[0] + s.nu[0] * gn[1] - s.nu[1] * gn[0]
    )
