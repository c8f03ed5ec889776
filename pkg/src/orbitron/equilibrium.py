"""Relative equilibria: circular orbits with a co-rotating axis direction.

A relative equilibrium is a state that rotates rigidly about e3 at a rate
omega: x stays on a circle of radius r0 in the z = 0 plane, the axis
direction nu keeps a fixed tilt (nu_r, 0, nu_z) in the co-rotating frame,
and the multipliers (omega, lambda1, lambda2) make the support state a
critical point of the augmented Hamiltonian.

Three solvers are provided: a damped Newton search over (nu_r, nu_z, omega^2)
for a general axisymmetric field, the classic equatorial branch for
mirror-symmetric fields without gravity, and the closed-form levitation
branch for a linear field superposed on a mirror-symmetric one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import BodyParams, Multipliers, ReducedState
from .errors import (
    BadSign,
    NegativeCentrifugal,
    NoEquilibrium,
    NoRealSolution,
    NotMirrorSymmetric,
    WrongFieldSign,
)
from .fields import AxiFieldModel, FieldJet, eval_jet
from .potential import DipolePotential

__all__ = [
    "Equilibrium",
    "LevitationParams",
    "build_support_state",
    "first_order_residual",
    "solve_orbitron_equatorial",
    "solve_dipole_equilibrium",
    "solve_levitation",
    "build_levitation_equilibrium",
]

E3 = np.array([0.0, 0.0, 1.0])

# Tilt magnitudes below this are treated as exactly equatorial by the Newton
# solver when classifying converged branches.
EQUATORIAL_TOL = 1e-9


@dataclass(frozen=True)
class Equilibrium:
    """A relative equilibrium plus the multipliers that certify it.

    nu0 has the support-plane form (nu_r, 0, nu_z); pi0 is the full spin
    vector there; p0 is the scalar momentum M omega r0 carried along e2.
    sigma records the orientation sign of nu_z.  residual is the max norm of
    the first-order conditions at the support state.
    """

    r0: float
    omega: float
    nu0: np.ndarray
    pi0: np.ndarray
    p0: float
    mult: Multipliers
    C2: float
    sigma: int
    residual: float

    def to_record(self) -> dict:
        return {
            "r0": self.r0,
            "omega": self.omega,
            "nu0": [float(v) for v in self.nu0],
            "pi0": [float(v) for v in self.pi0],
            "p0": self.p0,
            "lambda": self.mult.lambda_,
            "lambda1": self.mult.lambda1,
            "lambda2": self.mult.lambda2,
            "C2": self.C2,
            "sigma": self.sigma,
            "residual": self.residual,
        }


@dataclass(frozen=True)
class LevitationParams:
    """Dimensionless levitation data.

    beta is the ratio of the mirror field's Br_z to the linear gradient;
    kappa compares gravity with the magnetic lift mu B' / M; xi2 is the
    centrifugal ratio omega^2 r / g; epsilon = |kappa| - 1 measures how far
    the balance sits above the levitation threshold.
    """

    beta: float
    kappa: float
    xi2: float
    epsilon: float

    def __post_init__(self) -> None:
        if not self.beta < 0:
            raise BadSign("levitation requires beta < 0")


def build_support_state(eq: Equilibrium) -> ReducedState:
    """The reduced state at t = 0 on the equilibrium orbit."""
    return ReducedState(
        x=np.array([eq.r0, 0.0, 0.0]),
        p=np.array([0.0, eq.p0, 0.0]),
        nu=eq.nu0.copy(),
        pi=eq.pi0.copy(),
    )


def first_order_residual(eq: Equilibrium, b: BodyParams, model: AxiFieldModel) -> float:
    """Max norm of the four first-order conditions at the support state.

    The conditions are the vanishing of the first variation of the augmented
    Hamiltonian: p = M omega e3 x x, grad_x V = -omega e3 x p,
    pi = I_perp omega e3 - lambda2 I_perp nu, and
    grad_nu V = -2 lambda1 nu - lambda2 pi.

    The last condition is evaluated in the equivalent form
    grad_nu V + lambda nu + lambda2 I_perp omega e3, obtained by substituting
    the pi condition and lambda = 2 lambda1 - lambda2^2 I_perp.  The raw form
    cancels two terms of size lambda2^2 I_perp against each other, which for
    near-horizontal axis directions (|nu_r| << 1, so |lambda2| >> |omega|)
    would bury the true residual under rounding noise.
    """
    s = build_support_state(eq)
    V = DipolePotential(model, b)
    om = eq.mult.omega
    r1 = s.p - b.M * om * np.cross(E3, s.x)
    r2 = V.grad_x(s.x, s.nu) + om * np.cross(E3, s.p)
    r3 = s.pi - b.I_perp * om * E3 + eq.mult.lambda2 * b.I_perp * s.nu
    r4 = (
        V.grad_nu(s.x, s.nu)
        + eq.mult.lambda_ * s.nu
        + eq.mult.lambda2 * b.I_perp * om * E3
    )
    return float(max(np.max(np.abs(r)) for r in (r1, r2, r3, r4)))


def _mirrored(eq: Equilibrium) -> Equilibrium:
    """The time-reversed twin with omega -> -omega and (p, pi) negated.

    The first-order residual is invariant under this reflection, so it is
    carried over unchanged.
    """
    m = eq.mult
    return replace(
        eq,
        omega=-m.omega,
        pi0=-eq.pi0,
        p0=-eq.p0,
        C2=-eq.C2,
        mult=Multipliers(-m.omega, m.lambda1, -m.lambda2, m.lambda_),
    )


def _equatorial_equilibrium(
    jet: FieldJet,
    b: BodyParams,
    r0: float,
    omega: float,
    pi0_scalar: float,
    sigma: int,
    model: AxiFieldModel,
) -> Equilibrium:
    lambda2 = sigma * (omega - pi0_scalar / b.I_perp)
    lam = sigma * b.mu * jet.Bz + omega * (pi0_scalar - b.I_perp * omega)
    mult = Multipliers.from_lambda(omega, lam, lambda2, b.I_perp)
    nu0 = np.array([0.0, 0.0, float(sigma)])
    pi0 = b.I_perp * omega * E3 - lambda2 * b.I_perp * nu0
    eq = Equilibrium(
        r0=r0,
        omega=omega,
        nu0=nu0,
        pi0=pi0,
        p0=b.M * omega * r0,
        mult=mult,
        C2=sigma * pi0_scalar,
        sigma=sigma,
        residual=0.0,
    )
    return replace(eq, residual=first_order_residual(eq, b, model))


def _tilted_equilibrium(
    jet: FieldJet,
    b: BodyParams,
    r0: float,
    omega: float,
    nu_r: float,
    nu_z: float,
    model: AxiFieldModel,
) -> Equilibrium:
    """Multipliers of a tilted branch from the axis-direction conditions.

    lambda nu_r = mu Br fixes lambda, and the z component then fixes
    lambda2; the spin invariant C2 follows rather than being prescribed.
    """
    lam = b.mu * jet.Br / nu_r
    lambda2 = (b.mu * jet.Bz - lam * nu_z) / (b.I_perp * omega)
    mult = Multipliers.from_lambda(omega, lam, lambda2, b.I_perp)
    nu0 = np.array([nu_r, 0.0, nu_z])
    pi0 = b.I_perp * omega * E3 - lambda2 * b.I_perp * nu0
    c2 = b.I_perp * (omega * nu_z - lambda2)
    eq = Equilibrium(
        r0=r0,
        omega=omega,
        nu0=nu0,
        pi0=pi0,
        p0=b.M * omega * r0,
        mult=mult,
        C2=c2,
        sigma=1 if nu_z >= 0.0 else -1,
        residual=0.0,
    )
    return replace(eq, residual=first_order_residual(eq, b, model))


def solve_orbitron_equatorial(
    model: AxiFieldModel,
    b: BodyParams,
    r0: float,
    pi0: float,
    sigma: int = 1,
    negative_omega: bool = False,
) -> Equilibrium:
    """Equatorial equilibrium of a mirror-symmetric field without gravity.

    The axis is locked to sigma e3 and the orbit rate balances the magnetic
    pull: omega^2 = -sigma (mu / M) Bz_r / r0.  The spin pi0 along the axis
    is free and is supplied by the caller.

    Raises NotMirrorSymmetric if the field has a radial component or an
    axial gradient at (r0, 0), and WrongFieldSign if the required omega^2 is
    not positive.  Gravity must be zero; a nonzero g makes the z balance
    unsatisfiable on an equatorial branch and is reported as a ValueError.
    """
    if sigma not in (-1, 1):
        raise ValueError("sigma must be +1 or -1")
    if r0 <= 0.0:
        raise ValueError("orbit radius must be positive")
    if b.g != 0.0:
        raise ValueError("equatorial solver requires g = 0; use solve_dipole_equilibrium")
    jet = eval_jet(model, r0, 0.0)
    bnorm = math.hypot(jet.Br, jet.Bz)
    dnorm = max(abs(jet.Br_r), abs(jet.Br_z), abs(jet.Bz_r), abs(jet.Bz_z))
    if abs(jet.Br) > 1e-9 * max(bnorm, 1e-300) or abs(jet.Bz_z) > 1e-9 * max(dnorm, 1e-300):
        raise NotMirrorSymmetric(f"field is not mirror symmetric at r = {r0:g}")
    w2 = -sigma * (b.mu / b.M) * jet.Bz_r / r0
    if w2 <= 0.0:
        raise WrongFieldSign(
            f"need -sigma Bz_r > 0 at r = {r0:g}; got sigma = {sigma:+d}, Bz_r = {jet.Bz_r:g}"
        )
    eq = _equatorial_equilibrium(jet, b, r0, math.sqrt(w2), pi0, sigma, model)
    return _mirrored(eq) if negative_omega else eq


def solve_dipole_equilibrium(
    model: AxiFieldModel,
    b: BodyParams,
    r0: float,
    C2: float,
    negative_omega: bool = False,
) -> list[Equilibrium]:
    """All relative-equilibrium branches at radius r0 for a general field.

    Runs a damped Newton iteration on the force balance for the unknowns
    (nu_r, nu_z, omega^2) from eight starts around the unit circle, each with
    two omega^2 seeds taken from the equatorial estimate.  Converged roots
    with omega^2 > 0 are deduplicated and classified: equatorial branches use
    the supplied spin invariant C2, tilted branches have C2 determined by the
    tilt.  Branches are returned sorted by descending nu_z.

    Raises NoEquilibrium when no branch survives.
    """
    if r0 <= 0.0:
        raise ValueError("orbit radius must be positive")
    jet = eval_jet(model, r0, 0.0)
    a1 = jet.Bz_z
    a2 = jet.Br_z
    a3 = jet.Br_r
    gg = b.M * b.g / b.mu
    c = b.M * r0 / b.mu
    ftol = 1e-13 * max(1.0, abs(a1), abs(a2), abs(a3), abs(gg))

    def F(u: np.ndarray) -> np.ndarray:
        nr, nz, w = u
        return np.array(
            [
                nr * a2 + nz * a1 - gg,
                nr * a3 + nz * a2 + c * w,
                nr * nr + nz * nz - 1.0,
            ]
        )

    def Jac(u: np.ndarray) -> np.ndarray:
        nr, nz, _ = u
        return np.array([[a2, a1, 0.0], [a3, a2, c], [2.0 * nr, 2.0 * nz, 0.0]])

    w_orb = abs(b.mu * jet.Bz_r / (b.M * r0))
    if w_orb == 0.0:
        w_orb = 1.0
    roots: list[np.ndarray] = []
    for k in range(8):
        theta = 2.0 * math.pi * k / 8.0
        for w_seed in (w_orb, -w_orb):
            u = np.array([math.cos(theta), math.sin(theta), w_seed])
            fu = F(u)
            for _ in range(100):
                if np.max(np.abs(fu)) <= ftol:
                    break
                try:
                    step = np.linalg.solve(Jac(u), -fu)
                except np.linalg.LinAlgError:
                    break
                t = 1.0
                base = np.max(np.abs(fu))
                while t > 1e-4:
                    trial = u + t * step
                    ftrial = F(trial)
                    if np.max(np.abs(ftrial)) <= (1.0 - 0.5 * t) * base:
                        u, fu = trial, ftrial
                        break
                    t *= 0.5
                else:
                    break
            if np.max(np.abs(fu)) > ftol:
                continue
            if u[2] <= 1e-12 * max(1.0, w_orb):
                continue
            if not any(
                max(abs(u[0] - r[0]), abs(u[1] - r[1]), abs(u[2] - r[2]) / max(1.0, abs(r[2])))
                < 1e-8
                for r in roots
            ):
                roots.append(u)

    bnorm = math.hypot(jet.Br, jet.Bz)
    out: list[Equilibrium] = []
    for nr, nz, w in sorted(roots, key=lambda r: (-r[1], r[0])):
        omega = math.sqrt(w)
        if abs(nr) < EQUATORIAL_TOL:
            if abs(jet.Br) > 1e-9 * max(bnorm, 1e-300):
                # A vanishing tilt cannot balance a nonzero radial field.
                continue
            sigma = 1 if nz >= 0.0 else -1
            eq = _equatorial_equilibrium(jet, b, r0, omega, sigma * C2, sigma, model)
        else:
            n = math.hypot(nr, nz)
            eq = _tilted_equilibrium(jet, b, r0, omega, nr / n, nz / n, model)
        out.append(_mirrored(eq) if negative_omega else eq)
    if not out:
        raise NoEquilibrium(f"no relative equilibrium with omega^2 > 0 at r = {r0:g}")
    return out


def solve_levitation(beta: float, kappa: float) -> tuple[float, float, float]:
    """Closed-form levitating branch in dimensionless variables.

    Solves the force balance

        nu_z + beta nu_r = kappa
        beta nu_z - nu_r / 2 = -kappa xi^2
        nu_r^2 + nu_z^2 = 1

    for (nu_r, nu_z, xi2), choosing the root that keeps xi^2 positive near
    |kappa| = 1:

        nu_r = kappa / (1 + beta^2) * (beta + sqrt(1 + beta^2 - kappa^2) / |kappa|)

    Raises BadSign for beta >= 0 or kappa = 0, NoRealSolution when the
    discriminant 1 + beta^2 - kappa^2 is negative, and NegativeCentrifugal
    when the resulting xi^2 is not positive.
    """
    if beta >= 0.0:
        raise BadSign("levitation requires beta < 0")
    if kappa == 0.0:
        raise BadSign("levitation requires kappa != 0")
    disc = 1.0 + beta * beta - kappa * kappa
    if disc < 0.0:
        raise NoRealSolution(f"discriminant 1 + beta^2 - kappa^2 = {disc:g} < 0")
    root = math.sqrt(disc) / abs(kappa)
    denom = 1.0 + beta * beta
    nu_r = kappa / denom * (beta + root)
    nu_z = kappa - beta * nu_r
    xi2 = -beta / (2.0 * denom) + (0.5 + beta * beta) / denom * root
    if xi2 <= 0.0:
        raise NegativeCentrifugal(f"xi^2 = {xi2:g} <= 0 on this branch")
    err = abs(nu_r * nu_r + nu_z * nu_z - 1.0)
    if err > 1e-12:
        raise ArithmeticError(f"axis direction failed to normalize: |nu|^2 - 1 = {err:g}")
    return nu_r, nu_z, xi2


def build_levitation_equilibrium(
    model: AxiFieldModel,
    b: BodyParams,
    r0: float,
    nu_r: float,
    nu_z: float,
    xi2: float,
    negative_omega: bool = False,
) -> Equilibrium:
    """Assemble the full equilibrium for a levitation solution at radius r0.

    The caller provides the tilt and centrifugal ratio from
    :func:`solve_levitation`; this fixes omega^2 = xi2 g / r0, and the
    multipliers follow from the tilted-branch conditions.  The reported
    residual measures how consistently (r0, model, b) reproduce the
    dimensionless inputs.
    """
    if r0 <= 0.0:
        raise ValueError("orbit radius must be positive")
    if b.g <= 0.0:
        raise ValueError("levitation needs g > 0")
    if abs(nu_r) < 1e-15:
        raise NoEquilibrium("zero tilt cannot balance the radial field of the linear part")
    jet = eval_jet(model, r0, 0.0)
    omega = math.sqrt(xi2 * b.g / r0)
    eq = _tilted_equilibrium(jet, b, r0, omega, nu_r, nu_z, model)
    return _mirrored(eq) if negative_omega else eq
