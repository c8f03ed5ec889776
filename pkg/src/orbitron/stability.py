"""Stability certificates for relative equilibria.

The second variation of the augmented Hamiltonian, restricted to the
invariant-preserving variations, is an 8 x 8 quadratic form Q in the order

    (dp3, dp1, dPi2, dPi1', dN2, dN1, dx1, dx3)

where dN_A and dPi_A are axis and spin variations in the rotated in-plane
basis (E1, E2) and dPi1' absorbs the part of dPi1 forced by dN1.  Positive
definiteness of Q certifies Lyapunov stability of the orbit.  Three routes
are implemented: successive elimination of isolated squares, the equivalent
closed-form conditions (a lambda condition, an axis-block condition, and a
2 x 2 positional block reported as A, B, C), and a Jacobi eigenvalue oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import BodyParams
from .equilibrium import Equilibrium, LevitationParams
from .errors import NotEquatorial, PolarDegeneracy, ZeroPivot
from .fields import AxiFieldModel, eval_jet
from .potential import PotentialHessianBlocks, make_rotated_basis

__all__ = [
    "ReducedQuadraticForm",
    "EliminationResult",
    "StabilityCertificate",
    "EigenCertificate",
    "VARIATION_LABELS",
    "variation_constraints",
    "reduced_hessian",
    "isolated_squares_reduce",
    "closed_form_conditions",
    "orbitron_conditions",
    "levitation_conditions",
    "eigen_certificate",
]

VARIATION_LABELS = ("dp3", "dp1", "dPi2", "dPi1p", "dN2", "dN1", "dx1", "dx3")

# |nu_z| below this means the axis lies in the orbital plane and the
# variation chart (which divides by nu_z) degenerates.
POLAR_EPS = 1e-12

# Pivots within 1e-14 |Q| of zero are numerically meaningless.
ZERO_PIVOT_REL = 1e-14

# Verdicts whose margin is within this band of zero are reported as
# "marginal" rather than "stable" or "not_certified".
MARGIN_BAND = 1e-10


@dataclass(frozen=True)
class ReducedQuadraticForm:
    """The 8 x 8 reduced second variation and its variable labels."""

    Q: np.ndarray
    labels: tuple = VARIATION_LABELS


@dataclass(frozen=True)
class EliminationResult:
    """Outcome of successive elimination of isolated squares.

    pivots holds one pivot per eliminated variable in elimination order;
    on failure the last entry is the offending non-positive pivot and
    failed_index is its position in ``order``.  x_block is the remaining
    2 x 2 block just before the final two eliminations (the (A, B; B, C)
    block when the canonical order is used).
    """

    pivots: tuple
    completed: bool
    failed_index: int | None
    order: tuple
    x_block: np.ndarray | None
    x_indices: tuple | None


@dataclass(frozen=True)
class StabilityCertificate:
    """Result of a closed-form stability test.

    margin is the smallest normalized condition value: positive and outside
    the marginal band for a certified equilibrium, negative when some
    condition fails.  failed_condition names the first violated condition.
    """

    verdict: str
    margin: float
    lambda_ok: bool
    A: float
    B: float
    C: float
    abc_ok: bool
    pivots: tuple
    failed_condition: str | None
    details: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "verdict": self.verdict,
            "margin": self.margin,
            "lambda_ok": self.lambda_ok,
            "A": self.A,
            "B": self.B,
            "C": self.C,
            "pivots": [float(p) for p in self.pivots],
            "failed_condition": self.failed_condition,
        }


@dataclass(frozen=True)
class EigenCertificate:
    """Spectrum-based verdict on the reduced quadratic form."""

    verdict: str
    lambda_min: float
    margin: float
    eigenvalues: tuple


def _classify(margin: float) -> str:
    if abs(margin) < MARGIN_BAND:
        return "marginal"
    return "stable" if margin > 0.0 else "not_certified"


def _nu_split(eq: Equilibrium) -> tuple[float, float]:
    """(|nu_perp|, nu_z) of the equilibrium axis, guarding the polar case."""
    nperp = math.hypot(eq.nu0[0], eq.nu0[1])
    nz = float(eq.nu0[2])
    if abs(nz) < POLAR_EPS:
        raise PolarDegeneracy("equilibrium axis lies in the orbital plane")
    return nperp, nz


def variation_constraints(eq: Equilibrium, b: BodyParams) -> np.ndarray:
    """Map T from the 8 free variations to the 12 state variations.

    Columns follow VARIATION_LABELS; rows are (x, p, nu, pi) stacked.  The
    map is built so that the first variations of C1, C2 and J3 all vanish:
    dnu3, dpi3, dp2 and dx2 are slaved to the free variations, and dPi1
    carries the extra (I_perp omega / nu_z) dN1 piece.
    """
    nperp, nz = _nu_split(eq)
    basis = make_rotated_basis(eq.nu0[:2])
    E1 = np.array([basis.E1[0], basis.E1[1], 0.0])
    E2 = np.array([basis.E2[0], basis.E2[1], 0.0])
    m_omega = eq.p0 / eq.r0  # M omega without needing b.M separately
    i_omega = b.I_perp * eq.mult.omega

    T = np.zeros((12, 8))
    # dp3 and dp1 are free momenta.
    T[5, 0] = 1.0
    T[3, 1] = 1.0
    # dPi2: spin variation along E2.
    T[9:12, 2] += E2
    # dPi1': spin variation along E1 plus its forced pi3 and p2 parts.
    T[9:12, 3] += E1
    T[11, 3] += -nperp / nz
    T[4, 3] += nperp / (eq.r0 * nz)
    # dN2: axis variation along E2.
    T[6:9, 4] += E2
    # dN1: axis variation along E1, its forced nu3 part, and the dPi1 share.
    T[6:9, 5] += E1
    T[8, 5] += -nperp / nz
    T[9:12, 5] += (i_omega / nz) * E1
    # dx1 drags p2 to keep J3 fixed.
    T[0, 6] = 1.0
    T[4, 6] = -m_omega
    # dx3 is free.
    T[2, 7] = 1.0
    return T


def reduced_hessian(
    eq: Equilibrium, b: BodyParams, blocks: PotentialHessianBlocks
) -> ReducedQuadraticForm:
    """Assemble the reduced 8 x 8 second variation at the support state.

    Kinetic and multiplier terms are written directly in the constrained
    variables; the potential enters through its Hessian blocks in the
    rotated basis.
    """
    nperp, nz = _nu_split(eq)
    M, I = b.M, b.I_perp
    om = eq.mult.omega
    l1 = eq.mult.lambda1
    l2 = eq.mult.lambda2
    r0 = eq.r0
    Vxx, VxN, Vx3 = blocks.Vxx, blocks.VxN, blocks.Vx3
    VNN, VN3, V33 = blocks.VNN, blocks.VN3, blocks.V33

    Q = np.zeros((8, 8))
    Q[0, 0] = 1.0 / M
    Q[1, 1] = 1.0 / M
    Q[2, 2] = 1.0 / I
    Q[2, 4] = l2
    Q[3, 3] = nperp**2 / (M * r0**2 * nz**2) + 1.0 / (I * nz**2)
    Q[3, 5] = om / nz + l2 / nz**2
    Q[3, 6] = -2.0 * om * nperp / (r0 * nz)
    Q[4, 4] = 2.0 * l1 + VNN[1, 1]
    Q[4, 5] = VNN[0, 1] - (nperp / nz) * VN3[1]
    Q[4, 6] = VxN[0, 1]
    Q[4, 7] = VxN[2, 1]
    Q[5, 5] = (
        I * om**2 / nz**2
        + 2.0 * l2 * I * om / nz
        + 2.0 * l1 / nz**2
        + VNN[0, 0]
        - 2.0 * (nperp / nz) * VN3[0]
        + (nperp**2 / nz**2) * V33
    )
    Q[5, 6] = VxN[0, 0] - (nperp / nz) * Vx3[0]
    Q[5, 7] = VxN[2, 0] - (nperp / nz) * Vx3[2]
    Q[6, 6] = 3.0 * M * om**2 + Vxx[0, 0]
    Q[6, 7] = Vxx[0, 2]
    Q[7, 7] = Vxx[2, 2]
    Q = Q + np.triu(Q, 1).T
    return ReducedQuadraticForm(Q=Q)


def isolated_squares_reduce(Q: np.ndarray, order: tuple | None = None) -> EliminationResult:
    """Successively eliminate isolated squares from a symmetric form.

    Writing Q = A x_k^2 + 2 x_k B(rest) + Q'(rest), a positive pivot A lets
    x_k be completed to a square, leaving the Schur complement
    Q' - B B^T / A; Q is positive definite iff every pivot is positive.
    The elimination order is immaterial for the verdict and defaults to the
    canonical variable order.  A pivot smaller in magnitude than
    1e-14 |Q| raises ZeroPivot; a non-positive pivot stops the sweep with
    ``completed`` False.
    """
    S = np.array(Q, dtype=float, copy=True)
    n = S.shape[0]
    if S.shape != (n, n) or not np.allclose(S, S.T, atol=1e-12 * max(1.0, np.abs(S).max())):
        raise ValueError("expected a symmetric square matrix")
    if order is None:
        order = tuple(range(n))
    order = tuple(order)
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of all variable indices")
    qnorm = float(np.linalg.norm(S))
    active = list(range(n))
    pivots: list[float] = []
    x_block = None
    x_indices = None
    for step, idx in enumerate(order):
        if len(active) == 2:
            x_block = S.copy()
            x_indices = tuple(active)
        j = active.index(idx)
        piv = float(S[j, j])
        pivots.append(piv)
        if abs(piv) < ZERO_PIVOT_REL * max(qnorm, 1e-300):
            raise ZeroPivot(f"pivot {piv:g} for variable {idx} is zero to working precision")
        if piv <= 0.0:
            return EliminationResult(
                pivots=tuple(pivots),
                completed=False,
                failed_index=step,
                order=order,
                x_block=x_block,
                x_indices=x_indices,
            )
        keep = [k for k in range(len(active)) if k != j]
        col = S[keep, j]
        S = S[np.ix_(keep, keep)] - np.outer(col, col) / piv
        active = [active[k] for k in keep]
    return EliminationResult(
        pivots=tuple(pivots),
        completed=True,
        failed_index=None,
        order=order,
        x_block=x_block,
        x_indices=x_indices,
    )


def closed_form_conditions(
    eq: Equilibrium, b: BodyParams, blocks: PotentialHessianBlocks
) -> StabilityCertificate:
    """Closed-form sufficient conditions equivalent to the elimination route.

    After the kinetic pivots, positive definiteness of the reduced form
    comes down to

        lambda + d2V(E2, E2) > 0
        lambda + d2V(nu_top, nu_top) + kinetic axis terms
            - d2V(E2, nu_top)^2 / (first condition) > 0
        A > 0, C > 0, A C - B^2 > 0

    with nu_top = nu_z E1 - |nu_perp| e3.  A non-positive denominator makes
    the remaining expressions inconclusive; this is recorded in the
    certificate rather than raised.
    """
    nperp, nz = _nu_split(eq)
    M, I = b.M, b.I_perp
    om = eq.mult.omega
    l2 = eq.mult.lambda2
    lam = eq.mult.lambda_
    r0 = eq.r0
    Vxx, VxN, Vx3 = blocks.Vxx, blocks.VxN, blocks.Vx3
    VNN, VN3, V33 = blocks.VNN, blocks.VN3, blocks.V33

    # Contractions against nu_top = nu_z E1 - |nu_perp| e3.
    d2_E2_top = nz * VNN[0, 1] - nperp * VN3[1]
    d2_top_top = nz**2 * VNN[0, 0] - 2.0 * nz * nperp * VN3[0] + nperp**2 * V33
    d2_e1_top = nz * VxN[0, 0] - nperp * Vx3[0]
    d2_e3_top = nz * VxN[2, 0] - nperp * Vx3[2]

    denom_c = I * nperp**2 + M * r0**2
    den1 = lam + VNN[1, 1]
    cond2 = math.nan
    A = B = C = math.nan
    failed: str | None = None
    if den1 <= 0.0:
        failed = "nu2_block"
    else:
        cond2 = (
            lam
            + d2_top_top
            + (I**2 * nperp**2 / denom_c) * (nz * om + l2) ** 2
            + nperp**2 * I * om**2
            - d2_E2_top**2 / den1
        )
        if cond2 <= 0.0:
            failed = "nu1_block"
        else:
            num_a = (
                2.0 * I * nperp * eq.p0 * (nz * om + l2) / denom_c
                + d2_e1_top
                - VxN[0, 1] * d2_E2_top / den1
            )
            num_b = d2_e3_top - VxN[2, 1] * d2_E2_top / den1
            A = (
                M * om**2 * (3.0 * M * r0**2 - I * nperp**2) / denom_c
                + Vxx[0, 0]
                - VxN[0, 1] ** 2 / den1
                - num_a**2 / cond2
            )
            B = Vxx[0, 2] - VxN[0, 1] * VxN[2, 1] / den1 - num_a * num_b / cond2
            C = Vxx[2, 2] - VxN[2, 1] ** 2 / den1 - num_b**2 / cond2
            for name, value in (("A", A), ("C", C), ("det", A * C - B * B)):
                if value <= 0.0:
                    failed = name
                    break

    form = reduced_hessian(eq, b, blocks)
    qnorm = max(float(np.linalg.norm(form.Q)), 1e-300)
    elim = isolated_squares_reduce(form.Q)
    if elim.completed:
        margin = min(elim.pivots) / qnorm
    else:
        margin = elim.pivots[-1] / qnorm

    details = {"den1": den1, "cond2": cond2}
    if failed in ("nu2_block", "nu1_block"):
        details["indefinite_denominator"] = failed
    return StabilityCertificate(
        verdict=_classify(margin),
        margin=margin,
        lambda_ok=den1 > 0.0,
        A=A,
        B=B,
        C=C,
        abc_ok=failed is None,
        pivots=elim.pivots,
        failed_condition=failed,
        details=details,
    )


def orbitron_conditions(eq: Equilibrium, b: BodyParams, model: AxiFieldModel) -> StabilityCertificate:
    """Equatorial-orbit stability conditions evaluated directly from the field.

    For nu0 = sigma e3 in a mirror-symmetric field the closed-form
    conditions collapse to

        lambda = sigma mu Bz + omega pi0 - I_perp omega^2 > 0
        -sigma Bz_zz > 0
        -sigma (3 Bz_r / r + Bz_rr) > 0
        omega pi0 > -sigma mu Bz + I_perp omega^2 + mu Bz_r^2 / (-sigma Bz_zz)

    The last two are equivalent to A > 0 and (lambda > 0 and C > 0) with
    B = 0 exactly.  Raises NotEquatorial for tilted equilibria.
    """
    nperp = math.hypot(eq.nu0[0], eq.nu0[1])
    if nperp > POLAR_EPS:
        raise NotEquatorial("axis is tilted; use the general closed-form conditions")
    sigma = eq.sigma
    om = eq.mult.omega
    pi0 = float(eq.pi0[2])
    jet = eval_jet(model, eq.r0, 0.0)
    lam = sigma * b.mu * jet.Bz + om * pi0 - b.I_perp * om**2
    axial = -sigma * jet.Bz_zz
    radial = -sigma * (3.0 * jet.Bz_r / eq.r0 + jet.Bz_rr)
    A = 3.0 * b.M * om**2 - b.mu * sigma * jet.Bz_rr
    B = 0.0
    C = math.nan
    spin_rhs = math.nan
    failed: str | None = None
    if lam <= 0.0:
        failed = "lambda"
    else:
        C = -sigma * b.mu * jet.Bz_zz - (b.M * om**2 * eq.r0) ** 2 / lam
        if axial <= 0.0:
            failed = "axial"
        elif radial <= 0.0:
            failed = "radial"
        else:
            spin_rhs = (
                -sigma * b.mu * jet.Bz + b.I_perp * om**2 + b.mu * jet.Bz_r**2 / axial
            )
            if not om * pi0 > spin_rhs:
                failed = "spin"
    vals = [lam, A]
    if math.isfinite(C):
        vals.append(C)
        vals.append(A * C - B * B)
    scale = max(1.0, *(abs(v) for v in vals))
    margin = min(vals) / scale
    return StabilityCertificate(
        verdict=_classify(margin),
        margin=margin,
        lambda_ok=lam > 0.0,
        A=A,
        B=B,
        C=C,
        abc_ok=failed is None,
        pivots=(),
        failed_condition=failed,
        details={
            "lambda": lam,
            "axial": axial,
            "radial": radial,
            "spin_lhs": om * pi0,
            "spin_rhs": spin_rhs,
        },
    )


def levitation_conditions(
    eq: Equilibrium,
    lev: LevitationParams,
    b: BodyParams,
    model: AxiFieldModel,
) -> StabilityCertificate:
    """Stability conditions specialized to the levitating branch.

    A, B, C are evaluated in the form they take at a levitation support
    point, where the mixed nu blocks reduce to gravity combinations through
    the force balance; they agree exactly with the general closed-form
    route.  The certificate also reports the scaled diagnostics
    (a, b, c) = (r0 / M g)(A, B, C) and the spin threshold
    omega pi0 > -sigma mu Bz + I_perp omega^2 + M g r0.
    """
    nu_r = float(eq.nu0[0])
    nu_z = float(eq.nu0[2])
    om = eq.mult.omega
    l2 = eq.mult.lambda2
    lam = eq.mult.lambda_
    r0 = eq.r0
    M, I, mu, g = b.M, b.I_perp, b.mu, b.g
    kappa = lev.kappa
    jet = eval_jet(model, r0, 0.0)

    denom_c = I * nu_r**2 + M * r0**2
    cond2 = lam + (I**2 * nu_r**2 / denom_c) * (nu_z * om + l2) ** 2 + nu_r**2 * I * om**2
    A = B = C = math.nan
    failed: str | None = None
    if lam <= 0.0:
        failed = "lambda"
    elif cond2 <= 0.0:
        failed = "nu1_block"
    else:
        bracket1 = 2.0 * I * nu_r * eq.p0 * (nu_z * om + l2) / denom_c + M * g * (
            1.0 - nu_z / (2.0 * kappa)
        )
        bracket2 = M * g * (lev.xi2 - M * g * r0 / (4.0 * kappa**2 * lam))
        A = (
            M * om**2 * (3.0 * M * r0**2 - I * nu_r**2) / denom_c
            - mu * nu_z * jet.Bz_rr
            - bracket1**2 / cond2
        )
        B = -mu * nu_r * jet.Bz_rr - bracket1 * bracket2 / cond2
        C = -mu * nu_z * jet.Bz_zz - bracket2**2 / cond2
        for name, value in (("A", A), ("C", C), ("det", A * C - B * B)):
            if value <= 0.0:
                failed = name
                break

    vals = [lam, cond2]
    if math.isfinite(A):
        vals.extend([A, C, A * C - B * B])
    scale = max(1.0, *(abs(v) for v in vals))
    margin = min(vals) / scale

    sigma = eq.sigma
    pi0_along = sigma * eq.C2
    dyn_rhs = -sigma * mu * jet.Bz + I * om**2 + M * g * r0
    details = {
        "cond2": cond2,
        "a": A * r0 / (M * g) if math.isfinite(A) else math.nan,
        "b": B * r0 / (M * g) if math.isfinite(B) else math.nan,
        "c": C * r0 / (M * g) if math.isfinite(C) else math.nan,
        "dynamic_lhs": om * pi0_along,
        "dynamic_rhs": dyn_rhs,
        "lambda_over_mgr": lam / (M * g * r0),
    }
    return StabilityCertificate(
        verdict=_classify(margin),
        margin=margin,
        lambda_ok=lam > 0.0,
        A=A,
        B=B,
        C=C,
        abc_ok=failed is None,
        pivots=(),
        failed_condition=failed,
        details=details,
    )


def _jacobi_spectrum(Q: np.ndarray, tol: float = 1e-13, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    a = np.array(Q, dtype=float, copy=True)
    n = a.shape[0]
    scale = max(float(np.linalg.norm(a)), 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * float(np.sum(np.triu(a, 1) ** 2)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-3 * tol * scale / (n * n):
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
    return np.sort(np.diag(a))


def eigen_certificate(Q: np.ndarray) -> EigenCertificate:
    """Definiteness verdict from the spectrum of the reduced form.

    Stable means the smallest eigenvalue exceeds 1e-12 |Q|; verdicts whose
    normalized smallest eigenvalue sits inside the marginal band are
    reported as marginal, matching the closed-form routes.
    """
    Q = np.asarray(Q, dtype=float)
    eigs = _jacobi_spectrum(Q)
    qnorm = max(float(np.linalg.norm(Q)), 1e-300)
    lam_min = float(eigs[0])
    margin = lam_min / qnorm
    if abs(margin) < MARGIN_BAND:
        verdict = "marginal"
    elif lam_min > 1e-12 * qnorm:
        verdict = "stable"
    else:
        verdict = "not_certified"
    return EigenCertificate(
        verdict=verdict, lambda_min=lam_min, margin=margin, eigenvalues=tuple(float(e) for e in eigs)
    )
