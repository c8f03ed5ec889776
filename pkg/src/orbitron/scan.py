"""Parameter scans: stability windows, levitation sweeps, and 2-D maps.

Scans evaluate the certificate machinery over parameter grids and return
plain row dictionaries ready for CSV serialization.  Rows that fail with a
domain error carry the error name in an ``error`` column and the scan
continues.  The worker count is controlled by the ORBITRON_THREADS
environment variable (unset = serial, 0 = one worker per CPU); results are
assembled in input order either way.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import BodyParams
from .equilibrium import (
    LevitationParams,
    build_levitation_equilibrium,
    solve_levitation,
    solve_orbitron_equatorial,
)
from .errors import BadSign, ConfigError, OrbitronError
from .fields import AxiFieldModel, Composite, DipolePair, Linear, eval_jet
from .potential import hessian_blocks
from .stability import closed_form_conditions, levitation_conditions

__all__ = [
    "ScanAxis",
    "ScanSpec",
    "dipoletron_window",
    "window_endpoints",
    "levitation_sweep",
    "stability_map",
    "split_levitation_model",
    "radius_for_beta",
]


@dataclass(frozen=True)
class ScanAxis:
    name: str
    lo: float
    hi: float
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("axis needs at least 1 point")
        if self.n == 1:
            if self.hi != self.lo:
                raise ValueError("a single-point axis needs lo == hi")
        elif not self.hi > self.lo:
            raise ValueError("axis range must be increasing")

    def values(self) -> np.ndarray:
        if self.n == 1:
            return np.array([self.lo])
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class ScanSpec:
    """Axes, fixed parameters, and requested output columns of a 2-D map."""

    axis1: ScanAxis
    axis2: ScanAxis
    fixed: dict = field(default_factory=dict)
    outputs: tuple = ("verdict", "margin", "A", "B", "C")


def _n_workers() -> int:
    raw = os.environ.get("ORBITRON_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"ORBITRON_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ConfigError("ORBITRON_THREADS must be >= 0")
    if n == 0:
        return os.cpu_count() or 1
    return n


def _map_ordered(fn, items: list) -> list:
    n = _n_workers()
    if n <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _window_conditions(q: float, h: float, sigma: int, r0: float) -> tuple[float, float]:
    """Field-level stability conditions (-sigma Bz_zz, -sigma (3 Bz_r/r + Bz_rr))."""
    jet = eval_jet(DipolePair(q, h), r0, 0.0)
    axial = -sigma * jet.Bz_zz
    radial = -sigma * (3.0 * jet.Bz_r / r0 + jet.Bz_rr)
    return axial, radial


def dipoletron_window(
    q: float,
    h: float,
    b: BodyParams,
    ratio_range: tuple[float, float] = (0.3, 1.5),
    n: int = 121,
    sigma: int = 1,
) -> list[dict]:
    """Tabulate the geometric stability conditions along r0 / h.

    Each row reports the two field-level conditions, the squared orbit rate
    they imply, and whether both conditions hold.  The conditions are
    evaluated from the field jet, not from the factored polynomials, so the
    polynomial form stays available as an independent cross-check.
    """
    if sigma not in (-1, 1):
        raise ValueError("sigma must be +1 or -1")
    rows = []
    for ratio in np.linspace(ratio_range[0], ratio_range[1], n):
        r0 = float(ratio) * h
        jet = eval_jet(DipolePair(q, h), r0, 0.0)
        axial = -sigma * jet.Bz_zz
        radial = -sigma * (3.0 * jet.Bz_r / r0 + jet.Bz_rr)
        omega2 = -sigma * (b.mu / b.M) * jet.Bz_r / r0
        rows.append(
            {
                "ratio": float(ratio),
                "r0": r0,
                "axial": axial,
                "radial": radial,
                "omega2": omega2,
                "in_window": bool(axial > 0.0 and radial > 0.0 and omega2 > 0.0),
            }
        )
    return rows


def window_endpoints(
    q: float,
    h: float,
    sigma: int = 1,
    ratio_range: tuple[float, float] = (0.3, 1.5),
    tol: float = 1e-12,
) -> tuple[float, float]:
    """Bisect the boundaries of the stability window in r0 / h.

    A coarse grid locates the interval where both geometric conditions
    hold; each boundary is then refined by bisection on the window
    predicate to within ``tol``.  Raises ValueError when no window lies in
    ``ratio_range``.
    """

    def inside(ratio: float) -> bool:
        axial, radial = _window_conditions(q, h, sigma, ratio * h)
        return axial > 0.0 and radial > 0.0

    n = 601
    grid = np.linspace(ratio_range[0], ratio_range[1], n)
    flags = [inside(float(x)) for x in grid]
    try:
        first = flags.index(True)
    except ValueError:
        raise ValueError(f"no stability window found in ratio range {ratio_range}") from None
    last = first
    while last + 1 < n and flags[last + 1]:
        last += 1

    def refine(lo: float, hi: float, lo_inside: bool) -> float:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if inside(mid) == lo_inside:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    if first == 0:
        lower = float(grid[0])
    else:
        lower = refine(float(grid[first - 1]), float(grid[first]), False)
    if last == n - 1:
        upper = float(grid[-1])
    else:
        upper = refine(float(grid[last]), float(grid[last + 1]), True)
    return lower, upper


def split_levitation_model(model: AxiFieldModel) -> tuple[Linear, AxiFieldModel]:
    """Separate the linear part from the mirror-symmetric remainder."""
    parts = list(model.parts) if isinstance(model, Composite) else [model]
    linear = [p for p in parts if isinstance(p, Linear)]
    rest = [p for p in parts if not isinstance(p, Linear)]
    if len(linear) != 1 or not rest:
        raise ConfigError(
            "levitation needs a composite field with exactly one linear part "
            "and at least one mirror-symmetric part"
        )
    if linear[0].Bp == 0.0:
        raise ConfigError("levitation needs a nonzero linear gradient")
    o_model = rest[0] if len(rest) == 1 else Composite(tuple(rest))
    return linear[0], o_model


def _dipole_scale(model: AxiFieldModel) -> float:
    if isinstance(model, DipolePair):
        return model.h
    if isinstance(model, Composite):
        hs = [_dipole_scale(p) for p in model.parts]
        hs = [h for h in hs if h > 0.0]
        return max(hs) if hs else 0.0
    return 0.0


def radius_for_beta(model: AxiFieldModel, beta: float) -> float:
    """Radius at which the mirror part's Br_z matches beta times the gradient.

    Only the outer branch (to the right of the most negative Br_z) is
    searched, since that is where the geometric window can lie.  Raises
    ValueError when beta is out of reach for the model.
    """
    linear, o_model = split_levitation_model(model)
    target = beta * linear.Bp
    h = _dipole_scale(o_model)
    if h <= 0.0:
        raise ConfigError("levitation needs a dipole part to set the length scale")

    def f(r: float) -> float:
        return eval_jet(o_model, r, 0.0).Br_z - target

    grid = np.linspace(0.01 * h, 8.0 * h, 4096)
    vals = np.array([eval_jet(o_model, float(r), 0.0).Br_z for r in grid])
    k_min = int(np.argmin(vals))
    if not (vals[k_min] <= target <= 0.0) or target == 0.0:
        raise ValueError(
            f"beta Bprime = {target:g} is outside the reachable Br_z range "
            f"[{vals[k_min]:g}, 0) of the mirror part"
        )
    lo, hi = float(grid[k_min]), float(grid[-1])
    if f(hi) < 0.0:
        raise ValueError("Br_z does not recover to the target on the search range")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * h:
            break
    return 0.5 * (lo + hi)


def levitation_sweep(
    model: AxiFieldModel,
    b: BodyParams,
    kappa_values,
    beta: float,
) -> list[dict]:
    """Certify the levitating branch across a range of kappa at fixed beta.

    The orbit radius is chosen once so the mirror part realizes the given
    beta; each kappa then fixes the gravity g = kappa mu B' / M that the
    balance presumes.  Rows with an infeasible kappa carry the error name
    and empty numerics.
    """
    if beta >= 0.0:
        raise BadSign("levitation requires beta < 0")
    linear, _ = split_levitation_model(model)
    r0 = radius_for_beta(model, beta)

    def one(kappa: float) -> dict:
        row = {
            "kappa": float(kappa),
            "beta": beta,
            "r0": r0,
            "nu_r": math.nan,
            "nu_z": math.nan,
            "xi2": math.nan,
            "verdict": "",
            "margin": math.nan,
            "A": math.nan,
            "B": math.nan,
            "C": math.nan,
            "error": "",
        }
        g_row = kappa * b.mu * linear.Bp / b.M
        if g_row <= 0.0:
            row["error"] = "BadSign"
            return row
        try:
            nu_r, nu_z, xi2 = solve_levitation(beta, kappa)
            b_row = replace(b, g=g_row)
            eq = build_levitation_equilibrium(model, b_row, r0, nu_r, nu_z, xi2)
            lev = LevitationParams(beta, float(kappa), xi2, abs(float(kappa)) - 1.0)
            cert = levitation_conditions(eq, lev, b_row, model)
        except OrbitronError as exc:
            row["error"] = type(exc).__name__
            return row
        row.update(
            nu_r=nu_r,
            nu_z=nu_z,
            xi2=xi2,
            verdict=cert.verdict,
            margin=cert.margin,
            A=cert.A,
            B=cert.B,
            C=cert.C,
        )
        return row

    return _map_ordered(one, [float(k) for k in kappa_values])


def stability_map(spec: ScanSpec, model: AxiFieldModel, b: BodyParams) -> list[dict]:
    """Certify equatorial equilibria over a 2-D parameter grid.

    Supported axis and fixed-parameter names are ``r0``, ``pi0`` and
    ``sigma``.  Each cell solves the equatorial equilibrium and runs the
    closed-form certificate; infeasible cells carry the error name.
    """
    known = {"r0", "pi0", "sigma"}
    names = {spec.axis1.name, spec.axis2.name} | set(spec.fixed)
    if not names <= known:
        raise ConfigError(f"unknown scan parameters {sorted(names - known)}; known: {sorted(known)}")
    if spec.axis1.name == spec.axis2.name:
        raise ConfigError("the two scan axes must differ")
    if not {"r0", "pi0"} <= ({spec.axis1.name, spec.axis2.name} | set(spec.fixed)):
        raise ConfigError("scan needs r0 and pi0 via an axis or a fixed value")

    cells = [
        (float(v1), float(v2)) for v1 in spec.axis1.values() for v2 in spec.axis2.values()
    ]

    def one(cell: tuple[float, float]) -> dict:
        v1, v2 = cell
        params = dict(spec.fixed)
        params[spec.axis1.name] = v1
        params[spec.axis2.name] = v2
        row = {spec.axis1.name: v1, spec.axis2.name: v2}
        for name in spec.outputs:
            row[name] = math.nan if name not in ("verdict",) else ""
        row["error"] = ""
        try:
            eq = solve_orbitron_equatorial(
                model, b, params["r0"], params["pi0"], int(params.get("sigma", 1))
            )
            blocks = hessian_blocks(np.array([eq.r0, 0.0, 0.0]), eq.nu0, model, b)
            cert = closed_form_conditions(eq, b, blocks)
        except OrbitronError as exc:
            row["error"] = type(exc).__name__
            return row
        record = cert.to_record()
        record["abc_ok"] = cert.abc_ok
        record["lambda_ok"] = cert.lambda_ok
        for name in spec.outputs:
            if name in record:
                row[name] = record[name]
        return row

    return _map_ordered(one, cells)
