"""Axisymmetric magnetostatic field models and their derivative jets.

A field model evaluates, at a point (r, z) of the half plane, the jet of
cylindrical components needed by the equilibrium and stability machinery:
values, first derivatives, and the second derivatives of the axial component.
Supported models are a coaxial pair of point dipoles at z = +h and z = -h
(both with moment +q along the axis), a linear background field, and a sum of
such parts.  All models satisfy the source-free Maxwell equations away from
the dipole points, which :func:`maxwell_residual` checks numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import AxisDegeneracy, ConfigError, SourceSingularity

__all__ = [
    "FieldJet",
    "DipolePair",
    "Linear",
    "Composite",
    "AxiFieldModel",
    "eval_jet",
    "dipole_pair_midplane",
    "cartesian_field",
    "cartesian_jacobian",
    "cartesian_hessian",
    "maxwell_residual",
    "model_from_config",
    "model_to_config",
]

# Relative distance to a dipole source below which evaluation is refused.
SOURCE_EPS = 1e-9


@dataclass(frozen=True)
class FieldJet:
    """Cylindrical field components and derivatives at one point.

    Br_z and Bz_r are stored separately even though curl-freeness makes them
    equal; each is computed from its own component so the curl identity stays
    an honest check.
    """

    Br: float
    Bz: float
    Br_r: float
    Br_z: float
    Bz_r: float
    Bz_z: float
    Bz_rr: float
    Bz_rz: float
    Bz_zz: float

    def __add__(self, other: "FieldJet") -> "FieldJet":
        return FieldJet(
            self.Br + other.Br,
            self.Bz + other.Bz,
            self.Br_r + other.Br_r,
            self.Br_z + other.Br_z,
            self.Bz_r + other.Bz_r,
            self.Bz_z + other.Bz_z,
            self.Bz_rr + other.Bz_rr,
            self.Bz_rz + other.Bz_rz,
            self.Bz_zz + other.Bz_zz,
        )


@dataclass(frozen=True)
class DipolePair:
    """Two identical coaxial point dipoles of strength q at z = +h and z = -h."""

    q: float
    h: float

    def __post_init__(self) -> None:
        if not (self.q > 0 and self.h > 0):
            raise ValueError("dipole pair requires q > 0 and h > 0")


@dataclass(frozen=True)
class Linear:
    """Background field Bz = B0 + Bp z, Br = -Bp r / 2 (uniform gradient)."""

    B0: float
    Bp: float


@dataclass(frozen=True)
class Composite:
    """Superposition of field models."""

    parts: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("composite field needs at least one part")


AxiFieldModel = Union[DipolePair, Linear, Composite]


def _single_dipole_jet(q: float, r: float, Z: float) -> FieldJet:
    """Jet of one axial point dipole; Z is the height above the source."""
    D = r * r + Z * Z
    s5 = D ** -2.5
    s7 = D ** -3.5
    s9 = D ** -4.5
    r2 = r * r
    Z2 = Z * Z
    return FieldJet(
        Br=3.0 * q * r * Z * s5,
        Bz=q * (2.0 * Z2 - r2) * s5,
        Br_r=3.0 * q * Z * (Z2 - 4.0 * r2) * s7,
        Br_z=3.0 * q * r * (r2 - 4.0 * Z2) * s7,
        Bz_r=3.0 * q * r * (r2 - 4.0 * Z2) * s7,
        Bz_z=3.0 * q * Z * (3.0 * r2 - 2.0 * Z2) * s7,
        Bz_rr=3.0 * q * (-4.0 * r2 * r2 + 27.0 * r2 * Z2 - 4.0 * Z2 * Z2) * s9,
        Bz_rz=15.0 * q * r * Z * (4.0 * Z2 - 3.0 * r2) * s9,
        Bz_zz=3.0 * q * (3.0 * r2 * r2 - 24.0 * r2 * Z2 + 8.0 * Z2 * Z2) * s9,
    )


def eval_jet(model: AxiFieldModel, r: float, z: float) -> FieldJet:
    """Evaluate the cylindrical derivative jet of ``model`` at (r, z).

    Raises SourceSingularity if (r, z) lies within ``SOURCE_EPS * h`` of a
    dipole source point.
    """
    if isinstance(model, DipolePair):
        for z_src in (model.h, -model.h):
            if math.hypot(r, z - z_src) < SOURCE_EPS * model.h:
                raise SourceSingularity(
                    f"field evaluated at distance < {SOURCE_EPS:g} h from the source at z = {z_src:g}"
                )
        return _single_dipole_jet(model.q, r, z - model.h) + _single_dipole_jet(
            model.q, r, z + model.h
        )
    if isinstance(model, Linear):
        return FieldJet(
            Br=-0.5 * model.Bp * r,
            Bz=model.B0 + model.Bp * z,
            Br_r=-0.5 * model.Bp,
            Br_z=0.0,
            Bz_r=0.0,
            Bz_z=model.Bp,
            Bz_rr=0.0,
            Bz_rz=0.0,
            Bz_zz=0.0,
        )
    if isinstance(model, Composite):
        jets = [eval_jet(p, r, z) for p in model.parts]
        total = jets[0]
        for j in jets[1:]:
            total = total + j
        return total
    raise TypeError(f"unknown field model {type(model).__name__}")


def dipole_pair_midplane(q: float, h: float, r0: float) -> tuple[float, float, float, float]:
    """Closed-form midplane quantities of the dipole pair at radius r0.

    Returns (Bz, Bz_r, Bz_zz, radial_combo) where radial_combo is the
    stability combination (3/r) Bz_r + Bz_rr.  With D0 = r0**2 + h**2:

        Bz           =  2 q (2 h**2 - r0**2) D0**-5/2
        Bz_r         = -6 q r0 (4 h**2 - r0**2) D0**-7/2
        Bz_zz        =  6 q (3 r0**4 - 24 r0**2 h**2 + 8 h**4) D0**-9/2
        radial_combo = -6 q (r0**4 - 18 r0**2 h**2 + 16 h**4) D0**-9/2
    """
    if not (q > 0 and h > 0):
        raise ValueError("dipole pair requires q > 0 and h > 0")
    if not r0 > 0:
        raise ValueError("midplane radius must be positive")
    r2 = r0 * r0
    h2 = h * h
    D0 = r2 + h2
    bz = 2.0 * q * (2.0 * h2 - r2) * D0 ** -2.5
    bz_r = -6.0 * q * r0 * (4.0 * h2 - r2) * D0 ** -3.5
    bz_zz = 6.0 * q * (3.0 * r2 * r2 - 24.0 * r2 * h2 + 8.0 * h2 * h2) * D0 ** -4.5
    combo = -6.0 * q * (r2 * r2 - 18.0 * r2 * h2 + 16.0 * h2 * h2) * D0 ** -4.5
    return bz, bz_r, bz_zz, combo


def cartesian_field(jet: FieldJet, x: np.ndarray) -> np.ndarray:
    """Cartesian field vector at the point whose jet was taken at (r, z) = (|x_perp|, x3)."""
    x = np.asarray(x, dtype=float)
    r = math.hypot(x[0], x[1])
    out = np.empty(3)
    if r > 0.0:
        out[0] = jet.Br * x[0] / r
        out[1] = jet.Br * x[1] / r
    else:
        out[0] = 0.0
        out[1] = 0.0
    out[2] = jet.Bz
    return out


def cartesian_jacobian(jet: FieldJet, x: np.ndarray) -> np.ndarray:
    """Matrix dB_i/dx_j assembled from the cylindrical jet.

    Symmetric because the field is curl free.  Raises AxisDegeneracy at
    r = 0 where the chart used here breaks down.
    """
    x = np.asarray(x, dtype=float)
    r = math.hypot(x[0], x[1])
    if r == 0.0:
        raise AxisDegeneracy("Cartesian jacobian is assembled off axis only")
    n1 = x[0] / r
    n2 = x[1] / r
    f = jet.Br / r
    g = jet.Br_r - f
    J = np.empty((3, 3))
    J[0, 0] = f + g * n1 * n1
    J[0, 1] = g * n1 * n2
    J[1, 0] = J[0, 1]
    J[1, 1] = f + g * n2 * n2
    J[0, 2] = jet.Br_z * n1
    J[1, 2] = jet.Br_z * n2
    J[2, 0] = jet.Bz_r * n1
    J[2, 1] = jet.Bz_r * n2
    J[2, 2] = jet.Bz_z
    return J


def cartesian_hessian(jet: FieldJet, x: np.ndarray) -> np.ndarray:
    """Array H[i, c, d] = d^2 B_i / dx_c dx_d, totally symmetric in all indices.

    The field is a gradient of a harmonic scalar, so the second derivative
    array inherits full symmetry; the in-plane block is expressed through
    axial derivatives via the Maxwell identities, which keeps the assembly
    free of third cylindrical derivatives of Br.
    """
    x = np.asarray(x, dtype=float)
    r = math.hypot(x[0], x[1])
    if r == 0.0:
        raise AxisDegeneracy("Cartesian hessian is assembled off axis only")
    n = np.array([x[0] / r, x[1] / r])
    H = np.empty((3, 3, 3))

    # In-plane block d^2 B_A / dx_C dx_D for A, C, D in {1, 2}.
    trace_coef = (jet.Bz_z + 2.0 * jet.Br / r) / r
    for a in range(2):
        for c in range(2):
            for d in range(2):
                sym = (
                    n[a] * (1.0 if c == d else 0.0)
                    + n[c] * (1.0 if a == d else 0.0)
                    + n[d] * (1.0 if a == c else 0.0)
                )
                H[a, c, d] = -jet.Bz_rz * n[a] * n[c] * n[d] - trace_coef * (
                    sym - 4.0 * n[a] * n[c] * n[d]
                )

    # One axial index: d^2 B_3 / dx_C dx_D and its symmetric images.
    for c in range(2):
        for d in range(2):
            v = (jet.Bz_r / r) * (1.0 if c == d else 0.0) + (
                jet.Bz_rr - jet.Bz_r / r
            ) * n[c] * n[d]
            H[2, c, d] = v
            H[c, 2, d] = v
            H[c, d, 2] = v

    # Two axial indices.
    for c in range(2):
        v = jet.Bz_rz * n[c]
        H[2, 2, c] = v
        H[2, c, 2] = v
        H[c, 2, 2] = v

    H[2, 2, 2] = jet.Bz_zz
    return H


def maxwell_residual(model: AxiFieldModel, r: float, z: float) -> tuple[float, float]:
    """Return (divergence, curl) of the model field at (r, z).

    Both vanish for an exact solution.  On the axis the divergence uses the
    regular limit Bz_z + 2 Br_r.
    """
    jet = eval_jet(model, r, z)
    if r != 0.0:
        div = jet.Bz_z + jet.Br_r + jet.Br / r
    else:
        div = jet.Bz_z + 2.0 * jet.Br_r
    curl = jet.Br_z - jet.Bz_r
    return div, curl


def model_from_config(cfg: dict) -> AxiFieldModel:
    """Build a field model from its JSON record."""
    if not isinstance(cfg, dict) or "type" not in cfg:
        raise ConfigError("field record must be an object with a 'type' key")
    kind = cfg["type"]
    try:
        if kind == "dipole_pair":
            return DipolePair(q=float(cfg["q"]), h=float(cfg["h"]))
        if kind == "linear":
            return Linear(B0=float(cfg["B0"]), Bp=float(cfg["Bprime"]))
        if kind == "composite":
            return Composite(tuple(model_from_config(p) for p in cfg["parts"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad field record: {exc}") from exc
    raise ConfigError(f"unknown field type {kind!r}")


def model_to_config(model: AxiFieldModel) -> dict:
    """Inverse of :func:`model_from_config`."""
    if isinstance(model, DipolePair):
        return {"type": "dipole_pair", "q": model.q, "h": model.h}
    if isinstance(model, Linear):
        return {"type": "linear", "B0": model.B0, "Bprime": model.Bp}
    if isinstance(model, Composite):
        return {"type": "composite", "parts": [model_to_config(p) for p in model.parts]}
    raise TypeError(f"unknown field model {type(model).__name__}")
