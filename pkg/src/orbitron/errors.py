"""Exception types shared across the package.

Every domain error derives from :class:`OrbitronError` so callers can
distinguish numerical/physical failures from ordinary misuse (which raises
the builtin ``ValueError``/``TypeError``).
"""

from __future__ import annotations


class OrbitronError(Exception):
    """Base class for domain errors raised by this package."""


class ConfigError(OrbitronError):
    """A run configuration is malformed or inconsistent."""


class SourceSingularity(OrbitronError):
    """Field evaluation was requested too close to a dipole source point."""


class AxisDegeneracy(OrbitronError):
    """Cartesian field assembly was requested on the symmetry axis r = 0."""


class NonFinite(OrbitronError):
    """The integrator produced a non-finite state component."""


class NoEquilibrium(OrbitronError):
    """No relative equilibrium branch with a positive spin rate was found."""


class NotMirrorSymmetric(OrbitronError):
    """The field is not mirror symmetric about z = 0 at the requested radius."""


class WrongFieldSign(OrbitronError):
    """The field gradient has the wrong sign to balance the centrifugal force."""


class NoRealSolution(OrbitronError):
    """The levitation discriminant is negative; no real axis tilt exists."""


class NegativeCentrifugal(OrbitronError):
    """The levitation branch requires a non-positive squared spin rate."""


class BadSign(OrbitronError):
    """A levitation sign constraint is violated (non-negative beta or zero kappa)."""


class PolarDegeneracy(OrbitronError):
    """The equilibrium axis lies in the orbital plane; the variation chart fails."""


class NotEquatorial(OrbitronError):
    """The equilibrium axis is tilted; the equatorial certificate does not apply."""


class ZeroPivot(OrbitronError):
    """An elimination pivot vanished to working precision."""


class IndefiniteDenominator(OrbitronError):
    """A closed-form denominator is non-positive; the certificate is inconclusive."""
