"""Physical parameters and closed-form derived constants.

Single source of truth for the slip coefficients (k0 at the bottom wall,
k1 at the top wall) and the viscosity mu.  Positive slip coefficients mean
the wall feeds energy into the fluid, negative ones mean it drains energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class SlipConfig:
    """Slip coefficients at y=0 and y=1 plus the (strictly positive) viscosity."""

    k0: float
    k1: float
    mu: float = 1.0

    def __post_init__(self):
        for name in ("k0", "k1", "mu"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ConfigError(f"{name} must be a finite real, got {v!r}")
        if self.mu <= 0:
            raise ConfigError(f"viscosity must be strictly positive, got {self.mu}")


@dataclass(frozen=True)
class DerivedConstants:
    """Closed-form constants derived from a SlipConfig.

    mu_c is the three-branch closed-form critical viscosity; b_max and
    a_norm describe the critical cubic profile x(x-1)(x-b) scaled to unit
    half-integral of its squared second derivative.  They are present only
    when mu_c > 0.
    """

    mu_c: float
    c0: float
    b_max: float | None = None
    a_norm: float | None = None


def critical_viscosity_closed_form(cfg: SlipConfig) -> float:
    """Three-branch closed-form critical viscosity.

    Zero when both walls dissipate, k/6 on the equal-coefficient branch,
    otherwise ((k1+k0) + sqrt(k1^2+k0^2-k1*k0))/6.  Independent of mu.

    Note the equal-coefficient branch is NOT the limit of the general
    branch; see critical_viscosity() for the value the variational
    maximisation actually attains there.
    """
    k0, k1 = cfg.k0, cfg.k1
    if k0 <= 0 and k1 <= 0:
        return 0.0
    if k0 == k1:
        return k0 / 6.0
    return ((k1 + k0) + math.sqrt(k1**2 + k0**2 - k1 * k0)) / 6.0


def critical_viscosity(cfg: SlipConfig) -> float:
    """Critical viscosity as attained by the boundary-production maximisation.

    Equals the general closed-form branch clipped at zero,
    max(0, ((k1+k0) + sqrt(k1^2+k0^2-k1*k0))/6), for every sign pattern --
    including equal positive coefficients, where the maximiser degenerates
    from a cubic to the symmetric parabola x(1-x) and the quotient reaches
    k/2 rather than the k/6 of the dedicated branch.  This is the value the
    numerical maximisation in `functionals` reproduces and the one all
    stability/instability regime decisions use.
    """
    k0, k1 = cfg.k0, cfg.k1
    return max(0.0, ((k1 + k0) + math.sqrt(k1**2 + k0**2 - k1 * k0)) / 6.0)


def maximizer_cubic(cfg: SlipConfig) -> tuple[float, float]:
    """Root b and scale a of the critical cubic profile a*x*(x-1)*(x-b).

    b solves (k0-k1) b^2 - 2 k0 b + k1 = 0 (b = 1/2 on the degenerate
    equal-coefficient branch), taking the root that maximises
    (k0-k1) b / 6 + k1 / 6.  a > 0 normalises the profile to
    (1/2) * integral of (psi'')^2 = 1.  Requires a positive closed-form
    critical viscosity.
    """
    if critical_viscosity_closed_form(cfg) <= 0:
        raise ConfigError("maximizer cubic undefined: closed-form critical viscosity is zero")
    k0, k1 = cfg.k0, cfg.k1
    if k0 == k1:
        b = 0.5
    else:
        disc = math.sqrt(k0**2 - k0 * k1 + k1**2)
        # the + root gives mu_c = (k0 + k1 + disc)/6, the larger candidate
        b = (k0 + disc) / (k0 - k1)
    # psi'' = a*(6x - 2 - 2b), so integral of (psi'')^2 = 4 a^2 (b^2 - b + 1)
    a = 1.0 / math.sqrt(2.0 * (b * b - b + 1.0))
    return b, a


def cubic_profile_values(b: float, a: float, y) -> "object":
    """Evaluate a*y*(y-1)*(y-b) (vectorised over y)."""
    return a * y * (y - 1.0) * (y - b)


def constant_c0(cfg: SlipConfig) -> float:
    """Coercivity constant |k1+k0| + max(k0^2, k1^2)/mu.

    The quadratic ((k1+k0) y - k0)^2 attains its maximum over [0, 1] at an
    endpoint, so the maximum reduces to max(k0^2, k1^2).
    """
    return abs(cfg.k1 + cfg.k0) + max(cfg.k0**2, cfg.k1**2) / cfg.mu


def boundary_bound_constant(cfg: SlipConfig) -> float:
    """Bound on |boundary production| over the unit curvature sphere.

    Assembled from the Cauchy-Schwarz chain: |Z| <= (C1 + C2) with
    C1 = |k0+k1| + max(|k0|, |k1|) multiplying the gradient term and
    C2 = max(|k0|, |k1|) multiplying the curvature term, then the
    gradient-curvature comparison collapses both onto the sphere.
    """
    g = max(abs(cfg.k0), abs(cfg.k1))
    return abs(cfg.k0 + cfg.k1) + 2.0 * g


def derived_constants(cfg: SlipConfig) -> DerivedConstants:
    mu_c = critical_viscosity_closed_form(cfg)
    if mu_c > 0:
        b, a = maximizer_cubic(cfg)
        return DerivedConstants(mu_c=mu_c, c0=constant_c0(cfg), b_max=b, a_norm=a)
    return DerivedConstants(mu_c=0.0, c0=constant_c0(cfg))
