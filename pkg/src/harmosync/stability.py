"""Sampling-period feasibility and per-mode stability of the reduced map.

Every nonzero Laplacian eigenvalue ``lam`` contributes a 2x2 block to the
one-period disagreement map, with characteristic quadratic

    x**2 + (sin(w*tau)*lam/w - 2*cos(w*tau)) * x + (1 - sin(w*tau)*lam/w).

Its roots lie in the open unit disk iff ``cot(w*tau/2) > phi(lam, w)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DegenerateSamplingError",
    "ModeBound",
    "FeasibilityReport",
    "ComplexQuadratic",
    "phi_bound",
    "feasible_windows",
    "mode_quadratic_roots",
    "spectral_radius_reduced",
    "complex_quadratic_is_hurwitz",
    "bilinear_quadratic",
    "bilinear_stability_check",
    "tau_inequality",
]

SIN_TOL = 1e-12


class DegenerateSamplingError(ValueError):
    """Sampling period is a multiple of pi/omega: the mode roots sit on the unit circle."""


@dataclass(frozen=True)
class ModeBound:
    lam: complex
    phi: float
    arccot_phi: float


def _arccot(x: float) -> float:
    # branch with values in (0, pi)
    if x > 0:
        return math.atan(1.0 / x)
    return math.pi / 2 - math.atan(x)


def phi_bound(lam: complex, omega: float) -> ModeBound:
    """Smallest admissible ``cot(omega*tau/2)`` for the mode ``lam``.

    Uses the form obtained by dividing numerator and denominator of the
    two-term expression by ``Re(lam)``::

        phi = (|lam|^2 + sqrt(|lam|^4 + 4 w^2 Im^2)) / (2 w Re)

    which is algebraically identical and collapses to ``Re/w`` for real ``lam``.
    """
    lam = complex(lam)
    a, b = lam.real, lam.imag
    if not a > 0:
        raise ValueError(f"eigenvalue {lam} must have positive real part")
    if not omega > 0:
        raise ValueError("omega must be positive")
    if b == 0.0:
        phi = a / omega
    else:
        mod2 = a * a + b * b
        phi = (mod2 + math.sqrt(mod2 * mod2 + 4.0 * omega * omega * b * b)) / (2.0 * omega * a)
    return ModeBound(lam=lam, phi=phi, arccot_phi=_arccot(phi))


def tau_inequality(lam: complex, omega: float, cot_half: float) -> float:
    """Left-hand side of the quadratic-in-cot stability inequality (must be > 0)."""
    a, b = complex(lam).real, complex(lam).imag
    return omega * a * a * cot_half**2 - (a * b * b + a**3) * cot_half - omega * b * b


@dataclass(frozen=True)
class FeasibilityReport:
    """Feasible sampling periods ``{tau : cot(omega*tau/2) > phi_i for all i}``.

    ``tau0`` is the angular margin ``min_i arccot(phi_i)``; in time units
    the windows are ``(2*k*pi/omega, (2*k*pi + 2*tau0)/omega)``.
    """

    omega: float
    tau0: float
    windows: tuple[tuple[float, float], ...]
    per_mode: tuple[ModeBound, ...]

    @property
    def phi_max(self) -> float:
        return max(m.phi for m in self.per_mode)

    def is_feasible(self, tau: float) -> bool:
        # Open windows: the boundary itself is infeasible.
        half = self.omega * tau / 2.0
        s = math.sin(half)
        if tau <= 0 or abs(math.sin(self.omega * tau)) < SIN_TOL or s == 0.0:
            return False
        return math.cos(half) / s > self.phi_max

    def window_index(self, tau: float) -> int | None:
        for k, (lo, hi) in enumerate(self.windows):
            if lo < tau < hi:
                return k
        return None


def feasible_windows(spectrum, omega: float, k_max: int = 0) -> FeasibilityReport:
    """Feasibility report for a spectrum (a ``LaplacianSpectrum`` or a list of eigenvalues)."""
    lams = getattr(spectrum, "lambdas", spectrum)
    lams = [complex(x) for x in np.atleast_1d(lams)]
    if not lams:
        raise ValueError("empty spectrum")
    modes = tuple(phi_bound(l, omega) for l in lams)
    tau0 = min(m.arccot_phi for m in modes)
    period = 2.0 * math.pi / omega
    windows = tuple((k * period, k * period + 2.0 * tau0 / omega) for k in range(k_max + 1))
    return FeasibilityReport(omega=omega, tau0=tau0, windows=windows, per_mode=modes)


def _check_sampling(omega: float, tau: float) -> tuple[float, float]:
    s, c = math.sin(omega * tau), math.cos(omega * tau)
    if abs(s) < SIN_TOL:
        raise DegenerateSamplingError(
            f"sin(omega*tau) = {s:.3e}: tau is a multiple of pi/omega and every mode root has modulus 1"
        )
    return s, c


def mode_quadratic_roots(lam: complex, omega: float, tau: float) -> tuple[complex, complex]:
    s, c = _check_sampling(omega, tau)
    g = s * complex(lam) / omega
    b = g - 2.0 * c
    c0 = 1.0 - g
    disc = np.sqrt(complex(b * b - 4.0 * c0))
    # pick the sign that avoids cancellation in b + sqrt(disc)
    if (b.conjugate() * disc).real < 0:
        disc = -disc
    q = -(b + disc) / 2.0
    if q == 0:
        return 0j, 0j
    return complex(q), complex(c0 / q)


def spectral_radius_reduced(spectrum, omega: float, tau: float) -> float:
    lams = getattr(spectrum, "lambdas", spectrum)
    rho = 0.0
    for lam in np.atleast_1d(lams):
        x1, x2 = mode_quadratic_roots(complex(lam), omega, tau)
        rho = max(rho, abs(x1), abs(x2))
    return rho


@dataclass(frozen=True)
class ComplexQuadratic:
    """``g(s) = s**2 + (a + b i) s + (c + d i)``."""

    a: float
    b: float
    c: float
    d: float

    def roots(self) -> tuple[complex, complex]:
        p = complex(self.a, self.b)
        q = complex(self.c, self.d)
        disc = np.sqrt(p * p - 4 * q)
        return complex((-p + disc) / 2), complex((-p - disc) / 2)


def complex_quadratic_is_hurwitz(q: ComplexQuadratic) -> bool:
    return q.a > 0 and q.a * q.b * q.d + q.a * q.a * q.c - q.d * q.d > 0


def bilinear_quadratic(lam: complex, omega: float, cot_half: float) -> ComplexQuadratic:
    """Image of the mode quadratic under ``x = (s + 1)/(s - 1)``.

    ``s**2 + (lam/w) k s + k**2 - (lam/w) k`` with ``k = cot(w tau / 2)``.
    """
    r = complex(lam) / omega
    lin = r * cot_half
    const = cot_half * cot_half - r * cot_half
    return ComplexQuadratic(lin.real, lin.imag, const.real, const.imag)


def bilinear_stability_check(lam: complex, omega: float, tau: float) -> bool:
    s, c = _check_sampling(omega, tau)
    # cot(x/2) = (1 + cos x)/sin x, stable for all x away from multiples of pi
    cot_half = (1.0 + c) / s
    return complex_quadratic_is_hurwitz(bilinear_quadratic(lam, omega, cot_half))

