"""Hermetic recomputation of the stored reference numbers.

The reference spectrum, its per-mode bounds and the spectral radius at
``tau = 0.1`` are stored as constants; ``verify_reference()`` recomputes
them and compares at the rounding of the four-decimal stored values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .propagation import reduced_map_from_modes
from .stability import feasible_windows, phi_bound, spectral_radius_reduced

__all__ = [
    "REFERENCE_OMEGA",
    "REFERENCE_TAU",
    "REFERENCE_EIGENVALUES",
    "REFERENCE_PHI",
    "REFERENCE_ARCCOT",
    "REFERENCE_RHO",
    "VerifyRow",
    "VerifyReport",
    "verify_reference",
]

REFERENCE_OMEGA = math.sqrt(math.pi / 2)
REFERENCE_TAU = 0.1
# nonzero Laplacian eigenvalues of the reference 10-node digraph, modes 2..10
REFERENCE_EIGENVALUES = (
    1.5594,
    6.3182 + 0.0706j,
    6.3182 - 0.0706j,
    2.9473,
    3.4893 + 0.2867j,
    3.4893 - 0.2867j,
    5.1342,
    4.7440,
    3.0000,
)
REFERENCE_PHI = (1.2442, 5.0419, 5.0419, 2.3516, 2.8052, 2.8052, 4.0965, 3.7852, 2.3937)
REFERENCE_ARCCOT = (0.6770, 0.1958, 0.1958, 0.4021, 0.3424, 0.3424, 0.2394, 0.2583, 0.3957)
REFERENCE_RHO = 0.9747

TABLE_TOL = 1e-3
RHO_TOL = 5e-4
EIG_TOL = 1e-8


@dataclass(frozen=True)
class VerifyRow:
    name: str
    expected: float
    computed: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.computed - self.expected) <= self.tolerance


@dataclass
class VerifyReport:
    rows: list[VerifyRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def add(self, name, expected, computed, tolerance):
        self.rows.append(VerifyRow(name, float(expected), float(computed), float(tolerance)))

    def format(self) -> str:
        width = max(len(r.name) for r in self.rows) if self.rows else 4
        lines = [f"{'check':<{width}}  {'expected':>12}  {'computed':>12}  {'tol':>8}  result"]
        for r in self.rows:
            lines.append(
                f"{r.name:<{width}}  {r.expected:>12.6f}  {r.computed:>12.6f}  {r.tolerance:>8.0e}  "
                f"{'PASS' if r.passed else 'FAIL'}"
            )
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _label(lam: complex) -> str:
    if lam.imag == 0:
        return f"{lam.real:.4f}"
    return f"{lam.real:.4f}{lam.imag:+.4f}i"


def verify_reference() -> VerifyReport:
    report = VerifyReport()
    omega = REFERENCE_OMEGA
    for i, (lam, phi, acot) in enumerate(zip(REFERENCE_EIGENVALUES, REFERENCE_PHI, REFERENCE_ARCCOT), start=2):
        mb = phi_bound(lam, omega)
        report.add(f"phi[{i}] lam={_label(complex(lam))}", phi, mb.phi, TABLE_TOL)
        report.add(f"arccot(phi)[{i}]", acot, mb.arccot_phi, TABLE_TOL)
    fr = feasible_windows(REFERENCE_EIGENVALUES, omega)
    report.add("angular margin min arccot(phi)", min(REFERENCE_ARCCOT), fr.tau0, TABLE_TOL)
    rho = spectral_radius_reduced(REFERENCE_EIGENVALUES, omega, REFERENCE_TAU)
    report.add("rho(E_hat) from mode quadratics", REFERENCE_RHO, rho, RHO_TOL)
    dense = np.abs(np.linalg.eigvals(reduced_map_from_modes(REFERENCE_EIGENVALUES, omega, REFERENCE_TAU))).max()
    report.add("rho(E_hat) dense eigensolve vs quadratics", rho, dense, EIG_TOL)
    return report
