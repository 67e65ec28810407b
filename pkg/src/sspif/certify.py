"""SSP coefficient certification and the non-decreasing abscissa check.

A method in Spijker form (S, T) is SSP with coefficient

    C(S, T) = sup { r : (I + rT)^{-1} exists, R >= 0 and P >= 0 }

where R = (I + rT)^{-1} S and P = r (I + rT)^{-1} T, the inequalities
componentwise.  Feasibility is monotone in r, so C is found by bisection.
"""

from dataclasses import dataclass

import numpy as np

from .densemat import SingularMatrixError, solve
from .tableau import SpijkerForm

__all__ = [
    "CertifyError",
    "FeasibilityCheck",
    "feasible_at",
    "ssp_coefficient",
    "abscissa_monotone",
    "default_r_max",
]

# (I + rT)^{-1} roundoff makes exact componentwise nonnegativity too strict
# near the feasibility boundary.
COMPONENT_TOL = 1e-12


class CertifyError(RuntimeError):
    """Certification failed in a way that violates its own preconditions."""


@dataclass(frozen=True)
class FeasibilityCheck:
    """Outcome of a componentwise nonnegativity test at one value of r."""

    feasible: bool
    r: float
    min_entry: float
    matrix: str  # "R" or "P"
    index: tuple

    def __bool__(self):
        return self.feasible


def feasible_at(f: SpijkerForm, r: float, component_tol=COMPONENT_TOL):
    """Check R = (I+rT)^{-1} S >= 0 and P = r (I+rT)^{-1} T >= 0 at r.

    A singular (I + rT) counts as infeasible rather than an error.
    """
    if r < 0:
        raise ValueError(f"r must be nonnegative, got {r}")
    n = f.T.shape[0]
    k = f.S.shape[1]
    try:
        X = solve(np.eye(n) + r * f.T, np.hstack([f.S, r * f.T]))
    except SingularMatrixError:
        return FeasibilityCheck(False, r, -np.inf, "R", (0, 0))
    R = X[:, :k]
    P = X[:, k:]
    iR = np.unravel_index(np.argmin(R), R.shape)
    iP = np.unravel_index(np.argmin(P), P.shape)
    if R[iR] <= P[iP]:
        worst, name, idx = R[iR], "R", iR
    else:
        worst, name, idx = P[iP], "P", iP
    return FeasibilityCheck(
        bool(worst >= -component_tol), r, float(worst), name, tuple(idx)
    )


def default_r_max(s: int) -> float:
    """Default bisection bracket: the explicit s-stage bound C <= s with
    slack for the extra step values."""
    return 2.0 * (s + 1)


def ssp_coefficient(f: SpijkerForm, r_max=None, tol=1e-8) -> float:
    """Largest feasible r on [0, r_max], to bracket width tol, by bisection.

    Returns r_max itself when the method is feasible there (capped result,
    e.g. when T = 0 and feasibility is vacuous).
    """
    if r_max is None:
        r_max = default_r_max(f.s)
    if r_max <= 0 or tol <= 0:
        raise ValueError("r_max and tol must be positive")
    if not feasible_at(f, 0.0):
        # Cannot happen for a consistent explicit method with nonnegative
        # S: R(0) = S and P(0) = 0.
        raise CertifyError(
            "method infeasible at r = 0; S has a negative entry"
        )
    if feasible_at(f, r_max):
        return float(r_max)
    lo, hi = 0.0, float(r_max)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible_at(f, mid):
            lo = mid
        else:
            hi = mid
    return lo


def abscissa_monotone(c, tol=1e-10) -> bool:
    """True iff the stage abscissas are non-decreasing from 0 up to 1.

    Accepts either the stage chain (0, c_2, ..., c_s, 1) or the full
    Spijker-aligned vector whose leading entries are the old step values at
    -(k-1), ..., -1 (those are skipped).
    """
    c = np.asarray(c, dtype=float)
    first = 0
    while first < len(c) and c[first] < -0.5:
        first += 1
    chain = c[first:]
    if len(chain) < 2:
        return False
    if abs(chain[0]) > tol or abs(chain[-1] - 1.0) > tol:
        return False
    return bool(np.all(np.diff(chain) >= -tol))
