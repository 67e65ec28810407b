"""Order conditions for explicit k-step Runge-Kutta methods, orders 1-8.

The conditions are expressed through the stacked forms

    Dtil = [I_{k-1} 0; D],   Atil = [0 0; Ahat A],   btil = (bhat, b),
    l = (k-1, ..., 1, 0),    c = Atil e - Dtil l,

with elementwise powers throughout and the stage residual vectors

    tau_rho = c^rho / rho! - Dtil (-l)^rho / rho! - Atil c^{rho-1} / (rho-1)!

Scalar conditions are reported as |lhs - rhs|; the standalone stage
conditions (tau_2 = 0 at order five, tau_3 = 0 at order seven) as max norms
over the stage entries.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np

from .tableau import TsrkMethod

__all__ = [
    "ConditionResidual",
    "OrderReport",
    "stage_residual",
    "residuals_up_to",
    "attained_order",
    "raw_residual_vector",
    "CONDITION_COUNTS",
]

MAX_ORDER = 8

# Number of conditions introduced at each order 1..8 (stage conditions
# tau_2 = 0 and tau_3 = 0 counted once at orders 5 and 7).
CONDITION_COUNTS = (1, 1, 2, 4, 5, 8, 9, 16)


@dataclass(frozen=True)
class ConditionResidual:
    order: int
    name: str
    value: float
    kind: str  # "scalar" or "stage"


@dataclass(frozen=True)
class OrderReport:
    """Named residuals of every condition up to the requested order."""

    p: int
    conditions: tuple

    def at_order(self, order):
        return [c for c in self.conditions if c.order == order]

    def max_abs(self, up_to=None):
        up_to = self.p if up_to is None else up_to
        vals = [abs(c.value) for c in self.conditions if c.order <= up_to]
        return max(vals) if vals else 0.0

    def attained_order(self, tol):
        """Largest p with every residual through order p at most tol."""
        attained = 0
        for order in range(1, self.p + 1):
            if all(abs(c.value) <= tol for c in self.at_order(order)):
                attained = order
            else:
                break
        return attained


def _forms(D, Ahat, A, theta, bhat, b, k, s):
    n = k - 1 + s
    l = np.arange(k - 1, -1, -1, dtype=float)
    Dtil = np.zeros((n, k))
    Dtil[: k - 1, : k - 1] = np.eye(k - 1)
    Dtil[k - 1 :] = D
    Atil = np.zeros((n, n))
    Atil[k - 1 :, : k - 1] = Ahat
    Atil[k - 1 :, k - 1 :] = A
    btil = np.concatenate([bhat, b])
    c = Atil.sum(axis=1) - Dtil @ l
    return l, Dtil, Atil, btil, c


def _tau(rho, Dtil, Atil, c, l):
    return (
        (c**rho - Dtil @ ((-l) ** rho)) / factorial(rho)
        - (Atil @ c ** (rho - 1)) / factorial(rho - 1)
    )


def _conditions(D, Ahat, A, theta, bhat, b, k, s, p):
    """Yield (order, name, value, kind) for every condition of order <= p.

    Stage-condition entries are emitted entrywise with kind "stage" so that
    callers can either stack them (least squares) or take max norms
    (reporting).
    """
    l, Dtil, Atil, btil, c = _forms(D, Ahat, A, theta, bhat, b, k, s)
    theta = np.asarray(theta, dtype=float)

    def quad(rho):
        # b~' c^{rho-1} = (1 -+ theta' l^rho) / rho, sign alternating
        sign = 1.0 if rho % 2 == 1 else -1.0
        rhs = (1.0 + sign * (theta @ l**rho)) / rho
        return float(btil @ c ** (rho - 1) - rhs)

    tau = {rho: _tau(rho, Dtil, Atil, c, l) for rho in range(2, min(p, 8))}
    C = c

    def dot(name, vec, order):
        return (order, name, float(btil @ vec), "scalar")

    out = [(1, "b'e", quad(1), "scalar")]
    if p >= 2:
        out.append((2, "b'c", quad(2), "scalar"))
    if p >= 3:
        out.append((3, "b'c^2", quad(3), "scalar"))
        out.append(dot("b'tau2", tau[2], 3))
    if p >= 4:
        out.append((4, "b'c^3", quad(4), "scalar"))
        out.append(dot("b'A tau2", Atil @ tau[2], 4))
        out.append(dot("b'C tau2", C * tau[2], 4))
        out.append(dot("b'tau3", tau[3], 4))
    if p >= 5:
        out.append((5, "b'c^4", quad(5), "scalar"))
        out.append(dot("b'A tau3", Atil @ tau[3], 5))
        out.append(dot("b'C tau3", C * tau[3], 5))
        out.append(dot("b'tau4", tau[4], 5))
        out.append((5, "tau2 stages", tau[2][k - 1 :], "stage"))
    if p >= 6:
        out.append((6, "b'c^5", quad(6), "scalar"))
        out.append(dot("b'A tau4", Atil @ tau[4], 6))
        out.append(dot("b'C tau4", C * tau[4], 6))
        out.append(dot("b'tau5", tau[5], 6))
        out.append(dot("b'A^2 tau3", Atil @ (Atil @ tau[3]), 6))
        out.append(dot("b'A C tau3", Atil @ (C * tau[3]), 6))
        out.append(dot("b'C A tau3", C * (Atil @ tau[3]), 6))
        out.append(dot("b'C^2 tau3", C**2 * tau[3], 6))
    if p >= 7:
        out.append((7, "b'c^6", quad(7), "scalar"))
        out.append(dot("b'A tau5", Atil @ tau[5], 7))
        out.append(dot("b'C tau5", C * tau[5], 7))
        out.append(dot("b'tau6", tau[6], 7))
        out.append(dot("b'A^2 tau4", Atil @ (Atil @ tau[4]), 7))
        out.append(dot("b'A C tau4", Atil @ (C * tau[4]), 7))
        out.append(dot("b'C A tau4", C * (Atil @ tau[4]), 7))
        out.append(dot("b'C^2 tau4", C**2 * tau[4], 7))
        out.append((7, "tau3 stages", tau[3][k - 1 :], "stage"))
    if p >= 8:
        out.append((8, "b'c^7", quad(8), "scalar"))
        out.append(dot("b'A tau6", Atil @ tau[6], 8))
        out.append(dot("b'C tau6", C * tau[6], 8))
        out.append(dot("b'tau7", tau[7], 8))
        out.append(dot("b'A^3 tau4", Atil @ (Atil @ (Atil @ tau[4])), 8))
        out.append(dot("b'A^2 tau5", Atil @ (Atil @ tau[5]), 8))
        out.append(dot("b'A^2 C tau4", Atil @ (Atil @ (C * tau[4])), 8))
        out.append(dot("b'A C A tau4", Atil @ (C * (Atil @ tau[4])), 8))
        out.append(dot("b'A C tau5", Atil @ (C * tau[5]), 8))
        out.append(dot("b'A C^2 tau4", Atil @ (C**2 * tau[4]), 8))
        out.append(dot("b'C A^2 tau4", C * (Atil @ (Atil @ tau[4])), 8))
        out.append(dot("b'C A tau5", C * (Atil @ tau[5]), 8))
        out.append(dot("b'C A C tau4", C * (Atil @ (C * tau[4])), 8))
        out.append(dot("b'C^2 A tau4", C**2 * (Atil @ tau[4]), 8))
        out.append(dot("b'C^2 tau5", C**2 * tau[5], 8))
        out.append(dot("b'C^3 tau4", C**3 * tau[4], 8))
    return out


def stage_residual(m: TsrkMethod, rho: int) -> np.ndarray:
    """Stage entries of tau_rho (the old-step slots are identically zero)."""
    if rho < 2:
        raise ValueError(f"stage residuals are defined for rho >= 2, got {rho}")
    l, Dtil, Atil, _, c = _forms(
        m.D, m.Ahat, m.A, m.theta, m.bhat, m.b, m.k, m.s
    )
    return _tau(rho, Dtil, Atil, c, l)[m.k - 1 :]


def residuals_up_to(m: TsrkMethod, p: int) -> OrderReport:
    """Evaluate every condition of every order up to p."""
    if not 1 <= p <= MAX_ORDER:
        raise ValueError(f"order p must be in 1..{MAX_ORDER}, got {p}")
    conds = []
    for order, name, value, kind in _conditions(
        m.D, m.Ahat, m.A, m.theta, m.bhat, m.b, m.k, m.s, p
    ):
        if kind == "stage":
            value = float(np.abs(value).max())
        conds.append(ConditionResidual(order, name, value, kind))
    return OrderReport(p=p, conditions=tuple(conds))


def attained_order(m: TsrkMethod, tol: float) -> int:
    """Largest p in 1..8 with all residuals at most tol, or 0."""
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    return residuals_up_to(m, MAX_ORDER).attained_order(tol)


def raw_residual_vector(D, Ahat, A, theta, bhat, b, k, s, p):
    """Flat residual array for least-squares solvers (stage entries kept
    separate rather than max-normed)."""
    vals = []
    for _, _, value, kind in _conditions(D, Ahat, A, theta, bhat, b, k, s, p):
        if kind == "stage":
            vals.extend(np.asarray(value).ravel())
        else:
            vals.append(value)
    return np.array(vals)
