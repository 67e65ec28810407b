"""Search for two-step Runge-Kutta coefficients maximizing the SSP
coefficient subject to order conditions and (optionally) non-decreasing
abscissas.

The outer loop bisects on the SSP parameter r.  At each trial r the inner
problem is a nonlinear least-squares feasibility solve over the free tableau
entries x = (D, Ahat, A, theta, bhat, b):

    Phi(x; r) = sum min(0, R)^2 + sum min(0, P)^2
              + sum (order residuals)^2 + sum min(0, c_{i+1} - c_i)^2

minimized by a damped Gauss-Newton (Levenberg) iteration with a central
difference Jacobian and multistart seeding; r is declared feasible when
Phi < inner_tol^2.  Row-sum consistency of D and theta is enforced by
elimination (last entry = 1 - rest) rather than by penalty.  After the
bisection a short climb phase repairs levels lost to inner-solver failures,
the result is polished at fixed r, and the winner is re-certified exactly.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import certify, order_conditions, tableau

__all__ = [
    "OptimizeError",
    "OptimizationProblem",
    "OptimizationResult",
    "PolishResult",
    "optimize_tsrk",
    "polish",
    "default_multistarts",
]

_FD_STEP = 1e-7


class OptimizeError(RuntimeError):
    """No feasible tableau found at the outer floor."""


def default_multistarts(s: int) -> int:
    return 200 if s <= 4 else 1000


@dataclass(frozen=True)
class OptimizationProblem:
    s: int
    p: int
    require_monotone_abscissas: bool = True
    multistarts: int | None = None
    seed: int = 0
    inner_tol: float = 1e-8
    outer_tol: float = 1e-4
    r_max: float | None = None

    def __post_init__(self):
        if self.s < 1:
            raise ValueError(f"s must be >= 1, got {self.s}")
        if not 1 <= self.p <= order_conditions.MAX_ORDER:
            raise ValueError(f"p must be in 1..8, got {self.p}")
        if self.inner_tol <= 0 or self.outer_tol <= 0:
            raise ValueError("tolerances must be positive")

    @property
    def pool_size(self):
        return (
            default_multistarts(self.s)
            if self.multistarts is None
            else self.multistarts
        )


@dataclass(frozen=True)
class OptimizationResult:
    method: tableau.TsrkMethod
    certified_C: float
    order_report: order_conditions.OrderReport
    penalty_at_solution: float
    starts_used: int


@dataclass(frozen=True)
class PolishResult:
    method: tableau.TsrkMethod
    refined: bool
    certified_C: float


class _Parameterization:
    """Packs the free entries of a k=2 tableau into a flat vector.

    Fixed structure: the first stage is y_1 = u^n; D's second column and
    theta's second entry are eliminated via the row-sum identities.
    """

    def __init__(self, s):
        self.s = s
        self.n_d = s - 1
        self.n_ahat = s - 1
        self.n_a = s * (s - 1) // 2
        self.size = self.n_d + self.n_ahat + self.n_a + 2 + s
        self._a_rows = [(i, j) for i in range(1, s) for j in range(i)]

    def unpack(self, x):
        s = self.s
        pos = 0
        D = np.zeros((s, 2))
        D[0, 1] = 1.0
        D[1:, 0] = x[pos : pos + self.n_d]
        D[1:, 1] = 1.0 - D[1:, 0]
        pos += self.n_d
        Ahat = np.zeros((s, 1))
        Ahat[1:, 0] = x[pos : pos + self.n_ahat]
        pos += self.n_ahat
        A = np.zeros((s, s))
        for (i, j), v in zip(self._a_rows, x[pos : pos + self.n_a]):
            A[i, j] = v
        pos += self.n_a
        theta = np.array([x[pos], 1.0 - x[pos]])
        bhat = np.array([x[pos + 1]])
        b = np.asarray(x[pos + 2 :], dtype=float).copy()
        return D, Ahat, A, theta, bhat, b

    def pack(self, m: tableau.TsrkMethod):
        x = np.empty(self.size)
        pos = 0
        x[pos : pos + self.n_d] = m.D[1:, 0]
        pos += self.n_d
        x[pos : pos + self.n_ahat] = m.Ahat[1:, 0]
        pos += self.n_ahat
        x[pos : pos + self.n_a] = [m.A[i, j] for i, j in self._a_rows]
        pos += self.n_a
        x[pos] = m.theta[0]
        x[pos + 1] = m.bhat[0]
        x[pos + 2 :] = m.b
        return x

    def draw(self, rng):
        s = self.s
        x = np.empty(self.size)
        pos = 0
        x[pos : pos + self.n_d] = rng.uniform(0.0, 1.0, self.n_d)
        pos += self.n_d
        x[pos : pos + self.n_ahat] = rng.uniform(0.0, 0.5, self.n_ahat)
        pos += self.n_ahat
        x[pos : pos + self.n_a] = rng.uniform(0.0, 1.2, self.n_a)
        pos += self.n_a
        x[pos] = rng.uniform(0.0, 0.8)
        x[pos + 1] = rng.uniform(0.0, 0.4)
        x[pos + 2 :] = rng.uniform(0.0, 2.0 / s, s)
        return x


def _residual_closure(pz: _Parameterization, p, r, monotone):
    """Residual vector F(x) with Phi = F.F at the given r."""
    s = pz.s
    n = s + 2
    eye = np.eye(n)

    def fun(x):
        D, Ahat, A, theta, bhat, b = pz.unpack(x)
        S = np.zeros((n, 2))
        S[0, 0] = 1.0
        S[1 : 1 + s] = D
        S[-1] = theta
        T = np.zeros((n, n))
        T[1 : 1 + s, 0] = Ahat[:, 0]
        T[1 : 1 + s, 1 : 1 + s] = A
        T[-1, 0] = bhat[0]
        T[-1, 1 : 1 + s] = b
        try:
            X = np.linalg.solve(eye + r * T, np.hstack([S, r * T]))
        except np.linalg.LinAlgError:
            return np.full(1, np.inf)
        parts = [
            np.minimum(X[:, :2], 0.0).ravel(),
            np.minimum(X[:, 2:], 0.0).ravel(),
            order_conditions.raw_residual_vector(
                D, Ahat, A, theta, bhat, b, 2, s, p
            ),
        ]
        if monotone:
            chain = np.empty(s + 1)
            chain[:s] = Ahat[:, 0] + A.sum(axis=1) - D[:, 0]
            chain[s] = bhat[0] + b.sum() - theta[0]
            parts.append(np.minimum(np.diff(chain), 0.0))
        return np.concatenate(parts)

    return fun


def _levenberg(fun, x0, phi_target, max_iter=200, fd_step=_FD_STEP):
    """Damped Gauss-Newton least squares with central-difference Jacobian."""
    x = np.asarray(x0, dtype=float).copy()
    F = fun(x)
    phi = float(F @ F)
    if not np.isfinite(phi):
        return x, np.inf, False
    n = len(x)
    lam = 1e-3
    stalled = 0
    for _ in range(max_iter):
        if phi <= phi_target:
            break
        phi_before = phi
        J = np.empty((len(F), n))
        for j in range(n):
            xp = x.copy()
            xp[j] += fd_step
            xm = x.copy()
            xm[j] -= fd_step
            Fp = fun(xp)
            Fm = fun(xm)
            if len(Fp) != len(F) or len(Fm) != len(F):
                return x, phi, phi <= phi_target
            J[:, j] = (Fp - Fm) / (2.0 * fd_step)
        if not np.all(np.isfinite(J)):
            return x, phi, phi <= phi_target
        g = J.T @ F
        H = J.T @ J
        diag = np.eye(n)
        accepted = False
        for _ in range(30):
            try:
                step = np.linalg.solve(H + lam * diag, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            xt = x + step
            Ft = fun(xt)
            phit = float(Ft @ Ft)
            if np.isfinite(phit) and phit < phi:
                x, F, phi = xt, Ft, phit
                lam = max(lam / 3.0, 1e-14)
                accepted = True
                break
            lam *= 10.0
            if lam > 1e13:
                break
        if not accepted:
            break
        # Far from feasibility and barely moving: give up on this start.
        if phi > 1e-6 and phi > 0.999 * phi_before:
            stalled += 1
            if stalled >= 4:
                break
        else:
            stalled = 0
    return x, phi, phi <= phi_target


class _StartPool:
    """Deterministic lazy stream of multistart points."""

    def __init__(self, pz, seed, limit):
        self._pz = pz
        self._rng = np.random.default_rng(seed)
        self._limit = limit
        self.used = 0

    def draw(self):
        if self.used >= self._limit:
            return None
        self.used += 1
        return self._pz.draw(self._rng)

    def perturb(self, x, scale):
        if self.used >= self._limit:
            return None
        self.used += 1
        return x + scale * self._rng.standard_normal(len(x))


def _distinct(xs, tol=1e-6):
    """Drop near-duplicate points (keeps first occurrences)."""
    kept = []
    for x in xs:
        if all(np.max(np.abs(x - y)) > tol for y in kept):
            kept.append(x)
    return kept


def _method_from_x(pz, x, p, name="optimized"):
    D, Ahat, A, theta, bhat, b = pz.unpack(x)
    return tableau.TsrkMethod(
        name=name, k=2, s=pz.s, order=p,
        D=D, Ahat=Ahat, A=A, theta=theta, bhat=bhat, b=b,
    )


def _snap(m: tableau.TsrkMethod, tol) -> tableau.TsrkMethod:
    """Zero out tableau entries below tol in magnitude.

    Optimized methods have structurally zero entries that land at roundoff
    scale; snapping recovers the exact sparsity so certification at small r
    sees a clean nonnegative S.  Eliminated columns (D, theta) are rebuilt
    from their free entries to preserve the row sums exactly.
    """

    def z(a):
        a = np.array(a, dtype=float)
        a[np.abs(a) < tol] = 0.0
        return a

    d = z(m.D[:, 0])
    d[np.abs(d - 1.0) < tol] = 1.0
    D = np.column_stack([d, 1.0 - d])
    t1 = float(z(m.theta[:1])[0])
    if abs(t1 - 1.0) < tol:
        t1 = 1.0
    return replace(
        m,
        D=D,
        Ahat=z(m.Ahat),
        A=z(m.A),
        theta=np.array([t1, 1.0 - t1]),
        bhat=z(m.bhat),
        b=z(m.b),
    )


_MAX_WARM = 4


def optimize_tsrk(problem: OptimizationProblem) -> OptimizationResult:
    """Maximize the SSP coefficient over s-stage order-p two-step methods."""
    pz = _Parameterization(problem.s)
    pool = _StartPool(pz, problem.seed, problem.pool_size)
    phi_target = problem.inner_tol**2
    monotone = problem.require_monotone_abscissas
    r_max = (
        certify.default_r_max(problem.s)
        if problem.r_max is None
        else problem.r_max
    )

    def solve_at(r, starts):
        """Run the inner solve from each start; return converged points."""
        fun = _residual_closure(pz, problem.p, r, monotone)
        good, best_bad = [], (None, np.inf)
        for x0 in starts:
            if x0 is None:
                continue
            x, phi, ok = _levenberg(fun, x0, phi_target)
            if ok:
                good.append(x)
            elif phi < best_bad[1]:
                best_bad = (x, phi)
        return _distinct(good), best_bad

    # Seed branches at the outer floor r = 0 (order conditions plus
    # nonnegative step weights only).
    warm = []
    best_bad = (None, np.inf)
    while len(warm) < _MAX_WARM and pool.used < problem.pool_size:
        good, bad = solve_at(0.0, [pool.draw()])
        warm = _distinct(warm + good)
        if bad[1] < best_bad[1]:
            best_bad = bad
        if not warm and pool.used >= min(60, problem.pool_size):
            break
    if not warm:
        raise OptimizeError(
            f"no feasible tableau at r = 0 for (s, p) = "
            f"({problem.s}, {problem.p}) after {pool.used} starts; "
            f"best penalty {best_bad[1]:.3e}"
        )

    # Ramp up a geometric ladder of r values, topping the branch set up
    # with fresh starts at every rung, until a rung fails outright.
    r_lo, r_hi = 0.0, None
    r = min(0.3, 0.25 * r_max)
    while r <= r_max:
        extra = [pool.draw() for _ in range(2)]
        feasible, _ = solve_at(r, warm + extra)
        if not feasible:
            retry, _ = solve_at(r, [pool.draw() for _ in range(4)])
            feasible = retry
        if feasible:
            r_lo, warm = r, feasible[:_MAX_WARM]
            r = r * 1.3 + 0.02
        else:
            r_hi = r
            break
    if r_hi is None:
        # Feasible all the way up: capped result (e.g. vacuous T = 0).
        r_hi = float(r_max)

    # Bisection on r with warm-started inner solves.
    while r_hi - r_lo > problem.outer_tol:
        r_mid = 0.5 * (r_lo + r_hi)
        feasible, _ = solve_at(r_mid, warm)
        if not feasible:
            feasible, _ = solve_at(r_mid, [pool.draw() for _ in range(3)])
        if feasible:
            r_lo = r_mid
            warm = feasible[:_MAX_WARM]
        else:
            r_hi = r_mid

    # Alternate climb repair (fine warm-started steps past levels lost to
    # inner-solver failures) with perturbation restarts around the best
    # branch, until a round stops making real progress or the pool is spent.
    for _ in range(10):
        r_round = r_lo
        step = problem.outer_tol
        climbs = 0
        while step >= 0.5 * problem.outer_tol and climbs < 90:
            climbs += 1
            r_try = r_lo + step
            if r_try > r_max:
                break
            feasible, _ = solve_at(r_try, warm)
            if feasible:
                r_lo = r_try
                warm = feasible[:_MAX_WARM]
                step *= 2.0
            else:
                step *= 0.5
        hops = [
            pool.perturb(warm[i % len(warm)], scale)
            for i, scale in enumerate((0.03, 0.03, 0.1, 0.1, 0.3, 0.3))
        ] + [pool.draw() for _ in range(2)]
        fresh, _ = solve_at(r_lo + problem.outer_tol, hops)
        if fresh:
            r_lo = r_lo + problem.outer_tol
            warm = (fresh + warm)[:_MAX_WARM]
        if r_lo - r_round < 4 * problem.outer_tol:
            break

    # Polish every surviving branch at the final r and keep the best
    # certified coefficient (ties by branch order).
    best = None
    for x in warm:
        m = _method_from_x(pz, x, problem.p)
        pol = polish(
            m,
            problem.p,
            monotone,
            r=r_lo,
            outer_tol=problem.outer_tol,
        )
        cand = (pol.certified_C, pol.method, x)
        if best is None or cand[0] > best[0] + 1e-12:
            best = cand
    certified_C, method, x_final = best

    fun = _residual_closure(pz, problem.p, r_lo, monotone)
    penalty = float(np.sum(fun(pz.pack(method)) ** 2))
    method = replace(
        method,
        name=f"tsrk{problem.s}{problem.p}",
        certified_C=certified_C,
        provenance={
            "origin": "optimizer",
            "seed": str(problem.seed),
            "starts_used": str(pool.used),
        },
    )
    report = order_conditions.residuals_up_to(method, problem.p)
    return OptimizationResult(
        method=method,
        certified_C=certified_C,
        order_report=report,
        penalty_at_solution=penalty,
        starts_used=pool.used,
    )


def polish(
    m: tableau.TsrkMethod,
    p: int,
    monotone: bool,
    r=None,
    outer_tol=1e-4,
    residual_target=1e-12,
) -> PolishResult:
    """Fixed-r refinement driving order residuals down to roundoff level.

    Returns the input unchanged (refined=False) if the refinement diverges
    or costs more than outer_tol of certified SSP coefficient.
    """
    if m.k != 2:
        raise ValueError("polish operates on two-step (k=2) methods")
    try:
        c_in = certify.ssp_coefficient(tableau.to_spijker(_snap(m, 1e-12)))
    except certify.CertifyError:
        c_in = 0.0
    r_fix = c_in if r is None else r
    pz = _Parameterization(m.s)
    fun = _residual_closure(pz, p, r_fix, monotone)
    phi_in = float(np.sum(fun(pz.pack(m)) ** 2))
    x, phi, ok = _levenberg(fun, pz.pack(m), residual_target**2, max_iter=80)
    if not np.all(np.isfinite(x)) or (not ok and phi > phi_in):
        return PolishResult(m, False, c_in)
    refined = _snap(_method_from_x(pz, x, p, name=m.name), 1e-12)
    refined = replace(
        refined, certified_C=m.certified_C, provenance=dict(m.provenance)
    )
    try:
        c_out = certify.ssp_coefficient(tableau.to_spijker(refined))
    except certify.CertifyError:
        return PolishResult(m, False, c_in)
    if c_out < c_in - outer_tol:
        return PolishResult(m, False, c_in)
    return PolishResult(refined, True, c_out)
