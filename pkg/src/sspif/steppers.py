"""Integrating factor time steppers for split problems u_t = L u + N(u).

The linear part is treated exactly through matrix exponentials; the
transformed problem is advanced by a method in canonical Shu-Osher form
(R, P, r).  Each stage combines propagated step values and forward-Euler
substeps::

    y_i = sum_col R[i,col] e^{(c_i - c_col) dt L} w_col
        + sum_j   P[i,j]   e^{(c_i - c_j) dt L} (w_j + (dt/r) N(w_j))

with w stacking (u^{n-1}, y_1 = u^n, ..., y_s, u^{n+1}) and the abscissa of
u^{n-1} equal to -1, so the exponents on the previous step value are
(c_i + 1) dt L.  Non-decreasing abscissas keep every exponent nonnegative,
which is exactly the condition under which the exponential preserves
forward-Euler-type bounds.

Plain explicit stepping is the special case L = 0 (all exponentials are the
identity), which lets one engine serve the integrating factor methods, the
fully explicit baselines, and the linear multistep variant.
"""

from dataclasses import dataclass

import numpy as np

from . import densemat, tableau

__all__ = [
    "StepperError",
    "NonMonotoneError",
    "IfProblem",
    "StepTrace",
    "ExpCache",
    "exp_cache",
    "if_tsrk_step",
    "if_rk_step",
    "if_lmm_step",
    "bootstrap",
    "BootstrapResult",
    "Marcher",
    "canonical_form",
]

_GAMMA_EPS = 1e-12


class StepperError(RuntimeError):
    """Invalid stepping request."""


class NonMonotoneError(StepperError):
    """A negative exponent was requested without the explicit override."""


@dataclass(frozen=True)
class IfProblem:
    """Split right-hand side L u + N(u) with initial state u0.

    ``N is None`` declares a purely linear problem; ``L is None`` a purely
    nonlinear one (plain explicit stepping).
    """

    u0: np.ndarray
    L: np.ndarray | None = None
    N: object = None  # callable u -> N(u), or None
    history: tuple | None = None  # optional exact (u^{n-1}, u^n) start

    def __post_init__(self):
        u0 = np.asarray(self.u0, dtype=float)
        object.__setattr__(self, "u0", u0)
        if self.L is not None:
            L = densemat.as_matrix(self.L, square=True)
            if L.shape[0] != len(u0):
                raise StepperError(
                    f"L is {L.shape} but the state has {len(u0)} entries"
                )
            object.__setattr__(self, "L", L)


@dataclass(frozen=True)
class StepTrace:
    """Per-stage TV values of one step and the worst consecutive rise."""

    stage_tvs: tuple = ()

    @property
    def max_rise(self):
        if len(self.stage_tvs) < 2:
            return None
        return float(np.diff(np.asarray(self.stage_tvs)).max())


class ExpCache:
    """Exponentials e^{gamma dt L} keyed by the exponent gamma.

    mode "direct" evaluates every requested exponent with the dense
    scaling-and-squaring routine.  mode "chain" factors a prepared set of
    exponents over their consecutive increments and builds the rest by
    semigroup products, which saves most of the dense work when many
    exponents share increments (exact in exact arithmetic; agreement with
    the direct route is part of the test suite).  A zero L short-circuits
    to the identity, reported as None so callers can skip the product.
    """

    def __init__(self, L, dt, mode="direct"):
        if dt <= 0:
            raise StepperError(f"dt must be positive, got {dt}")
        if mode not in ("direct", "chain"):
            raise StepperError(f"unknown exp cache mode {mode!r}")
        self.dt = float(dt)
        self.mode = mode
        self.L = None
        if L is not None:
            L = densemat.as_matrix(L, square=True)
            if np.any(L):
                self.L = L
        self._store = {0.0: None}

    @staticmethod
    def _key(gamma):
        g = float(gamma)
        if abs(g) < _GAMMA_EPS:
            return 0.0
        return round(g, 12)

    def get(self, gamma):
        """Exponential for one exponent; None stands for the identity."""
        key = self._key(gamma)
        if self.L is None:
            return None
        if key not in self._store:
            self._store[key] = densemat.expm((key * self.dt) * self.L)
        return self._store[key]

    def prepare(self, gammas):
        """Materialize a whole set of exponents at once."""
        keys = sorted({self._key(g) for g in gammas})
        if self.L is None:
            return
        if self.mode == "direct":
            for key in keys:
                self.get(key)
            return
        # Chain mode: nonnegative exponents are cumulative products of
        # their increments; only distinct increments hit the dense routine.
        pos = [k for k in keys if k > 0 and k not in self._store]
        neg = [k for k in keys if k < 0 and k not in self._store]
        inc_cache = {}
        prev_key, prev_val = 0.0, None
        for key in sorted(set(pos)):
            inc = self._key(key - prev_key)
            if inc not in inc_cache:
                inc_cache[inc] = densemat.expm((inc * self.dt) * self.L)
            step = inc_cache[inc]
            prev_val = step if prev_val is None else step @ prev_val
            self._store[key] = prev_val
            prev_key = key
        for key in neg:
            self.get(key)

    def apply(self, gamma, vec):
        e = self.get(gamma)
        return vec if e is None else e @ vec


def exp_cache(L, dt, c, mode="direct") -> ExpCache:
    """Cache holding every exponent (c_i - c_j) and (c_i + 1) of an
    abscissa vector, shared across the steps of a march at fixed dt."""
    cache = ExpCache(L, dt, mode=mode)
    c = np.asarray(c, dtype=float)
    gammas = {0.0}
    for i in range(len(c)):
        for j in range(len(c)):
            gammas.add(c[i] - c[j])
        gammas.add(c[i] + 1.0)
    cache.prepare(g for g in gammas if g >= -_GAMMA_EPS)
    return cache


def canonical_form(m: tableau.TsrkMethod, r=None):
    """Canonical Shu-Osher form at the method's certified coefficient."""
    if r is None:
        r = m.certified_C
    if r is None or r <= 0:
        raise StepperError(
            f"method {m.name!r} needs a positive r (certified_C) to step"
        )
    return tableau.to_canonical(m, r)


def _stage_sweep(form, prob, dt, wvals, nvals, cache, allow_nonmonotone, tv):
    """Advance all stages of one step.  wvals/nvals are mutable lists
    aligned with the rows of the canonical form (old step values first),
    pre-filled through the u^n stage."""
    k, s = form.k, form.s
    R, P, c, r = form.R, form.P, form.c, form.r
    n_fun = prob.N
    tvs = [] if tv is None else [tv(wvals[k - 1])]

    def n_of(j):
        if nvals[j] is None:
            if n_fun is None:
                nvals[j] = np.zeros_like(wvals[j])
            else:
                nvals[j] = np.asarray(n_fun(wvals[j]), dtype=float)
        return nvals[j]

    def gamma_of(i, j):
        g = c[i] - c[j]
        if g < -_GAMMA_EPS and not allow_nonmonotone and cache.L is not None:
            raise NonMonotoneError(
                f"stage {i} needs exponent {g:.3e} dt L; decreasing "
                "abscissas require the explicit non-monotone override"
            )
        return g

    for i in range(k, k + s):  # rows y_2 .. y_{s+1}; row k-1 is y_1 = u^n
        terms = {}
        for col in range(k):
            w = R[i, col]
            if w != 0.0:
                terms.setdefault(cache._key(gamma_of(i, col)), []).append(
                    w * wvals[col]
                )
        for j in range(i):
            w = P[i, j]
            if w != 0.0:
                sub = wvals[j] + (dt / r) * n_of(j)
                terms.setdefault(cache._key(gamma_of(i, j)), []).append(w * sub)
        acc = np.zeros_like(wvals[k - 1])
        for g, vecs in terms.items():
            vec = vecs[0] if len(vecs) == 1 else sum(vecs)
            acc = acc + cache.apply(g, vec)
        wvals.append(acc)
        nvals.append(None)
        if tv is not None:
            tvs.append(tv(acc))
    return StepTrace(stage_tvs=tuple(tvs))


def _gammas_for_form(form):
    """Exponents actually used by the nonzero weights of a canonical form."""
    k, c = form.k, form.c
    gammas = {0.0}
    rows, cols = np.nonzero(form.R)
    for i, col in zip(rows, cols):
        gammas.add(float(c[i] - c[col]))
    rows, cols = np.nonzero(form.P)
    for i, j in zip(rows, cols):
        gammas.add(float(c[i] - c[j]))
    return gammas


def _prev_weights_zero(form):
    # Rows 0..k-2 are the identity rows carrying the old step values.
    k = form.k
    return np.all(form.R[k - 1 :, : k - 1] == 0.0) and np.all(
        form.P[k - 1 :, : k - 1] == 0.0
    )


def if_tsrk_step(
    form,
    prob: IfProblem,
    dt,
    u_prev,
    u_curr,
    n_prev=None,
    cache=None,
    allow_nonmonotone=False,
    tv=None,
):
    """One step of the integrating factor two-step method.

    Returns (u_next, trace).  ``n_prev`` may carry the stored N(u^{n-1})
    from the previous step; otherwise it is evaluated on demand.
    """
    if form.k != 2:
        raise StepperError("if_tsrk_step expects a two-step (k=2) form")
    if cache is None:
        cache = exp_cache(prob.L, dt, form.c)
    wvals = [np.asarray(u_prev, dtype=float), np.asarray(u_curr, dtype=float)]
    nvals = [None if n_prev is None else np.asarray(n_prev, dtype=float), None]
    trace = _stage_sweep(form, prob, dt, wvals, nvals, cache, allow_nonmonotone, tv)
    return wvals[-1], trace


def if_rk_step(
    form,
    prob: IfProblem,
    dt,
    u_curr,
    cache=None,
    allow_nonmonotone=False,
    tv=None,
):
    """One step of a one-step integrating factor method (embedded form with
    zero weights on the previous step value)."""
    if form.k == 2 and not _prev_weights_zero(form):
        raise StepperError(
            "method uses the previous step value; use if_tsrk_step"
        )
    if cache is None:
        cache = exp_cache(prob.L, dt, form.c)
    u_curr = np.asarray(u_curr, dtype=float)
    wvals = [u_curr, u_curr] if form.k == 2 else [u_curr]
    nvals = [None] * len(wvals)
    trace = _stage_sweep(form, prob, dt, wvals, nvals, cache, allow_nonmonotone, tv)
    return wvals[-1], trace


def if_lmm_step(alphas, betas, prob: IfProblem, dt, history, cache=None, tv=None):
    """One step of the k-step integrating factor multistep method

        u^{n+1} = sum_l e^{(k-l+1) dt L} (alpha_l u^{n-k+l}
                                          + dt beta_l N(u^{n-k+l}))

    ``history`` holds (u^{n-k+1}, ..., u^n), oldest first.
    """
    alphas = np.asarray(alphas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    k = len(alphas)
    if len(betas) != k or len(history) != k:
        raise StepperError("alphas, betas and history must share length k")
    if abs(alphas.sum() - 1.0) > 1e-12:
        raise StepperError("multistep weights alpha must sum to 1")
    if np.any(alphas < 0) or np.any(betas < 0):
        raise StepperError("multistep weights must be nonnegative")
    if cache is None:
        cache = ExpCache(prob.L, dt)
    u_next = np.zeros_like(np.asarray(history[0], dtype=float))
    for l in range(1, k + 1):
        u = np.asarray(history[l - 1], dtype=float)
        term = alphas[l - 1] * u
        if betas[l - 1] != 0.0:
            nval = (
                np.zeros_like(u)
                if prob.N is None
                else np.asarray(prob.N(u), dtype=float)
            )
            term = term + dt * betas[l - 1] * nval
        u_next = u_next + cache.apply(float(k - l + 1), term)
    tvs = ()
    if tv is not None:
        tvs = (tv(history[-1]), tv(u_next))
    return u_next, StepTrace(stage_tvs=tvs)


@dataclass(frozen=True)
class BootstrapResult:
    history: tuple
    traces: tuple


_STARTER_NAME = "essprk33p"
_STARTER_SUBSTEPS = 10


def bootstrap(method, prob: IfProblem, dt, tv=None, cache_mode="direct"):
    """Produce the second starting value for two-step methods.

    Linear problems propagate exactly; otherwise ten substeps of the
    non-decreasing abscissa third-order starter at dt/10 give a start whose
    error is far below the method's own local error through order four.
    """
    u0 = prob.u0
    if prob.N is None:
        if prob.L is None:
            return BootstrapResult((u0, u0.copy()), ())
        u1 = densemat.expm(dt * prob.L) @ u0
        return BootstrapResult((u0, u1), ())
    starter = tableau.get_method(_STARTER_NAME)
    form = canonical_form(starter)
    sub_dt = dt / _STARTER_SUBSTEPS
    cache = exp_cache(prob.L, sub_dt, form.c, mode=cache_mode)
    u = u0
    traces = []
    for _ in range(_STARTER_SUBSTEPS):
        u, trace = if_rk_step(form, prob, sub_dt, u, cache=cache, tv=tv)
        traces.append(trace)
    return BootstrapResult((u0, u), tuple(traces))


class Marcher:
    """Fixed-step time march with per-stage TV tracing and reuse of the
    previous step's derivative evaluation.

    mode "if" applies the integrating factor method to the split problem;
    mode "explicit" applies the same tableau directly to the combined
    right-hand side L u + N(u) (all exponentials collapse to the identity).
    """

    def __init__(
        self,
        method: tableau.TsrkMethod,
        prob: IfProblem,
        dt,
        r=None,
        mode="if",
        tv=None,
        allow_nonmonotone=False,
        cache_mode="direct",
    ):
        if mode not in ("if", "explicit"):
            raise StepperError(f"unknown march mode {mode!r}")
        self.method = method
        self.dt = float(dt)
        self.tv = tv
        self.allow_nonmonotone = allow_nonmonotone
        self.form = canonical_form(method, r)
        self.n_evaluations = 0
        if mode == "explicit":
            L = prob.L
            N = prob.N

            def combined(u):
                out = np.zeros_like(u)
                if L is not None:
                    out = out + L @ u
                if N is not None:
                    out = out + N(u)
                return out

            self.prob = IfProblem(
                u0=prob.u0, L=None, N=combined, history=prob.history
            )
        else:
            self.prob = prob
        base_n = self.prob.N
        if base_n is not None:
            def counted(u, _f=base_n):
                self.n_evaluations += 1
                return _f(u)

            self.prob = IfProblem(
                u0=self.prob.u0, L=self.prob.L, N=counted,
                history=self.prob.history,
            )
        self.cache = ExpCache(self.prob.L, self.dt, mode=cache_mode)
        self.cache.prepare(_gammas_for_form(self.form))
        self._uses_prev = not _prev_weights_zero(self.form)

    def run(self, steps, stop_rise=None):
        """March ``steps`` steps from the problem's initial state.

        Returns (u_final, traces).  When ``stop_rise`` is set the march
        aborts early once the worst consecutive-stage TV rise exceeds it
        (the traces collected so far already witness the rise).
        """
        prob, dt, tv = self.prob, self.dt, self.tv
        traces = []
        u_prev = None
        n_prev = None
        if self._uses_prev:
            if prob.history is not None:
                u_prev, u_curr = (np.asarray(h, dtype=float) for h in prob.history)
                done = 0
            else:
                boot = bootstrap(self.method, prob, dt, tv=tv)
                u_prev, u_curr = boot.history
                traces.extend(boot.traces)
                done = 1
        else:
            u_curr = prob.u0
            done = 0
        for _ in range(done, steps):
            if self._uses_prev:
                wvals = [u_prev, u_curr]
                nvals = [n_prev, None]
                trace = _stage_sweep(
                    self.form, prob, self.dt, wvals, nvals, self.cache,
                    self.allow_nonmonotone, tv,
                )
                u_next = wvals[-1]
                # Stage y_1 of this step is u^n, so its derivative value is
                # next step's N(u^{n-1}).
                n_prev = nvals[1]
                u_prev = u_curr
            else:
                u_next, trace = if_rk_step(
                    self.form, prob, self.dt, u_curr, cache=self.cache,
                    allow_nonmonotone=self.allow_nonmonotone, tv=tv,
                )
            u_curr = u_next
            traces.append(trace)
            if stop_rise is not None and trace.max_rise is not None:
                if trace.max_rise > stop_rise:
                    break
        return u_curr, traces
