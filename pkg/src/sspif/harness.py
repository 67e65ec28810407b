"""End-to-end experiments: TVD lambda sweeps with observed-threshold
extraction, and the van der Pol convergence study.

The sweep protocol: evolve the step-function problem a fixed number of
steps at dt = lambda dx, record the total variation after every stage, and
take the worst consecutive-stage rise over all steps.  The observed TVD
threshold is the largest lambda whose worst rise stays at or below 1e-12;
it is bounded below by the certified SSP coefficient whenever the
semi-discretization is provably TVD.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import semidiscrete, steppers, tableau

__all__ = [
    "ExampleSpec",
    "linear_example",
    "burgers_example",
    "SweepRecord",
    "ConvergenceRecord",
    "TvdSweeper",
    "tvd_sweep",
    "observed_lambda",
    "default_lambda_grid",
    "convergence_study",
    "vdp_problem",
    "vdp_reference",
    "emit_csv",
    "emit_plotdata",
    "PAPER_DT_SET",
]

OBSERVED_THRESHOLD = 1e-12
PAPER_DT_SET = (0.01, 0.02, 0.04, 0.05, 0.08, 0.10)


@dataclass(frozen=True)
class ExampleSpec:
    """A sweep test problem: linear advection split as -a u_x + (-u_x), or
    Burgers plus advection with WENO5 on the nonlinear flux."""

    kind: str  # "linear" or "burgers"
    a: float
    m: int
    steps: int

    def __post_init__(self):
        if self.kind not in ("linear", "burgers"):
            raise ValueError(f"unknown example kind {self.kind!r}")
        if self.a < 0:
            raise ValueError("wavespeed a must be nonnegative")


def linear_example(a, m=1000, steps=10) -> ExampleSpec:
    return ExampleSpec("linear", float(a), m, steps)


def burgers_example(a, m=400, steps=25) -> ExampleSpec:
    return ExampleSpec("burgers", float(a), m, steps)


@dataclass(frozen=True)
class SweepRecord:
    """Per-lambda worst stage-to-stage TV rise (floored at zero)."""

    method: str
    kind: str
    a: float
    m: int
    steps: int
    lambdas: tuple
    rises: tuple

    def __post_init__(self):
        lams = tuple(float(x) for x in self.lambdas)
        if any(l2 <= l1 for l1, l2 in zip(lams, lams[1:])):
            raise ValueError("lambda values must be strictly increasing")
        rises = tuple(float(r) for r in self.rises)
        if len(rises) != len(lams):
            raise ValueError("lambdas and rises must have equal length")
        if any(r < -1e-15 for r in rises):
            raise ValueError("rises must be nonnegative (floored at zero)")
        object.__setattr__(self, "lambdas", lams)
        object.__setattr__(self, "rises", rises)


@dataclass(frozen=True)
class ConvergenceRecord:
    """Max-norm errors at the final time against the adaptive reference."""

    method: str
    dts: tuple
    errors: tuple
    slope: float

    def __post_init__(self):
        dts = tuple(float(x) for x in self.dts)
        if any(d2 <= d1 for d1, d2 in zip(dts, dts[1:])):
            raise ValueError("dt values must be strictly increasing")
        errs = tuple(float(e) for e in self.errors)
        if any(e <= 0 for e in errs):
            raise ValueError("errors must be positive")
        object.__setattr__(self, "dts", dts)
        object.__setattr__(self, "errors", errs)


class TvdSweeper:
    """Runs the stage-TV measurement for one method on one example.

    mode "if" applies the integrating factor method to the split problem;
    mode "explicit" applies the tableau directly to the combined right-hand
    side (for the fully explicit baselines).  Exponential caches use the
    semigroup chain factorization on large grids.
    """

    def __init__(
        self,
        method,
        example: ExampleSpec,
        mode="if",
        allow_nonmonotone=False,
        registry_dirs=(),
        cache_mode="auto",
    ):
        if isinstance(method, str):
            method = tableau.get_method(method, registry_dirs)
        self.method = method
        self.example = example
        self.mode = mode
        self.allow_nonmonotone = allow_nonmonotone
        grid = semidiscrete.PeriodicGrid(example.m)
        self.grid = grid
        if example.kind == "linear":
            self.u0 = semidiscrete.initial_condition("advection_step", grid).values
            self.N = semidiscrete.advection_operator(1.0, grid)
        else:
            self.u0 = semidiscrete.initial_condition("burgers_step", grid).values
            # The sweep protocol resolves stage-TV rises down to 1e-12,
            # which needs the ENO-selection limit of the weights.
            self.N = semidiscrete.burgers_weno5_operator(
                grid, eps=semidiscrete.WENO_EPS_TVD
            )
        self.L = (
            semidiscrete.upwind_matrix(example.a, grid) if example.a > 0 else None
        )
        if cache_mode == "auto":
            cache_mode = "chain" if example.m >= 256 else "direct"
        self.cache_mode = cache_mode

    def max_rise(self, lam, stop_rise=None) -> float:
        """Worst consecutive-stage TV rise over the whole march at one
        lambda (floored at zero); +inf if the march blows up."""
        dt = lam * self.grid.dx
        prob = steppers.IfProblem(u0=self.u0, L=self.L, N=self.N)
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                marcher = steppers.Marcher(
                    self.method,
                    prob,
                    dt,
                    mode=self.mode,
                    tv=semidiscrete.total_variation,
                    allow_nonmonotone=self.allow_nonmonotone,
                    cache_mode=self.cache_mode,
                )
                _, traces = marcher.run(self.example.steps, stop_rise=stop_rise)
        except (FloatingPointError, ValueError):
            return math.inf
        rises = [t.max_rise for t in traces if t.max_rise is not None]
        if not rises or not all(math.isfinite(r) for r in rises):
            return math.inf
        return max(0.0, max(rises))

    def sweep(self, lambdas) -> SweepRecord:
        lams = tuple(float(l) for l in lambdas)
        rises = tuple(self.max_rise(l) for l in lams)
        return SweepRecord(
            method=self.method.name,
            kind=self.example.kind,
            a=self.example.a,
            m=self.example.m,
            steps=self.example.steps,
            lambdas=lams,
            rises=rises,
        )


def tvd_sweep(
    method,
    example: ExampleSpec,
    lambdas,
    steps=None,
    mode="if",
    allow_nonmonotone=False,
    registry_dirs=(),
) -> SweepRecord:
    """Sweep the worst stage-TV rise over the given lambda values."""
    if steps is not None:
        example = ExampleSpec(example.kind, example.a, example.m, steps)
    sweeper = TvdSweeper(
        method,
        example,
        mode=mode,
        allow_nonmonotone=allow_nonmonotone,
        registry_dirs=registry_dirs,
    )
    return sweeper.sweep(lambdas)


def default_lambda_grid(lo=0.02, hi=8.0, step=0.02):
    """The default sweep grid (coarse; pair with bisection refinement)."""
    n = int(round((hi - lo) / step))
    return tuple(lo + i * step for i in range(n + 1))


def observed_lambda(
    rec: SweepRecord,
    threshold=OBSERVED_THRESHOLD,
    refine=None,
    max_bisect=20,
    rel_resolution=5e-4,
) -> float:
    """Largest lambda whose rise stays at or below the threshold.

    The sweep grid supplies the bracket; when ``refine`` (a callable
    lambda -> rise, usually ``TvdSweeper.max_rise``) is given, the bracket
    is narrowed by up to ``max_bisect`` re-runs to three significant
    digits.  Raises when the sweep does not cover the transition.
    """
    rises = np.asarray(rec.rises)
    lams = np.asarray(rec.lambdas)
    if rises[0] > threshold:
        raise ValueError(
            f"rise already exceeds {threshold:g} at the smallest lambda "
            f"{lams[0]:g}; extend the sweep downward"
        )
    good = rises <= threshold
    if good.all():
        raise ValueError(
            f"no transition inside the sweep range [{lams[0]:g}, {lams[-1]:g}]"
        )
    first_bad = int(np.argmin(good))  # first index with rise > threshold
    lo = float(lams[first_bad - 1])
    hi = float(lams[first_bad])
    if refine is None:
        return lo
    for _ in range(max_bisect):
        if (hi - lo) <= rel_resolution * lo:
            break
        mid = 0.5 * (lo + hi)
        if refine(mid) <= threshold:
            lo = mid
        else:
            hi = mid
    return lo


def observed_lambda_search(
    sweeper: TvdSweeper,
    c_guess,
    threshold=OBSERVED_THRESHOLD,
    growth=1.08,
    span=3.0,
) -> tuple:
    """Locate the observed TVD threshold starting from a certified
    coefficient.

    Scans geometrically upward from just below ``c_guess`` (the theory
    guarantees feasibility there when the guess is the certified SSP
    coefficient), early-stopping each march once the threshold is
    exceeded, then refines the bracket by bisection.  Returns
    (observed lambda, SweepRecord of the scan).
    """
    lam = 0.98 * c_guess
    lams, rises = [], []
    while lam <= span * c_guess:
        rise = sweeper.max_rise(lam, stop_rise=threshold)
        lams.append(lam)
        rises.append(min(rise, math.inf))
        if rise > threshold:
            break
        lam *= growth
    rec = SweepRecord(
        method=sweeper.method.name,
        kind=sweeper.example.kind,
        a=sweeper.example.a,
        m=sweeper.example.m,
        steps=sweeper.example.steps,
        lambdas=tuple(lams),
        rises=tuple(rises),
    )
    lam_obs = observed_lambda(
        rec,
        threshold=threshold,
        refine=lambda l: sweeper.max_rise(l, stop_rise=threshold),
    )
    return lam_obs, rec


# ---------------------------------------------------------------------------
# Example 1: van der Pol convergence


def vdp_problem() -> steppers.IfProblem:
    """van der Pol oscillator split into the rotation L and the nonlinear
    damping N(u) = (0, (1 - u1^2) u2)."""
    L = np.array([[0.0, 1.0], [-1.0, 0.0]])

    def N(u):
        return np.array([0.0, (1.0 - u[0] ** 2) * u[1]])

    return steppers.IfProblem(u0=np.array([2.0, 0.0]), L=L, N=N)


def vdp_reference(t_final=2.0, solver="DOP853", tol=1e-13):
    """Reference solution by an adaptive high-order integrator."""
    from scipy.integrate import solve_ivp

    def rhs(t, u):
        return [u[1], -u[0] + (1.0 - u[0] ** 2) * u[1]]

    sol = solve_ivp(
        rhs,
        (0.0, t_final),
        [2.0, 0.0],
        method=solver,
        rtol=tol,
        atol=tol,
        dense_output=False,
    )
    if not sol.success:
        raise RuntimeError(f"reference integration failed: {sol.message}")
    return sol.y[:, -1]


def convergence_study(
    method,
    dts=PAPER_DT_SET,
    t_final=2.0,
    registry_dirs=(),
) -> ConvergenceRecord:
    """Errors of the integrating factor march on the van der Pol problem
    against the adaptive reference, with the least-squares order fit."""
    if isinstance(method, str):
        method = tableau.get_method(method, registry_dirs)
    ref = vdp_reference(t_final)
    kept_dts, errors = [], []
    for dt in sorted(dts):
        steps = int(round(t_final / dt))
        if abs(steps * dt - t_final) > 1e-12:
            raise ValueError(f"dt={dt} does not divide t_final={t_final}")
        prob = vdp_problem()
        try:
            with np.errstate(over="raise", invalid="raise"):
                marcher = steppers.Marcher(method, prob, dt)
                u_fin, _ = marcher.run(steps)
        except (FloatingPointError, ValueError):
            warnings.warn(f"{method.name}: dropped unstable dt={dt}")
            continue
        err = float(np.abs(u_fin - ref).max())
        if not math.isfinite(err) or err <= 0:
            warnings.warn(f"{method.name}: dropped degenerate error at dt={dt}")
            continue
        kept_dts.append(float(dt))
        errors.append(err)
    if len(kept_dts) < 2:
        raise RuntimeError("not enough stable dt values for a slope fit")
    slope = float(
        np.polyfit(np.log10(kept_dts), np.log10(errors), 1)[0]
    )
    return ConvergenceRecord(
        method=method.name, dts=tuple(kept_dts), errors=tuple(errors),
        slope=slope,
    )


# ---------------------------------------------------------------------------
# Delimited output


def _fmt(x):
    return f"{x:.17g}"


def emit_csv(record, path):
    """Write a sweep or convergence record as CSV (17 significant digits)."""
    if isinstance(record, SweepRecord):
        header = "lambda,max_tv_rise"
        rows = zip(record.lambdas, record.rises)
    elif isinstance(record, ConvergenceRecord):
        header = "dt,error"
        rows = zip(record.dts, record.errors)
    else:
        raise TypeError(f"cannot emit {type(record).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for a, b in rows:
            fh.write(f"{_fmt(a)},{_fmt(b)}\n")


_PLOT_FLOOR = 1e-16


def emit_plotdata(record, path):
    """Write plot-ready columns: the sweep rise in log10 (floored), or the
    convergence pairs in log10-log10."""
    with open(path, "w", encoding="utf-8") as fh:
        if isinstance(record, SweepRecord):
            fh.write("lambda,log10_max_tv_rise\n")
            for lam, rise in zip(record.lambdas, record.rises):
                val = math.log10(max(rise, _PLOT_FLOOR))
                fh.write(f"{_fmt(lam)},{_fmt(val)}\n")
        elif isinstance(record, ConvergenceRecord):
            fh.write("log10_dt,log10_error\n")
            for dt, err in zip(record.dts, record.errors):
                fh.write(f"{_fmt(math.log10(dt))},{_fmt(math.log10(err))}\n")
        else:
            raise TypeError(f"cannot emit {type(record).__name__}")
