"""SSP two-step Runge-Kutta methods with non-decreasing abscissas, used as
integrating factor time integrators for split problems u_t = Lu + N(u).

The package constructs and certifies explicit two-step Runge-Kutta methods,
numerically optimizes their SSP coefficients (optionally under the
non-decreasing abscissa constraint required by integrating factor
stepping), and runs the standard TVD sweep and convergence experiments.
"""

__version__ = "0.1.0"
