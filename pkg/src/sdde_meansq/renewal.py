"""Linear renewal equation solver and second-moment reconstruction.

The equation y(t) = f(t) + integral of g(s) y(t-s) ds over [0, t] is
discretized with trapezoidal product quadrature and marched forward; each
step solves the scalar diagonal equation.  The second moment of the
stochastic solution is then x(t)^2 plus the trapezoidal convolution of the
squared fundamental solution with y.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericalError, BAD_VALUE, GRID_MISALIGNED, STEP_TOO_LARGE
from .resolvent import GridTrace, ResolventTable

#: second moments may round slightly below zero; anything worse aborts
_NEG_TOL = 1e-12


@dataclass(eq=False)
class RenewalProblem:
    """Forcing f and convolution kernel density g on a shared grid."""

    forcing: GridTrace
    kernel: GridTrace

    def __post_init__(self):
        f, g = self.forcing, self.kernel
        if abs(f.step - g.step) > 1e-12 * f.step or len(f) != len(g):
            raise ConfigurationError(
                GRID_MISALIGNED, "forcing and kernel must share step and horizon"
            )
        for name, tr in (("forcing", f), ("kernel", g)):
            lo = tr.values.min()
            if lo < -_NEG_TOL:
                raise ConfigurationError(
                    BAD_VALUE, f"{name} must be nonnegative (min {lo})"
                )
            np.clip(tr.values, 0.0, None, out=tr.values)


def solve_renewal(p: RenewalProblem) -> GridTrace:
    """March the discretized renewal equation forward; y(0) = f(0)."""
    f = p.forcing.values
    g = p.kernel.values
    h = p.forcing.step
    diag = 0.5 * h * g[0]
    if diag >= 1.0:
        raise ConfigurationError(
            STEP_TOO_LARGE,
            f"h*g(0)/2 = {diag:.3g} >= 1; reduce the step to resolve the kernel",
        )
    n_pts = f.size
    y = np.empty(n_pts)
    y[0] = f[0]
    scale = 1.0 / (1.0 - diag)
    for n in range(1, n_pts):
        conv = 0.5 * g[n] * y[0]
        if n > 1:
            conv += float(np.dot(g[1:n], y[n - 1 : 0 : -1]))
        yn = (f[n] + h * conv) * scale
        if yn < -_NEG_TOL:
            raise NumericalError(
                f"renewal solution went negative ({yn:.3e} at step {n}); "
                "the grid does not resolve the problem"
            )
        y[n] = max(yn, 0.0)
    return GridTrace(h, y)


def mean_square_trace(x: GridTrace, r: ResolventTable, y: GridTrace) -> GridTrace:
    """Second moment x(t)^2 + (r^2 * y)(t) by trapezoidal convolution."""
    rv = r.trace.values
    h = x.step
    if abs(r.step - h) > 1e-12 * h or abs(y.step - h) > 1e-12 * h:
        raise ConfigurationError(GRID_MISALIGNED, "traces must share the grid step")
    n_pts = min(x.values.size, rv.size, y.values.size)
    rsq = rv[:n_pts] ** 2
    yv = y.values[:n_pts]
    out = np.empty(n_pts)
    out[0] = x.values[0] ** 2
    for n in range(1, n_pts):
        conv = 0.5 * (rsq[0] * yv[n] + rsq[n] * yv[0])
        if n > 1:
            conv += float(np.dot(rsq[1:n], yv[n - 1 : 0 : -1]))
        out[n] = x.values[n] ** 2 + h * conv
    return GridTrace(h, out)
