"""
Periodic cubic interpolation of sampled complex series
"""

import numpy as np
from scipy.interpolate import CubicSpline


class PeriodicInterpolant:
    """Entrywise periodic cubic spline through (t_k, values_k), t_k = k T / N

    Sample 0 is reused at t = T so the spline closes exactly.
    """

    def __init__(self, values: np.ndarray, period: float):
        values = np.asarray(values, dtype=complex)
        self.period = float(period)
        self.shape = values.shape[1:]
        n = values.shape[0]
        knots = np.arange(n + 1) * (self.period / n)
        closed = np.concatenate([values, values[:1]], axis=0)
        self._re = CubicSpline(knots, closed.real, axis=0, bc_type="periodic", extrapolate="periodic")
        self._im = CubicSpline(knots, closed.imag, axis=0, bc_type="periodic", extrapolate="periodic")

    def __call__(self, t) -> np.ndarray:
        return self._re(t) + 1j * self._im(t)

    def antiderivative(self, t) -> np.ndarray:
        """int_0^t of the interpolant"""
        return self._re.antiderivative()(t) + 1j * self._im.antiderivative()(t)
