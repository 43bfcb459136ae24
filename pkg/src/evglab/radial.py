"""Sampled radial profiles with interpolation/extrapolation rules."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["RadialFunction", "loglog_interp"]


def loglog_interp(x, xs: np.ndarray, log_ys: np.ndarray) -> np.ndarray:
    """Piecewise power-law interpolation: linear in (log x, log y).

    Exact for pure power laws, which is the asymptotic shape of every
    profile stored this way.  Outside the sample range the first/last
    segment's power law is continued (no flattening).
    """
    lx = np.log(np.asarray(x, dtype=float))
    lxs = np.log(xs)
    slope_lo = (log_ys[1] - log_ys[0]) / (lxs[1] - lxs[0])
    slope_hi = (log_ys[-1] - log_ys[-2]) / (lxs[-1] - lxs[-2])
    ly = np.interp(lx, lxs, log_ys)
    below = lx < lxs[0]
    above = lx > lxs[-1]
    if np.any(below):
        ly = np.where(below, log_ys[0] + slope_lo * (lx - lxs[0]), ly)
    if np.any(above):
        ly = np.where(above, log_ys[-1] + slope_hi * (lx - lxs[-1]), ly)
    return np.exp(ly)


@dataclass
class RadialFunction:
    """A radial profile known on a grid, optionally backed by an exact callable.

    interp = "loglog" suits positive profiles with power-law tails
    (Green potentials, b, Lambda-tilde); "linear" suits compactly
    supported or sign-changing profiles.  When `fn` is present it is
    used directly and the samples only serve serialization and plots.
    """
    r: np.ndarray
    values: np.ndarray
    interp: str = "loglog"
    fn: Callable | None = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.r.ndim != 1 or self.r.shape != self.values.shape:
            raise ValueError("r and values must be 1-d arrays of equal length")
        if np.any(np.diff(self.r) <= 0):
            raise ValueError("r must be strictly increasing")
        if self.interp == "loglog":
            if np.any(self.values <= 0.0) or self.r[0] <= 0.0:
                raise ValueError("loglog interpolation needs positive r and values")
            self._log_values = np.log(self.values)

    def __call__(self, x):
        if self.fn is not None:
            return self.fn(x)
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xv = np.atleast_1d(x)
        if self.interp == "loglog":
            out = loglog_interp(xv, self.r, self._log_values)
        else:
            out = np.interp(xv, self.r, self.values,
                            left=self.values[0], right=self.values[-1])
        return float(out[0]) if scalar else out

    def resampled(self, grid: np.ndarray) -> "RadialFunction":
        return RadialFunction(r=np.asarray(grid, dtype=float),
                              values=np.asarray(self(grid), dtype=float),
                              interp=self.interp, fn=self.fn,
                              name=self.name, meta=dict(self.meta))
