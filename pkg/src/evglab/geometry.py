"""Rotationally symmetric model manifolds with Euclidean volume growth.

A model manifold here is R^n carrying the warped-product metric

    g = dr^2 + f(r)^2 g_{S^{n-1}}

with a pole at r = 0.  The warping profile f determines everything:
area of the geodesic sphere A(r) = omega_{n-1} f(r)^{n-1}, ball volume
V(r) = int_0^r A, radial Laplacian Delta r = (n-1) f'/f.  Nonnegative
sectional (hence Ricci) curvature is equivalent to f concave with
f' <= 1, and under f(0) = 0, f'(0) = 1 the metric is smooth at the pole
with empty cut locus, so every radial quantity is globally exact.

The asymptotic volume ratio

    sigma = lim_{r->inf} V(r) / (B_n r^n) = c^{n-1},   c = lim f(r)/r,

lies in (0, 1], with sigma = 1 only for the flat profile f(r) = r.
Three families are provided:

    euclidean               f(r) = r
    exp_taper(c)            f(r) = c r + (1-c)(1 - e^{-r})
    poly_taper(c, a)        f'(r) = c + (1-c)(1+r)^{-a},  a > 0

All have f(0)=0, f'(0)=1, f'' <= 0, f' in (0, 1], so they are
admissible for every comparison estimate tested downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .report import ExperimentReport

__all__ = [
    "ball_volume",
    "sphere_area",
    "psi_ratio",
    "ModelManifold",
    "VolumeProfile",
    "build_manifold",
    "geometric_grid",
    "volume",
    "remainder_lambda",
    "txsx_check",
]

# Admissibility tolerances on the validation grid.
CONCAVITY_TOL = 1e-12
MONOTONE_TOL = 1e-10

_GAUSS4_X = np.array([-0.8611363115940526, -0.3399810435848563,
                      0.3399810435848563, 0.8611363115940526])
_GAUSS4_W = np.array([0.3478548451374538, 0.6521451548625461,
                      0.6521451548625461, 0.3478548451374538])

# 32-point Gauss-Legendre nodes/weights on [0, 1], used for the
# scale-free small-radius volume ratio (no underflow for tiny r^n).
_GL32 = np.polynomial.legendre.leggauss(32)
_GL32_X = 0.5 * (_GL32[0] + 1.0)
_GL32_W = 0.5 * _GL32[1]


def ball_volume(n: int) -> float:
    """Volume B_n of the unit ball in R^n."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def sphere_area(n: int) -> float:
    """Surface area omega_{n-1} of the unit sphere S^{n-1} in R^n; equals n B_n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def psi_ratio(t: float, n: int) -> float:
    """psi(t) = (t^{(n-1)/n} - 1)/(t - 1), decreasing on (1, inf).

    psi(1/sigma) is the constant relating the two volume-ratio
    remainders: psi(1/sigma) * (sigma_x - sigma) <= tau_x - sigma.
    """
    if t <= 1.0:
        return 1.0
    return (t ** ((n - 1.0) / n) - 1.0) / (t - 1.0)


def geometric_grid(r_min: float = 1e-3, r_max: float = 1e3,
                   points_per_decade: int = 40) -> np.ndarray:
    """Log-spaced radial grid; all asymptotics of interest are power laws."""
    decades = math.log10(r_max / r_min)
    npts = max(int(round(decades * points_per_decade)) + 1, 8)
    return np.geomspace(r_min, r_max, npts)


class ModelManifold:
    """Immutable warped-product model (R^n, dr^2 + f(r)^2 g_{S^{n-1}}).

    Exposes the profile f with two derivatives, the area/volume
    functions, and the volume-ratio remainder Lambda(r) = sigma_x(r) - sigma.
    Volume values are produced by adaptive quadrature of A and cached;
    instances are safe to share across workers (caches only grow).
    """

    def __init__(self, family_tag: str, n: int, c: float, params: dict,
                 f: Callable, df: Callable, d2f: Callable,
                 f_over_r: Callable):
        self.family_tag = family_tag
        self.n = int(n)
        self.c = float(c)
        self.sigma = float(c) ** (n - 1)
        self.params = dict(params)
        self._f = f
        self._df = df
        self._d2f = d2f
        self._f_over_r = f_over_r
        self.B_n = ball_volume(n)
        self.omega = sphere_area(n)
        self._vol_cache: dict[float, float] = {}

    # -- profile ------------------------------------------------------

    def f(self, r):
        return self._f(np.asarray(r, dtype=float))

    def df(self, r):
        return self._df(np.asarray(r, dtype=float))

    def d2f(self, r):
        return self._d2f(np.asarray(r, dtype=float))

    def f_over_r(self, r):
        """f(r)/r evaluated stably down to r = 0 (limit 1)."""
        return self._f_over_r(np.asarray(r, dtype=float))

    # -- volume geometry ----------------------------------------------

    def area(self, r):
        """Geodesic sphere area A(r) = omega_{n-1} f(r)^{n-1}."""
        return self.omega * self.f(r) ** (self.n - 1)

    def vol(self, r: float) -> float:
        """Ball volume V(r) by adaptive quadrature of A, cached per radius."""
        r = float(r)
        if r <= 0.0:
            return 0.0
        hit = self._vol_cache.get(r)
        if hit is not None:
            return hit
        if r < 1e-3:
            v = self.sigma_x(r) * self.B_n * r ** self.n
            self._vol_cache[r] = v
            return v
        pts = [p for p in (1.0, 10.0, 100.0) if p < r]
        val, err = quad(lambda s: self.area(s), 0.0, r,
                        epsabs=0.0, epsrel=1e-11, limit=400,
                        points=pts or None)
        if not np.isfinite(val) or (val > 0 and err / val > 1e-8):
            raise ArithmeticError(
                f"volume quadrature did not converge on [0, {r}]: "
                f"estimate {val}, error {err}")
        self._vol_cache[r] = val
        return val

    def sigma_x(self, r: float) -> float:
        """Running volume ratio V(r)/(B_n r^n), computed scale-free.

        For small r the direct ratio would divide one underflowing
        quantity by another (r^n can underflow for n >= 5), so below
        the grid floor we substitute s = r*u and integrate
        n u^{n-1} (f(ru)/(ru))^{n-1} over [0, 1] with fixed Gauss nodes.
        """
        r = float(r)
        if r <= 0.0:
            return 1.0
        if r < 1e-3:
            g = self.f_over_r(r * _GL32_X) ** (self.n - 1)
            return float(np.sum(_GL32_W * self.n * _GL32_X ** (self.n - 1) * g))
        return self.vol(r) / (self.B_n * r ** self.n)

    def tau_x(self, r: float) -> float:
        """Running area ratio A(r)/(n B_n r^{n-1}) = (f(r)/r)^{n-1}."""
        return float(self.f_over_r(r)) ** (self.n - 1)

    def _vol_table(self, r_need: float):
        tab = self.__dict__.get("_vtab")
        if tab is None or tab[0][-1] < r_need:
            hi = max(4e3, 2.0 * r_need)
            r_tab = np.geomspace(1e-6, hi, int(60 * math.log10(hi / 1e-6)) + 1)
            edges = np.concatenate([[0.0], r_tab])
            v_tab = np.cumsum(self.cell_volumes(edges))
            tab = (r_tab, v_tab)
            self.__dict__["_vtab"] = tab
        return tab

    def vol_fast(self, r: float) -> float:
        """V(r) from the cumulative table plus a local Gauss increment.

        Matches the adaptive-quadrature vol() to ~1e-12 relative at a
        fraction of the cost; meant for inner loops (volume inversion,
        calibration bisections).
        """
        r = float(r)
        if r <= 0.0:
            return 0.0
        r_tab, v_tab = self._vol_table(r)
        if r < r_tab[0]:
            return self.sigma_x(r) * self.B_n * r ** self.n
        i = int(np.searchsorted(r_tab, r, side="right")) - 1
        base = v_tab[i]
        if r > r_tab[i]:
            base += float(self.cell_volumes(np.array([r_tab[i], r]))[0])
        return float(base)

    def vol_inverse(self, t: float) -> float:
        """Radius with V(r) = t, bisected on the cumulative table."""
        if t <= 0.0:
            raise ValueError("volume must be positive")
        r_tab, v_tab = self._vol_table(1.0)
        while v_tab[-1] < t:
            r_tab, v_tab = self._vol_table(2.0 * r_tab[-1])
        if t < v_tab[0]:
            # below the table: V ~ B_n r^n up to O(r) corrections
            lo, hi = 1e-12, r_tab[0]
        else:
            i = int(np.searchsorted(v_tab, t))
            lo = r_tab[max(i - 1, 0)]
            hi = r_tab[min(i, len(r_tab) - 1)]
        for _ in range(80):
            mid = math.sqrt(lo * hi)
            if self.vol_fast(mid) < t:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-14 * hi:
                break
        return math.sqrt(lo * hi)

    def lam(self, r: float) -> float:
        """Volume ratio remainder Lambda(r) = sigma_x(r) - sigma."""
        return self.sigma_x(r) - self.sigma

    def laplacian_distance(self, r):
        """Delta d = (n-1) f'(r)/f(r), the radial Laplacian of the distance."""
        r = np.asarray(r, dtype=float)
        return (self.n - 1) * self.df(r) / self.f(r)

    def cell_volumes(self, edges: np.ndarray) -> np.ndarray:
        """Exact-to-quadrature volumes of the shells between consecutive edges.

        Gauss-4 per cell; the integrand is smooth so this is effectively
        exact, and summing cells reproduces vol() to roundoff.
        """
        lo, hi = edges[:-1], edges[1:]
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        acc = np.zeros_like(mid)
        for x, w in zip(_GAUSS4_X, _GAUSS4_W):
            acc += w * self.area(mid + x * half)
        return acc * half

    def describe(self) -> str:
        ps = ",".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))
        return f"{self.family_tag}(n={self.n}{',' + ps if ps else ''})"

    def __repr__(self):
        return f"ModelManifold[{self.describe()}, sigma={self.sigma:.6g}]"


@dataclass(frozen=True)
class VolumeProfile:
    """Tabulated volume geometry of a model manifold on a radial grid."""
    r: np.ndarray
    V: np.ndarray
    A: np.ndarray
    sigma_x: np.ndarray
    tau_x: np.ndarray
    Lambda: np.ndarray
    sigma: float
    n: int

    def validate(self) -> None:
        """Assert the Bishop-type invariants on the grid."""
        B_n = ball_volume(self.n)
        upper = B_n * self.r ** self.n
        if np.any(self.V > upper * (1.0 + 1e-9)):
            raise AssertionError("V(r) exceeds the Euclidean ball volume")
        if np.any(self.V < self.sigma * upper * (1.0 - 1e-9)):
            raise AssertionError("V(r) fell below sigma * B_n r^n")
        if np.any(np.diff(self.sigma_x) > MONOTONE_TOL):
            raise AssertionError("sigma_x is not nonincreasing")
        if np.any(np.diff(self.tau_x) > MONOTONE_TOL):
            raise AssertionError("tau_x is not nonincreasing")
        if self.sigma < 1.0:
            if np.any(self.Lambda <= 0.0):
                raise AssertionError("Lambda must stay positive when sigma < 1")
        if np.any(np.diff(self.Lambda) > MONOTONE_TOL):
            raise AssertionError("Lambda is not nonincreasing")


def _exp_taper_profile(c: float):
    def f(r):
        return c * r + (1.0 - c) * (-np.expm1(-r))

    def df(r):
        return c + (1.0 - c) * np.exp(-r)

    def d2f(r):
        return -(1.0 - c) * np.exp(-r)

    def f_over_r(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(r > 0, -np.expm1(-r) / np.where(r > 0, r, 1.0), 1.0)
        return c + (1.0 - c) * ratio

    return f, df, d2f, f_over_r


def _poly_taper_profile(c: float, a: float):
    # f(r) = c r + (1-c) * int_0^r (1+s)^{-a} ds, with the a = 1 (log)
    # branch taken exactly and the generic branch via expm1 so that
    # a -> 1 stays numerically stable.
    if a == 1.0:
        def prim(r):
            return np.log1p(r)
    else:
        def prim(r):
            return np.expm1((1.0 - a) * np.log1p(r)) / (1.0 - a)

    def f(r):
        return c * r + (1.0 - c) * prim(r)

    def df(r):
        return c + (1.0 - c) * np.exp(-a * np.log1p(r))

    def d2f(r):
        return -a * (1.0 - c) * np.exp(-(a + 1.0) * np.log1p(r))

    def f_over_r(r):
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0, r, 1.0)
        ratio = np.where(r > 0, prim(safe) / safe, 1.0)
        return c + (1.0 - c) * ratio

    return f, df, d2f, f_over_r


def _euclid_profile():
    def f(r):
        return np.asarray(r, dtype=float)

    def one_like(r):
        return np.ones_like(np.asarray(r, dtype=float))

    def zero_like(r):
        return np.zeros_like(np.asarray(r, dtype=float))

    return f, one_like, zero_like, one_like


def build_manifold(family_tag: str, n: int, params: dict | None = None) -> ModelManifold:
    """Construct and validate a model manifold from a named family.

    Raises ValueError for parameters outside the admissible ranges or
    for any profile that fails the curvature checks on the validation
    grid (f'' <= 0, 0 < f' <= 1, r f' <= f).
    """
    params = dict(params or {})
    if n < 2:
        raise ValueError(f"dimension must be >= 2, got {n}")
    if family_tag == "euclidean":
        c = 1.0
        fns = _euclid_profile()
    elif family_tag == "exp_taper":
        c = float(params.get("c", 0.8))
        if not 0.0 < c <= 1.0:
            raise ValueError(f"exp_taper requires c in (0, 1], got {c}")
        fns = _exp_taper_profile(c)
    elif family_tag == "poly_taper":
        c = float(params.get("c", 0.5))
        a = float(params.get("a", 0.5))
        if not 0.0 < c <= 1.0:
            raise ValueError(f"poly_taper requires c in (0, 1], got {c}")
        if a <= 0.0:
            raise ValueError(f"poly_taper requires a > 0, got {a}")
        params["a"] = a
        fns = _poly_taper_profile(c, a)
    else:
        raise ValueError(f"unknown family {family_tag!r}")
    params["c"] = c

    m = ModelManifold(family_tag, n, c, params, *fns)
    _validate_profile(m)
    return m


def _validate_profile(m: ModelManifold) -> None:
    grid = geometric_grid(1e-3, float(m.params.get("r_max", 1e3)), 40)
    f = m.f(grid)
    df = m.df(grid)
    d2f = m.d2f(grid)
    if np.any(f <= 0.0):
        raise ValueError("profile must satisfy f(r) > 0 for r > 0")
    if np.any(d2f > CONCAVITY_TOL):
        raise ValueError("profile is not concave: f'' > 0 somewhere on the grid")
    if np.any(df <= 0.0) or np.any(df > 1.0 + CONCAVITY_TOL):
        raise ValueError("profile derivative must satisfy 0 < f' <= 1")
    if np.any(grid * df > f * (1.0 + 1e-12)):
        raise ValueError("radial Laplacian comparison r f'(r) <= f(r) violated")


def volume(m: ModelManifold, r_grid: np.ndarray) -> VolumeProfile:
    """Tabulate V, A, sigma_x, tau_x, Lambda on a strictly increasing grid.

    V is accumulated interval by interval with adaptive quadrature at
    relative tolerance 1e-11, so the sandwich sigma B_n r^n <= V <= B_n r^n
    and both monotonicity statements hold to well below 1e-10.
    """
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or len(r) < 2 or np.any(np.diff(r) <= 0) or r[0] <= 0:
        raise ValueError("r_grid must be strictly increasing and positive")
    V = np.empty_like(r)
    V[0] = m.vol(r[0])
    for i in range(1, len(r)):
        inc, err = quad(lambda s: m.area(s), r[i - 1], r[i],
                        epsabs=0.0, epsrel=1e-11, limit=200)
        if not np.isfinite(inc):
            raise ArithmeticError(
                f"volume quadrature failed on [{r[i-1]}, {r[i]}]")
        V[i] = V[i - 1] + inc
    A = m.area(r)
    sigma_x = V / (m.B_n * r ** m.n)
    tau_x = m.f_over_r(r) ** (m.n - 1)
    prof = VolumeProfile(r=r, V=V, A=A, sigma_x=sigma_x, tau_x=tau_x,
                         Lambda=sigma_x - m.sigma, sigma=m.sigma, n=m.n)
    prof.validate()
    return prof


def remainder_lambda(m: ModelManifold, r: float) -> float:
    """Lambda(r) = V(r)/(B_n r^n) - sigma, from the analytic family profile.

    Any positive radius is accepted; values off the usual tabulation
    range are computed from the same quadrature, never extrapolated.
    """
    if r <= 0.0:
        raise ValueError("radius must be positive")
    return m.lam(r)


def txsx_check(m: ModelManifold, r_grid: np.ndarray) -> ExperimentReport:
    """Compare the two volume-ratio remainders tau_x - sigma and sigma_x - sigma.

    Verifies pointwise on the grid:

        C_M (sigma_x - sigma) <= tau_x - sigma <= sigma_x - sigma,
        C_M = psi(1/sigma),

    together with the isoperimetric lower bound
    tau_x >= sigma^{1/n} sigma_x^{(n-1)/n} that produces C_M.  The upper
    inequality is exact (tau_x <= sigma_x) and failing it beyond 1e-9
    raises; the containment of the observed ratio is recorded as a hard
    check when sigma < 1.
    """
    prof = volume(m, r_grid)
    report = ExperimentReport(experiment="txsx", manifold=m.describe())
    report.provenance["grid"] = {"r_min": float(r_grid[0]),
                                 "r_max": float(r_grid[-1]),
                                 "points": int(len(r_grid))}
    upper_gap = float(np.max(prof.tau_x - prof.sigma_x))
    if upper_gap > 1e-9:
        raise AssertionError(
            f"exact inequality tau_x <= sigma_x violated by {upper_gap:.3e}")
    report.add(name="tau_x <= sigma_x (exact)", tag="geometry.txsx_upper",
               observed=upper_gap, criterion="max(tau_x - sigma_x) <= 1e-9",
               passed=True, hard=True)

    iso_gap = float(np.min(
        prof.tau_x - m.sigma ** (1.0 / m.n) * prof.sigma_x ** ((m.n - 1.0) / m.n)))
    report.add(name="isoperimetric ratio bound", tag="geometry.isoperimetric",
               observed=iso_gap,
               criterion="min(tau_x - sigma^{1/n} sigma_x^{(n-1)/n}) >= -1e-10",
               passed=iso_gap >= -1e-10, hard=True)

    if m.sigma < 1.0:
        cm = psi_ratio(1.0 / m.sigma, m.n)
        ratio = (prof.tau_x - m.sigma) / (prof.sigma_x - m.sigma)
        lo, hi = float(np.min(ratio)), float(np.max(ratio))
        ok = lo >= cm - 1e-9 and hi <= 1.0 + 1e-9
        report.add(name="remainder ratio containment", tag="geometry.txsx_ratio",
                   observed=lo,
                   criterion=f"(tau-sigma)/(sigma_x-sigma) in [psi(1/sigma)={cm:.6g}, 1]",
                   passed=ok, hard=True,
                   details={"min_ratio": lo, "max_ratio": hi, "C_M": cm})
    else:
        report.add(name="remainder ratio containment", tag="geometry.txsx_ratio",
                   observed=0.0, criterion="vacuous for sigma = 1 (both sides 0)",
                   passed=True, hard=True)
    return report
