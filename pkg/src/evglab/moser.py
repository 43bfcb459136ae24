"""Exponential-functional experiments on extremal families.

The headline experiment: on a model with sigma < 1, normalize a family
of truncated-logarithm-type functions u_r by its top-order norm and feed
it to the functional

    F(u) = int exp_m( gamma theta |u|^{n/(n-alpha)} ) / (1 + |u|^p) dmu
           / ||u||_{n/alpha}^{n/alpha},

with gamma the sigma-adjusted sharp constant.  At theta = 1 the family
keeps F bounded; at theta = 1.1 the peak contribution grows like
(V(r)/V(rho))^{theta - 1} and F blows past the theta = 1 level; with the
denominator power reduced by theta' < 1 at theta = 1, F grows like
log(V(r)/V(rho))^{1 - theta'}.  The three behaviors together reproduce
the sharpness of both the exponential constant and its companion power.

Families (all expressed through the b-function, the smooth stand-in for
the distance from the pole):

  h_alpha_r   potentials of truncated powers b^{-alpha} (alpha even,
              alpha < n/2), so the top-order derivative equals the
              source identically;
  h_0_r       the Lipschitz truncated logarithm itself (alpha = 1);
  smooth_h_r  a C^2 smoothing of log(r/b) with unit transition zones
              (alpha = 2, any n >= 3);
  moser_eps   the classical concentrating family, a smoothing of
              log(r0/d) on the annulus eps r0 < d <= r0.

The inner radius rho is either held fixed (the sharpness experiments;
a fixed rho suffices for the exponential constant, and on power-decay
models for the denominator power as well) or calibrated against the
volume-remainder transform through

    log( V(r) / V(rho) ) = LambdaTilde( V(rho)^{1/n} )^{-1/2},

which ties the annulus to the geometry's convergence rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import ModelManifold, ball_volume
from .green import (_c_alpha, green2_closed, radial_potential,
                    riesz_constants)
from .radial import RadialFunction
from .report import ExperimentReport
from .tilde import lambda_tilde, lambda_tilde_interpolant

__all__ = [
    "regularized_exp", "truncation_index", "calibrate_rho",
    "MTFunctionalSpec", "ExtremalFamily", "build_family", "mt_functional",
    "sharpness_sweep", "moser_classical_check", "in_proved_range",
]


def truncation_index(n: int, alpha: int) -> int:
    """Regularization index ceil((n - alpha)/alpha - 1) of the functional."""
    return max(int(math.ceil((n - alpha) / alpha - 1.0)), 0)


def regularized_exp(m: int, t):
    """exp_m(t) = e^t - sum_{k<=m} t^k/k! with a series branch for small t.

    Below t = m + 1 the direct form loses digits to cancellation, so the
    tail series sum_{k>m} t^k/k! is summed instead.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("regularized_exp is defined for t >= 0")
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.empty_like(t)
    small = t < m + 1.0
    if np.any(~small):
        tt = t[~small]
        direct = np.exp(tt)
        term = np.ones_like(tt)
        for k in range(1, m + 1):
            term *= tt / k
            direct -= term
        # k = 0 term
        out[~small] = direct - 1.0 if m >= 0 else direct
    if np.any(small):
        ts = t[small]
        term = ts ** (m + 1)
        for k in range(2, m + 2):
            term /= k
        acc = term.copy()
        for k in range(m + 2, m + 80):
            term = term * ts / k
            acc += term
            if np.all(term <= 1e-18 * np.maximum(acc, 1e-300)):
                break
        out[small] = acc
    return float(out[0]) if scalar else out


def in_proved_range(n: int, alpha: int) -> bool:
    """Whether (n, alpha) sits in the range with proved sharpness.

    alpha = 1 and alpha = 2 for any n > alpha; even alpha from 4 up
    needs alpha < n/2; odd alpha from 3 up is capped by the range where
    the inequality itself is available, alpha <= n/2.
    """
    if alpha == 1 or alpha == 2:
        return 0 < alpha < n
    if alpha % 2 == 0:
        return 4 <= alpha < n / 2.0
    return 3 <= alpha <= n / 2.0


# ---------------------------------------------------------------------------
# calibration of the inner radius
# ---------------------------------------------------------------------------

def calibrate_rho(m: ModelManifold, r: float,
                  lam_tilde_fn: Callable | None = None,
                  residual_tol: float = 1e-8) -> float:
    """Solve V(r) = V(rho) exp( LambdaTilde(V(rho)^{1/n})^{-1/2} ).

    The left side of g(rho) = log V(rho) + LT^{-1/2} - log V(r) is
    strictly increasing (V increases, the transform decreases), so
    monotone bisection applies; a fast interpolant of the transform
    brackets the root and the exact transform polishes it.  Raises if no
    solution exists on the probed range (r too small).
    """
    if m.sigma >= 1.0:
        raise ValueError("calibration needs sigma < 1")
    if lam_tilde_fn is None:
        x_hi = (m.vol_fast(r) / 1.0) ** (1.0 / m.n) * 1.5
        lam_tilde_fn = lambda_tilde_interpolant(m, r_min=1e-2, r_max=x_hi)
    log_vr = math.log(m.vol_fast(r))

    def g(rho: float, exact: bool) -> float:
        x = m.vol_fast(rho) ** (1.0 / m.n)
        lt = lambda_tilde(m, x) if exact else float(lam_tilde_fn(x))
        return math.log(m.vol_fast(rho)) + lt ** -0.5 - log_vr

    lo, hi = 1e-6, r
    if g(lo, exact=False) > 0.0:
        raise ValueError(f"no calibrated inner radius for r = {r}")
    for _ in range(50):
        mid = math.sqrt(lo * hi)
        if g(mid, exact=False) < 0.0:
            lo = mid
        else:
            hi = mid
    # the interpolated transform lands within its own model error of the
    # true root; polish with secant steps on the exact transform
    x0 = 0.5 * (math.log(lo) + math.log(hi))
    x1 = x0 + 1e-4
    g0 = g(math.exp(x0), exact=True)
    g1 = g(math.exp(x1), exact=True)
    for _ in range(20):
        if g1 == g0:
            break
        x2 = x1 - g1 * (x1 - x0) / (g1 - g0)
        x2 = min(max(x2, math.log(1e-6)), math.log(r) - 1e-12)
        x0, g0 = x1, g1
        x1 = x2
        g1 = g(math.exp(x1), exact=True)
        if abs(g1) < 0.1 * residual_tol:
            break
    rho = math.exp(x1)
    resid = abs(g1)
    if resid > residual_tol * max(1.0, abs(log_vr)):
        raise ArithmeticError(f"calibration residual {resid:.3e} too large")
    return rho


# ---------------------------------------------------------------------------
# family construction
# ---------------------------------------------------------------------------

class _SmoothLogProfile:
    """C^{1,1} truncation of log(r/t) with unit log-width ramp zones.

    The log-derivative D(x) = t h'(t), x = log(t/rho), ramps linearly
    0 -> -1 over [0, X] and back -1 -> 0 over [M - Y, M], M = log(r/rho):

        h = P - x^2/(2X)        on the inner zone,  P = M - (X+Y)/2,
        h = M - Y/2 - x         in the middle (the pure logarithm),
        h = (M - x)^2/(2Y)      on the outer zone, 0 beyond.

    Linear ramps in the log variable keep the radial Laplacian
    coefficient t^2 h'' + (n-1) t h' within O(1) of its middle-zone
    value, so the transition cost in the top-order norm is O(1) in the
    log-length and essentially zero as an excess over the logarithmic
    main term.  Transitions of unit width in t itself would instead
    contribute O(r^{n/2 - 1}) to the alpha = 2 norm from the outer zone
    and drown the sharpness signal.
    """

    def __init__(self, rho: float, r: float, X: float = 1.0, Y: float = 1.0):
        M = math.log(r / rho)
        if M <= X + Y + 0.2:
            raise ValueError("need log(r/rho) > X + Y for disjoint ramps")
        self.rho, self.r, self.X, self.Y, self.M = rho, r, X, Y, M
        self.peak = M - (X + Y) / 2.0

    def _x(self, t):
        t = np.asarray(t, dtype=float)
        return np.log(np.maximum(t, 1e-300) / self.rho)

    def value(self, t):
        x = self._x(t)
        X, Y, M = self.X, self.Y, self.M
        conds = [x <= 0.0, x < X, x <= M - Y, x < M]
        vals = [self.peak, self.peak - x * x / (2.0 * X), M - Y / 2.0 - x,
                (M - x) ** 2 / (2.0 * Y)]
        return np.select(conds, vals, default=0.0)

    def log_derivative(self, t):
        """D(x) = t h'(t)."""
        x = self._x(t)
        X, Y, M = self.X, self.Y, self.M
        conds = [x <= 0.0, x < X, x <= M - Y, x < M]
        vals = [0.0, -x / X, -1.0, -(M - x) / Y]
        return np.select(conds, vals, default=0.0)

    def log_derivative2(self, t):
        """D'(x), piecewise constant."""
        x = self._x(t)
        X, Y, M = self.X, self.Y, self.M
        conds = [x <= 0.0, x < X, x <= M - Y, x < M]
        vals = [0.0, -1.0 / X, 0.0, 1.0 / Y]
        return np.select(conds, vals, default=0.0)

    def d1(self, t):
        t = np.asarray(t, dtype=float)
        return self.log_derivative(t) / np.maximum(t, 1e-300)

    def d2(self, t):
        t = np.asarray(t, dtype=float)
        safe = np.maximum(t, 1e-300)
        return (self.log_derivative2(t) - self.log_derivative(t)) / safe ** 2


def _truncated_power(rho: float, r: float, alpha: int):
    ra = r ** (-float(alpha))

    def h(t):
        t = np.asarray(t, dtype=float)
        inner = rho ** (-float(alpha)) - ra
        mid = np.maximum(t, rho) ** (-float(alpha)) - ra
        return np.where(t <= rho, inner, np.where(t > r, 0.0, mid))

    return h


@dataclass(frozen=True)
class MTFunctionalSpec:
    """Parameters of the exponential functional."""
    gamma: float                    # exponential constant in use
    theta: float = 1.0              # multiplier on gamma
    denom_power: float | None = None  # exponent in 1 + |u|^p (default n/(n-a))
    m_index: int = 0                # regularization index
    norm_mode: str = "grad_only"    # or "full_norm"
    kappa: float = 1.0              # weight of the zero-order norm term

    def __post_init__(self):
        if self.gamma <= 0 or self.theta <= 0:
            raise ValueError("gamma and theta must be positive")
        if self.m_index < 0:
            raise ValueError("m_index must be >= 0")
        if self.norm_mode not in ("grad_only", "full_norm"):
            raise ValueError(f"unknown norm_mode {self.norm_mode!r}")


@dataclass
class ExtremalFamily:
    """One member of an extremal family, with its norms precomputed."""
    alpha: int
    n: int
    kind: str
    r: float
    rho: float
    rho_calibrated: bool
    u: Callable                 # radial profile of the function itself
    Dnorm: float                # || D^alpha u ||_{n/alpha}
    Lnorm: float                # || u ||_{n/alpha}
    support: float              # u negligible beyond this radius
    has_tail: bool              # potentials decay, truncations vanish
    manifold: ModelManifold
    meta: dict = field(default_factory=dict)

    @property
    def beta(self) -> float:
        return self.n / (self.n - self.alpha)


def _mt_pack(m: ModelManifold):
    """Cached (G2 profile, b interpolant, b') with a wide radial range."""
    pack = m.__dict__.get("_mt_pack")
    if pack is None:
        gp2 = green2_closed(m, r_min=1e-3, r_max=3e4)
        from .green import b_function
        b = b_function(gp2, m)
        b_interp = RadialFunction(r=b.r, values=b.values, interp="loglog")
        bp = b.meta["prime"]
        pack = (gp2, b_interp, bp)
        m.__dict__["_mt_pack"] = pack
    return pack


def _b_inverse(b: Callable, target: float) -> float:
    lo, hi = target / 4.0, target * 4.0
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if float(b(mid)) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * hi:
            break
    return math.sqrt(lo * hi)


def _simpson_log(fn: Callable, lo: float, hi: float, points: int = 1537) -> float:
    """Composite Simpson in log coordinates; deterministic by design."""
    if hi <= lo:
        return 0.0
    x = np.linspace(math.log(lo), math.log(hi), points)
    z = np.exp(x)
    y = np.asarray(fn(z), dtype=float) * z
    return float(np.trapezoid(y, x)) if points < 5 else float(
        (x[1] - x[0]) / 3.0 * (y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2])
                               + 2.0 * np.sum(y[2:-2:2])))


def build_family(m: ModelManifold, alpha: int, r: float, kind: str,
                 rho: float | None = None, eps: float | None = None,
                 r0: float = 1.0) -> ExtremalFamily:
    """Construct one family member with its top-order and zero-order norms.

    rho = None calibrates the inner radius through the volume-remainder
    transform; an explicit rho pins it (rho = 1 reproduces the
    fixed-inner-radius sharpness construction).  kind = "moser_eps"
    ignores r/rho and needs eps in (0, 1).
    """
    n = m.n
    na = n / alpha

    if kind == "moser_eps":
        if eps is None or not 0.0 < eps < 0.1:
            raise ValueError("moser_eps needs eps in (0, 0.1)")
        if alpha not in (1, 2):
            raise ValueError("the concentrating family is built for "
                             "alpha in {1, 2}")
        s0 = eps * r0
        # narrow ramps keep the O(1) norm offset small against the
        # slowly growing log(1/V(eps)) main term; alpha = 2 pays a
        # 1/width price in the Laplacian and wants them a bit wider
        width = 0.5 if alpha == 1 else 0.75
        prof = _SmoothLogProfile(1.0, 1.0 / eps, X=width, Y=width)
        u = lambda z: prof.value(np.asarray(z, dtype=float) / s0)
        if alpha == 1:
            dmag = lambda z: np.abs(prof.d1(np.asarray(z) / s0)) / s0
        else:
            def dmag(z):
                z = np.asarray(z, dtype=float)
                return np.abs(prof.d2(z / s0) / s0 ** 2
                              + prof.d1(z / s0) / s0
                              * m.laplacian_distance(np.maximum(z, 1e-12)))
        dn = _simpson_log(lambda z: dmag(z) ** na * m.area(z), s0 * 1e-4, r0)
        ln = _simpson_log(lambda z: np.abs(u(z)) ** na * m.area(z),
                          s0 * 1e-4, r0)
        return ExtremalFamily(alpha=alpha, n=n, kind=kind, r=1.0 / eps,
                              rho=1.0, rho_calibrated=False, u=u,
                              Dnorm=dn ** (1.0 / na), Lnorm=ln ** (1.0 / na),
                              support=r0, has_tail=False, manifold=m,
                              meta={"eps": eps, "r0": r0})

    rho_calibrated = rho is None
    if rho_calibrated:
        rho = calibrate_rho(m, r)
    if not 0.0 < rho < r:
        raise ValueError("need 0 < rho < r")
    gp2, b, bp = _mt_pack(m)
    z_rho = _b_inverse(b, rho)
    z_r = _b_inverse(b, r)

    if kind == "h_0_r":
        if alpha != 1:
            raise ValueError("h_0_r is the alpha = 1 family")
        # Lipschitz truncated logarithm, no smoothing needed for alpha = 1
        def u(z):
            t = np.asarray(b(z), dtype=float)
            mid = np.log(r / np.minimum(np.maximum(t, rho), r))
            return np.where(t <= rho, math.log(r / rho),
                            np.where(t > r, 0.0, mid))

        def dmag(z):
            z = np.asarray(z, dtype=float)
            t = np.asarray(b(z), dtype=float)
            grad = np.abs(bp(z)) / np.maximum(t, 1e-300)
            return np.where((t > rho) & (t <= r), grad, 0.0)

        dn = _simpson_log(lambda z: dmag(z) ** n * m.area(z),
                          z_rho * 0.9, z_r * 1.1)
        ln = (_simpson_log(lambda z: np.abs(u(z)) ** n * m.area(z),
                           1e-6 * z_rho, z_rho)
              + _simpson_log(lambda z: np.abs(u(z)) ** n * m.area(z),
                             z_rho, z_r * 1.02))
        return ExtremalFamily(alpha=1, n=n, kind=kind, r=r, rho=rho,
                              rho_calibrated=rho_calibrated, u=u,
                              Dnorm=dn ** (1.0 / n), Lnorm=ln ** (1.0 / n),
                              support=z_r * 1.02, has_tail=False, manifold=m,
                              meta={"z_rho": z_rho, "z_r": z_r})

    if kind == "smooth_h_r":
        if alpha != 2 or n < 3:
            raise ValueError("smooth_h_r is the alpha = 2 family on n >= 3")
        prof = _SmoothLogProfile(rho, r)

        def u(z):
            return prof.value(np.asarray(b(z), dtype=float))

        def lap_mag(z):
            z = np.asarray(z, dtype=float)
            t = np.asarray(b(z), dtype=float)
            grad2 = np.asarray(bp(z), dtype=float) ** 2
            # composite Laplacian through the harmonic-shell identity
            # for b: Delta b = (n-1) |grad b|^2 / b
            return np.abs((prof.d2(t) + (n - 1.0) * prof.d1(t) / t) * grad2)

        dn = _simpson_log(lambda z: lap_mag(z) ** (n / 2.0) * m.area(z),
                          z_rho * 0.5, z_r * 1.1)
        ln = (_simpson_log(lambda z: np.abs(u(z)) ** (n / 2.0) * m.area(z),
                           1e-6 * z_rho, z_rho)
              + _simpson_log(lambda z: np.abs(u(z)) ** (n / 2.0) * m.area(z),
                             z_rho, z_r * 1.02))
        return ExtremalFamily(alpha=2, n=n, kind=kind, r=r, rho=rho,
                              rho_calibrated=rho_calibrated, u=u,
                              Dnorm=dn ** (2.0 / n), Lnorm=ln ** (2.0 / n),
                              support=z_r * 1.02, has_tail=False, manifold=m,
                              meta={"z_rho": z_rho, "z_r": z_r})

    if kind == "h_alpha_r":
        if alpha % 2 != 0 or not 2 <= alpha < n / 2.0:
            raise ValueError("h_alpha_r needs alpha even with alpha < n/2")
        h = _truncated_power(rho, r, alpha)
        source = lambda z: h(np.asarray(b(z), dtype=float))
        stages = radial_potential(m, source, alpha, r_min=1e-4,
                                  r_max=max(300.0 * r, 1e4),
                                  points_per_decade=100)
        u = stages[-1]
        dn = (_simpson_log(lambda z: source(z) ** na * m.area(z),
                           1e-6 * z_rho, z_rho)
              + _simpson_log(lambda z: source(z) ** na * m.area(z),
                             z_rho, z_r * 1.02))
        r_ext = u.r[-1]
        ln = (_simpson_log(lambda z: np.abs(u(z)) ** na * m.area(z),
                           1e-6, z_r)
              + _simpson_log(lambda z: np.abs(u(z)) ** na * m.area(z),
                             z_r, r_ext))
        return ExtremalFamily(alpha=alpha, n=n, kind=kind, r=r, rho=rho,
                              rho_calibrated=rho_calibrated, u=u,
                              Dnorm=dn ** (1.0 / na), Lnorm=ln ** (1.0 / na),
                              support=z_r, has_tail=True, manifold=m,
                              meta={"z_rho": z_rho, "z_r": z_r,
                                    "r_ext": r_ext})

    raise ValueError(f"unknown family kind {kind!r}")


# ---------------------------------------------------------------------------
# the functional
# ---------------------------------------------------------------------------

def mt_functional(fam: ExtremalFamily, spec: MTFunctionalSpec,
                  return_log: bool = False) -> float:
    """Evaluate the exponential functional on a normalized family member.

    The member is normalized per spec.norm_mode (top-order norm alone,
    or the kappa-weighted full norm), the integrand is integrated in
    radial log coordinates over [pole, support] plus the decay tail for
    potential kinds, and the result is divided by the normalized
    zero-order norm.  Exponents beyond 700 log-units switch to a shifted
    accumulation; ask for return_log to read off such values.
    """
    m = fam.manifold
    na = fam.n / fam.alpha
    beta = fam.beta
    p = spec.denom_power if spec.denom_power is not None else beta
    if spec.norm_mode == "grad_only":
        norm = fam.Dnorm
    else:
        norm = (spec.kappa * fam.Lnorm ** na + fam.Dnorm ** na) ** (1.0 / na)
    if norm <= 0:
        raise ValueError("degenerate member: zero norm")

    gscale = spec.gamma * spec.theta
    u_over = lambda z: np.abs(np.asarray(fam.u(z), dtype=float)) / norm
    peak = float(u_over(np.array([1e-6]))[0])
    max_expo = gscale * peak ** beta
    shift = max(max_expo - 650.0, 0.0)

    def integrand(z):
        v = u_over(z)
        expo = gscale * v ** beta
        if shift == 0.0:
            numer = regularized_exp(spec.m_index, expo)
        else:
            # the subtracted polynomial is invisible at this magnitude
            numer = np.exp(expo - shift)
        return numer / (1.0 + v ** p) * m.area(z)

    lo = 1e-6 * min(fam.support, 1.0)
    total = _simpson_log(integrand, lo, fam.rho if fam.rho < fam.support
                         else fam.support / 2.0)
    total += _simpson_log(integrand, fam.rho if fam.rho < fam.support
                          else fam.support / 2.0, fam.support)
    if fam.has_tail:
        r_ext = fam.meta.get("r_ext", 300.0 * fam.support)
        total += _simpson_log(integrand, fam.support, r_ext)

    lnorm_scaled = (fam.Lnorm / norm) ** na
    if return_log:
        return math.log(total) + shift - math.log(lnorm_scaled)
    if shift > 0.0:
        val = math.log(total) + shift - math.log(lnorm_scaled)
        return math.inf if val > 700.0 else math.exp(val)
    return total / lnorm_scaled


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def _norm_slope_target(kind: str, n: int) -> float:
    """Slope of Dnorm^{n/alpha} against log(V(r)/V(rho)) per family kind."""
    if kind == "smooth_h_r":
        return (n - 2.0) ** (n / 2.0) * ball_volume(n)
    return ball_volume(n)


def _peak_coefficient(kind: str, n: int, alpha: int) -> float:
    """Coefficient of log(V(r)/V(rho)) in the family's central value."""
    if kind == "h_alpha_r":
        return _c_alpha(n, alpha) * ball_volume(n)
    # truncated-logarithm kinds peak at log(r/rho) ~ L/n
    return 1.0 / n


def sharpness_sweep(m: ModelManifold, alpha: int, r_list=None,
                    theta_list=(1.0, 1.1), denom_list=(1.0, 0.5),
                    kind: str | None = None, rho: float | None = 1.0,
                    ) -> tuple[ExperimentReport, list[dict]]:
    """Functional table over (r, theta, denom_power) with pass criteria.

    Asserted behaviors (sigma < 1, sigma-adjusted constant):
      (i)  theta = 1, full denominator: bounded, varies < 10x over the sweep;
      (ii) theta > 1: exceeds the theta = 1 value by >= 10x at the
           largest radius, the blow-up direction;
      (iii) denominator power reduced by theta' = 0.5 at theta = 1:
           growth like log(V(r)/V(rho))^{1 - theta'}, fit exponent
           within +/- 0.15 of 0.5;
    plus the norm identity: Dnorm^{n/alpha} fits its slope target in
    log(V(r)/V(rho)) within 3%, and the central value stays above its
    log(V(r)/V(rho)) coefficient minus a bounded constant.

    rho = 1.0 (default) uses the fixed-inner-radius construction; pass
    rho = None to calibrate each member instead (the functional rows are
    still produced, but the fitted criteria need the fixed-rho spread).
    Returns (report, rows) with one row per (r, theta, denom) cell.
    """
    n = m.n
    if m.sigma >= 1.0:
        raise ValueError("sharpness experiments need sigma < 1")
    if kind is None:
        if alpha == 1:
            kind = "h_0_r"
        elif alpha == 2:
            kind = "h_alpha_r" if alpha < n / 2.0 else "smooth_h_r"
        elif alpha % 2 == 0 and alpha < n / 2.0:
            kind = "h_alpha_r"
        else:
            raise ValueError(f"no default family kind for alpha = {alpha}, "
                             f"n = {n}")
    if r_list is None:
        r_list = tuple(np.geomspace(1e2, 1e4, 5))
    rc = riesz_constants(n, alpha)
    gamma_adj = m.sigma ** (alpha / (n - alpha)) * rc.gamma_n_alpha
    m_index = truncation_index(n, alpha)
    beta = n / (n - alpha)

    rep = ExperimentReport(experiment=f"mt_sharpness(alpha={alpha},kind={kind})",
                           manifold=m.describe())
    rep.provenance["proved_range"] = in_proved_range(n, alpha)
    if not in_proved_range(n, alpha):
        rep.provenance["note"] = "outside proved range - exploratory"
    rep.provenance["rho_mode"] = "calibrated" if rho is None else f"fixed({rho:g})"

    fams = [build_family(m, alpha, float(r), kind, rho=rho) for r in r_list]
    L = np.array([math.log(m.vol_fast(f.r) / m.vol_fast(f.rho)) for f in fams])

    rows = []
    table: dict[tuple, float] = {}
    for f in fams:
        for theta in theta_list:
            spec = MTFunctionalSpec(gamma=gamma_adj, theta=theta,
                                    m_index=m_index)
            val = mt_functional(f, spec)
            table[(f.r, theta, 1.0)] = val
            rows.append({"r": f.r, "rho": f.rho, "theta": theta,
                         "denom_power": beta, "functional": val,
                         "Dnorm": f.Dnorm, "Lnorm": f.Lnorm})
        for dp in denom_list:
            if dp == 1.0:
                continue
            spec = MTFunctionalSpec(gamma=gamma_adj, theta=1.0,
                                    denom_power=dp * beta, m_index=m_index)
            val = mt_functional(f, spec)
            table[(f.r, 1.0, dp)] = val
            rows.append({"r": f.r, "rho": f.rho, "theta": 1.0,
                         "denom_power": dp * beta, "functional": val,
                         "Dnorm": f.Dnorm, "Lnorm": f.Lnorm})

    # (i) boundedness at the sharp constant
    base = np.array([table[(f.r, 1.0, 1.0)] for f in fams])
    spread = float(np.max(base) / np.min(base))
    rep.add(name="bounded at theta = 1", tag="mt.bounded", observed=spread,
            criterion="max/min < 10 over the radius sweep",
            passed=spread < 10.0, hard=False,
            details={f"r={f.r:g}": v for f, v in zip(fams, base)})

    # (ii) exponential-constant sharpness
    theta_hi = max(theta_list)
    if theta_hi > 1.0:
        big = table[(fams[-1].r, theta_hi, 1.0)]
        ratio = big / base[-1]
        rep.add(name="blow-up above the sharp constant",
                tag="mt.sharp_exponential", observed=ratio,
                criterion=f"theta = {theta_hi:g} exceeds theta = 1 by >= 10x "
                "at the largest radius",
                passed=ratio >= 10.0, hard=False,
                details={"theta_hi_value": big, "theta_1_value": float(base[-1]),
                         "growth_along_sweep":
                         table[(fams[-1].r, theta_hi, 1.0)]
                         / table[(fams[0].r, theta_hi, 1.0)]})

    # (iii) denominator-power growth exponent
    if any(dp < 1.0 for dp in denom_list):
        dp = min(denom_list)
        vals = np.array([table[(f.r, 1.0, dp)] for f in fams])
        slope = float(np.polyfit(np.log(L), np.log(vals), 1)[0])
        rep.add(name="reduced denominator growth exponent",
                tag="mt.sharp_denominator", observed=slope,
                criterion=f"fit of log F against log log-volume in "
                f"[{1 - dp - 0.15:.2f}, {1 - dp + 0.15:.2f}]",
                passed=abs(slope - (1.0 - dp)) <= 0.15, hard=False,
                details={"theta_prime": dp})

    # norm identity fit
    dnp = np.array([f.Dnorm ** (n / alpha) for f in fams])
    slope, intercept = np.polyfit(L, dnp, 1)
    target = _norm_slope_target(kind, n) * m.sigma
    rep.add(name="top-order norm slope", tag="mt.norm_slope",
            observed=float(slope),
            criterion=f"slope of Dnorm^(n/alpha) vs log-volume = "
            f"{target:.6g} within 3%",
            passed=abs(slope - target) <= 0.03 * target, hard=False,
            details={"intercept": float(intercept), "target": target})

    # central value lower bound: peak - coef * L bounded below
    coef = _peak_coefficient(kind, n, alpha)
    defects = np.array([float(np.min(np.asarray(
        f.u(np.geomspace(1e-4, max(f.meta.get("z_rho", f.rho), 1e-3), 24)),
        dtype=float))) - coef * ll for f, ll in zip(fams, L)])
    band = float(np.max(defects) - np.min(defects))
    rep.add(name="central value lower bound", tag="mt.peak_lower",
            observed=float(np.min(defects)),
            criterion="min over the inner ball minus coef * log-volume "
            "stays in a bounded band",
            passed=np.all(np.isfinite(defects)) and band < 10.0, hard=False,
            details={"band_width": band, "coef": coef})

    # zero-order norm growth
    lnr = np.array([f.Lnorm ** (n / alpha) / m.vol_fast(f.r) for f in fams])
    rep.add(name="zero-order norm vs volume", tag="mt.lnorm_bound",
            observed=float(np.max(lnr)),
            criterion="Lnorm^{n/alpha} / V(r) bounded across the sweep "
            "(ratio spread < 10x)",
            passed=float(np.max(lnr) / np.min(lnr)) < 10.0, hard=False)
    return rep, rows


def moser_classical_check(m: ModelManifold, alpha: int,
                          eps_list=(0.03, 0.01, 0.003, 0.001, 0.0003),
                          r0: float = 1.0, theta_hi: float = 1.1,
                          kappa: float = 1.0) -> ExperimentReport:
    """Concentrating-family dichotomy under the full-norm constraint.

    The family's top-order norm must fit
    (n c B_n^{(n-alpha)/n})^{-1} (log 1/V(eps r0))^{alpha/n} + O(1)
    (c the parity-matched kernel coefficient) with slope within 5%, the
    functional at the unadjusted sharp constant stays bounded at
    theta = 1, and inflating the constant by theta_hi sends it up along
    eps -> 0.
    """
    n = m.n
    rc = riesz_constants(n, alpha)
    c_par = rc.c_alpha if alpha % 2 == 0 else rc.c_tilde_alpha
    m_index = truncation_index(n, alpha)
    rep = ExperimentReport(experiment=f"moser_classical(alpha={alpha})",
                           manifold=m.describe())

    fams = [build_family(m, alpha, 0.0, "moser_eps", eps=e, r0=r0)
            for e in sorted(eps_list, reverse=True)]
    xs = np.array([math.log(1.0 / m.vol_fast(f.meta["eps"] * r0))
                   ** (alpha / n) for f in fams])
    dn = np.array([f.Dnorm for f in fams])
    slope = float(np.polyfit(xs, dn, 1)[0])
    target = 1.0 / (n * c_par * ball_volume(n) ** ((n - alpha) / n))
    rep.add(name="concentrating norm fit", tag="mt.moser_norm_fit",
            observed=slope,
            criterion=f"slope vs (log 1/V(eps))^{{alpha/n}} = {target:.6g} "
            "within 5%",
            passed=abs(slope - target) <= 0.05 * target, hard=False,
            details={"target": target})

    at1 = []
    at_hi = []
    for f in fams:
        spec1 = MTFunctionalSpec(gamma=rc.gamma_n_alpha, theta=1.0,
                                 m_index=m_index, norm_mode="full_norm",
                                 kappa=kappa)
        spec2 = MTFunctionalSpec(gamma=rc.gamma_n_alpha, theta=theta_hi,
                                 m_index=m_index, norm_mode="full_norm",
                                 kappa=kappa)
        at1.append(mt_functional(f, spec1))
        at_hi.append(mt_functional(f, spec2))
    spread1 = max(at1) / min(at1)
    growth = at_hi[-1] / at_hi[0]
    rep.add(name="dichotomy along concentration", tag="mt.moser_dichotomy",
            observed=growth,
            criterion=f"bounded at theta = 1 (spread {spread1:.3g} < 10) "
            f"and growing at theta = {theta_hi:g} (>= 2x)",
            passed=spread1 < 10.0 and growth >= 2.0
            and at_hi[-1] > at1[-1], hard=False,
            details={"theta1": dict(zip([f.meta['eps'] for f in fams], at1)),
                     "theta_hi": dict(zip([f.meta['eps'] for f in fams],
                                          at_hi))})
    return rep
