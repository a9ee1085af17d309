"""Symmetry-reduced minimal-surface problem on the angular interval [0, pi].

On product-of-spheres manifolds with a conformal factor h depending only on
the polar angle of the second factor, minimizers in the classes spanned by
the second volume form reduce to a single profile f(theta).  This module
carries the closed-form solution family

    f_c(theta) = c / sqrt(1 - c^2 h(theta)^{2k}),

the map from the constant c to the cohomology class scale, the critical
constant c_star = h(0)^-k and critical class scale, divergence detection of
the critical integral, and an independent constrained Newton minimizer over
sampled profiles that recovers the closed form.

Quadrature is composite Gauss-Legendre on panels refined geometrically
toward both endpoints, where the conformal factor peaks and near-critical
integrands steepen.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    InvalidMetricError,
    NoSolutionError,
    NonConvergenceError,
    PrecisionError,
    SupercriticalError,
)


def sphere_volume(k: int) -> float:
    """Volume of the unit k-sphere; the 0-sphere carries counting measure 2."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return 2.0 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


def sin_power_integral(k: int) -> float:
    """Integral of sin^(k-1) over [0, pi]."""
    return sphere_volume(k) / sphere_volume(k - 1)


# ---------------------------------------------------------------------------
# conformal factor
# ---------------------------------------------------------------------------

_ENDPOINT_DERIVATIVE_TOL = 1e-8
_FD_STEP = 1e-5


@dataclass(frozen=True)
class HFunction:
    """Positive conformal factor sampled on [0, pi], peaked at 0.

    The first derivative must vanish at both endpoints (checked by one-sided
    second-order differences); higher odd derivatives are assumed but not
    verified, since user callables do not expose them reliably.
    """

    fn: Callable
    name: str
    h_max: float
    h_prime_0: float
    h_prime_pi: float

    def __call__(self, theta):
        return np.asarray(self.fn(np.asarray(theta, dtype=float)), dtype=float)


def _one_sided_derivative(fn, x, direction, step=_FD_STEP):
    s = direction * step
    return (-3.0 * fn(x) + 4.0 * fn(x + s) - fn(x + 2 * s)) / (2.0 * s)


def make_h_function(fn: Callable, name: str = "custom") -> HFunction:
    """Validate a factor callable and record its endpoint data."""
    thetas = np.linspace(0.0, math.pi, 2001)
    vals = np.asarray(fn(thetas), dtype=float)
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0.0):
        raise InvalidMetricError(f"conformal factor '{name}' must be positive on [0, pi]")
    h0 = float(vals[0])
    if h0 < float(vals.max()) - 1e-12 * max(1.0, abs(h0)):
        raise InvalidMetricError(
            f"conformal factor '{name}' must attain its maximum at theta = 0"
        )
    scalar = lambda x: float(np.asarray(fn(np.asarray(x, dtype=float))))
    dp0 = _one_sided_derivative(scalar, 0.0, +1.0)
    dppi = _one_sided_derivative(scalar, math.pi, -1.0)
    if abs(dp0) > _ENDPOINT_DERIVATIVE_TOL or abs(dppi) > _ENDPOINT_DERIVATIVE_TOL:
        raise InvalidMetricError(
            f"conformal factor '{name}' needs vanishing first derivative at the "
            f"endpoints, got {dp0:.2e} and {dppi:.2e}"
        )
    return HFunction(fn=fn, name=name, h_max=h0, h_prime_0=dp0, h_prime_pi=dppi)


def builtin_h(name: str) -> HFunction:
    if name == "one-plus-cos-squared":
        return make_h_function(lambda t: np.sqrt(1.0 + np.cos(t) ** 2), name)
    if name == "flat":
        return make_h_function(lambda t: np.ones_like(np.asarray(t, dtype=float)), name)
    raise KeyError(f"unknown builtin conformal factor '{name}'")


def h_from_table(path) -> HFunction:
    """Monotone-cubic interpolant of (theta, h) samples from a CSV table."""
    from scipy.interpolate import PchipInterpolator

    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if [c.strip() for c in header] != ["theta", "h"]:
            raise InvalidMetricError(f"table {path} must have header 'theta,h'")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    thetas = np.array([r[0] for r in rows])
    hs = np.array([r[1] for r in rows])
    if len(rows) < 4 or np.any(np.diff(thetas) <= 0):
        raise InvalidMetricError(f"table {path} needs at least 4 increasing samples")
    if abs(thetas[0]) > 1e-9 or abs(thetas[-1] - math.pi) > 1e-9:
        raise InvalidMetricError(f"table {path} must cover [0, pi]")
    # h is even about both endpoints; mirror a few samples across each end so
    # the interpolant inherits the vanishing boundary derivative
    m = min(4, len(thetas) - 1)
    theta_ext = np.concatenate(
        [-thetas[1 : m + 1][::-1], thetas, 2 * math.pi - thetas[-m - 1 : -1][::-1]]
    )
    h_ext = np.concatenate([hs[1 : m + 1][::-1], hs, hs[-m - 1 : -1][::-1]])
    interp = PchipInterpolator(theta_ext, h_ext)
    return make_h_function(lambda t: interp(np.clip(t, 0.0, math.pi)), f"table:{path}")


# ---------------------------------------------------------------------------
# closed-form family
# ---------------------------------------------------------------------------

def critical_constant(h: HFunction, k: int) -> float:
    """Largest admissible constant for the closed-form family: h(0)^-k."""
    return h.h_max ** (-k)


def profile_value(c: float, h: HFunction, k: int, theta) -> np.ndarray:
    """Closed-form solution profile at arbitrary angles."""
    c_star = critical_constant(h, k)
    if abs(c) >= c_star:
        raise SupercriticalError(
            f"|c| = {abs(c)} is at or beyond the critical constant {c_star}"
        )
    hk = h(theta) ** k
    return c / np.sqrt(1.0 - c * c * hk * hk)


def solution_norm_value(c: float, h: HFunction, k: int, theta) -> np.ndarray:
    """Pointwise metric norm of the closed-form solution: h^k * f_c."""
    return h(theta) ** k * profile_value(c, h, k, theta)


# ---------------------------------------------------------------------------
# profiles and quadrature
# ---------------------------------------------------------------------------

@dataclass
class Profile:
    """Sampled profile with quadrature weights carrying the sin^(k-1) factor."""

    theta_nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    k: int

    def __post_init__(self):
        self.theta_nodes = np.asarray(self.theta_nodes, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.theta_nodes.ndim != 1 or np.any(np.diff(self.theta_nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if self.theta_nodes[0] <= 0.0 or self.theta_nodes[-1] >= math.pi:
            raise ValueError("nodes must lie strictly inside (0, pi)")
        if np.any(self.weights <= 0.0):
            raise ValueError("weights must be positive")
        if self.values.shape != self.theta_nodes.shape:
            raise ValueError("values and nodes must have matching shapes")
        total = sin_power_integral(self.k)
        if abs(float(self.weights.sum()) - total) > 1e-10:
            raise ValueError(
                f"weights must sum to the sin^{self.k - 1} integral {total}"
            )


def _geometric_breakpoints(levels: int) -> np.ndarray:
    half = math.pi / 2.0
    left = [half * 0.5**m for m in range(levels, -1, -1)]
    pts = [0.0] + left + [math.pi - x for x in reversed(left[:-1])] + [math.pi]
    return np.unique(np.asarray(pts))


def make_profile(k: int, n_nodes: int = 2000, levels: int = 12) -> Profile:
    """Composite Gauss-Legendre profile grid, refined toward both endpoints."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if n_nodes < 32:
        raise ValueError("need at least 32 nodes")
    breaks = _geometric_breakpoints(levels)
    n_panels = len(breaks) - 1
    base = n_nodes // n_panels
    if base < 2:
        raise ValueError("too few nodes for the requested refinement depth")
    counts = np.full(n_panels, base)
    counts[: n_nodes - base * n_panels] += 1
    nodes, weights = [], []
    for (a, b), cnt in zip(zip(breaks, breaks[1:]), counts):
        x, w = np.polynomial.legendre.leggauss(int(cnt))
        mid, rad = (a + b) / 2.0, (b - a) / 2.0
        t = mid + rad * x
        nodes.append(t)
        weights.append(rad * w * np.sin(t) ** (k - 1))
    theta = np.concatenate(nodes)
    return Profile(theta, np.concatenate(weights), np.zeros_like(theta), k)


def closed_profile(c: float, h: HFunction, k: int, nodes: int | Profile = 2000) -> Profile:
    """Closed-form family evaluated on a profile grid."""
    template = make_profile(k, nodes) if isinstance(nodes, int) else nodes
    vals = profile_value(c, h, k, template.theta_nodes)
    return Profile(template.theta_nodes, template.weights.copy(), vals, k)


# ---------------------------------------------------------------------------
# class-scale integrals
# ---------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _panel_integral(fn, a, b):
    mid, rad = (a + b) / 2.0, (b - a) / 2.0
    return float(rad * np.sum(_GL_W * fn(mid + rad * _GL_X)))


def _adaptive_integral(fn, a, b, tol, max_depth=60, max_panels=50000):
    """Absolute-tolerance adaptive bisection with Gauss-Legendre panels."""
    total_width = b - a
    stack = [(a, b, _panel_integral(fn, a, b), 0)]
    total = 0.0
    panels = 0
    while stack:
        lo, hi, whole, depth = stack.pop()
        panels += 1
        if panels > max_panels:
            raise PrecisionError("adaptive quadrature exceeded the panel budget")
        mid = (lo + hi) / 2.0
        left = _panel_integral(fn, lo, mid)
        right = _panel_integral(fn, mid, hi)
        err = abs(left + right - whole)
        if err <= tol * (hi - lo) / total_width or err <= 1e-16 * abs(whole):
            total += left + right
            continue
        if depth >= max_depth:
            raise PrecisionError(
                f"adaptive quadrature stalled on [{lo}, {hi}] with error {err:.3e}"
            )
        stack.append((lo, mid, left, depth + 1))
        stack.append((mid, hi, right, depth + 1))
    return total


def class_scale(c: float, h: HFunction, k: int, tol: float = 1e-12) -> float:
    """Cohomology class scale of the closed-form profile with constant c.

    Odd and strictly increasing in c on the subcritical range.
    """
    if c == 0.0:
        return 0.0
    c_star = critical_constant(h, k)
    if abs(c) >= c_star:
        raise SupercriticalError(
            f"|c| = {abs(c)} is at or beyond the critical constant {c_star}"
        )
    ca = abs(c)

    def integrand(t):
        hk = h(t) ** k
        return ca / np.sqrt(1.0 - ca * ca * hk * hk) * np.sin(t) ** (k - 1)

    ratio = sphere_volume(k - 1) / sphere_volume(k)
    value = ratio * _adaptive_integral(integrand, 0.0, math.pi, tol)
    return math.copysign(value, c)


@dataclass
class ThresholdReport:
    c_star: float
    kappa_star: float
    divergent: bool
    refinement_trace: list


def critical_class_scale(
    h: HFunction, k: int, tol: float = 1e-8, max_level: int = 20
) -> ThresholdReport:
    """Class scale of the critical profile, or a divergence flag.

    The improper integral is estimated on panels refined geometrically into
    both endpoints; the estimate sequence either becomes Cauchy within
    ``tol`` (finite threshold) or keeps growing level after level, which the
    doubling-stability heuristic reports as divergent.
    """
    c_star = critical_constant(h, k)
    ratio = sphere_volume(k - 1) / sphere_volume(k)

    def integrand(t):
        hk = h(t) ** k
        s = 1.0 - c_star * c_star * hk * hk
        out = np.full_like(np.asarray(t, dtype=float), np.inf)
        pos = s > 0.0
        out[pos] = np.sin(t[pos]) ** (k - 1) * c_star / np.sqrt(s[pos])
        return out

    trace = []
    prev = None
    for level in range(1, max_level + 1):
        breaks = _geometric_breakpoints(level)
        est = float(
            ratio
            * sum(_panel_integral(integrand, a, b) for a, b in zip(breaks, breaks[1:]))
        )
        trace.append((level, est))
        if not math.isfinite(est):
            return ThresholdReport(c_star, math.inf, True, trace)
        if prev is not None and abs(est - prev) <= tol * max(abs(est), 1e-300):
            return ThresholdReport(c_star, est, False, trace)
        prev = est
    return ThresholdReport(c_star, math.inf, True, trace)


def constant_for_class_scale(
    kappa: float, h: HFunction, k: int, tol: float = 1e-12
) -> float:
    """Invert the class-scale map by bisection on the subcritical interval.

    Raises :class:`NoSolutionError` when the threshold is finite and the
    requested scale reaches it, mirroring the nonexistence regime.
    """
    if kappa == 0.0:
        return 0.0
    threshold = critical_class_scale(h, k, tol=min(1e-8, tol * 10), max_level=30)
    if not threshold.divergent and abs(kappa) >= threshold.kappa_star:
        raise NoSolutionError(
            f"|kappa| = {abs(kappa)} is at or beyond the critical scale "
            f"{threshold.kappa_star}: no minimizer exists"
        )
    c_star = critical_constant(h, k)
    target = abs(kappa)
    quad_tol = max(tol * 0.05, 1e-14)
    lo, hi = 0.0, c_star * (1.0 - 1e-14)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = class_scale(mid, h, k, quad_tol)
        if abs(val - target) <= tol:
            return math.copysign(mid, kappa)
        if val < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-17 * c_star:
            break
    raise PrecisionError(
        f"bisection failed to match the class scale {kappa} to tolerance {tol}"
    )


# ---------------------------------------------------------------------------
# reduced energy and constrained minimization
# ---------------------------------------------------------------------------

def reduced_energy(f: Profile, h: HFunction, k: int) -> float:
    """Quadrature value of the reduced energy of a profile.

    Strictly convex in the profile values; its stationarity condition under
    the class constraint makes f / sqrt(1 + h^2k f^2) constant in theta.
    """
    if k != f.k:
        raise ValueError(f"profile has k = {f.k}, requested {k}")
    hk = h(f.theta_nodes) ** k
    integrand = np.sqrt(1.0 + hk * hk * f.values**2) / hk**2
    return sphere_volume(k) * sphere_volume(k - 1) * float(np.sum(f.weights * integrand))


@dataclass
class ReducedSolution:
    profile: Profile
    multiplier: float
    residual: float
    iterations: int


def reduced_minimize(
    kappa: float,
    h: HFunction,
    k: int,
    nodes: int | Profile = 2000,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> ReducedSolution:
    """Constrained Newton solve of the reduced problem at a given class scale.

    Works on the stationarity system in the profile values and the scalar
    multiplier, independent of the closed-form family; at convergence the
    multiplier plays the role of the constant c.
    """
    template = make_profile(k, nodes) if isinstance(nodes, int) else nodes
    threshold = critical_class_scale(h, k, tol=1e-8, max_level=30)
    if not threshold.divergent and abs(kappa) >= threshold.kappa_star:
        raise NoSolutionError(
            f"|kappa| = {abs(kappa)} is at or beyond the critical scale "
            f"{threshold.kappa_star}: no minimizer exists"
        )

    hk = h(template.theta_nodes) ** k
    g = (sphere_volume(k - 1) / sphere_volume(k)) * template.weights

    def residuals(f, mu):
        root = np.sqrt(1.0 + hk * hk * f * f)
        stat = f / root - mu
        con = float(np.sum(g * f)) - kappa
        return stat, con

    f = np.zeros_like(template.theta_nodes)
    mu = 0.0
    stat, con = residuals(f, mu)
    norm = max(float(np.max(np.abs(stat))), abs(con))
    iterations = 0
    while norm > tol:
        if iterations >= max_iter:
            raise NonConvergenceError(
                f"reduced_minimize: residual {norm:.3e} > tol {tol:.3e} "
                f"after {max_iter} Newton steps",
                residual=norm,
            )
        diag = (1.0 + hk * hk * f * f) ** -1.5
        inv = 1.0 / diag
        dmu = (float(np.sum(g * stat * inv)) - con) / float(np.sum(g * inv))
        df = (-stat + dmu) * inv
        s = 1.0
        for _ in range(60):
            stat_s, con_s = residuals(f + s * df, mu + s * dmu)
            norm_s = max(float(np.max(np.abs(stat_s))), abs(con_s))
            if norm_s <= (1.0 - 1e-4 * s) * norm:
                break
            s *= 0.5
        else:
            raise NonConvergenceError(
                "reduced_minimize: damping failed to reduce the residual",
                residual=norm,
            )
        f, mu = f + s * df, mu + s * dmu
        stat, con = stat_s, con_s
        norm = norm_s
        iterations += 1

    profile = Profile(template.theta_nodes, template.weights.copy(), f, k)
    return ReducedSolution(profile, mu, norm, iterations)
