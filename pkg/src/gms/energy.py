"""Nonlinear Hodge energies over the potential, their variations, and the
ellipticity probe for density models.

A density model pairs rho(q) with rho(q) + rho'(q)*q; together they control
the first and second variation of the energy F(q) integrated over the grid,
where F'(q) = q*rho(q).  The minimal-surface family uses
rho(q) = 1/sqrt(1+q^2); the rescaled family substitutes t^-2 for the 1.

Energies are one-point face quadratures of the pointwise g-norm.  Gradients
and Hessian products are exact derivatives of that discrete functional, so
finite differences of :func:`total_energy` reproduce them to roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegreeError, ModelDomainError
from .exterior import (
    Cochain,
    ConformalMetric,
    _d0_transpose,
    _edge_weights,
    _vertex_weights,
    d,
    face_components,
)


@dataclass(frozen=True)
class RhoModel:
    """Nonlinear Hodge density rho with its ellipticity companion.

    ``rho_plus(q) = rho(q) + rho'(q) * q`` is the stiffness along the form
    direction; ``integrand(q) = F(q)`` with F'(q) = q rho(q) feeds the energy.
    ``curvature(q) = rho'(q)/q`` is optional; when absent it is recovered from
    (rho_plus - rho)/q^2, which is exact up to cancellation at tiny q.
    """

    kind: str
    rho: Callable
    rho_plus: Callable
    integrand: Callable
    t: float | None = None
    curvature: Callable | None = field(default=None, repr=False)

    def curvature_at(self, q: np.ndarray) -> np.ndarray:
        if self.curvature is not None:
            return self.curvature(q)
        q2 = q * q
        safe = np.where(q2 > 1e-24, q2, 1.0)
        out = (np.asarray(self.rho_plus(q)) - np.asarray(self.rho(q))) / safe
        return np.where(q2 > 1e-24, out, 0.0)


def gms_model() -> RhoModel:
    """Minimal surface density: rho(q) = (1+q^2)^-1/2."""
    return RhoModel(
        kind="gms",
        rho=lambda q: (1.0 + q * q) ** -0.5,
        rho_plus=lambda q: (1.0 + q * q) ** -1.5,
        integrand=lambda q: np.sqrt(1.0 + q * q),
        curvature=lambda q: -((1.0 + q * q) ** -1.5),
    )


def tgms_model(t: float) -> RhoModel:
    """Rescaled family: integrand sqrt(t^-2 + q^2), limiting to total variation."""
    if t <= 0:
        raise ValueError("t must be positive")
    inv2 = t ** -2
    return RhoModel(
        kind="tgms",
        rho=lambda q: (inv2 + q * q) ** -0.5,
        rho_plus=lambda q: inv2 * (inv2 + q * q) ** -1.5,
        integrand=lambda q: np.sqrt(inv2 + q * q),
        t=t,
        curvature=lambda q: -((inv2 + q * q) ** -1.5),
    )


def linear_model() -> RhoModel:
    """Quadratic Hodge energy: rho == 1."""
    one = lambda q: np.ones_like(np.asarray(q, dtype=float))
    return RhoModel(
        kind="linear",
        rho=one,
        rho_plus=one,
        integrand=lambda q: 1.0 + 0.5 * q * q,
        curvature=lambda q: np.zeros_like(np.asarray(q, dtype=float)),
    )


def custom_model(rho: Callable, rho_plus: Callable, integrand: Callable) -> RhoModel:
    return RhoModel(kind="custom", rho=rho, rho_plus=rho_plus, integrand=integrand)


# ---------------------------------------------------------------------------
# energy and variations
# ---------------------------------------------------------------------------

@dataclass
class EnergyReport:
    value: float
    tv_value: float
    max_pointwise_norm: float


def total_energy(a: Cochain, m: ConformalMetric, model: RhoModel) -> EnergyReport:
    """Face-quadrature energy of a 1-cochain, with the total variation and
    the largest pointwise g-norm reported alongside."""
    if a.degree != 1:
        raise DegreeError("total_energy expects a 1-cochain")
    px, qy = face_components(a)
    q = m.h_face * np.hypot(px, qy)
    vol = m.face_volumes
    value = float(np.sum(model.integrand(q) * vol))
    tv = float(np.sum(q * vol))
    return EnergyReport(value, tv, float(np.max(q)))


def _face_norms(u_values: np.ndarray, a_star: Cochain, m: ConformalMetric):
    """Face components and g-norm of a_star + d(u)."""
    g = a_star.grid
    ax = a_star.values[0] + np.roll(u_values, -1, axis=0) - u_values
    ay = a_star.values[1] + np.roll(u_values, -1, axis=1) - u_values
    px = (ax + np.roll(ax, -1, axis=1)) / (2.0 * g.dx1)
    qy = (ay + np.roll(ay, -1, axis=0)) / (2.0 * g.dx2)
    q = m.h_face * np.hypot(px, qy)
    return px, qy, q


def _scatter_to_edges(g, fx, fy):
    """Adjoint of face-center averaging: spread face values to the edges."""
    gx = (fx + np.roll(fx, 1, axis=1)) / (2.0 * g.dx1)
    gy = (fy + np.roll(fy, 1, axis=0)) / (2.0 * g.dx2)
    return gx * g.face_area, gy * g.face_area


def energy_differential(u: Cochain, a_star: Cochain, m: ConformalMetric,
                        model: RhoModel) -> np.ndarray:
    """Raw differential of the energy with respect to vertex values.

    The returned array pairs with a variation psi through a plain sum, not
    through the weighted vertex product; divide by the vertex weights to get
    the Riesz gradient.
    """
    g = a_star.grid
    if model.kind == "linear":
        alpha = a_star + d(u)
        wx, wy = _edge_weights(g)
        return _d0_transpose(np.stack([alpha.values[0] * wx, alpha.values[1] * wy]))
    px, qy, q = _face_norms(u.values, a_star, m)
    rho = model.rho(q)
    gx, gy = _scatter_to_edges(g, rho * px, rho * qy)
    return _d0_transpose(np.stack([gx, gy]))


def grad_potential(u: Cochain, a_star: Cochain, m: ConformalMetric,
                   model: RhoModel) -> Cochain:
    """Riesz gradient of the energy in the potential: the 0-cochain whose
    weighted pairing with any psi equals the directional derivative.

    For the linear model this is the codifferential of a_star + d(u), the
    residual driving the harmonic-representative solve.
    """
    raw = energy_differential(u, a_star, m, model)
    return Cochain(a_star.grid, 0, raw / _vertex_weights(m))


def hessian_differential(u: Cochain, v: Cochain, a_star: Cochain,
                         m: ConformalMetric, model: RhoModel) -> np.ndarray:
    """Raw second-variation product: pairs with psi by plain sum."""
    g = a_star.grid
    if model.kind == "linear":
        wx, wy = _edge_weights(g)
        dv = d(v)
        return _d0_transpose(np.stack([dv.values[0] * wx, dv.values[1] * wy]))
    px, qy, q = _face_norms(u.values, a_star, m)
    bx, by, _ = _face_norms(v.values, Cochain.zeros(g, 1), m)
    rho = model.rho(q)
    curv = model.curvature_at(q) * m.h_face**2
    dot = px * bx + qy * by
    fx = rho * bx + curv * dot * px
    fy = rho * by + curv * dot * qy
    gx, gy = _scatter_to_edges(g, fx, fy)
    return _d0_transpose(np.stack([gx, gy]))


def hessian_apply(u: Cochain, v: Cochain, a_star: Cochain, m: ConformalMetric,
                  model: RhoModel) -> Cochain:
    """Hessian-vector product in the potential, as a Riesz 0-cochain.

    Linear in v; its weighted pairing with v equals the second derivative of
    the energy along u + eps*v.
    """
    raw = hessian_differential(u, v, a_star, m, model)
    return Cochain(a_star.grid, 0, raw / _vertex_weights(m))


def convexity_lower_bound(u: Cochain, v: Cochain, a_star: Cochain,
                          m: ConformalMetric) -> float:
    """Lower bound on the minimal-surface quadratic form along v:
    sum of |dv|_g^2 (1+|alpha|_g^2)^-3/2 over the g-volume."""
    _, _, q = _face_norms(u.values, a_star, m)
    bx, by, qv = _face_norms(v.values, Cochain.zeros(a_star.grid, 1), m)
    return float(np.sum(qv * qv * (1.0 + q * q) ** -1.5 * m.face_volumes))


# ---------------------------------------------------------------------------
# admissibility probe
# ---------------------------------------------------------------------------

@dataclass
class AdmissibilityReport:
    c: float
    k_lower: float
    k_upper: float
    admissible: bool
    regularity_indicator: float
    doubling_trace: list
    regular: bool

    @property
    def k_of_c(self) -> float:
        """Smallest two-sided ellipticity constant found on (0, c]."""
        if self.k_lower <= 0.0:
            return math.inf
        return max(1.0 / self.k_lower, self.k_upper)


def _sample_bounds(model: RhoModel, c: float, n_samples: int):
    qs = np.linspace(c / n_samples, c, n_samples)
    vals = np.concatenate([np.asarray(model.rho(qs)), np.asarray(model.rho_plus(qs))])
    if not np.all(np.isfinite(vals)):
        raise ModelDomainError(f"model produced non-finite values on (0, {c}]")
    return float(vals.min()), float(vals.max())


def admissibility_probe(model: RhoModel, c: float, n_samples: int = 1000,
                        doubling_levels: int = 4) -> AdmissibilityReport:
    """Sample rho and rho + rho'q on (0, c] and report ellipticity bounds.

    ``k_of_c`` is the smallest constant with both functions inside
    [1/k, k] on the sampled range.  A doubling schedule of c estimates the
    trend: ``regular`` is False when the constant keeps growing, signalling
    that ellipticity degenerates at large field strength.  Sampling-based and
    heuristic; not a rigorous optimization.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    lo, hi = _sample_bounds(model, c, n_samples)
    admissible = lo > 0.0
    trace = []
    for level in range(doubling_levels):
        cm = c * 2**level
        lm, hm = _sample_bounds(model, cm, n_samples)
        km = max(1.0 / lm, hm) if lm > 0 else math.inf
        trace.append((cm, km))
    ks = [k for _, k in trace]
    regular = admissible and ks[-1] <= ks[0] * (1.0 + 1e-9)
    return AdmissibilityReport(
        c=c,
        k_lower=lo,
        k_upper=hi,
        admissible=admissible,
        regularity_indicator=hi / lo if lo > 0 else math.inf,
        doubling_trace=trace,
        regular=regular,
    )
