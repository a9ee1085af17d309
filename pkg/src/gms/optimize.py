"""Strictly convex minimization of the discrete energies over the potential,
plus continuation sweeps in the rescaling parameter.

The minimizer runs an inexact damped Newton method: conjugate gradients on
the Hessian product with a forcing tolerance tied to the gradient norm, and
a backtracking line search on the energy.  The potential is gauge-fixed
after every step: its mean is removed, and on grids with both cell counts
even the face-averaged energy is also blind to the alternating-sign
checkerboard mode, so that component is projected out as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .energy import (
    EnergyReport,
    RhoModel,
    energy_differential,
    gms_model,
    hessian_differential,
    tgms_model,
    total_energy,
)
from .errors import NonConvergenceError, SolverInternalError
from .exterior import (
    CLOSEDNESS_TOL,
    Cochain,
    ConformalMetric,
    _vertex_weights,
    d,
    harmonic_rep,
    is_closed,
    pointwise_norm,
)


@dataclass(frozen=True)
class SolverConfig:
    grad_tol: float = 1e-9
    max_newton: int = 100
    max_cg: int = 2000
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4

    def __post_init__(self):
        if self.grad_tol <= 0 or self.max_newton <= 0 or self.max_cg <= 0:
            raise ValueError("solver limits must be positive")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must lie in (0, 1)")
        if self.sufficient_decrease <= 0:
            raise ValueError("sufficient_decrease must be positive")


@dataclass
class Solution:
    u: Cochain
    alpha: Cochain
    energy: EnergyReport
    grad_norm: float
    newton_iters: int
    cg_iters: int


def _gauge_project(values: np.ndarray) -> np.ndarray:
    out = values - values.mean()
    n1, n2 = out.shape
    if n1 % 2 == 0 and n2 % 2 == 0:
        sign = np.fromfunction(lambda i, j: (-1.0) ** (i + j), (n1, n2))
        out = out - sign * float(np.sum(out * sign)) / out.size
    return out


def _cg_solve(apply_h, rhs, tol, max_iter):
    """Conjugate gradients for the raw Newton system, kernel projected out."""
    x = np.zeros_like(rhs)
    r = _gauge_project(rhs.copy())
    p = r.copy()
    rs = float(np.sum(r * r))
    if math.sqrt(rs) <= tol:
        return x, 0
    iters = 0
    for iters in range(1, max_iter + 1):
        hp = apply_h(p)
        curv = float(np.sum(p * hp))
        if curv <= -1e-12 * float(np.sum(p * p)):
            raise SolverInternalError(
                f"negative curvature {curv:.3e} in CG: Hessian not positive"
            )
        if curv <= 0.0:
            break  # numerically flat direction; accept current iterate
        a = rs / curv
        x += a * p
        r -= a * hp
        r = _gauge_project(r)
        rs_new = float(np.sum(r * r))
        if math.sqrt(rs_new) <= tol:
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x, iters


def minimize(
    a_star: Cochain,
    m: ConformalMetric,
    model: RhoModel,
    cfg: SolverConfig = SolverConfig(),
    u0: Cochain | None = None,
) -> Solution:
    """Minimize the discrete energy over the potential within the class of
    ``a_star``.

    Strict convexity makes the damped Newton iteration globally convergent;
    non-convergence within the configured caps raises instead of returning a
    partial result.  ``u0`` warm-starts the iteration.
    """
    if model.kind not in ("gms", "tgms"):
        raise ValueError("minimize supports the gms and tgms models")
    if not is_closed(a_star, CLOSEDNESS_TOL):
        raise ValueError("a_star must be closed")
    g = a_star.grid
    wv = _vertex_weights(m)

    u = np.zeros(g.cochain_shape(0)) if u0 is None else u0.values.copy()
    u = _gauge_project(u)

    def grad_norm_of(raw):
        return math.sqrt(float(np.sum(raw * raw / wv)))

    def energy_of(u_values):
        return total_energy(a_star + d(Cochain(g, 0, u_values)), m, model).value

    energy = energy_of(u)
    cg_total = 0
    newton_iters = 0
    for newton_iters in range(cfg.max_newton + 1):
        raw = energy_differential(Cochain(g, 0, u), a_star, m, model)
        gnorm = grad_norm_of(raw)
        if gnorm <= cfg.grad_tol:
            break
        if newton_iters == cfg.max_newton:
            raise NonConvergenceError(
                f"minimize: gradient norm {gnorm:.3e} > tol {cfg.grad_tol:.3e} "
                f"after {cfg.max_newton} Newton steps",
                residual=gnorm,
                last_iterate=Cochain(g, 0, u),
            )

        uc = Cochain(g, 0, u)
        apply_h = lambda p: hessian_differential(uc, Cochain(g, 0, p), a_star, m, model)
        # inexact Newton forcing term
        eta = min(0.1, math.sqrt(gnorm))
        raw_norm = math.sqrt(float(np.sum(raw * raw)))
        step, iters = _cg_solve(apply_h, -raw, eta * raw_norm, cfg.max_cg)
        cg_total += iters

        slope = float(np.sum(raw * step))
        if slope >= 0.0:
            raise SolverInternalError("CG returned a non-descent direction")
        s = 1.0
        noise = 4e-16 * abs(energy)
        for _ in range(60):
            trial = _gauge_project(u + s * step)
            e_trial = energy_of(trial)
            if e_trial <= energy + cfg.sufficient_decrease * s * slope + noise:
                break
            s *= cfg.shrink
        else:
            raise NonConvergenceError(
                "minimize: line search failed to decrease the energy",
                residual=gnorm,
                last_iterate=Cochain(g, 0, u),
            )
        u = trial
        energy = e_trial

    potential = Cochain(g, 0, u)
    alpha = a_star + d(potential)
    return Solution(
        u=potential,
        alpha=alpha,
        energy=total_energy(alpha, m, model),
        grad_norm=gnorm,
        newton_iters=newton_iters,
        cg_iters=cg_total,
    )


# ---------------------------------------------------------------------------
# continuation sweep
# ---------------------------------------------------------------------------

@dataclass
class SweepEntry:
    t: float
    solution: Solution
    tv_value: float
    tgms_value: float
    sup_norm: float
    harmonic_gap: float
    gamma_upper_bound: float


@dataclass
class SweepReport:
    entries: list = field(default_factory=list)
    harmonic_sup: float = 0.0


def t_sweep(
    a_star: Cochain,
    m: ConformalMetric,
    ts: list,
    cfg: SolverConfig = SolverConfig(),
    family: str = "tgms",
) -> SweepReport:
    """Solve along an ascending list of rescaling parameters with warm starts.

    ``family="tgms"`` minimizes the rescaled energy in the fixed class,
    warm-starting each solve from the previous potential.  ``family="gms"``
    minimizes the plain energy in the scaled class t*a_star and records the
    rescaled minimizer; the warm start scales the previous potential by the
    ratio of consecutive t values.  Both routes solve the same problem up to
    rescaling.

    Each entry carries the total variation, the energy value, the sup norm,
    the sup-norm gap to the harmonic representative, and the continuation
    upper bound: volume/t plus the best total variation seen so far.
    """
    if not ts:
        raise ValueError("ts must be non-empty")
    if any(t <= 0 for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("ts must be positive and strictly increasing")
    if family not in ("tgms", "gms"):
        raise ValueError("family must be 'tgms' or 'gms'")

    harmonic = harmonic_rep(a_star, m, tol=1e-12).representative
    harmonic_sup = float(np.max(pointwise_norm(harmonic, m)))
    volume = m.total_volume

    report = SweepReport(harmonic_sup=harmonic_sup)
    warm = None
    best_tv = math.inf
    prev_t = None
    for t in ts:
        try:
            if family == "tgms":
                sol = minimize(a_star, m, tgms_model(t), cfg, u0=warm)
                beta = sol.alpha
                tgms_value = sol.energy.value
                warm = sol.u
            else:
                scale = 1.0 if prev_t is None else t / prev_t
                warm = None if warm is None else Cochain(
                    warm.grid, 0, warm.values * scale
                )
                sol = minimize(t * a_star, m, gms_model(), cfg, u0=warm)
                beta = (1.0 / t) * sol.alpha
                tgms_value = sol.energy.value / t
                warm = sol.u
        except NonConvergenceError as err:
            raise NonConvergenceError(
                f"t_sweep failed at t = {t}: {err}",
                residual=err.residual,
                last_iterate=err.last_iterate,
            ) from err
        beta_report = total_energy(beta, m, tgms_model(t))
        best_tv = min(best_tv, beta_report.tv_value)
        gap = float(np.max(pointwise_norm(beta - harmonic, m)))
        report.entries.append(
            SweepEntry(
                t=t,
                solution=sol,
                tv_value=beta_report.tv_value,
                tgms_value=tgms_value,
                sup_norm=beta_report.max_pointwise_norm,
                harmonic_gap=gap,
                gamma_upper_bound=volume / t + best_tv,
            )
        )
        prev_t = t
    return report
