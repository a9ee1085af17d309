"""Discrete exterior calculus on a periodic 2-D grid with a conformal metric.

The grid is a structured quadrilateral complex on a flat torus
[0, period1) x [0, period2).  Cochains store one value per cell:

* degree 0 -- vertices, array shape ``(n1, n2)``
* degree 1 -- edges, shape ``(2, n1, n2)``; component 0 holds the edge from
  vertex (i, j) to (i+1, j), component 1 the edge from (i, j) to (i, j+1)
* degree 2 -- faces, shape ``(n1, n2)``; face (i, j) spans
  [i*dx1, (i+1)*dx1] x [j*dx2, (j+1)*dx2]

Edge values are understood as integrals of a smooth 1-form along the edge,
face values as integrals of a 2-form over the face.

The conformal metric is g = h^-2 g_E where the factor h depends only on the
second coordinate.  The user supplies h on [0, pi]; it is extended evenly
about 0 and pi around the circle (folding the periodic coordinate onto
[0, pi]), so h must have vanishing first derivative at both ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegreeError, GridError, InvalidMetricError, NonConvergenceError

TWO_PI = 2.0 * math.pi

#: default absolute per-face tolerance for closedness checks
CLOSEDNESS_TOL = 1e-10


@dataclass(frozen=True)
class GridComplex:
    """Periodic quadrilateral cell complex on a flat torus."""

    n1: int
    n2: int
    period1: float = TWO_PI
    period2: float = TWO_PI

    def __post_init__(self):
        if self.n1 < 4 or self.n2 < 4:
            raise GridError(f"grid must be at least 4x4, got {self.n1}x{self.n2}")
        if self.period1 <= 0 or self.period2 <= 0:
            raise GridError("periods must be positive")

    @property
    def dx1(self) -> float:
        return self.period1 / self.n1

    @property
    def dx2(self) -> float:
        return self.period2 / self.n2

    @property
    def face_area(self) -> float:
        return self.dx1 * self.dx2

    def num_cells(self, degree: int) -> int:
        if degree == 1:
            return 2 * self.n1 * self.n2
        if degree in (0, 2):
            return self.n1 * self.n2
        raise DegreeError(f"no cells of degree {degree}")

    def euler_characteristic(self) -> int:
        return self.num_cells(0) - self.num_cells(1) + self.num_cells(2)

    def cochain_shape(self, degree: int) -> tuple:
        if degree == 1:
            return (2, self.n1, self.n2)
        if degree in (0, 2):
            return (self.n1, self.n2)
        raise DegreeError(f"no cells of degree {degree}")

    def vertex_theta2(self) -> np.ndarray:
        """Second coordinate of every vertex row, shape (n2,)."""
        return self.dx2 * np.arange(self.n2)

    def face_theta2(self) -> np.ndarray:
        """Second coordinate of face centers, shape (n2,)."""
        return self.dx2 * (np.arange(self.n2) + 0.5)


@dataclass
class Cochain:
    """Degree-tagged real-valued assignment to the cells of a grid."""

    grid: GridComplex
    degree: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = self.grid.cochain_shape(self.degree)
        if self.values.shape != expected:
            raise DegreeError(
                f"degree-{self.degree} cochain needs shape {expected}, "
                f"got {self.values.shape}"
            )

    @classmethod
    def zeros(cls, grid: GridComplex, degree: int) -> "Cochain":
        return cls(grid, degree, np.zeros(grid.cochain_shape(degree)))

    def copy(self) -> "Cochain":
        return Cochain(self.grid, self.degree, self.values.copy())

    def _check_compatible(self, other: "Cochain"):
        if self.degree != other.degree or self.grid != other.grid:
            raise DegreeError("cochain mismatch in degree or grid")

    def __add__(self, other: "Cochain") -> "Cochain":
        self._check_compatible(other)
        return Cochain(self.grid, self.degree, self.values + other.values)

    def __sub__(self, other: "Cochain") -> "Cochain":
        self._check_compatible(other)
        return Cochain(self.grid, self.degree, self.values - other.values)

    def __mul__(self, scalar: float) -> "Cochain":
        return Cochain(self.grid, self.degree, self.values * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True)
class ConformalMetric:
    """Samples of the conformal factor h at vertices, edge midpoints, faces."""

    grid: GridComplex
    h_vertex: np.ndarray
    h_edge: np.ndarray
    h_face: np.ndarray

    @property
    def face_volumes(self) -> np.ndarray:
        """g-volume of each face: h^-2 times the Euclidean area."""
        return self.grid.face_area / self.h_face**2

    @property
    def total_volume(self) -> float:
        return float(np.sum(self.face_volumes))


def fold_to_half_period(theta: np.ndarray, period: float) -> np.ndarray:
    """Fold a periodic coordinate onto [0, pi] for even extension of h.

    Distance to 0 along the circle, rescaled so a half period maps to pi.
    """
    t = np.mod(theta, period)
    t = np.minimum(t, period - t)
    return t * (math.pi / (period / 2.0))


def build_torus(
    n1: int,
    n2: int,
    h_sampler: Callable | None = None,
    period1: float = TWO_PI,
    period2: float = TWO_PI,
) -> tuple[GridComplex, ConformalMetric]:
    """Build a periodic grid and sample the conformal factor on it.

    ``h_sampler`` maps angles in [0, pi] to positive reals; it is applied to
    the second coordinate only, folded evenly around the circle.  ``None``
    gives the flat metric h == 1.
    """
    grid = GridComplex(n1, n2, period1, period2)
    if h_sampler is None:
        h_of = lambda t2: np.ones_like(t2)
    else:
        h_of = lambda t2: np.asarray(
            h_sampler(fold_to_half_period(t2, period2)), dtype=float
        )

    t2_vertex = grid.vertex_theta2()
    t2_face = grid.face_theta2()

    h_row_vertex = h_of(t2_vertex)        # (n2,)
    h_row_face = h_of(t2_face)            # (n2,)

    ones1 = np.ones(n1)
    h_vertex = np.outer(ones1, h_row_vertex)
    h_face = np.outer(ones1, h_row_face)
    # x-edge midpoints sit on vertex rows, y-edge midpoints on face rows
    h_edge = np.stack([h_vertex, np.outer(ones1, h_row_face)])

    for name, arr in (("vertex", h_vertex), ("edge", h_edge), ("face", h_face)):
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise InvalidMetricError(f"h sampled non-positive or non-finite at {name}s")

    return grid, ConformalMetric(grid, h_vertex, h_edge, h_face)


# ---------------------------------------------------------------------------
# exterior derivative and its transpose
# ---------------------------------------------------------------------------

def d(c: Cochain) -> Cochain:
    """Discrete exterior derivative via signed incidence sums."""
    g = c.grid
    if c.degree == 0:
        u = c.values
        dx = np.roll(u, -1, axis=0) - u
        dy = np.roll(u, -1, axis=1) - u
        return Cochain(g, 1, np.stack([dx, dy]))
    if c.degree == 1:
        ax, ay = c.values
        # counterclockwise boundary of face (i, j)
        curl = ax + np.roll(ay, -1, axis=0) - np.roll(ax, -1, axis=1) - ay
        return Cochain(g, 2, curl)
    raise DegreeError("d is defined on degrees 0 and 1 only")


def _d0_transpose(edge_values: np.ndarray) -> np.ndarray:
    """Transpose of the vertex-to-edge incidence map."""
    gx, gy = edge_values
    return (
        np.roll(gx, 1, axis=0) - gx
        + np.roll(gy, 1, axis=1) - gy
    )


def _d1_transpose(face_values: np.ndarray) -> np.ndarray:
    """Transpose of the edge-to-face incidence map."""
    w = face_values
    gx = w - np.roll(w, 1, axis=1)
    gy = np.roll(w, 1, axis=0) - w
    return np.stack([gx, gy])


def is_closed(a: Cochain, tol: float = CLOSEDNESS_TOL) -> bool:
    """True when |d(a)| is below ``tol`` on every face (absolute)."""
    if a.degree == 2:
        return True
    return bool(np.max(np.abs(d(a).values)) <= tol)


# ---------------------------------------------------------------------------
# metric pairings
# ---------------------------------------------------------------------------

def face_components(a: Cochain) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean components of a 1-cochain averaged to face centers."""
    g = a.grid
    ax, ay = a.values
    px = (ax + np.roll(ax, -1, axis=1)) / (2.0 * g.dx1)
    qy = (ay + np.roll(ay, -1, axis=0)) / (2.0 * g.dx2)
    return px, qy


def pointwise_norm(a: Cochain, m: ConformalMetric) -> np.ndarray:
    """g-norm of a 1-cochain at face centers: h times the Euclidean norm."""
    if a.degree != 1:
        raise DegreeError("pointwise_norm expects a 1-cochain")
    px, qy = face_components(a)
    return m.h_face * np.hypot(px, qy)


def _edge_weights(g: GridComplex) -> tuple[float, float]:
    # diagonal 1-form mass; conformal factors cancel for 1-forms in 2-D
    return g.dx2 / g.dx1, g.dx1 / g.dx2


def _vertex_weights(m: ConformalMetric) -> np.ndarray:
    return m.grid.face_area / m.h_vertex**2


def _face_weights(m: ConformalMetric) -> np.ndarray:
    return m.h_face**2 / m.grid.face_area


def inner_product(a: Cochain, b: Cochain, m: ConformalMetric) -> float:
    """L2 pairing of equal-degree cochains under the conformal metric.

    Degree 0 carries the h^-2 volume density, degree 2 the h^2 density of
    integrated face values; the degree-1 pairing is conformally weight-free
    in two dimensions.
    """
    if a.degree != b.degree:
        raise DegreeError("inner_product needs equal degrees")
    g = a.grid
    if a.degree == 0:
        return float(np.sum(a.values * b.values * _vertex_weights(m)))
    if a.degree == 1:
        wx, wy = _edge_weights(g)
        return float(
            np.sum(a.values[0] * b.values[0]) * wx
            + np.sum(a.values[1] * b.values[1]) * wy
        )
    return float(np.sum(a.values * b.values * _face_weights(m)))


def codifferential(a: Cochain, m: ConformalMetric) -> Cochain:
    """Adjoint of d with respect to :func:`inner_product`."""
    g = a.grid
    if a.degree == 1:
        wx, wy = _edge_weights(g)
        weighted = np.stack([a.values[0] * wx, a.values[1] * wy])
        return Cochain(g, 0, _d0_transpose(weighted) / _vertex_weights(m))
    if a.degree == 2:
        wx, wy = _edge_weights(g)
        raw = _d1_transpose(a.values * _face_weights(m))
        return Cochain(g, 1, np.stack([raw[0] / wx, raw[1] / wy]))
    raise DegreeError("codifferential is defined on degrees 1 and 2")


def periods(a: Cochain) -> tuple[float, float]:
    """Normalized sums of edge values along one generating cycle per axis."""
    if a.degree != 1:
        raise DegreeError("periods expects a 1-cochain")
    g = a.grid
    p1 = float(np.sum(a.values[0, :, 0])) / g.period1
    p2 = float(np.sum(a.values[1, 0, :])) / g.period2
    return p1, p2


def constant_form(grid: GridComplex, kappa1: float = 0.0, kappa2: float = 0.0) -> Cochain:
    """Closed 1-cochain of a parallel form with the given periods."""
    vals = np.zeros(grid.cochain_shape(1))
    vals[0] = kappa1 * grid.dx1
    vals[1] = kappa2 * grid.dx2
    return Cochain(grid, 1, vals)


# ---------------------------------------------------------------------------
# harmonic representative
# ---------------------------------------------------------------------------

@dataclass
class HarmonicReport:
    representative: Cochain
    residual_norm: float
    iterations: int
    potential: Cochain = field(repr=False, default=None)


def harmonic_rep(
    a_star: Cochain,
    m: ConformalMetric,
    tol: float = 1e-10,
    max_iter: int = 5000,
) -> HarmonicReport:
    """Harmonic representative of the class of a closed 1-cochain.

    Solves the discrete Hodge problem for a potential u0 so that
    a_star + d(u0) is orthogonal to every exact form; conjugate gradients on
    the weighted vertex Laplacian, mean-zero gauge.
    """
    if a_star.degree != 1:
        raise DegreeError("harmonic_rep expects a 1-cochain")
    g = a_star.grid
    wx, wy = _edge_weights(g)
    wv = _vertex_weights(m)

    def apply_laplacian(u):
        dx = np.roll(u, -1, axis=0) - u
        dy = np.roll(u, -1, axis=1) - u
        return _d0_transpose(np.stack([dx * wx, dy * wy]))

    def raw_residual(u):
        ax = a_star.values[0] + np.roll(u, -1, axis=0) - u
        ay = a_star.values[1] + np.roll(u, -1, axis=1) - u
        return _d0_transpose(np.stack([ax * wx, ay * wy]))

    def residual_norm_of(raw):
        # L2(g) norm of the Riesz residual W^-1 raw
        return math.sqrt(float(np.sum(raw * raw / wv)))

    u = np.zeros_like(a_star.values[0])
    raw = raw_residual(u)
    res = residual_norm_of(raw)
    iterations = 0
    if res > tol:
        r = -raw
        r -= r.mean()
        p = r.copy()
        rs = float(np.sum(r * r))
        for iterations in range(1, max_iter + 1):
            ap = apply_laplacian(p)
            alpha = rs / float(np.sum(p * ap))
            u += alpha * p
            r -= alpha * ap
            r -= r.mean()
            raw = raw_residual(u)
            res = residual_norm_of(raw)
            if res <= tol:
                break
            rs_new = float(np.sum(r * r))
            p = r + (rs_new / rs) * p
            rs = rs_new
        else:
            raise NonConvergenceError(
                f"harmonic_rep: residual {res:.3e} > tol {tol:.3e} "
                f"after {max_iter} iterations",
                residual=res,
            )
    u -= u.mean()
    potential = Cochain(g, 0, u)
    rep = a_star + d(potential)
    return HarmonicReport(rep, res, iterations, potential)
