"""Cross-validation of grid solves against the reduced closed forms.

The discrete minimizer and the continuum solution live in different spaces;
they are compared as cochains.  The closed-form profile is mapped to the
grid by exact edge integration (high-order panel quadrature per edge), and
the gap is the sup norm of the edge-averaged difference.  Face-center
values are not used for the comparison: for symmetry-aligned classes the
face quadrature reproduces the closed form there to roundoff, which says
nothing about the discretization error of the scheme.
"""

from __future__ import annotations

import numpy as np

from .exterior import Cochain, GridComplex, fold_to_half_period
from .reduced import HFunction, profile_value

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def exact_edge_averages(c: float, h: HFunction, grid: GridComplex) -> np.ndarray:
    """Edge averages (1/dx2) * integral of the closed-form profile over each
    second-axis edge row, under the even-extension convention."""
    out = np.zeros(grid.n2)
    for j in range(grid.n2):
        a, b = j * grid.dx2, (j + 1) * grid.dx2
        t = (a + b) / 2.0 + (b - a) / 2.0 * _GL_X
        folded = fold_to_half_period(t, grid.period2)
        out[j] = (b - a) / 2.0 * float(np.sum(_GL_W * profile_value(c, h, 1, folded)))
    return out / grid.dx2


def closed_form_cochain_gap(alpha: Cochain, c: float, h: HFunction) -> float:
    """Sup-norm gap between a solved 1-cochain and the integrated closed form.

    Both axes contribute: the closed form has no first-axis component, so
    any first-axis edge values count toward the gap directly.
    """
    grid = alpha.grid
    exact = exact_edge_averages(c, h, grid)
    gap_y = float(np.max(np.abs(alpha.values[1] / grid.dx2 - exact[None, :])))
    gap_x = float(np.max(np.abs(alpha.values[0] / grid.dx1)))
    return max(gap_y, gap_x)
