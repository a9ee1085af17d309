"""Pointwise exterior algebra for 2-forms in four dimensions.

Everything here works in an orthonormal frame on the six components F_ij,
i < j, of an antisymmetric 4x4 matrix: the Born-Infeld density and its
determinant identity, the split into self-dual and anti-self-dual parts,
the energy sandwich between the minimal-surface and quadratic densities,
resolvent identities for the flux of the Euler-Lagrange operator, and the
reduced Born-Infeld energy of product-ansatz profiles, which collapses to
the reduced minimal-surface energy because the wedge square vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .reduced import HFunction, Profile, reduced_energy


@dataclass(frozen=True)
class TwoForm4:
    """Components F_ij, i < j, of a 2-form in an orthonormal frame."""

    f12: float = 0.0
    f13: float = 0.0
    f14: float = 0.0
    f23: float = 0.0
    f24: float = 0.0
    f34: float = 0.0

    def as_matrix(self) -> np.ndarray:
        m = np.array(
            [
                [0.0, self.f12, self.f13, self.f14],
                [0.0, 0.0, self.f23, self.f24],
                [0.0, 0.0, 0.0, self.f34],
                [0.0, 0.0, 0.0, 0.0],
            ]
        )
        return m - m.T

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "TwoForm4":
        return cls(m[0, 1], m[0, 2], m[0, 3], m[1, 2], m[1, 3], m[2, 3])

    @property
    def norm_squared(self) -> float:
        return (
            self.f12**2 + self.f13**2 + self.f14**2
            + self.f23**2 + self.f24**2 + self.f34**2
        )

    def __add__(self, other: "TwoForm4") -> "TwoForm4":
        return TwoForm4(
            self.f12 + other.f12, self.f13 + other.f13, self.f14 + other.f14,
            self.f23 + other.f23, self.f24 + other.f24, self.f34 + other.f34,
        )

    def __mul__(self, scalar: float) -> "TwoForm4":
        s = float(scalar)
        return TwoForm4(
            self.f12 * s, self.f13 * s, self.f14 * s,
            self.f23 * s, self.f24 * s, self.f34 * s,
        )

    __rmul__ = __mul__


def wedge_square(f: TwoForm4) -> float:
    """Coefficient of the wedge square on the volume form: twice the Pfaffian."""
    return 2.0 * (f.f12 * f.f34 - f.f13 * f.f24 + f.f14 * f.f23)


def bi_density(f: TwoForm4) -> float:
    """Born-Infeld density sqrt(1 + |F|^2 + |F ^ F|^2 / 4)."""
    return math.sqrt(1.0 + f.norm_squared + 0.25 * wedge_square(f) ** 2)


def det_identity_gap(f: TwoForm4) -> float:
    """|det(I - F) - (1 + |F|^2 + |F ^ F|^2 / 4)|: zero up to roundoff."""
    det = float(np.linalg.det(np.eye(4) - f.as_matrix()))
    return abs(det - (1.0 + f.norm_squared + 0.25 * wedge_square(f) ** 2))


@dataclass(frozen=True)
class SelfDualDecomp:
    plus: TwoForm4
    minus: TwoForm4


def sd_split(f: TwoForm4) -> SelfDualDecomp:
    """Orthogonal projection onto the self-dual and anti-self-dual subspaces.

    The plus part satisfies F12 = F34, F13 = -F24, F14 = F23; the minus part
    the negated relations; |F|^2 = |plus|^2 + |minus|^2 and the wedge-square
    coefficient equals |plus|^2 - |minus|^2.
    """
    a = 0.5 * (f.f12 + f.f34)
    b = 0.5 * (f.f13 - f.f24)
    c = 0.5 * (f.f14 + f.f23)
    plus = TwoForm4(f12=a, f34=a, f13=b, f24=-b, f14=c, f23=c)
    minus = TwoForm4(
        f12=f.f12 - a, f34=f.f34 - a,
        f13=f.f13 - b, f24=f.f24 + b,
        f14=f.f14 - c, f23=f.f23 - c,
    )
    return SelfDualDecomp(plus, minus)


def sandwich(f: TwoForm4) -> tuple[float, float, float]:
    """Minimal-surface, Born-Infeld, and quadratic densities, in that order.

    Pointwise ordering gms <= bi <= hodge always holds; bi = hodge exactly on
    (anti-)self-dual forms, gms = bi exactly when the dual parts have equal
    norm.
    """
    n2 = f.norm_squared
    return math.sqrt(1.0 + n2), bi_density(f), 1.0 + 0.5 * n2


def resolvent_asym_gap(f: TwoForm4, t: float) -> float:
    """Frobenius gap between the antisymmetric part of (I - tF)^-1 and
    (I - (tF)^2)^-1 tF; an algebraic identity for every real t."""
    tf = t * f.as_matrix()
    inv = np.linalg.inv(np.eye(4) - tf)
    asym = 0.5 * (inv - inv.T)
    rhs = np.linalg.inv(np.eye(4) - tf @ tf) @ tf
    return float(np.linalg.norm(asym - rhs))


_SD_TOL = 1e-12


def selfdual_inverse_gap(f: TwoForm4) -> float:
    """Frobenius gap of (I - F^2)^-1 = I / (1 + |F|^2 / 2) on (anti-)self-dual
    input; rejects forms with a mixed dual split."""
    split = sd_split(f)
    minority = min(split.plus.norm_squared, split.minus.norm_squared)
    if minority > _SD_TOL:
        raise ValueError(
            f"input is not (anti-)self-dual: minority dual part {minority:.3e}"
        )
    m = f.as_matrix()
    inv = np.linalg.inv(np.eye(4) - m @ m)
    return float(np.linalg.norm(inv - np.eye(4) / (1.0 + 0.5 * f.norm_squared)))


def bi_el_residual(f: TwoForm4) -> np.ndarray:
    """Pointwise flux sqrt(det(I - F)) (I - F^2)^-1 F of the Born-Infeld
    Euler-Lagrange operator; on (anti-)self-dual input it equals F itself,
    so the equation collapses to the linear one."""
    m = f.as_matrix()
    det = float(np.linalg.det(np.eye(4) - m))
    return math.sqrt(det) * (np.linalg.inv(np.eye(4) - m @ m) @ m)


def reduced_bi_energy(f: Profile, h: HFunction) -> float:
    """Born-Infeld energy of a product-ansatz profile on the k = 2 reduction.

    The ansatz has pointwise vanishing wedge square (asserted on every node),
    so the Born-Infeld and minimal-surface energies coincide and the value is
    the k = 2 reduced energy.
    """
    if f.k != 2:
        raise ValueError("reduced Born-Infeld energy needs a degree-2 profile")
    h2 = h(f.theta_nodes) ** 2
    for value, scale in zip(f.values, h2):
        pointwise = TwoForm4(f34=float(scale * value))
        assert wedge_square(pointwise) == 0.0
    return reduced_energy(f, h, 2)


def random_two_form(rng: np.random.Generator, bound: float = 2.0) -> TwoForm4:
    """Component-wise uniform sample with |F_ij| <= bound."""
    return TwoForm4(*rng.uniform(-bound, bound, size=6))


def random_selfdual_form(rng: np.random.Generator, bound: float = 2.0) -> TwoForm4:
    a, b, c = rng.uniform(-bound, bound, size=3)
    return TwoForm4(f12=a, f34=a, f13=b, f24=-b, f14=c, f23=c)
