"""Polytopic representation of the friction-uncertain plant.

The linear model depends affinely on the four per-wheel friction
coefficients, so the uncertain plant is the convex hull of the 16 vertex
plants obtained at the extremal friction combinations. Only A and B carry
uncertainty; the disturbance and output maps are friction independent.
"""

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .model import GeneralizedPlant, generalized_plant, linearize


@dataclass(frozen=True)
class UncertaintyBox:
    """Per-wheel friction intervals, FL, FR, RL, RR."""

    lo: tuple = (0.1, 0.1, 0.1, 0.1)
    hi: tuple = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        for l, h in zip(self.lo, self.hi):
            if not 0.0 < l <= h:
                raise ValueError("friction bounds must satisfy 0 < lo <= hi")

    def contains(self, rho):
        return all(self.lo[i] - 1e-12 <= rho[i] <= self.hi[i] + 1e-12
                   for i in range(4))


@dataclass(frozen=True)
class AffineBasis:
    """A(rho) = A0 + sum_j mu_j Aj, likewise for B."""

    A0: np.ndarray
    A_wheels: tuple   # four 2x2 matrices
    B0: np.ndarray
    B_wheels: tuple   # four 2x4 matrices
    params: object

    def a_at(self, rho):
        A = self.A0.copy()
        for j in range(4):
            A += rho[j] * self.A_wheels[j]
        return A

    def b_at(self, rho):
        B = self.B0.copy()
        for j in range(4):
            B += rho[j] * self.B_wheels[j]
        return B


@dataclass(frozen=True)
class PolytopicPlant:
    vertices: tuple        # 16 GeneralizedPlant values
    vertex_labels: tuple   # 16 corner tuples, 0 = lo, 1 = hi, order FL..RR
    basis: AffineBasis
    box: UncertaintyBox


def affine_decomposition(p):
    """Extract the affine friction basis from the closed-form coefficients.

    Every friction-dependent coefficient is proportional to a single mu_j, so
    the basis follows from unit evaluations against the zero-friction plant.
    The zero-friction linearization is nonphysical but well defined; only the
    linear structure is used.
    """
    zero = linearize(p, (0.0,) * 4)
    A0 = zero.A
    B0 = zero.B  # identically zero: all input gains are friction proportional
    aw, bw = [], []
    for j in range(4):
        mu = [0.0] * 4
        mu[j] = 1.0
        lp = linearize(p, tuple(mu))
        aw.append(lp.A - A0)
        bw.append(lp.B - B0)
    return AffineBasis(A0=A0, A_wheels=tuple(aw), B0=B0, B_wheels=tuple(bw),
                       params=p)


def evaluate_at(basis, rho, box=None):
    """Generalized plant at a friction point rho."""
    if box is not None and not box.contains(rho):
        warnings.warn("friction point outside the uncertainty box")
    p = basis.params
    lp = linearize(p, tuple(rho))
    # the affine basis must agree with the direct linearization; keep the
    # basis path authoritative so vertex enumeration is exactly affine
    A = basis.a_at(rho)
    B = basis.b_at(rho)
    from .model import LinearPlant
    return generalized_plant(LinearPlant(A=A, B=B, D=lp.D, params=p,
                                         mu=tuple(rho)))


def enumerate_vertices(basis, box=None):
    """All 16 corner plants in binary counting order FL, FR, RL, RR
    (0 = lo, 1 = hi), so vertex 0 is the all-lo plant and vertex 15 the
    all-hi plant."""
    if box is None:
        box = UncertaintyBox()
    verts, labels = [], []
    for bits in itertools.product((0, 1), repeat=4):
        rho = tuple(box.hi[i] if bits[i] else box.lo[i] for i in range(4))
        verts.append(evaluate_at(basis, rho))
        labels.append(bits)
    return PolytopicPlant(vertices=tuple(verts), vertex_labels=tuple(labels),
                          basis=basis, box=box)


def vertex_friction(poly, k):
    bits = poly.vertex_labels[k]
    return tuple(poly.box.hi[i] if bits[i] else poly.box.lo[i]
                 for i in range(4))


def reduce_to_single_steer(poly):
    """Conventional single-steering-input variant of the polytope.

    One steering command drives both front wheels; the rear columns are
    removed. The performance outputs become [x_p; u] with the scalar input.
    """
    verts = []
    for gp in poly.vertices:
        B = (gp.B_p[:, 0] + gp.B_p[:, 1]).reshape(2, 1)
        C = np.vstack([np.eye(2), np.zeros((1, 2))])
        By = np.vstack([np.zeros((2, 1)), np.eye(1)])
        verts.append(GeneralizedPlant(
            A_p=gp.A_p, B_p=B, D_p=gp.D_p,
            C_p1=C, C_p2=C.copy(), B_y1=By, B_y2=By.copy(),
            D_y=np.zeros((3, 1)), M_p=np.eye(2), D_z=np.zeros((2, 1))))
    return PolytopicPlant(vertices=tuple(verts),
                          vertex_labels=poly.vertex_labels,
                          basis=poly.basis, box=poly.box)
