"""LMI region algebra and constraint-block assembly.

Decision variables are flattened to a scalar vector; an affine symmetric
matrix expression is carried as a constant matrix plus per-variable
coefficient matrices. The builders below assemble the D-stability,
bounded-real and H2 blocks in the state-feedback synthesis variables
(X, W = K X, Z, gamma^2).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import min_eig_symmetric


class InvalidAngle(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class LmiRegion:
    """Region {z : L + M z + M^T conj(z) < 0} with L symmetric."""

    L: np.ndarray
    M: np.ndarray


def region_alpha(alpha):
    """Half-plane Re(z) < alpha, scalar characteristic L = -2 alpha... with
    the convention L + M z + M^T conj(z) < 0 this is L = -2 alpha, M = 1."""
    return LmiRegion(L=np.array([[-2.0 * alpha]]), M=np.array([[1.0]]))


def region_cone(phi):
    """Conic sector centered at the origin with inner angle phi, opening
    about the negative real axis. Membership reduces to Re(z) < 0 and
    |Im(z)| <= tan(phi/2) |Re(z)|."""
    if not 0.0 < phi < math.pi:
        raise InvalidAngle("inner angle must be in (0, pi)")
    th = phi / 2.0
    s, c = math.sin(th), math.cos(th)
    M = np.array([[s, c], [-c, s]])
    return LmiRegion(L=np.zeros((2, 2)), M=M)


def region_contains(region, z, tol=1e-9):
    """Scalar region test: L + M z + M^T conj(z) negative definite."""
    F = region.L + region.M * z + region.M.T * np.conj(z)
    # F is Hermitian; embed into the equivalent real symmetric form and
    # require the largest eigenvalue below tol
    R = np.block([[F.real, -F.imag], [F.imag, F.real]])
    return -min_eig_symmetric(-0.5 * (R + R.T)) < tol


@dataclass
class AffineMatrix:
    """Matrix-valued affine expression const + sum_i x_i coeffs[i]."""

    const: np.ndarray
    coeffs: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.const.shape

    def __add__(self, other):
        if isinstance(other, np.ndarray):
            other = AffineMatrix(const=other)
        out = AffineMatrix(const=self.const + other.const,
                           coeffs={k: v.copy() for k, v in self.coeffs.items()})
        for k, v in other.coeffs.items():
            out.coeffs[k] = out.coeffs.get(k, 0.0) + v
        return out

    def __mul__(self, scalar):
        return AffineMatrix(const=scalar * self.const,
                            coeffs={k: scalar * v
                                    for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def lmul(self, M):
        """M @ self for a constant matrix M."""
        return AffineMatrix(const=M @ self.const,
                            coeffs={k: M @ v for k, v in self.coeffs.items()})

    def rmul(self, M):
        """self @ M for a constant matrix M."""
        return AffineMatrix(const=self.const @ M,
                            coeffs={k: v @ M for k, v in self.coeffs.items()})

    @property
    def T(self):
        return AffineMatrix(const=self.const.T,
                            coeffs={k: v.T for k, v in self.coeffs.items()})

    def sym(self):
        """self + self^T."""
        return self + self.T

    def evaluate(self, x):
        out = self.const.copy()
        for k, v in self.coeffs.items():
            out += x[k] * v
        return out


def constant(M):
    return AffineMatrix(const=np.asarray(M, dtype=float))


def bmat(rows):
    """Block matrix of AffineMatrix / ndarray entries."""
    rows = [[e if isinstance(e, AffineMatrix) else constant(e) for e in row]
            for row in rows]
    row_h = [row[0].shape[0] for row in rows]
    col_w = [e.shape[1] for e in rows[0]]
    H, W = sum(row_h), sum(col_w)
    keys = set()
    for row in rows:
        for e in row:
            keys.update(e.coeffs)
    const = np.zeros((H, W))
    coeffs = {k: np.zeros((H, W)) for k in keys}
    r0 = 0
    for i, row in enumerate(rows):
        c0 = 0
        for j, e in enumerate(row):
            if e.shape != (row_h[i], col_w[j]):
                raise DimensionMismatch("inconsistent block shapes")
            const[r0:r0 + row_h[i], c0:c0 + col_w[j]] = e.const
            for k, v in e.coeffs.items():
                coeffs[k][r0:r0 + row_h[i], c0:c0 + col_w[j]] = v
            c0 += col_w[j]
        r0 += row_h[i]
    return AffineMatrix(const=const, coeffs=coeffs)


def kron_expr(M, expr):
    """Kronecker product of a constant matrix with an affine expression."""
    return AffineMatrix(const=np.kron(M, expr.const),
                        coeffs={k: np.kron(M, v)
                                for k, v in expr.coeffs.items()})


@dataclass(frozen=True)
class ConstraintBlock:
    """Affine symmetric block with a definiteness sense.

    sense "neg" means F(x) < 0 (strict, handled by an epsilon shift in the
    solver); sense "psd" means F(x) >= 0.
    """

    const: np.ndarray
    coeffs: dict
    sense: str
    label: str = ""

    @property
    def dim(self):
        return self.const.shape[0]

    def evaluate(self, x):
        out = self.const.copy()
        for k, v in self.coeffs.items():
            out += x[k] * v
        return out


def _symmetrize(expr):
    const = 0.5 * (expr.const + expr.const.T)
    coeffs = {k: 0.5 * (v + v.T) for k, v in expr.coeffs.items()}
    # drop exact-zero coefficient matrices
    coeffs = {k: v for k, v in coeffs.items() if np.any(v != 0.0)}
    return const, coeffs


def make_block(expr, sense, label=""):
    const, coeffs = _symmetrize(expr)
    return ConstraintBlock(const=const, coeffs=coeffs, sense=sense,
                           label=label)


def dstab_block(region, ax_expr, x_expr, label="dstab"):
    """Lemma-form region block L (x) X + M (x) (AX) + M^T (x) (AX)^T < 0.

    ax_expr is the affine expression for A X; in synthesis mode the caller
    passes A_p X + B_p W so the closed-loop matrix is covered.
    """
    if ax_expr.shape != x_expr.shape:
        raise DimensionMismatch("AX and X must share dimensions")
    expr = (kron_expr(region.L, x_expr)
            + kron_expr(region.M, ax_expr)
            + kron_expr(region.M.T, ax_expr.T))
    return make_block(expr, "neg", label)


def _check_vertex_dims(gp):
    n, nu = gp.B_p.shape
    ny = gp.C_p1.shape[0]
    if gp.A_p.shape != (n, n) or gp.D_p.shape[0] != n:
        raise DimensionMismatch("vertex matrices inconsistent")
    if gp.B_y1.shape != (ny, nu):
        raise DimensionMismatch("output feed-through inconsistent")
    return n, nu, ny


def hinf_block(gp, x_expr, w_expr, g1sq_expr, label="hinf"):
    """Bounded-real block in synthesis variables, linear in gamma1^2:

        [ He(A X + B W)   D_p             (C1 X + By1 W)^T ]
        [ *               -gamma1^2 I     0                ]
        [ *               *               -I               ]  < 0
    """
    n, nu, ny = _check_vertex_dims(gp)
    nw = gp.D_p.shape[1]
    he = (x_expr.lmul(gp.A_p) + w_expr.lmul(gp.B_p)).sym()
    cx = x_expr.lmul(gp.C_p1) + w_expr.lmul(gp.B_y1)
    expr = bmat([
        [he, constant(gp.D_p), cx.T],
        [constant(gp.D_p.T), -1.0 * g1sq_expr.rmul(np.eye(nw)).lmul(np.eye(nw)),
         constant(np.zeros((nw, ny)))],
        [cx, constant(np.zeros((ny, nw))), constant(-np.eye(ny))],
    ])
    return make_block(expr, "neg", label)


def h2_blocks(gp, x_expr, w_expr, z_expr, g2sq_expr, label="h2"):
    """Generalized-H2 blocks in synthesis variables:

        He(A X + B W) + D_p D_p^T < 0
        [ Z               C2 X + By2 W ]
        [ *               X            ] >= 0
        trace(Z) < gamma2^2
    """
    n, nu, ny = _check_vertex_dims(gp)
    he = (x_expr.lmul(gp.A_p) + w_expr.lmul(gp.B_p)).sym()
    cx = x_expr.lmul(gp.C_p2) + w_expr.lmul(gp.B_y2)
    lyap = make_block(he + constant(gp.D_p @ gp.D_p.T), "neg", label + "/lyap")
    schur = make_block(bmat([[z_expr, cx], [cx.T, x_expr]]), "psd",
                       label + "/schur")
    tr = constant(np.zeros((1, 1)))
    for k, v in z_expr.coeffs.items():
        t = np.trace(v)
        if t != 0.0:
            tr = tr + AffineMatrix(const=np.zeros((1, 1)),
                                   coeffs={k: np.array([[t]])})
    tr = tr + AffineMatrix(const=np.array([[np.trace(z_expr.const)]]))
    trace_blk = make_block(tr + (-1.0) * g2sq_expr, "neg", label + "/trace")
    return [lyap, schur, trace_blk]


def orthogonal_complement(M, tol=1e-8):
    """Rows spanning the left null space of M (so that out @ M = 0)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    U, S, _ = np.linalg.svd(M)
    rank = int(np.sum(S > tol * (S[0] if S.size else 1.0)))
    return U[:, rank:].T


def _report(conditions):
    return {"passed": all(v for _, v in conditions),
            "conditions": dict(conditions)}


def existence_check_hinf(gp, X, Y, gamma1, tol=1e-9):
    """Solvability conditions for an H-infinity controller of order at most
    n_p, evaluated at candidate symmetric matrices X, Y. Report style."""
    n = gp.A_p.shape[0]
    conds = []
    stacked = np.vstack([gp.B_p, gp.B_y1])
    Np = orthogonal_complement(stacked)
    inner = np.block([
        [gp.A_p @ X + X @ gp.A_p.T + gp.D_p @ gp.D_p.T,
         X @ gp.C_p1.T + gp.D_p @ gp.D_y.T],
        [gp.C_p1 @ X + gp.D_y @ gp.D_p.T,
         gp.D_y @ gp.D_y.T - gamma1 ** 2 * np.eye(gp.C_p1.shape[0])],
    ])
    if Np.size:
        conds.append(("state_side",
                      min_eig_symmetric(Np @ inner @ Np.T) < -tol))
    else:
        conds.append(("state_side", True))
    stacked2 = np.vstack([gp.M_p.T, gp.D_z.T])
    Nq = orthogonal_complement(stacked2)
    inner2 = np.block([
        [Y @ gp.A_p + gp.A_p.T @ Y + gp.C_p1.T @ gp.C_p1,
         Y @ gp.D_p + gp.C_p1.T @ gp.D_y],
        [gp.D_p.T @ Y + gp.D_y.T @ gp.C_p1,
         gp.D_y.T @ gp.D_y - gamma1 ** 2 * np.eye(gp.D_p.shape[1])],
    ])
    if Nq.size:
        conds.append(("measurement_side",
                      min_eig_symmetric(Nq @ inner2 @ Nq.T) < -tol))
    else:
        conds.append(("measurement_side", True))
    coupling = np.block([[X, gamma1 * np.eye(n)], [gamma1 * np.eye(n), Y]])
    conds.append(("coupling", min_eig_symmetric(coupling) >= -tol))
    sv = np.linalg.svd(coupling, compute_uv=False)
    rank = int(np.sum(sv > 1e-8 * sv[0]))
    conds.append(("rank", rank <= 2 * n))
    rep = _report(conds)
    rep["rank"] = rank
    return rep


def existence_check_h2(gp, X, Y, gamma2, tol=1e-9):
    """Solvability conditions for a generalized-H2 controller of order at
    most n_p, evaluated at candidates X, Y."""
    n = gp.A_p.shape[0]
    conds = []
    Np = orthogonal_complement(gp.B_p)
    core = gp.A_p @ X + X @ gp.A_p.T + gp.D_p @ gp.D_p.T
    if Np.size:
        conds.append(("state_side", min_eig_symmetric(Np @ core @ Np.T) < -tol))
    else:
        conds.append(("state_side", True))
    out = gp.C_p2 @ X @ gp.C_p2.T - gamma2 ** 2 * np.eye(gp.C_p2.shape[0])
    conds.append(("output_bound", min_eig_symmetric(out) < -tol))
    stacked2 = np.vstack([gp.M_p.T, gp.D_z.T])
    Nq = orthogonal_complement(stacked2)
    inner2 = np.block([
        [Y @ gp.A_p + gp.A_p.T @ Y, Y @ gp.D_p],
        [gp.D_p.T @ Y, -np.eye(gp.D_p.shape[1])],
    ])
    if Nq.size:
        conds.append(("measurement_side",
                      min_eig_symmetric(Nq @ inner2 @ Nq.T) < -tol))
    else:
        conds.append(("measurement_side", True))
    coupling = np.block([[X, np.eye(n)], [np.eye(n), Y]])
    conds.append(("coupling", min_eig_symmetric(coupling) >= -tol))
    sv = np.linalg.svd(coupling, compute_uv=False)
    rank = int(np.sum(sv > 1e-8 * sv[0]))
    conds.append(("rank", rank <= 2 * n))
    rep = _report(conds)
    rep["rank"] = rank
    return rep
