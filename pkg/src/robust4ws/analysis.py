"""Linear-systems analysis: eigenvalues, damping, H-infinity and H2 norms.

These routines serve as independent oracles for the certificates produced by
the synthesis pipeline, so they deliberately avoid sharing code with the LMI
side. The H-infinity norm uses Hamiltonian bisection; the H2 norm solves the
controllability Lyapunov equation through the vectorized Kronecker system.
"""

import math
from dataclasses import dataclass

import numpy as np

from .model import linearize


class UnstableSystem(ValueError):
    pass


class NonzeroFeedthrough(ValueError):
    pass


class ZeroEigenvalue(ValueError):
    pass


class NotSymmetric(ValueError):
    pass


class SingularSylvester(ValueError):
    pass


@dataclass(frozen=True)
class EigenPair:
    lambda_re: float
    lambda_im: float

    def as_complex(self):
        return complex(self.lambda_re, self.lambda_im)


def eig2(A):
    """Both eigenvalues of a real 2x2 matrix from the characteristic
    quadratic, sorted by real part then imaginary part."""
    A = np.asarray(A, dtype=float)
    tr = A[0, 0] + A[1, 1]
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    disc = tr * tr - 4.0 * det
    if disc >= 0.0:
        s = math.sqrt(disc)
        pair = [EigenPair((tr - s) / 2.0, 0.0), EigenPair((tr + s) / 2.0, 0.0)]
    else:
        s = math.sqrt(-disc)
        pair = [EigenPair(tr / 2.0, -s / 2.0), EigenPair(tr / 2.0, s / 2.0)]
    pair.sort(key=lambda e: (e.lambda_re, e.lambda_im))
    return pair


def damping_ratio(e):
    """zeta = -Re(lambda) / |lambda|."""
    mag = math.hypot(e.lambda_re, e.lambda_im)
    if mag == 0.0:
        raise ZeroEigenvalue("damping ratio undefined at the origin")
    return -e.lambda_re / mag


def damping_surface(p, mu_grid, v_grid):
    """Damping ratio of the slower eigenpair on a (mu, v) grid.

    Slower means the pair whose real part is closest to the imaginary axis.
    """
    mu_grid = list(mu_grid)
    v_grid = list(v_grid)
    if not mu_grid or not v_grid:
        raise ValueError("grids must be nonempty")
    out = np.empty((len(mu_grid), len(v_grid)))
    from dataclasses import replace
    for i, mu in enumerate(mu_grid):
        if mu <= 0.0 or min(v_grid) <= 0.0:
            raise ValueError("grid values must be positive")
        for j, v in enumerate(v_grid):
            lp = linearize(replace(p, v=v), (mu,) * 4)
            slow = max(eig2(lp.A), key=lambda e: e.lambda_re)
            out[i, j] = damping_ratio(slow)
    return out


def _is_hurwitz(A):
    return max(np.linalg.eigvals(A).real) < 0.0


def _sigma_max(M):
    return float(np.linalg.norm(M, 2))


def _gain_at(A, B, C, D, w):
    n = A.shape[0]
    G = C @ np.linalg.solve(1j * w * np.eye(n) - A, B) + D
    return _sigma_max(G)


def _has_imag_axis_eig(A, B, C, D, gamma):
    """Imaginary-axis eigenvalue test of the Hamiltonian associated with the
    bound gamma. An eigenvalue on the axis means the gain crosses gamma."""
    n = A.shape[0]
    R = gamma * gamma * np.eye(D.shape[1]) - D.T @ D
    Rinv = np.linalg.inv(R)
    Ah = A + B @ Rinv @ D.T @ C
    H = np.block([
        [Ah, B @ Rinv @ B.T],
        [-C.T @ (np.eye(D.shape[0]) + D @ Rinv @ D.T) @ C, -Ah.T],
    ])
    ev = np.linalg.eigvals(H)
    scale = max(1.0, np.max(np.abs(ev)))
    return bool(np.any(np.abs(ev.real) < 1e-9 * scale))


def hinf_norm(A, B, C, D=None, tol=1e-6):
    """Peak gain sup_w sigma_max(C (jwI - A)^-1 B + D) by bisection on the
    Hamiltonian imaginary-axis test, refined to relative tol."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    C = np.asarray(C, dtype=float).reshape(-1, A.shape[0])
    if D is None:
        D = np.zeros((C.shape[0], B.shape[1]))
    D = np.asarray(D, dtype=float).reshape(C.shape[0], B.shape[1])
    if not _is_hurwitz(A):
        raise UnstableSystem("state matrix is not Hurwitz")
    # seed the bracket from a few probe frequencies
    lo = max(_sigma_max(D), _gain_at(A, B, C, D, 0.0))
    for w in (1e-2, 1e-1, 1.0, 1e1, 1e2):
        lo = max(lo, _gain_at(A, B, C, D, w))
    if lo == 0.0:
        return 0.0
    hi = 2.0 * lo
    while _has_imag_axis_eig(A, B, C, D, hi):
        hi *= 2.0
        if hi > 1e12 * lo:
            raise RuntimeError("H-infinity bisection failed to bracket")
    lo_b = lo
    while hi - lo_b > tol * lo_b:
        mid = 0.5 * (hi + lo_b)
        if _has_imag_axis_eig(A, B, C, D, mid):
            lo_b = mid
        else:
            hi = mid
    return 0.5 * (hi + lo_b)


def lyap_solve(A, Q):
    """P with A P + P A^T + Q = 0 via the vectorized Kronecker system."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = A.shape[0]
    K = np.kron(np.eye(n), A) + np.kron(A, np.eye(n))
    try:
        vec = np.linalg.solve(K, -Q.reshape(n * n))
    except np.linalg.LinAlgError as exc:
        raise SingularSylvester(str(exc)) from exc
    P = vec.reshape(n, n)
    resid = np.linalg.norm(A @ P + P @ A.T + Q)
    scale = np.linalg.norm(A) * np.linalg.norm(P) + np.linalg.norm(Q)
    if scale > 0.0 and resid > 1e-6 * scale:
        raise SingularSylvester("ill-conditioned Lyapunov solve")
    return P


def h2_norm(A, B, C, D=None):
    """Energy-to-peak norm sqrt(trace(C P C^T)), A P + P A^T + B B^T = 0."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    C = np.asarray(C, dtype=float).reshape(-1, A.shape[0])
    if D is not None and np.any(np.asarray(D) != 0.0):
        raise NonzeroFeedthrough("H2 norm requires zero feedthrough")
    if not _is_hurwitz(A):
        raise UnstableSystem("state matrix is not Hurwitz")
    P = lyap_solve(A, B @ B.T)
    val = float(np.trace(C @ P @ C.T))
    return math.sqrt(max(val, 0.0))


def min_eig_symmetric(S, sweeps=64):
    """Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotation."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S - S.T)) > 1e-10 * scale:
        raise NotSymmetric("matrix is not symmetric")
    A = 0.5 * (S + S.T)
    n = A.shape[0]
    if n == 1:
        return float(A[0, 0])
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off = max(off, abs(A[p, q]))
                if abs(A[p, q]) <= 1e-14 * scale:
                    continue
                # classic 2x2 rotation zeroing A[p, q]
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = math.copysign(1.0, theta) / (abs(theta)
                                                 + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
        if off <= 1e-13 * scale:
            break
    return float(np.min(np.diag(A)))


def eig_symmetric(S, sweeps=64):
    """All eigenvalues of a symmetric matrix (Jacobi), ascending."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    A = 0.5 * (S + S.T)
    n = A.shape[0]
    scale = max(1.0, float(np.max(np.abs(A))))
    for _ in range(sweeps):
        off = max((abs(A[p, q]) for p in range(n - 1)
                   for q in range(p + 1, n)), default=0.0)
        if off <= 1e-13 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) <= 1e-14 * scale:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = math.copysign(1.0, theta) / (abs(theta)
                                                 + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
    return np.sort(np.diag(A))
