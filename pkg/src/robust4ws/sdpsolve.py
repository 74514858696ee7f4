"""Dense semidefinite programming by log-det barrier path following.

minimize    c' x
subject to  F_k(x) < 0   or   F_k(x) >= 0        (affine symmetric blocks)

Strict blocks are shifted by a norm-scaled epsilon and negated so the solver
works uniformly with G_k(x) >= 0. Phase 1 minimizes a common slack to find a
strictly feasible point; phase 2 follows the central path of the log-det
barrier. Everything is dense: problems here have tens of variables and
blocks of at most a few tens of rows.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import min_eig_symmetric
from .lmi import AffineMatrix, ConstraintBlock

STRICT_EPS = 1e-7


class Infeasible(RuntimeError):
    pass


class NumericFailure(RuntimeError):
    pass


@dataclass
class VariableLayout:
    """Registry mapping named scalar/symmetric-matrix variables to a flat
    decision vector. Symmetric matrices are flattened by their upper
    triangle; the off-diagonal coefficient carries both mirror entries."""

    names: list = field(default_factory=list)
    spans: dict = field(default_factory=dict)   # name -> (start, count, shape)

    @property
    def n_vars(self):
        return sum(cnt for _, cnt, _ in self.spans.values())

    def add_scalar(self, name):
        start = self.n_vars
        self.names.append(name)
        self.spans[name] = (start, 1, None)
        return AffineMatrix(const=np.zeros((1, 1)),
                            coeffs={start: np.ones((1, 1))})

    def add_symmetric(self, name, n):
        start = self.n_vars
        self.names.append(name)
        self.spans[name] = (start, n * (n + 1) // 2, (n, n))
        coeffs = {}
        k = start
        for i in range(n):
            for j in range(i, n):
                E = np.zeros((n, n))
                E[i, j] = 1.0
                E[j, i] = 1.0
                coeffs[k] = E
                k += 1
        return AffineMatrix(const=np.zeros((n, n)), coeffs=coeffs)

    def add_rectangular(self, name, rows, cols):
        start = self.n_vars
        self.names.append(name)
        self.spans[name] = (start, rows * cols, (rows, cols))
        coeffs = {}
        k = start
        for i in range(rows):
            for j in range(cols):
                E = np.zeros((rows, cols))
                E[i, j] = 1.0
                coeffs[k] = E
                k += 1
        return AffineMatrix(const=np.zeros((rows, cols)), coeffs=coeffs)

    def extract(self, x, name):
        start, cnt, shape = self.spans[name]
        if shape is None:
            return float(x[start])
        if cnt == shape[0] * shape[1]:
            return np.asarray(x[start:start + cnt]).reshape(shape)
        n = shape[0]
        M = np.zeros((n, n))
        k = start
        for i in range(n):
            for j in range(i, n):
                M[i, j] = M[j, i] = x[k]
                k += 1
        return M


@dataclass
class SdpProblem:
    n_vars: int
    objective: np.ndarray
    blocks: list
    layout: VariableLayout = None


@dataclass
class SdpSolution:
    status: str          # Optimal | Infeasible | MaxIter | NumericFailure
    x: np.ndarray
    objective: float
    margins: list        # min eigenvalue of each original block at x
    iterations: int
    kkt_dual: float
    kkt_gap: float


@dataclass
class SolveOptions:
    tol: float = 1e-8
    max_outer: int = 200      # path-following (barrier) iterations
    newton_cap: int = 400     # Newton steps per centering
    mu: float = 20.0
    max_total: int = 6000     # global Newton-step budget
    box_bound: float = 1e3    # big-M bound |x_i| <= box_bound keeps every
                              # centering problem bounded below


def _block_scale(blk):
    s = float(np.linalg.norm(blk.const))
    for v in blk.coeffs.values():
        s = max(s, float(np.linalg.norm(v)))
    return max(1.0, s)


def _normalized(blocks):
    """Rewrite every block as (const, idx array, stacked coeffs) with the
    convention G_k(x) >= 0; strict negative-definite blocks get the epsilon
    shift G = -F - eps I."""
    out = []
    for blk in blocks:
        idx = np.array(sorted(blk.coeffs), dtype=int)
        stack = np.stack([blk.coeffs[i] for i in idx]) if idx.size \
            else np.zeros((0,) + blk.const.shape)
        if blk.sense == "neg":
            eps = STRICT_EPS * _block_scale(blk)
            const = -blk.const - eps * np.eye(blk.dim)
            stack = -stack
        elif blk.sense == "psd":
            const = blk.const.copy()
        else:
            raise ValueError(f"unknown sense {blk.sense!r}")
        out.append((const, idx, stack))
    return out


def _with_box(data_list, n_vars, bound):
    """Append 1x1 blocks bound - x_i >= 0 and bound + x_i >= 0."""
    out = list(data_list)
    for i in range(n_vars):
        idx = np.array([i])
        out.append((bound * np.ones((1, 1)), idx, -np.ones((1, 1, 1))))
        out.append((bound * np.ones((1, 1)), idx, np.ones((1, 1, 1))))
    return out


def _eval_block(data, x):
    const, idx, stack = data
    if idx.size:
        return const + np.einsum("i,iab->ab", x[idx], stack)
    return const.copy()


def _chol(G):
    try:
        return np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        return None


def _inv_from_chol(L):
    """G^{-1} by two triangular solves; robust where a direct inverse of a
    barely-PD G trips the singularity check."""
    n = L.shape[0]
    Y = np.linalg.solve(L, np.eye(n))
    return Y.T @ Y


def _merit(data_list, x, tc):
    """t * c'x - sum log det G_k; +inf outside the domain."""
    val = float(tc @ x)
    for data in data_list:
        L = _chol(_eval_block(data, x))
        if L is None:
            return math.inf
        val -= 2.0 * float(np.sum(np.log(np.diag(L))))
    return val


def _derivs(data_list, x, tc):
    n = x.size
    g = tc.copy()
    H = np.zeros((n, n))
    for data in data_list:
        const, idx, stack = data
        if not idx.size:
            continue
        G = _eval_block(data, x)
        L = _chol(G)
        if L is None:
            return None, None
        Ginv = _inv_from_chol(L)
        T = np.einsum("ab,ibc->iac", Ginv, stack)
        g[idx] -= np.einsum("iaa->i", T)
        H[np.ix_(idx, idx)] += np.einsum("iab,jba->ij", T, T)
    return g, H


def _newton_step(H, g):
    n = H.shape[0]
    reg = 1e-12 * max(1.0, float(np.max(np.abs(H))))
    for _ in range(12):
        L = _chol(H + reg * np.eye(n))
        if L is not None:
            y = np.linalg.solve(L, -g)
            return np.linalg.solve(L.T, y)
        reg *= 100.0
    raise NumericFailure("Newton system not positive definite")


def _center(data_list, x, tc, budget, stop=None):
    """Minimize t c'x + barrier from x. Returns (x, steps used, converged)."""
    steps = 0
    while steps < budget:
        g, H = _derivs(data_list, x, tc)
        if g is None:
            raise NumericFailure("iterate left the barrier domain")
        d = _newton_step(H, g)
        lam2 = float(-g @ d)
        if lam2 / 2.0 <= 1e-9:
            return x, steps, True
        f0 = _merit(data_list, x, tc)
        alpha, gd = 1.0, float(g @ d)
        while alpha > 1e-14:
            xn = x + alpha * d
            fn = _merit(data_list, xn, tc)
            if fn <= f0 + 1e-4 * alpha * gd:
                break
            alpha *= 0.5
        else:
            return x, steps, True  # no further progress representable
        x = xn
        steps += 1
        if f0 - fn <= 1e-12 * (1.0 + abs(f0)):
            return x, steps, True  # progress below float resolution
        if stop is not None and stop(x):
            return x, steps, True
    return x, steps, False


def _phase1(data_list, n_vars, opts):
    """Find strictly feasible x by minimizing a shared slack s with
    G_k(x) + s I >= 0 and s bounded below by -1."""
    s_idx = n_vars
    aug = []
    for const, idx, stack in data_list:
        dim = const.shape[0]
        idx2 = np.concatenate([idx, [s_idx]])
        stack2 = np.concatenate([stack, np.eye(dim)[None]], axis=0)
        aug.append((const, idx2, stack2))
    aug.append((np.ones((1, 1)), np.array([s_idx]), np.ones((1, 1, 1))))

    x = np.zeros(n_vars + 1)
    worst = 0.0
    for data in data_list:
        worst = max(worst, -min_eig_symmetric(_eval_block(data, x[:n_vars])))
    x[s_idx] = worst + max(1.0, 0.1 * worst)

    c = np.zeros(n_vars + 1)
    c[s_idx] = 1.0
    m = sum(const.shape[0] for const, _, _ in aug)
    # start with gap m/t comparable to the initial slack
    t = max(1.0, m / max(1.0, x[s_idx]))
    used = 0
    for _ in range(opts.max_outer):
        x, steps, _ = _center(aug, x, t * c, opts.newton_cap,
                              stop=lambda z: z[s_idx] < -1e-4)
        used += steps
        if x[s_idx] < -1e-4:
            return x[:n_vars], used
        if m / t < 1e-9 or used >= opts.max_total:
            break
        t *= opts.mu
    if x[s_idx] >= -1e-9:
        raise Infeasible(f"phase-1 slack {x[s_idx]:.3e} not negative")
    return x[:n_vars], used


def find_feasible(blocks, n_vars, opts=None):
    """Strictly feasible point for the block set, or Infeasible."""
    opts = opts or SolveOptions()
    data_list = _with_box(_normalized(blocks), n_vars, opts.box_bound)
    x, _ = _phase1(data_list, n_vars, opts)
    return x


def solve(p, opts=None):
    """Interior-point solve of the SDP. Deterministic for fixed inputs."""
    opts = opts or SolveOptions()
    data_list = _with_box(_normalized(p.blocks), p.n_vars, opts.box_bound)
    c = np.asarray(p.objective, dtype=float)
    cscale = float(np.max(np.abs(c))) if np.any(c) else 1.0
    cn = c / cscale
    m = sum(const.shape[0] for const, _, _ in data_list)

    used = 0
    try:
        x, used = _phase1(data_list, p.n_vars, opts)
    except Infeasible:
        return SdpSolution(status="Infeasible", x=np.zeros(p.n_vars),
                           objective=math.nan, margins=[], iterations=0,
                           kkt_dual=math.nan, kkt_gap=math.nan)
    t = max(1.0, m / max(1.0, abs(float(cn @ x))))
    if not np.any(cn):
        t = 1e12  # pure feasibility: no path following needed
    status = "MaxIter"
    for _ in range(opts.max_outer):
        x, steps, converged = _center(data_list, x, t * cn, opts.newton_cap)
        used += steps
        gap = m / t
        if gap < opts.tol * max(1.0, abs(float(cn @ x))) and converged:
            status = "Optimal"
            break
        if used >= opts.max_total:
            break
        if converged:  # advance along the path only from a centered point
            t *= opts.mu

    # KKT residuals from the barrier dual Z_k = G_k^{-1} / t
    dual = cn.copy()
    try:
        for data in data_list:
            const, idx, stack = data
            if not idx.size:
                continue
            L = _chol(_eval_block(data, x))
            if L is None:
                raise np.linalg.LinAlgError("block left the PD cone")
            Ginv = _inv_from_chol(L)
            dual[idx] -= np.einsum("ab,iba->i", Ginv, stack) / t
    except np.linalg.LinAlgError:
        status = "NumericFailure"
    kkt_dual = float(np.max(np.abs(dual)))
    kkt_gap = m / t

    margins = [min_eig_symmetric(blk.evaluate(x)) for blk in p.blocks]
    return SdpSolution(status=status, x=x, objective=float(c @ x),
                       margins=margins, iterations=used,
                       kkt_dual=kkt_dual, kkt_gap=kkt_gap)


def check_solution(p, x):
    """Independent per-block margin report at a candidate point."""
    x = np.asarray(x, dtype=float)
    if x.size != p.n_vars:
        raise ValueError("candidate length mismatch")
    report = []
    for blk in p.blocks:
        lam = min_eig_symmetric(blk.evaluate(x))
        ok = lam < 0.0 if blk.sense == "neg" else lam >= -1e-9
        report.append({"label": blk.label, "sense": blk.sense,
                       "min_eig": lam, "satisfied": bool(ok)})
    return report


def dump_problem(p):
    """Text dump: one section per block, coefficient triplets
    (var, row, col, value), for cross-checking with external solvers."""
    lines = [f"nvars {p.n_vars}",
             "objective " + " ".join(f"{v:.17g}" for v in p.objective)]
    for b, blk in enumerate(p.blocks):
        lines.append(f"block {b} dim {blk.dim} sense {blk.sense} "
                     f"label {blk.label or '-'}")
        for i in range(blk.dim):
            for j in range(i, blk.dim):
                if blk.const[i, j] != 0.0:
                    lines.append(f"  const {i} {j} {blk.const[i, j]:.17g}")
        for var in sorted(blk.coeffs):
            M = blk.coeffs[var]
            for i in range(blk.dim):
                for j in range(i, blk.dim):
                    if M[i, j] != 0.0:
                        lines.append(f"  {var} {i} {j} {M[i, j]:.17g}")
    return "\n".join(lines) + "\n"
