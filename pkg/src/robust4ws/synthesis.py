"""Robust multi-objective state-feedback synthesis and baselines.

One SDP over a common Lyapunov variable produces the gain: for every
polytope vertex it stacks the decay-rate and conic-sector pole regions, the
bounded-real block and the generalized-H2 blocks, all linearized with the
substitution W = K X, and minimizes the weighted tradeoff
weight_ee * gamma1^2 + weight_ep * gamma2^2. The certified (gamma1, gamma2)
attached to the controller are then recomputed a posteriori for the fixed
gain by two per-objective common-certificate SDPs, which is tighter than
the joint synthesis objective values.
"""

import hashlib
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import lmi
from .analysis import eig2, h2_norm, hinf_norm
from .lmi import constant, dstab_block, h2_blocks, hinf_block, make_block, \
    region_alpha, region_cone
from .sdpsolve import Infeasible, SdpProblem, VariableLayout, solve

X_MIN_EIG = 1e-6


class CertificationFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class SynthesisSpec:
    alpha: float = -0.1
    cone_inner_angle: float = 0.75 * math.pi
    weight_ee: float = 1.0
    weight_ep: float = 1.0
    gamma1_max: float = None
    gamma2_max: float = None

    def __post_init__(self):
        if self.alpha >= 0.0:
            raise ValueError("alpha must be negative")
        if not 0.0 < self.cone_inner_angle < math.pi:
            raise ValueError("cone inner angle must be in (0, pi)")
        if self.weight_ee < 0.0 or self.weight_ep < 0.0:
            raise ValueError("tradeoff weights must be nonnegative")


@dataclass
class RobustController:
    K: np.ndarray
    X: np.ndarray
    gamma1: float        # certified energy-to-energy bound, None for baseline
    gamma2: float        # certified energy-to-peak bound, None for baseline
    vertex_poles: list   # per-vertex closed-loop eigenvalue pairs
    meta: dict = field(default_factory=dict)


def closed_loop(gp, K):
    """(A_cl, D_p, C_cl) of the state-feedback loop w -> y."""
    A = gp.A_p + gp.B_p @ K
    C = gp.C_p1 + gp.B_y1 @ K
    return A, gp.D_p, C


def _vertex_poles(poly, K):
    return [eig2(gp.A_p + gp.B_p @ K) for gp in poly.vertices]


def _assemble_synthesis(poly, spec):
    nu = poly.vertices[0].B_p.shape[1]
    ny = poly.vertices[0].C_p1.shape[0]
    layout = VariableLayout()
    Xe = layout.add_symmetric("X", 2)
    We = layout.add_rectangular("W", nu, 2)
    Ze = layout.add_symmetric("Z", ny)
    g1 = layout.add_scalar("g1sq")
    g2 = layout.add_scalar("g2sq")

    ra = region_alpha(spec.alpha)
    rc = region_cone(spec.cone_inner_angle)
    blocks = [make_block(Xe + constant(-X_MIN_EIG * np.eye(2)), "psd",
                         "X-pd")]
    for k, gp in enumerate(poly.vertices):
        ax = Xe.lmul(gp.A_p) + We.lmul(gp.B_p)
        blocks.append(dstab_block(ra, ax, Xe, f"v{k}/alpha"))
        blocks.append(dstab_block(rc, ax, Xe, f"v{k}/cone"))
        blocks.append(hinf_block(gp, Xe, We, g1, f"v{k}/hinf"))
        blocks.extend(h2_blocks(gp, Xe, We, Ze, g2, f"v{k}/h2"))
    if spec.gamma1_max is not None:
        blocks.append(make_block(
            g1 + constant(-spec.gamma1_max ** 2 * np.ones((1, 1))),
            "neg", "g1-cap"))
    if spec.gamma2_max is not None:
        blocks.append(make_block(
            g2 + constant(-spec.gamma2_max ** 2 * np.ones((1, 1))),
            "neg", "g2-cap"))
    c = np.zeros(layout.n_vars)
    c[layout.spans["g1sq"][0]] = spec.weight_ee
    c[layout.spans["g2sq"][0]] = spec.weight_ep
    return SdpProblem(n_vars=layout.n_vars, objective=c, blocks=blocks,
                      layout=layout), layout


def _certify_hinf_bound(poly, K):
    """Tight common-certificate bound: minimize gamma over symmetric P with
    the closed-loop bounded-real inequality at every vertex."""
    layout = VariableLayout()
    Pe = layout.add_symmetric("P", 2)
    ge = layout.add_scalar("g")
    blocks = [make_block(Pe + constant(-X_MIN_EIG * np.eye(2)), "psd",
                         "P-pd")]
    for k, gp in enumerate(poly.vertices):
        A, D, C = closed_loop(gp, K)
        nw, ny = D.shape[1], C.shape[0]
        pa = Pe.rmul(A)        # P A
        pd = Pe.rmul(D)
        expr = lmi.bmat([
            [pa + pa.T, pd, constant(C.T)],
            [pd.T, (-1.0) * ge.rmul(np.eye(nw)), constant(np.zeros((nw, ny)))],
            [constant(C), constant(np.zeros((ny, nw))),
             (-1.0) * _scalar_eye(ge, ny)],
        ])
        blocks.append(make_block(expr, "neg", f"v{k}/brl"))
    c = np.zeros(layout.n_vars)
    c[layout.spans["g"][0]] = 1.0
    sol = solve(SdpProblem(n_vars=layout.n_vars, objective=c, blocks=blocks))
    if sol.status != "Optimal":
        raise CertificationFailed(f"H-infinity certificate: {sol.status}")
    return layout.extract(sol.x, "g")


def _scalar_eye(scalar_expr, n):
    """scalar * I_n as an affine expression."""
    return lmi.AffineMatrix(
        const=scalar_expr.const[0, 0] * np.eye(n),
        coeffs={k: v[0, 0] * np.eye(n)
                for k, v in scalar_expr.coeffs.items()})


def _certify_h2_bound(poly, K):
    """Tight common-certificate energy-to-peak bound for the fixed gain."""
    layout = VariableLayout()
    Pe = layout.add_symmetric("P", 2)
    ge = layout.add_scalar("g2sq")
    blocks = [make_block(Pe + constant(-X_MIN_EIG * np.eye(2)), "psd",
                         "P-pd")]
    for k, gp in enumerate(poly.vertices):
        A, D, C = closed_loop(gp, K)
        pa = Pe.lmul(A)        # A P
        blocks.append(make_block(pa + pa.T + constant(D @ D.T), "neg",
                                 f"v{k}/lyap"))
        cpc = Pe.lmul(C).rmul(C.T)
        tr = lmi.AffineMatrix(
            const=np.array([[np.trace(cpc.const)]]),
            coeffs={key: np.array([[np.trace(v)]])
                    for key, v in cpc.coeffs.items()})
        blocks.append(make_block(tr + (-1.0) * ge, "neg", f"v{k}/trace"))
    c = np.zeros(layout.n_vars)
    c[layout.spans["g2sq"][0]] = 1.0
    sol = solve(SdpProblem(n_vars=layout.n_vars, objective=c, blocks=blocks))
    if sol.status != "Optimal":
        raise CertificationFailed(f"H2 certificate: {sol.status}")
    return math.sqrt(max(layout.extract(sol.x, "g2sq"), 0.0))


def synthesize_robust(poly, spec=None):
    """Solve the joint vertex-LMI program and certify the resulting gain."""
    spec = spec or SynthesisSpec()
    prob, layout = _assemble_synthesis(poly, spec)
    sol = solve(prob)
    if sol.status == "Infeasible":
        raise Infeasible("no quadratically stabilizing gain in the region")
    if sol.status not in ("Optimal",):
        raise CertificationFailed(f"synthesis solve ended with {sol.status}")
    X = layout.extract(sol.x, "X")
    W = layout.extract(sol.x, "W")
    cond = np.linalg.cond(X)
    if cond > 1e8:
        warnings.warn(f"Lyapunov certificate ill-conditioned (cond {cond:.2e})")
    # explicit 2x2 inverse
    det = X[0, 0] * X[1, 1] - X[0, 1] * X[1, 0]
    Xinv = np.array([[X[1, 1], -X[0, 1]], [-X[1, 0], X[0, 0]]]) / det
    K = W @ Xinv

    gamma1 = _certify_hinf_bound(poly, K)
    gamma2 = _certify_h2_bound(poly, K)
    ctrl = RobustController(
        K=K, X=X, gamma1=gamma1, gamma2=gamma2,
        vertex_poles=_vertex_poles(poly, K),
        meta={"objective": sol.objective, "iterations": sol.iterations,
              "kkt_gap": sol.kkt_gap, "cond_X": cond,
              "gamma1_joint": math.sqrt(max(layout.extract(sol.x, "g1sq"), 0.0)),
              "gamma2_joint": math.sqrt(max(layout.extract(sol.x, "g2sq"), 0.0)),
              "spec": spec, "status": "Optimal"})
    report = certify(K, poly, spec)
    ctrl.meta["certification"] = report
    if not report["passed"]:
        ctrl.meta["status"] = "CertificationFailed"
        raise CertificationFailed(str(report["worst"]))
    return ctrl


def synthesize_pole_placement(nominal, alpha=-2.0):
    """Nominal-plant baseline: decay-rate region only, smallest gain.

    Minimizes trace(T) with T >= W W^T as a gain-size regularizer; no
    robustness certificate is attached.
    """
    nu = nominal.B_p.shape[1]
    layout = VariableLayout()
    Xe = layout.add_symmetric("X", 2)
    We = layout.add_rectangular("W", nu, 2)
    Te = layout.add_symmetric("T", nu)
    blocks = [make_block(Xe + constant(-np.eye(2)), "psd", "X-pd")]
    ax = Xe.lmul(nominal.A_p) + We.lmul(nominal.B_p)
    blocks.append(dstab_block(region_alpha(alpha), ax, Xe, "alpha"))
    blocks.append(make_block(
        lmi.bmat([[Te, We], [We.T, constant(np.eye(2))]]), "psd", "gain"))
    c = np.zeros(layout.n_vars)
    start, cnt, shape = layout.spans["T"]
    k = start
    for i in range(nu):
        for j in range(i, nu):
            if i == j:
                c[k] = 1.0
            k += 1
    sol = solve(SdpProblem(n_vars=layout.n_vars, objective=c, blocks=blocks))
    if sol.status == "Infeasible":
        raise Infeasible("nominal pole placement infeasible")
    X = layout.extract(sol.x, "X")
    W = layout.extract(sol.x, "W")
    det = X[0, 0] * X[1, 1] - X[0, 1] * X[1, 0]
    Xinv = np.array([[X[1, 1], -X[0, 1]], [-X[1, 0], X[0, 0]]]) / det
    K = W @ Xinv
    return RobustController(K=K, X=X, gamma1=None, gamma2=None,
                            vertex_poles=[eig2(nominal.A_p + nominal.B_p @ K)],
                            meta={"alpha": alpha, "status": sol.status})


def certify(K, poly, spec=None, gamma1=None, gamma2=None):
    """Independent per-vertex report: poles, region membership and norms."""
    spec = spec or SynthesisSpec()
    tan_half = math.tan(spec.cone_inner_angle / 2.0)
    rows = []
    worst = {"hinf": 0.0, "h2": 0.0, "max_re": -math.inf}
    for k, gp in enumerate(poly.vertices):
        A, D, C = closed_loop(gp, K)
        poles = eig2(A)
        in_alpha = all(e.lambda_re < spec.alpha for e in poles)
        in_cone = all(e.lambda_re < 0.0
                      and abs(e.lambda_im) <= tan_half * abs(e.lambda_re)
                      + 1e-9 for e in poles)
        stable = max(e.lambda_re for e in poles) < 0.0
        hn = hinf_norm(A, D, C) if stable else math.inf
        h2 = h2_norm(A, D, C) if stable else math.inf
        rows.append({"vertex": k, "poles": poles, "alpha_ok": in_alpha,
                     "cone_ok": in_cone, "hinf": hn, "h2": h2})
        worst["hinf"] = max(worst["hinf"], hn)
        worst["h2"] = max(worst["h2"], h2)
        worst["max_re"] = max(worst["max_re"],
                              max(e.lambda_re for e in poles))
    passed = all(r["alpha_ok"] and r["cone_ok"] for r in rows)
    if gamma1 is not None:
        passed = passed and worst["hinf"] <= gamma1 * (1.0 + 1e-3)
    if gamma2 is not None:
        passed = passed and worst["h2"] <= gamma2 * (1.0 + 1e-3)
    return {"passed": passed, "vertices": rows, "worst": worst}


def polytope_hash(poly):
    h = hashlib.sha256()
    for gp in poly.vertices:
        for M in (gp.A_p, gp.B_p, gp.D_p):
            h.update(np.ascontiguousarray(M, dtype=float).tobytes())
    return h.hexdigest()[:16]


def export_controller(ctrl, poly=None):
    """Plain-text serialization of the gain and its certificates."""
    lines = ["robust4ws-controller v1"]
    lines.append(f"rows {ctrl.K.shape[0]} cols {ctrl.K.shape[1]}")
    for row in ctrl.K:
        lines.append("K " + " ".join(f"{v:.17g}" for v in row))
    for row in ctrl.X:
        lines.append("X " + " ".join(f"{v:.17g}" for v in row))
    g1 = "nan" if ctrl.gamma1 is None else f"{ctrl.gamma1:.17g}"
    g2 = "nan" if ctrl.gamma2 is None else f"{ctrl.gamma2:.17g}"
    lines.append(f"gamma1 {g1}")
    lines.append(f"gamma2 {g2}")
    spec = ctrl.meta.get("spec")
    if spec is not None:
        lines.append(f"alpha {spec.alpha:.17g}")
        lines.append(f"cone {spec.cone_inner_angle:.17g}")
        lines.append(f"weights {spec.weight_ee:.17g} {spec.weight_ep:.17g}")
    if poly is not None:
        lines.append(f"polytope {polytope_hash(poly)}")
    return "\n".join(lines) + "\n"


def load_controller(text):
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("robust4ws-controller"):
        raise ValueError("unrecognized controller file")
    K_rows, X_rows = [], []
    gamma1 = gamma2 = None
    meta = {}
    for ln in lines[1:]:
        tok = ln.split()
        if tok[0] == "K":
            K_rows.append([float(v) for v in tok[1:]])
        elif tok[0] == "X":
            X_rows.append([float(v) for v in tok[1:]])
        elif tok[0] == "gamma1":
            gamma1 = None if tok[1] == "nan" else float(tok[1])
        elif tok[0] == "gamma2":
            gamma2 = None if tok[1] == "nan" else float(tok[1])
        elif tok[0] in ("alpha", "cone", "weights", "polytope", "rows"):
            meta[tok[0]] = tok[1:]
    K = np.array(K_rows)
    X = np.array(X_rows) if X_rows else np.eye(2)
    return RobustController(K=K, X=X, gamma1=gamma1, gamma2=gamma2,
                            vertex_poles=[], meta=meta)
