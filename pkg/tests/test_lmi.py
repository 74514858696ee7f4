import math

import numpy as np
import pytest

from robust4ws.analysis import h2_norm, hinf_norm, lyap_solve
from robust4ws.lmi import (AffineMatrix, DimensionMismatch, InvalidAngle,
                           constant, dstab_block, h2_blocks, hinf_block,
                           existence_check_h2, existence_check_hinf,
                           make_block, region_alpha, region_cone,
                           region_contains)
from robust4ws.model import generalized_plant, linearize
from robust4ws.sdpsolve import Infeasible, VariableLayout, find_feasible

TAN_3PI8 = math.tan(3.0 * math.pi / 8.0)


def _feasible(blocks, n_vars):
    try:
        find_feasible(blocks, n_vars)
        return True
    except Infeasible:
        return False


def _dstab_feasible(A, region):
    n = A.shape[0]
    layout = VariableLayout()
    Xe = layout.add_symmetric("X", n)
    blocks = [
        make_block(Xe + constant(-1e-4 * np.eye(n)), "psd", "pd"),
        dstab_block(region, Xe.lmul(A), Xe),
    ]
    return _feasible(blocks, layout.n_vars)


def _in_region_scalar(z, region):
    return region_contains(region, z)


def test_region_alpha_structure():
    r = region_alpha(-0.1)
    assert r.L.shape == (1, 1) and r.M.shape == (1, 1)
    assert r.L[0, 0] == pytest.approx(0.2)
    assert region_contains(r, -0.2 + 0.5j)
    assert not region_contains(r, -0.05)
    # alpha = 0 is the open left half-plane
    r0 = region_alpha(0.0)
    assert region_contains(r0, -1e-6) and not region_contains(r0, 1e-6)


def test_region_cone_membership():
    r = region_cone(0.75 * math.pi)
    assert region_contains(r, -1.0)
    assert not region_contains(r, 1.0)
    # boundary at |Im| = tan(3 pi / 8) |Re|
    assert region_contains(r, -1.0 + (TAN_3PI8 - 1e-3) * 1j)
    assert not region_contains(r, -1.0 + (TAN_3PI8 + 1e-3) * 1j)
    with pytest.raises(InvalidAngle):
        region_cone(math.pi)


def test_dstab_scalar_examples():
    lhp = region_alpha(0.0)
    blk = dstab_block(lhp, constant([[-1.0]]), constant([[1.0]]))
    assert blk.evaluate(np.zeros(0)) == pytest.approx(np.array([[-2.0]]))
    blk = dstab_block(lhp, constant([[1.0]]), constant([[1.0]]))
    assert blk.evaluate(np.zeros(0))[0, 0] > 0.0
    with pytest.raises(DimensionMismatch):
        dstab_block(lhp, constant(np.zeros((2, 2))), constant([[1.0]]))


def test_dstab_nominal_plant(params):
    A = linearize(params).A
    assert _dstab_feasible(A, region_alpha(-0.1))


def test_lemma1_equivalence_random():
    # feasibility of the Kronecker inequality <=> every eigenvalue passes
    # the scalar region test, for both regions in use
    rng = np.random.default_rng(17)
    regions = [region_alpha(-0.1), region_cone(0.75 * math.pi)]
    checked = 0
    while checked < 200:
        n = 2 if checked % 2 == 0 else 4
        A = rng.standard_normal((n, n)) * 1.5
        eigs = np.linalg.eigvals(A)
        for region in regions:
            # skip near-boundary samples where strict/non-strict differ
            margins = []
            for z in eigs:
                F = region.L + region.M * z + region.M.T * np.conj(z)
                R = np.block([[F.real, -F.imag], [F.imag, F.real]])
                margins.append(np.max(np.linalg.eigvalsh(0.5 * (R + R.T))))
            if min(abs(m) for m in margins) < 1e-2:
                continue
            member = all(m < 0 for m in margins)
            assert _dstab_feasible(A, region) == member
        checked += 1


def test_hinf_block_bisection_matches_norm(params):
    # at fixed K the block feasibility in X bisects to the analysis norm
    gp = generalized_plant(linearize(params))
    K = np.zeros((4, 2))
    true = hinf_norm(gp.A_p, gp.D_p, gp.C_p1)

    def feasible(gamma):
        layout = VariableLayout()
        Xe = layout.add_symmetric("X", 2)
        blocks = [
            make_block(Xe + constant(-1e-6 * np.eye(2)), "psd", "pd"),
            hinf_block(gp, Xe, Xe.lmul(K),
                       constant([[gamma ** 2]])),
        ]
        return _feasible(blocks, layout.n_vars)

    assert feasible(10.0 * true)
    assert not feasible(0.5 * true)
    lo, hi = 0.5 * true, 10.0 * true
    while hi - lo > 1e-5 * lo:
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if feasible(mid) else (mid, hi)
    # the feasibility oracle carries a strict-margin offset (the solver
    # demands a small definite slack), so the bracket sits slightly high
    assert 0.5 * (lo + hi) == pytest.approx(true, rel=1e-2)
    assert 0.5 * (lo + hi) >= true * (1.0 - 1e-6)


def test_h2_blocks_bisection_matches_norm(params):
    gp = generalized_plant(linearize(params))
    K = np.zeros((4, 2))
    true = h2_norm(gp.A_p, gp.D_p, gp.C_p1)

    def feasible(gamma2):
        layout = VariableLayout()
        Xe = layout.add_symmetric("X", 2)
        Ze = layout.add_symmetric("Z", 6)
        blocks = [make_block(Xe + constant(-1e-6 * np.eye(2)), "psd", "pd")]
        blocks += h2_blocks(gp, Xe, Xe.lmul(K), Ze,
                            constant([[gamma2 ** 2]]))
        return _feasible(blocks, layout.n_vars)

    lo, hi = 0.5 * true, 10.0 * true
    assert feasible(hi) and not feasible(lo)
    while hi - lo > 1e-5 * lo:
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if feasible(mid) else (mid, hi)
    assert 0.5 * (lo + hi) == pytest.approx(true, rel=1e-4)


def test_h2_scalar_boundary():
    # A=-1, Bw=1, C=1: boundary exactly at gamma2^2 = 1/2

    class Plant:
        A_p = np.array([[-1.0]])
        B_p = np.array([[1.0]])
        D_p = np.array([[1.0]])
        C_p1 = C_p2 = np.array([[1.0]])
        B_y1 = B_y2 = np.array([[0.0]])
        D_y = np.zeros((1, 1))
        M_p = np.eye(1)
        D_z = np.zeros((1, 1))

    def feasible(g2sq):
        layout = VariableLayout()
        Xe = layout.add_symmetric("X", 1)
        Ze = layout.add_symmetric("Z", 1)
        blocks = [make_block(Xe + constant(-1e-9 * np.eye(1)), "psd", "pd")]
        blocks += h2_blocks(Plant, Xe, Xe.lmul(np.zeros((1, 1))), Ze,
                            constant([[g2sq]]))
        return _feasible(blocks, layout.n_vars)

    assert feasible(0.6)
    assert not feasible(0.4)


def test_affine_matrix_algebra():
    E = AffineMatrix(const=np.zeros((2, 2)), coeffs={0: np.eye(2)})
    F = (2.0 * E) + constant(np.ones((2, 2)))
    val = F.evaluate(np.array([3.0]))
    assert np.allclose(val, 6.0 * np.eye(2) + 1.0)
    assert np.allclose(F.T.evaluate(np.array([3.0])), val.T)


def test_existence_checks_full_state(params):
    gp = generalized_plant(linearize(params))
    X = lyap_solve(gp.A_p, gp.D_p @ gp.D_p.T + 0.1 * np.eye(2))
    gamma1 = 100.0
    Y = gamma1 ** 2 * 1.1 * np.linalg.inv(X)
    rep = existence_check_hinf(gp, X, Y, gamma1)
    assert rep["passed"], rep
    assert rep["rank"] <= 4
    # measurement-side conditions are vacuous under full-state feedback
    assert rep["conditions"]["measurement_side"]

    Y2 = np.linalg.inv(X) + np.eye(2)
    rep2 = existence_check_h2(gp, X, Y2, 100.0)
    assert rep2["passed"], rep2


def test_existence_rank_identity_candidates(params):
    gp = generalized_plant(linearize(params))
    g = 3.0
    rep = existence_check_hinf(gp, g * np.eye(2), g * np.eye(2), g)
    # [[gI, gI],[gI, gI]] has rank n_p, so a static (order-0) gain suffices
    assert rep["rank"] == 2
