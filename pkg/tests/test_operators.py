import math
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bpbkit import moduli
from bpbkit.operators import (BlockOperator, Budget, PremiseError, complement, convex_series_support,
                              crude_bound, extend, normalize, operator_norm, project, restrict,
                              support_mass, support_set, tail_bound_check, upper_bound)
from bpbkit.spaces import COMPLEX, REAL, SpaceDesc, SumSpaceDesc, gaussian, lp_norm, sample_block_sphere

L2R = SpaceDesc(REAL, 2, 2)
L2C = SpaceDesc(COMPLEX, 2, 2)


def op(base, n, rng_space, blocks):
    return BlockOperator(SumSpaceDesc(base, n), rng_space, np.asarray(blocks))


def random_op(rng, field=COMPLEX, n=3, rp=1.0, rd=3, p=2.0, d=2):
    return op(SpaceDesc(field, p, d), n, SpaceDesc(field, rp, rd), gaussian(rng, (n, rd, d), field))


def test_apply_examples(rng):
    T = op(L2R, 1, L2R, [np.eye(2)])
    np.testing.assert_array_equal(T.apply(np.array([[0.6, 0.8]])), [0.6, 0.8])
    S = op(SpaceDesc(REAL, 2, 1), 2, SpaceDesc(REAL, 2, 1), [[[1.0]], [[1.0]]])
    assert S.apply(np.array([[1.0], [1.0]]))[0] == 2.0
    R = random_op(rng)
    x = sample_block_sphere(R.domain, 1)[0]
    dense = sum(R.blocks[i] @ x[i] for i in range(R.n))
    np.testing.assert_allclose(R.apply(x), dense, atol=1e-14)


def test_shape_and_field_errors(rng):
    with pytest.raises(ValueError, match="shape mismatch"):
        op(L2R, 2, L2R, np.zeros((2, 3, 2)))
    with pytest.raises(ValueError):
        op(L2R, 1, L2C, np.zeros((1, 2, 2)))
    T = random_op(rng)
    with pytest.raises(ValueError, match="shape mismatch"):
        T.apply(np.zeros((2, 2)))


def test_adjoint_examples(rng):
    T = op(L2R, 1, L2R, [np.eye(2)])
    np.testing.assert_array_equal(T.adjoint(np.array([1.0, 0.0]))[0], [1.0, 0.0])
    Z = op(L2R, 2, L2R, np.zeros((2, 2, 2)))
    assert not np.any(Z.adjoint(np.array([0.3, 0.4])))
    R = random_op(rng, rd=3, p=3.0)
    f = gaussian(rng, 3, COMPLEX)
    x = sample_block_sphere(R.domain, 2)[0]
    lhs = np.sum(R.adjoint(f) * x)
    assert abs(lhs - np.dot(f, R.apply(x))) <= 1e-10
    # dual-norm formula versus maximization over a sampled sphere (real block, grid)
    Rr = random_op(rng, REAL, p=3.0)
    g = Rr.adjoint(rng.normal(size=3))[0]
    th = np.linspace(0, 2 * np.pi, 200001)
    u = np.stack([np.cos(th), np.sin(th)], 1)
    u /= lp_norm(u, 3.0)[:, None]
    assert abs(float(lp_norm(g, 1.5)) - float((u @ g).max())) <= 1e-6


def test_project_restrict_extend(rng):
    T = random_op(rng)
    assert np.array_equal(project(T, (0, 1, 2)).blocks, T.blocks)
    assert not np.any(project(T, ()).blocks)
    P = project(T, (0, 2))
    assert np.array_equal(project(P, (0, 2)).blocks, P.blocks)
    assert np.array_equal(extend(restrict(T, (0, 2)), (0, 2), 3).blocks, P.blocks)
    assert complement((0, 2), 3) == (1,)
    b = Budget(starts=8)
    assert operator_norm(P, b).lo <= operator_norm(T, b).hi + 1e-12


def test_norm_examples():
    T = op(L2R, 1, L2R, [np.eye(2)])
    w = operator_norm(T)
    assert w.lo == pytest.approx(1.0, abs=1e-12) and w.hi == pytest.approx(1.0, abs=1e-12)
    S = op(SpaceDesc(REAL, 2, 1), 2, SpaceDesc(REAL, 2, 1), [[[1.0]], [[1.0]]])
    w = operator_norm(S)
    assert w.lo == pytest.approx(2.0, abs=1e-12) and w.hi >= 2.0 - 1e-12
    assert abs(w.witness[0, 0]) == 1 and w.witness[0, 0] == w.witness[1, 0]


def _grid_oracle(T, step=1e-2):
    """max ||T x||_2 over a product grid of angles on three real circles."""
    th = np.arange(0, 2 * np.pi, step)
    U = np.stack([np.cos(th), np.sin(th)], 1)
    v = [U @ T.blocks[i].T for i in range(3)]            # (k, m) per block
    half = v[0][: len(th) // 2 + 1]                      # x -> -x symmetry on block 0
    c = (half[:, None, :] + v[1][None, :, :]).reshape(-1, v[1].shape[1])
    best = 0.0
    for s in range(0, len(c), 4096):
        w = c[s:s + 4096, None, :] + v[2][None, :, :]
        best = max(best, float(np.sqrt((w * w).sum(-1)).max()))
    return best


def test_norm_against_grid_oracle():
    r = np.random.default_rng(3)
    T = op(L2R, 3, L2R, r.normal(size=(3, 2, 2)))
    w = operator_norm(T, Budget(starts=24))
    g = _grid_oracle(T)
    assert abs(w.lo - g) <= 1e-3
    assert w.lo <= w.hi + 1e-12 and w.hi >= g - 1e-12


@pytest.mark.parametrize("field", [REAL, COMPLEX])
@pytest.mark.parametrize("rp", [1.0, 2.0, 3.0, math.inf])
def test_bracket_is_consistent(field, rp):
    r = np.random.default_rng(int(rp if rp < 10 else 9) + (field == COMPLEX))
    T = random_op(r, field, rp=rp)
    w = operator_norm(T, Budget(starts=12, grid_points=50_000))
    assert w.lo <= w.hi * (1 + 1e-12)
    assert w.hi <= crude_bound(T) * (1 + 1e-12)
    x = w.witness
    assert np.allclose(lp_norm(x, 2.0, axis=1), 1.0, atol=1e-12)


def test_scaled_bound_tight_for_hilbert_blocks():
    r = np.random.default_rng(8)
    T = random_op(r, COMPLEX, rp=2.0)
    w = operator_norm(T)
    assert (w.hi - w.lo) / w.lo <= 1e-8
    hi, method = upper_bound(T)
    assert hi >= w.lo


def test_normalize(rng):
    T = random_op(rng)
    assert crude_bound(normalize(T, 2.0)) == pytest.approx(crude_bound(T) / 2.0)


def test_support_set_examples():
    # T supported on block 0; x norms it; y* the range functional at T x
    T = op(L2R, 2, L2R, [np.eye(2), np.zeros((2, 2))])
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    ystar = np.array([1.0, 0.0])
    A = support_set(T, ystar, x, 0.5)
    assert A == (0,)
    g = T.adjoint(ystar)
    assert support_mass(T, ystar, A) == pytest.approx(float(lp_norm(g, 2.0, axis=1).sum()))
    # block 1 functional orthogonal to x(1)
    T2 = op(L2R, 2, L2R, [np.eye(2), np.eye(2)])
    x2 = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert 1 not in support_set(T2, ystar, x2, 0.5)
    with pytest.raises(ValueError):
        support_set(T, ystar, x, 1.0)


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 0.95))
def test_support_mass_bound(seed, eta_p):
    r = np.random.default_rng(seed)
    T = random_op(r, COMPLEX, rp=1.0)
    T = normalize(T, operator_norm(T, Budget(starts=6, certify=False)).lo)
    x = sample_block_sphere(T.domain, r)[0]
    y = T.apply(x)
    ystar = np.exp(-1j * np.angle(y))
    eta = 1 - float(np.real(np.dot(ystar, y)))
    A = support_set(T, ystar, x, eta_p)
    # with ||T* y*|| <= 1 the lemma's bound reads mass(A) > 1 - eta/eta'
    total = support_mass(T, ystar, tuple(range(3)))
    if total <= 1 + 1e-12 and eta < eta_p:
        assert support_mass(T, ystar, A) > 1 - eta / eta_p - 1e-12


def test_convex_series_examples():
    assert convex_series_support([1, 0], [1, -0.3], 0.1, 0.2) == (0,)
    eta_p = Fraction(1, 5)
    eta = Fraction(1, 5)  # premise needs eta > 0.8 eta'
    alphas = [Fraction(3, 5), Fraction(2, 5)]
    zs = [Fraction(1), 1 - 2 * eta_p]
    assert sum(a * z for a, z in zip(alphas, zs)) > 1 - eta
    A = convex_series_support(alphas, zs, eta, eta_p)
    assert A == (0,)
    assert Fraction(3, 5) > 1 - eta / eta_p
    with pytest.raises(PremiseError):
        convex_series_support([0.7, 0.7], [1, 1], 0.1, 0.2)
    with pytest.raises(PremiseError):
        convex_series_support([0.5, 0.5], [1, 1.5], 0.1, 0.2)
    with pytest.raises(PremiseError):
        convex_series_support([0.5, 0.5], [0, 0], 0.1, 0.2)


def test_convex_series_brute_force():
    r = np.random.default_rng(77)
    for _ in range(1000):
        k = 5
        raw = [Fraction(int(v)) for v in r.integers(1, 50, k)]
        alphas = [a / sum(raw) for a in raw]
        zs = [Fraction(int(v), 100) for v in r.integers(-100, 101, k)]
        s = sum(a * z for a, z in zip(alphas, zs))
        eta = 1 - s + Fraction(1, 1000)
        eta_p = Fraction(int(r.integers(1, 200)), 100)
        A = convex_series_support(alphas, zs, eta, eta_p)
        best = max((S for m in range(k + 1) for S in combinations(range(k), m)
                    if all(zs[i] > 1 - eta_p for i in S)), key=len)
        assert A == best
        assert sum(alphas[i] for i in A) > 1 - eta / eta_p


def test_tail_check_trivial_cases():
    r = np.random.default_rng(4)
    dc = moduli.delta_c_lower(SpaceDesc(COMPLEX, 1, 3))
    T = random_op(r)
    T = normalize(T, upper_bound(T)[0])
    b = Budget(starts=8)
    rep = tail_bound_check(T, (0, 1, 2), 0.5, dc, b)
    assert rep.norm_tail.hi == 0.0 and rep.conclusion_verified and not rep.counterexample
    blocks = T.blocks.copy()
    blocks[2] = 0
    S = T.with_blocks(blocks)
    rep = tail_bound_check(S, (0, 1), 0.5, dc, b)
    assert rep.norm_tail.hi == 0.0 and rep.conclusion_verified


def test_tail_check_random_no_counterexample():
    r = np.random.default_rng(9)
    dc = moduli.delta_c_lower(SpaceDesc(COMPLEX, 1, 3))
    b = Budget(starts=8, grid_points=30_000)
    for _ in range(10):
        blocks = gaussian(r, (3, 3, 2), COMPLEX)
        blocks[2] *= 1e-3
        T = random_op(r).with_blocks(blocks)
        T = normalize(T, upper_bound(T, b)[0])
        rep = tail_bound_check(T, (0, 1), 0.5, dc, b)
        assert not rep.counterexample
        if rep.premise_holds:
            assert rep.conclusion_verified


@pytest.mark.parametrize("M", [2, 3, 4])
def test_phase_bound_tight_for_l1_range(M):
    from bpbkit.operators import _phase_bnb_bound
    r = np.random.default_rng(30 + M)
    T = random_op(r, COMPLEX, rp=1.0, rd=M)
    hi = _phase_bnb_bound(T)
    lo = operator_norm(T, Budget(starts=64, certify=False)).lo
    assert lo <= hi and (hi - lo) / lo <= 1e-10
    assert upper_bound(T)[0] <= hi
    assert _phase_bnb_bound(random_op(r, REAL, rp=1.0)) is None


@pytest.mark.parametrize("n,M", [(2, 3), (3, 3), (3, 2)])
def test_circle_bound_tight_for_real_circles(n, M):
    from bpbkit.operators import _circle_bnb_bound
    r = np.random.default_rng(40 + 4 * n + M)
    T = random_op(r, REAL, n=n, rp=2.0, rd=M)
    hi = _circle_bnb_bound(T)
    lo = operator_norm(T, Budget(starts=64, certify=False)).lo
    assert lo <= hi and (hi - lo) / lo <= 1e-10
    assert upper_bound(T)[0] <= hi
    assert _circle_bnb_bound(random_op(r, COMPLEX, rp=2.0)) is None
