import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bpbkit.spaces import (COMPLEX, REAL, SpaceDesc, SumSpaceDesc, conjugate_exponent, dual_norm,
                           dumps_vector, norm, norming_functional, norming_point, pairing,
                           sample_block_sphere, sample_sphere, space_from_dict, space_to_dict,
                           sum_norm, vector_from_dict, vector_to_dict)

P_VALUES = [1.0, 1.5, 2.0, 3.0, 4.0, math.inf]


def test_norm_examples():
    assert norm(SpaceDesc(REAL, 2, 2), [3.0, 4.0]) == 5.0
    assert norm(SpaceDesc(COMPLEX, 1, 2), [1j, 0]) == 1.0
    v = norm(SpaceDesc(REAL, 4, 2), [1.0, 1.0])
    assert v == pytest.approx(2 ** 0.25, abs=1e-15)
    assert v == pytest.approx(sum(abs(t) ** 4 for t in (1.0, 1.0)) ** 0.25, abs=1e-15)
    assert norm(SpaceDesc(REAL, math.inf, 3), [1.0, -7.0, 2.0]) == 7.0


def test_sum_norm_examples(rng):
    ss = SumSpaceDesc(SpaceDesc(REAL, 2, 2), 2)
    assert sum_norm(ss, [[3.0, 4.0], [0.0, 1.0]]) == 5.0
    assert sum_norm(ss, np.zeros((2, 2))) == 0.0
    cs = SumSpaceDesc(SpaceDesc(COMPLEX, 3, 2), 4)
    x = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    per_block = [np.sum(np.abs(b) ** 3) ** (1 / 3) for b in x]
    assert sum_norm(cs, x) == pytest.approx(max(per_block), rel=1e-14)
    assert sum_norm(SumSpaceDesc(cs.base, 4, 1.0), x) == pytest.approx(sum(per_block), rel=1e-14)


def test_shape_errors():
    with pytest.raises(ValueError, match="dimension mismatch"):
        norm(SpaceDesc(REAL, 2, 2), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError, match="block count"):
        sum_norm(SumSpaceDesc(SpaceDesc(REAL, 2, 2), 3), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        SpaceDesc(REAL, 0.5, 2)
    with pytest.raises(ValueError):
        SpaceDesc("quaternion", 2, 2)
    with pytest.raises(ValueError):
        SumSpaceDesc(SpaceDesc(), 2, 2.0)


def test_conjugate_exponent():
    assert conjugate_exponent(2.0) == 2.0
    assert conjugate_exponent(1.0) == math.inf
    assert conjugate_exponent(math.inf) == 1.0
    assert conjugate_exponent(3.0) == pytest.approx(1.5)


def test_norming_functional_examples():
    f = norming_functional(SpaceDesc(REAL, 2, 2), [0.6, 0.8])
    np.testing.assert_allclose(f, [0.6, 0.8], atol=1e-15)
    sp = SpaceDesc(REAL, 3, 2)
    x = np.array([1.0, 1.0])
    f = norming_functional(sp, x)
    assert float(pairing(f, x)) == pytest.approx(norm(sp, x), abs=1e-12)
    assert float(np.sum(np.abs(f) ** 1.5) ** (1 / 1.5)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        norming_functional(sp, [0.0, 0.0])
    with pytest.raises(ValueError):
        norming_functional(SpaceDesc(REAL, 1, 2), [1.0, 0.0])


@given(st.sampled_from([1.5, 2.0, 3.0, 4.0]), st.sampled_from([REAL, COMPLEX]),
       st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_norming_functional_property(p, field, dim, seed):
    sp = SpaceDesc(field, p, dim)
    r = np.random.default_rng(seed)
    x = r.normal(size=dim) * 3
    if field == COMPLEX:
        x = x + 1j * r.normal(size=dim)
    f = norming_functional(sp, x)
    assert abs(complex(pairing(f, x)) - norm(sp, x)) <= 1e-10 * max(1, norm(sp, x))
    assert dual_norm(sp, f) == pytest.approx(1.0, abs=1e-10)
    z = norming_point(sp, f)
    assert norm(sp, z) == pytest.approx(1.0, abs=1e-10)
    assert complex(pairing(f, z)).real == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("p", P_VALUES)
@pytest.mark.parametrize("field", [REAL, COMPLEX])
def test_sample_sphere_unit_and_deterministic(p, field):
    sp = SpaceDesc(field, p, 3)
    a = sample_sphere(sp, 7, 5)
    b = sample_sphere(sp, 7, 5)
    assert np.array_equal(a, b)
    for x in a:
        assert abs(norm(sp, x) - 1) <= 1e-12
    blocks = sample_block_sphere(SumSpaceDesc(sp, 4), 3, 2)
    assert blocks.shape == (2, 4, 3)


def test_sample_sphere_angular_uniformity():
    # chi-square against the uniform law on 12 angular sectors
    pts = sample_sphere(SpaceDesc(REAL, 2, 2), 11, 1000)
    ang = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * np.pi)
    counts = np.histogram(ang, bins=12, range=(0, 2 * np.pi))[0]
    chi2 = float(np.sum((counts - 1000 / 12) ** 2 / (1000 / 12)))
    assert chi2 < 31.3  # 0.999 quantile, 11 degrees of freedom


def test_serialization_roundtrip(rng):
    for sp in (SpaceDesc(COMPLEX, math.inf, 2), SumSpaceDesc(SpaceDesc(REAL, 3, 2), 3, 1.0)):
        assert space_from_dict(space_to_dict(sp)) == sp
    sp = SumSpaceDesc(SpaceDesc(COMPLEX, 2, 2), 3)
    x = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
    s2, y = vector_from_dict(vector_to_dict(sp, x))
    assert s2 == sp and np.array_equal(x, y)
    assert isinstance(dumps_vector(sp, x), str)
