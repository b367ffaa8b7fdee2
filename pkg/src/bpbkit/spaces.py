"""Finite-dimensional model spaces.

A point of ``l_p^d`` (real or complex) is a 1-d numpy array of length ``d``.
A block vector of the l_inf-sum ``l_inf^n(X)`` is a 2-d array of shape
``(n, d)``; row ``i`` is the block ``x(i)``.  The same layout with an l_1
outer norm models the dual sums ``l_1^n(X*)``.

Functionals act by the bilinear pairing ``f(x) = sum_k f_k x_k`` (no complex
conjugation), so a dual point of ``l_p^d`` is again a length-``d`` array, now
measured in ``l_q`` with ``1/p + 1/q = 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

REAL = "real"
COMPLEX = "complex"
FIELDS = (REAL, COMPLEX)


def conjugate_exponent(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class SpaceDesc:
    """``l_p^dim`` over the real or complex field."""

    field: str = REAL
    p: float = 2.0
    dim: int = 2

    def __post_init__(self):
        if self.field not in FIELDS:
            raise ValueError(f"unknown field {self.field!r}")
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def dtype(self):
        return np.complex128 if self.field == COMPLEX else np.float64

    @property
    def is_complex(self) -> bool:
        return self.field == COMPLEX

    @property
    def dual(self) -> "SpaceDesc":
        return SpaceDesc(self.field, conjugate_exponent(self.p), self.dim)

    @property
    def is_hilbert(self) -> bool:
        return self.p == 2.0 or self.dim == 1

    @property
    def is_uniformly_convex(self) -> bool:
        return 1.0 < self.p < math.inf

    @property
    def is_c_uniformly_convex(self) -> bool:
        if self.field == COMPLEX:
            return self.p < math.inf
        return 1.0 < self.p < math.inf

    @property
    def is_strictly_convex(self) -> bool:
        # a one-dimensional space has the interval/disc as its ball
        return self.is_uniformly_convex or self.dim == 1

    @property
    def real_dim(self) -> int:
        return self.dim * (2 if self.is_complex else 1)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.dim, dtype=self.dtype)


@dataclass(frozen=True)
class SumSpaceDesc:
    """Direct sum of ``blocks`` copies of ``base``.

    ``outer=inf`` is the l_inf-sum standing in for ``c_0(X)``; ``outer=1``
    is the l_1-sum that carries dual elements and bilinear slices.
    """

    base: SpaceDesc
    blocks: int
    outer: float = math.inf

    def __post_init__(self):
        if int(self.blocks) != self.blocks or self.blocks < 1:
            raise ValueError(f"blocks must be a positive integer, got {self.blocks}")
        if self.outer not in (1.0, math.inf):
            raise ValueError("outer norm must be 1 or inf")
        object.__setattr__(self, "blocks", int(self.blocks))
        object.__setattr__(self, "outer", float(self.outer))

    @property
    def field(self) -> str:
        return self.base.field

    @property
    def dtype(self):
        return self.base.dtype

    @property
    def is_complex(self) -> bool:
        return self.base.is_complex

    @property
    def shape(self) -> tuple[int, int]:
        return (self.blocks, self.base.dim)

    @property
    def dim(self) -> int:
        return self.blocks * self.base.dim

    @property
    def dual(self) -> "SumSpaceDesc":
        return SumSpaceDesc(self.base.dual, self.blocks, conjugate_exponent(self.outer))

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=self.dtype)


# -- norms -----------------------------------------------------------------


def lp_norm(v, p: float, axis: int = -1) -> np.ndarray:
    """l_p norm along ``axis`` (vectorized over the remaining axes)."""
    a = np.abs(np.asarray(v))
    if a.shape[axis] == 0:
        return np.zeros(np.delete(a.shape, axis))
    if math.isinf(p):
        return a.max(axis=axis)
    if p == 1:
        return a.sum(axis=axis)
    if p == 2:
        return np.sqrt((a * a).sum(axis=axis))
    # scale first so large/small entries do not overflow in a**p
    m = a.max(axis=axis, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    out = (np.power(a / safe, p).sum(axis=axis)) ** (1.0 / p) * np.squeeze(safe, axis=axis)
    return out


def _check_point(space: SpaceDesc, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (space.dim,):
        raise ValueError(f"dimension mismatch: expected ({space.dim},), got {x.shape}")
    if not space.is_complex and np.iscomplexobj(x) and np.any(np.imag(x) != 0):
        raise ValueError("complex entries in a real space")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite entries")
    return x


def _check_blocks(ss: SumSpaceDesc, x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != ss.blocks:
        raise ValueError(f"block count mismatch: expected {ss.blocks} blocks, got shape {x.shape}")
    if x.shape[1] != ss.base.dim:
        raise ValueError(f"dimension mismatch: expected blocks of length {ss.base.dim}, got {x.shape[1]}")
    return x


def norm(space: SpaceDesc, x) -> float:
    """``(sum |x_k|^p)^(1/p)``, or the max modulus for ``p = inf``."""
    x = _check_point(space, x)
    return float(lp_norm(x, space.p))


def block_norms(ss: SumSpaceDesc, x) -> np.ndarray:
    x = _check_blocks(ss, x)
    return lp_norm(x, ss.base.p, axis=1)


def sum_norm(ss: SumSpaceDesc, x) -> float:
    """Norm of a block vector: max of block norms (l_inf-sum) or their sum."""
    norms = block_norms(ss, x)
    if ss.outer == 1.0:
        return float(norms.sum())
    return float(norms.max())


def space_norm(space, x) -> float:
    """Norm in either a plain space or a sum space (flat input accepted)."""
    if isinstance(space, SumSpaceDesc):
        return sum_norm(space, np.asarray(x).reshape(space.shape))
    return norm(space, x)


def dual_norm(space, f) -> float:
    return space_norm(space.dual, f)


def pairing(f, x):
    """Bilinear pairing ``f(x)`` along the last axis."""
    return np.sum(np.asarray(f) * np.asarray(x), axis=-1)


# -- duality maps ------------------------------------------------------------


def _phase_conj(v: np.ndarray) -> np.ndarray:
    a = np.abs(v)
    out = np.zeros_like(v)
    nz = a > 0
    out[nz] = np.conj(v[nz]) / a[nz]
    return out


def norming_functional(space: SpaceDesc, x) -> np.ndarray:
    """The unit functional ``f`` with ``f(x) = ||x||`` (smooth ``l_p`` only).

    For ``1 < p < inf`` this is the unique such functional,
    ``f_k = |x_k|^(p-1) conj(sgn x_k) / ||x||^(p-1)``.  The non-smooth ends
    ``p = 1`` and ``p = inf`` have non-unique selections and are refused.
    """
    x = _check_point(space, x)
    nrm = float(lp_norm(x, space.p))
    if nrm == 0:
        raise ValueError("no norming functional selection for the zero vector")
    if space.dim == 1:
        return _phase_conj(x)
    if not 1.0 < space.p < math.inf:
        raise ValueError("no norming functional selection: l_1 / l_inf norms are not smooth")
    u = x / nrm
    return np.abs(u) ** (space.p - 1.0) * _phase_conj(u)


def norming_point(space: SpaceDesc, f) -> np.ndarray:
    """Unit ``x`` in ``space`` with ``f(x) = ||f||_*`` (a maximizer of ``Re f``)."""
    f = np.asarray(f)
    dual = space.dual
    nrm = float(lp_norm(f, dual.p))
    if nrm == 0:
        raise ValueError("zero functional has no norming point")
    if space.dim == 1:
        return _phase_conj(f).astype(space.dtype)
    if not 1.0 < space.p < math.inf:
        raise ValueError("norming point is not unique for l_1 / l_inf")
    u = f / nrm
    return (np.abs(u) ** (dual.p - 1.0) * _phase_conj(u)).astype(space.dtype)


# -- sampling ----------------------------------------------------------------


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gaussian(rng: np.random.Generator, shape, field: str) -> np.ndarray:
    if field == COMPLEX:
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return rng.standard_normal(shape)


def sample_sphere(space: SpaceDesc, seed, count: int = 1) -> np.ndarray:
    """``count`` unit vectors: normalized independent Gaussians, shape ``(count, dim)``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = _rng(seed)
    g = gaussian(rng, (count, space.dim), space.field)
    n = lp_norm(g, space.p)
    while np.any(n == 0):  # pragma: no cover - probability zero
        bad = n == 0
        g[bad] = gaussian(rng, (int(bad.sum()), space.dim), space.field)
        n = lp_norm(g, space.p)
    return g / n[:, None]


def sample_block_sphere(ss: SumSpaceDesc, seed, count: int = 1) -> np.ndarray:
    """Block vectors with every block on the unit sphere, shape ``(count, n, d)``."""
    rng = _rng(seed)
    pts = sample_sphere(ss.base, rng, count * ss.blocks)
    return pts.reshape(count, ss.blocks, ss.base.dim)


# -- serialization -----------------------------------------------------------


def encode_scalars(a, field: str):
    """Nested lists; complex entries become ``[re, im]``."""
    a = np.asarray(a)
    if field == COMPLEX:
        return np.stack([a.real, a.imag], axis=-1).tolist()
    return np.real(a).astype(float).tolist()


def decode_scalars(data, field: str) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if field == COMPLEX:
        if a.shape[-1:] != (2,):
            raise ValueError("complex entries must be [re, im] pairs")
        return a[..., 0] + 1j * a[..., 1]
    return a


def space_to_dict(space) -> dict:
    if isinstance(space, SumSpaceDesc):
        return {"base": space_to_dict(space.base), "blocks": space.blocks,
                "outer": _encode_p(space.outer)}
    return {"field": space.field, "p": _encode_p(space.p), "dim": space.dim}


def space_from_dict(d: dict):
    if "base" in d:
        return SumSpaceDesc(space_from_dict(d["base"]), d["blocks"], _decode_p(d.get("outer", "inf")))
    return SpaceDesc(d["field"], _decode_p(d["p"]), d["dim"])


def _encode_p(p: float):
    return "inf" if math.isinf(p) else p


def _decode_p(p) -> float:
    return math.inf if p in ("inf", "Infinity", None) else float(p)


def vector_to_dict(space, x) -> dict:
    """JSON object ``{field, p, dim, blocks}``; a plain point is one block."""
    if isinstance(space, SumSpaceDesc):
        base, blocks = space.base, _check_blocks(space, x)
    else:
        base, blocks = space, _check_point(space, x)[None, :]
    return {"field": base.field, "p": _encode_p(base.p), "dim": base.dim,
            "blocks": encode_scalars(blocks, base.field)}


def vector_from_dict(d: dict):
    """Inverse of :func:`vector_to_dict`; returns ``(SumSpaceDesc, array)``."""
    base = SpaceDesc(d["field"], _decode_p(d["p"]), d["dim"])
    blocks = decode_scalars(d["blocks"], base.field).astype(base.dtype)
    if blocks.ndim != 2 or blocks.shape[1] != base.dim:
        raise ValueError("malformed blocks")
    ss = SumSpaceDesc(base, blocks.shape[0])
    return ss, blocks


def dumps_vector(space, x) -> str:
    return json.dumps(vector_to_dict(space, x))
