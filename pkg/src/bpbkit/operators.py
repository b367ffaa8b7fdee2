"""Operators on finite l_inf-sums, their norm oracle, and support selections.

An operator ``T : l_inf^n(X) -> Y`` is stored as its blocks ``T_i = T E_i``
stacked into an array of shape ``(n, M, d)`` with ``M = dim Y`` and
``d = dim X``, so that ``T x = sum_i T_i x(i)``.  The range may itself be a
sum space (an l_1- or l_inf-sum), stored flat.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .spaces import (COMPLEX, REAL, SpaceDesc, SumSpaceDesc, conjugate_exponent,
                     decode_scalars, encode_scalars, lp_norm, sample_block_sphere,
                     space_from_dict, space_to_dict)

IndexSet = tuple  # sorted tuple of block indices


class PremiseError(ValueError):
    """Inputs do not satisfy the hypothesis of the selection."""


def index_set(members: Iterable[int], n: int | None = None) -> IndexSet:
    out = tuple(sorted({int(i) for i in members}))
    if n is not None and any(i < 0 or i >= n for i in out):
        raise ValueError(f"index set {out} out of range for {n} blocks")
    return out


def complement(A: Sequence[int], n: int) -> IndexSet:
    s = set(A)
    return tuple(i for i in range(n) if i not in s)


# -- range space helpers -------------------------------------------------------


def range_params(space) -> tuple[float, int, int, int]:
    """``(p, blocks, block_dim, outer)`` of a range space for the kernels."""
    if isinstance(space, SumSpaceDesc):
        outer = kernels.OUTER_SUM if space.outer == 1.0 else kernels.OUTER_MAX
        return space.base.p, space.blocks, space.base.dim, outer
    return space.p, 1, space.dim, kernels.OUTER_MAX


def range_dim(space) -> int:
    return space.dim


def range_norm(space, y) -> np.ndarray:
    """Norm of flat range vectors along the last axis."""
    r, nb, mb, outer = range_params(space)
    b = lp_norm(np.asarray(y).reshape(np.shape(y)[:-1] + (nb, mb)), r, axis=-1)
    return b.sum(axis=-1) if outer == kernels.OUTER_SUM else b.max(axis=-1)


def range_dual_norm(space, f) -> np.ndarray:
    r, nb, mb, outer = range_params(space)
    q = conjugate_exponent(r)
    b = lp_norm(np.asarray(f).reshape(np.shape(f)[:-1] + (nb, mb)), q, axis=-1)
    return b.max(axis=-1) if outer == kernels.OUTER_SUM else b.sum(axis=-1)


def range_functional(space, y) -> np.ndarray:
    """A unit functional ``f`` on the range with ``f(y) = ||y||``."""
    r, nb, mb, outer = range_params(space)
    y = np.asarray(y, dtype=np.complex128)
    return kernels._pykernels.range_functional(y, r, nb, mb, outer)


def _lattice_constant(dim: int, p_from: float, p_to: float) -> float:
    """``||id : l_{p_from}^dim -> l_{p_to}^dim||``."""
    if p_to >= p_from:
        return 1.0
    e = (1.0 / p_to if not math.isinf(p_to) else 0.0) - (1.0 / p_from if not math.isinf(p_from) else 0.0)
    return float(dim) ** e


# -- the operator -------------------------------------------------------------


@dataclass
class BlockOperator:
    domain: SumSpaceDesc
    range: object  # SpaceDesc or SumSpaceDesc
    blocks: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.blocks)
        exp = (self.domain.blocks, self.range.dim, self.domain.base.dim)
        if b.shape != exp:
            raise ValueError(f"shape mismatch: blocks {b.shape}, expected {exp}")
        if self.domain.field != self.range.field:
            raise ValueError("domain and range fields differ")
        if self.domain.field == REAL and np.iscomplexobj(b) and np.any(b.imag != 0):
            raise ValueError("complex entries in a real operator")
        self.blocks = b.astype(self.domain.dtype)

    @property
    def n(self) -> int:
        return self.domain.blocks

    @property
    def field(self) -> str:
        return self.domain.field

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[-2:] != (self.n, self.domain.base.dim):
            raise ValueError(f"shape mismatch: operator expects {(self.n, self.domain.base.dim)}, got {x.shape}")
        return np.einsum("nmd,...nd->...m", self.blocks, x)

    def adjoint(self, ystar) -> np.ndarray:
        """All block functionals ``(T* y*)(i) = y* T_i``, shape ``(n, d)``."""
        ystar = np.asarray(ystar)
        if ystar.shape != (self.range.dim,):
            raise ValueError("functional dimension does not match the range")
        return np.einsum("m,nmd->nd", ystar, self.blocks)

    def with_blocks(self, blocks) -> "BlockOperator":
        return BlockOperator(self.domain, self.range, blocks)

    def __sub__(self, other: "BlockOperator") -> "BlockOperator":
        return self.with_blocks(self.blocks - other.blocks)

    def to_dict(self) -> dict:
        return {"domain": space_to_dict(self.domain), "range": space_to_dict(self.range),
                "blocks": encode_scalars(self.blocks, self.field)}

    @classmethod
    def from_dict(cls, d: dict) -> "BlockOperator":
        dom = space_from_dict(d["domain"])
        rng = space_from_dict(d["range"])
        return cls(dom, rng, decode_scalars(d["blocks"], dom.field))


def apply(T: BlockOperator, x) -> np.ndarray:
    return T.apply(x)


def adjoint_component(T: BlockOperator, ystar, i: int) -> np.ndarray:
    """The functional ``x -> y*(T_i x)`` on the base space."""
    if not 0 <= i < T.n:
        raise IndexError(f"block index {i} out of range")
    return T.adjoint(ystar)[i]


def project(T: BlockOperator, A: Sequence[int]) -> BlockOperator:
    """``T P_A``: blocks outside ``A`` zeroed."""
    A = index_set(A, T.n)
    b = np.zeros_like(T.blocks)
    if A:
        b[list(A)] = T.blocks[list(A)]
    return T.with_blocks(b)


def restrict(T: BlockOperator, A: Sequence[int]) -> BlockOperator:
    """``T`` restricted to ``l_inf^A(X)`` (only the blocks in ``A``)."""
    A = index_set(A, T.n)
    if not A:
        raise ValueError("cannot restrict to an empty index set")
    dom = SumSpaceDesc(T.domain.base, len(A), T.domain.outer)
    return BlockOperator(dom, T.range, T.blocks[list(A)])


def extend(T: BlockOperator, A: Sequence[int], n: int) -> BlockOperator:
    """Inverse of :func:`restrict`: place the blocks at ``A`` among ``n``, zeros elsewhere."""
    A = index_set(A, n)
    if len(A) != T.n:
        raise ValueError("index set size does not match the operator")
    dom = SumSpaceDesc(T.domain.base, n, T.domain.outer)
    b = np.zeros((n,) + T.blocks.shape[1:], dtype=T.blocks.dtype)
    b[list(A)] = T.blocks
    return BlockOperator(dom, T.range, b)


def normalize(T: BlockOperator, value: float) -> BlockOperator:
    """Divide all blocks by ``value`` (typically the oracle's lower bound)."""
    if not value > 0:
        raise ValueError("normalization value must be positive")
    return T.with_blocks(T.blocks / value)


# -- norm oracle ----------------------------------------------------------------


@dataclass(frozen=True)
class Budget:
    """Effort knobs for the norm oracle."""

    starts: int = 24
    maxiter: int = 2000
    tol: float = 1e-15
    seed: int = 0
    certify: bool = True
    grid_points: int = 200_000

    def to_dict(self) -> dict:
        return {"starts": self.starts, "maxiter": self.maxiter, "tol": self.tol,
                "seed": self.seed, "certify": self.certify, "grid_points": self.grid_points}

    @classmethod
    def from_dict(cls, d: dict) -> "Budget":
        return cls(**{k: d[k] for k in d if k in cls.__dataclass_fields__})


@dataclass
class NormWitness:
    lo: float
    hi: float
    witness: np.ndarray
    functional: np.ndarray
    hi_method: str
    iterations: int = 0

    @property
    def value(self) -> float:
        return self.lo

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "hi_method": self.hi_method}


def _check_oracle_domain(domain: SumSpaceDesc):
    if domain.base.dim > 1 and not 1.0 < domain.base.p < math.inf:
        raise ValueError("norm oracle needs a strictly convex domain base space (1 < p < inf)")


def _block_bounds(T: BlockOperator) -> np.ndarray:
    """Upper bounds for ``||T_i : X -> Y||``."""
    p = T.domain.base.p
    q = conjugate_exponent(p)
    d = T.domain.base.dim
    r, nb, mb, outer = range_params(T.range)
    c_in = _lattice_constant(d, p, 2.0)
    c_blk = _lattice_constant(mb, 2.0, r)
    c_out = c_blk * (math.sqrt(nb) if outer == kernels.OUTER_SUM else 1.0)
    sig = np.array([np.linalg.norm(b, 2) if b.size else 0.0 for b in T.blocks])
    rows = lp_norm(T.blocks, q, axis=2)  # (n, M)
    out = np.minimum(c_in * sig * c_out, range_norm(T.range, rows))
    if nb > 1:
        # one spectral bound per range block, combined by the outer norm
        sub = T.blocks.reshape(T.n, nb, mb, d)
        sj = np.array([[np.linalg.norm(s, 2) for s in blk] for blk in sub]) * c_in * c_blk
        out = np.minimum(out, sj.sum(axis=1) if outer == kernels.OUTER_SUM else sj.max(axis=1))
    return out


def crude_bound(T: BlockOperator) -> float:
    """Always-valid upper bound: triangle inequality over blocks, or row Hoelder."""
    q = conjugate_exponent(T.domain.base.p)
    rows = lp_norm(T.blocks, q, axis=2).sum(axis=0)
    return float(min(_block_bounds(T).sum(), range_norm(T.range, rows)))


def _exact_norm(T: BlockOperator) -> float | None:
    q = conjugate_exponent(T.domain.base.p)
    if T.range.dim == 1:
        return float(lp_norm(T.blocks[:, 0, :], q, axis=1).sum())
    hilbert_range = isinstance(T.range, SpaceDesc) and T.range.is_hilbert
    if T.n == 1 and T.domain.base.is_hilbert and hilbert_range:
        return float(np.linalg.norm(T.blocks[0], 2))
    return None


def _dual_points(T: BlockOperator, max_points: int):
    """Extreme points of the dual range ball with a covering radius, or None."""
    sp = T.range
    if isinstance(sp, SumSpaceDesc):
        if sp.base.dim != 1 or sp.outer != 1.0:
            return None
        sp = SpaceDesc(sp.field, 1.0, sp.blocks)
    M = sp.dim
    if sp.p == 1 and sp.field == REAL:
        if M > 20:
            return None
        signs = np.array(list(itertools.product((1.0, -1.0), repeat=M - 1)))
        return np.hstack([np.ones((len(signs), 1)), signs]), 0.0
    if sp.p == 1 and sp.field == COMPLEX:
        k = M - 1
        N = int(max_points ** (1.0 / k))
        if N < 8:
            return None
        ang = 2 * math.pi * np.arange(N) / N
        grid = np.array(list(itertools.product(ang, repeat=k))) if k > 1 else ang[:, None]
        f = np.hstack([np.ones((len(grid), 1)), np.exp(1j * grid)])
        return f, math.pi / N
    if sp.p == 2 and sp.field == REAL and M == 2:
        N = max_points
        a = math.pi * np.arange(N) / N
        return np.stack([np.cos(a), np.sin(a)], axis=1), math.pi / (2 * N)
    if sp.p == 2 and sp.field == REAL and M == 3:
        N = int(math.sqrt(max_points / 2))
        th = math.pi * np.arange(N + 1) / N
        ph = math.pi * np.arange(N) / N
        tt, pp = np.meshgrid(th, ph, indexing="ij")
        f = np.stack([np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp), np.cos(tt)], axis=-1).reshape(-1, 3)
        return f, math.pi / (2 * N) + math.pi / (2 * N)
    return None


def _dual_grid_bound(T: BlockOperator, max_points: int):
    pts = _dual_points(T, max_points)
    if pts is None:
        return None
    fs, rho = pts
    q = conjugate_exponent(T.domain.base.p)
    best = 0.0
    chunk = max(1, 2_000_000 // max(1, T.blocks.size))
    for s in range(0, len(fs), chunk):
        g = np.einsum("km,nmd->knd", fs[s:s + chunk], T.blocks)
        best = max(best, float(lp_norm(g, q, axis=2).sum(axis=1).max()))
    slack = rho * float(_block_bounds(T).sum())
    return best + slack, ("dual-exact" if rho == 0 else "dual-grid")


def _phase_bnb_bound(T: BlockOperator, tol: float = 1e-12, start: int = 32, levels: int = 40,
                     max_boxes: int = 400_000) -> float | None:
    """Branch-and-bound over the dual phases of a complex ``l_1^M`` range (M <= 4).

    ``||T|| = max_g sum_i ||(T* g)(i)||_q`` over ``g = (1, e^{i t_1}, ...)``.  On a
    box of half-width ``r`` about ``t0``, ``e^{i(t0+s)} = e^{i t0}(1 + i s + rho)``
    with ``|rho| <= s^2/2``; the linear part is convex in ``s``, so its maximum
    sits at a box vertex, and the remainder adds at most ``r^2/2`` per row norm.
    The bound therefore exceeds the box maximum by ``O(r^2)``.
    """
    sp = T.range
    if isinstance(sp, SumSpaceDesc):
        if sp.base.dim != 1 or sp.outer != 1.0:
            return None
        M = sp.blocks
    elif sp.p == 1:
        M = sp.dim
    else:
        return None
    k = M - 1
    if T.field != COMPLEX or not 1 <= k <= 3:
        return None
    q = conjugate_exponent(T.domain.base.p)
    rows = T.blocks.transpose(1, 0, 2)                      # (M, n, d)
    head, tail = rows[0], rows[1:]                          # (n, d), (k, n, d)
    rem = 0.5 * float(lp_norm(tail, q, axis=2).sum())       # sum_i sum_k ||row_ik|| / 2
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=k)))  # (V, k)

    def value(theta):                                       # theta (B, k)
        v = head + np.einsum("bk,knd->bnd", np.exp(1j * theta), tail)
        return lp_norm(v, q, axis=2).sum(axis=1)

    ang = 2 * math.pi * (np.arange(start) + 0.5) / start
    centers = np.array(list(itertools.product(ang, repeat=k)))
    r = math.pi / start
    best = float(value(centers).max())
    for _ in range(levels):
        ph = np.exp(1j * centers)                          # (B, k)
        v0 = head + np.einsum("bk,knd->bnd", ph, tail)
        lin = np.einsum("bk,knd->bknd", 1j * ph, tail)      # d/ds_k of v at t0
        up = np.full(len(centers), -np.inf)
        for sg in signs:
            vv = v0 + r * np.einsum("k,bknd->bnd", sg, lin)
            up = np.maximum(up, lp_norm(vv, q, axis=2).sum(axis=1))
        up = up + rem * r * r
        keep = up > best + tol
        if not keep.any():
            return (best + tol) * (1 + 1e-13)
        centers, up = centers[keep], up[keep]
        if len(centers) * 2 ** k > max_boxes:
            return float(up.max()) * (1 + 1e-13)
        r /= 2
        offs = signs * r
        centers = (centers[:, None, :] + offs[None, :, :]).reshape(-1, k)
        best = max(best, float(value(centers).max()))
    return float(max(best + tol, up.max())) * (1 + 1e-13)


def _circle_bnb_bound(T: BlockOperator, tol: float = 1e-12, start: int = 24, levels: int = 40,
                      max_boxes: int = 400_000) -> float | None:
    """Branch-and-bound over products of circles: real ``l_2^2`` blocks, n <= 4.

    ``x_i = u(t_i)`` with ``u(t) = (cos t, sin t)``; on a box of half-width ``r``,
    ``u(t0 + s) = u(t0) + s u'(t0) + rho`` with ``|rho| <= s^2/2``.  The linear
    part is convex in ``s`` (vertex maximum); block ``i`` adds at most
    ``r^2/2 ||T_i||``.  ``x -> -x`` symmetry halves the first angle's range.
    """
    base = T.domain.base
    if T.field != REAL or base.p != 2.0 or base.dim != 2 or not 1 <= T.n <= 4:
        return None
    n = T.n
    rem = 0.5 * float(_block_bounds(T).sum())
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=n)))
    blocks = T.blocks                                       # (n, M, 2)

    def images(theta):                                      # (B, n) -> (B, n, M) and derivatives
        u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        du = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
        return np.einsum("nmd,bnd->bnm", blocks, u), np.einsum("nmd,bnd->bnm", blocks, du)

    def value(theta):
        return range_norm(T.range, images(theta)[0].sum(axis=1))

    r = math.pi / start
    axes = [(np.arange(start // 2) + 0.5) * 2 * r] + [(np.arange(start) + 0.5) * 2 * r] * (n - 1)
    centers = np.array(list(itertools.product(*axes)))
    best = float(value(centers).max())
    for _ in range(levels):
        img, dimg = images(centers)
        v0 = img.sum(axis=1)
        up = np.full(len(centers), -np.inf)
        for sg in signs:
            up = np.maximum(up, range_norm(T.range, v0 + r * np.einsum("n,bnm->bm", sg, dimg)))
        up = up + rem * r * r
        keep = up > best + tol
        if not keep.any():
            return (best + tol) * (1 + 1e-13)
        centers, up = centers[keep], up[keep]
        if len(centers) * 2 ** n > max_boxes:
            return float(up.max()) * (1 + 1e-13)
        r /= 2
        centers = (centers[:, None, :] + (signs * r)[None, :, :]).reshape(-1, n)
        best = max(best, float(value(centers).max()))
    return float(max(best + tol, up.max())) * (1 + 1e-13)


def _primal_grid(T: BlockOperator, max_points: int):
    """Enumerate products of circles (or signs); returns (value, point, slack) or None."""
    base = T.domain.base
    if base.dim == 1 and base.field == REAL:
        kind = "sign"
    elif (base.dim == 1 and base.field == COMPLEX) or (base.dim == 2 and base.field == REAL and base.p == 2):
        kind = "circle"
    else:
        return None
    n = T.n
    if kind == "sign":
        if n > 20:
            return None
        choices = [np.array([1.0])] + [np.array([1.0, -1.0])] * (n - 1)
        pts = np.array(list(itertools.product(*choices)))[..., None]
        rho = 0.0
    else:
        # a global unit scalar fixes block 0 (or halves its circle)
        k = n - 1 + (1 if base.dim == 2 else 0)
        if k == 0:
            pts = np.ones((1, 1, 1), dtype=complex)
            rho = 0.0
        else:
            N = int(max_points ** (1.0 / k))
            if N < 16:
                return None
            full = 2 * math.pi * np.arange(N) / N
            axes = ([math.pi * np.arange(N) / N] if base.dim == 2 else []) + [full] * (n - 1)
            grid = np.array(list(itertools.product(*axes)))
            if base.dim == 1:
                ang = np.hstack([np.zeros((len(grid), 1)), grid])
                pts = np.exp(1j * ang)[..., None]
            else:
                pts = np.stack([np.cos(grid), np.sin(grid)], axis=-1)
            rho = math.pi / N
    best, arg = -1.0, 0
    chunk = max(1, 2_000_000 // max(1, T.blocks.size))
    for s in range(0, len(pts), chunk):
        v = range_norm(T.range, np.einsum("nmd,knd->km", T.blocks, pts[s:s + chunk]))
        j = int(np.argmax(v))
        if v[j] > best:
            best, arg = float(v[j]), s + j
    slack = rho * float(_block_bounds(T).sum())
    return best, pts[arg], slack


def _dual_block_dims(space) -> int | None:
    """Block size of the dual range ball as a product of Hilbert balls, if it is one."""
    if isinstance(space, SumSpaceDesc):
        if space.outer == 1.0 and (space.base.is_hilbert or space.base.dim == 1):
            return space.base.dim
        return None
    if space.p == 2:
        return space.dim
    if space.p == 1:
        return 1
    return None


def _scaled_spectral_bound(T: BlockOperator) -> float | None:
    """``min_{a,b>0} ||a|| ||b|| ||D_b^-1 M D_a^-1||`` for Hilbert domain blocks.

    ``||T|| = sup <g, T x>`` over ``x`` in a product of Hilbert balls and ``g``
    in the dual range ball, itself a product of Hilbert (or scalar) balls.
    Block-scalar weights ``a_i`` on the domain blocks and ``b_j`` on the dual
    blocks give ``|<g, T x>| <= ||D_b g|| ||D_b^-1 M D_a^-1|| ||D_a x||``, valid
    for every choice of weights; the weights are tuned by Nelder-Mead.
    """
    if not T.domain.base.is_hilbert and T.domain.base.dim > 1:
        return None
    e = _dual_block_dims(T.range)
    if e is None:
        return None
    n, M, d = T.blocks.shape
    nb = M // e
    mat = T.blocks.transpose(1, 0, 2).reshape(M, n * d)

    def f(z):
        # any positive weights give a valid bound; clipping keeps them finite when
        # a vanishing block pushes its weight towards zero
        z = np.clip(z, -30.0, 30.0)
        a = np.exp(z[:n])
        b = np.exp(z[n:])
        scaled = mat / np.repeat(b, e)[:, None] / np.repeat(a, d)[None, :]
        if not np.all(np.isfinite(scaled)):
            return math.inf
        return float(np.linalg.norm(a) * np.linalg.norm(b) * np.linalg.norm(scaled, 2))

    z = np.zeros(n + nb)
    best = f(z)
    if n + nb > 2:
        for _ in range(2):  # one restart helps Nelder-Mead settle
            res = minimize(f, z, method="Nelder-Mead",
                           options={"xatol": 1e-9, "fatol": 1e-14, "maxiter": 400 * (n + nb)})
            z = np.clip(res.x, -30.0, 30.0)
            best = min(best, f(z))
    return best * (1 + 1e-13)  # rounding guard for the SVD


def upper_bound(T: BlockOperator, budget: Budget = Budget()) -> tuple[float, str]:
    """Certified upper bound on ``||T||`` and the method that produced it."""
    exact = _exact_norm(T)
    if exact is not None:
        return exact, "exact"
    cands = [(crude_bound(T), "crude")]
    if budget.certify:
        sc = _scaled_spectral_bound(T)
        if sc is not None:
            cands.append((sc, "scaled-spectral"))
        pb = _phase_bnb_bound(T)
        if pb is not None:
            cands.append((pb, "phase-bnb"))
            sc = pb
        cb = _circle_bnb_bound(T)
        if cb is not None:
            cands.append((cb, "circle-bnb"))
            sc = cb
        # over C the scaled bound has been tight in practice; grids pay off over R
        if sc is None or T.field == REAL:
            dg = _dual_grid_bound(T, budget.grid_points)
            if dg is not None:
                cands.append(dg)
            pg = _primal_grid(T, budget.grid_points)
            if pg is not None:
                cands.append((pg[0] + pg[2], "primal-grid"))
    return min(cands, key=lambda c: c[0])


def operator_norm(T: BlockOperator, budget: Budget = Budget(), starts=None) -> NormWitness:
    """Bracket ``[lo, hi]`` on ``||T||`` with a unit witness attaining ``lo``.

    ``lo`` comes from multistart alternating ascent (plus any extra ``starts``,
    an array of block vectors); ``hi`` from :func:`upper_bound`.
    """
    _check_oracle_domain(T.domain)
    n, d = T.n, T.domain.base.dim
    r, nb, mb, outer = range_params(T.range)
    X0 = []
    if budget.starts > 0:
        X0.append(sample_block_sphere(T.domain, np.random.default_rng(budget.seed), budget.starts))
    elif starts is None:
        raise ValueError("no starting points: budget.starts is 0 and no starts given")
    if starts is not None:
        S = np.asarray(starts).reshape(-1, n, d).astype(np.complex128)
        bn = lp_norm(S, T.domain.base.p, axis=2)
        S = np.where(bn[..., None] > 1e-300, S / np.where(bn > 1e-300, bn, 1.0)[..., None], 1.0 / d ** (1 / T.domain.base.p))
        X0.insert(0, S)
    X0 = np.concatenate([x.astype(np.complex128) for x in X0])
    X, vals, iters = kernels.ascent(T.blocks.astype(np.complex128), X0, T.domain.base.p,
                                    r, nb, mb, outer, budget.maxiter, budget.tol)
    k = int(np.argmax(vals))
    w = X[k]
    if T.field == REAL:
        w = w.real.copy()
    w = w / lp_norm(w, T.domain.base.p, axis=1)[:, None]
    lo = float(range_norm(T.range, T.apply(w)))
    hi, method = _exact_norm(T), "exact"
    if hi is None:
        hi, method = upper_bound(T, budget)
        if budget.certify:
            pg = _primal_grid(T, budget.grid_points)
            if pg is not None and pg[0] > lo:
                lo, w = pg[0], (pg[1].real.copy() if T.field == REAL else pg[1].copy())
    y = T.apply(w)
    f = range_functional(T.range, y) if lo > 0 else np.zeros(T.range.dim, dtype=complex)
    if T.field == REAL:
        f = f.real
    hi = max(hi, lo)
    return NormWitness(lo, hi, w, f, method, int(iters.sum()))


# -- support selections -----------------------------------------------------------


def support_set(T: BlockOperator, ystar, x, eta_prime: float, zero_tol: float = 1e-12) -> IndexSet:
    """``{i in N : Re[(T* y*)(i)](x(i)) > (1 - eta') ||(T* y*)(i)||}``.

    ``N`` collects the blocks whose functional exceeds ``zero_tol`` (the
    operator is assumed normalized, so this is relative to ``||T||``).
    """
    if not 0 < eta_prime < 1:
        raise ValueError("eta' must lie in (0, 1)")
    g = T.adjoint(ystar)
    gn = lp_norm(g, conjugate_exponent(T.domain.base.p), axis=1)
    re = np.real(np.sum(g * np.asarray(x), axis=1))
    return tuple(int(i) for i in range(T.n) if gn[i] > zero_tol and re[i] > (1 - eta_prime) * gn[i])


def support_mass(T: BlockOperator, ystar, A: Sequence[int]) -> float:
    """``sum_{i in A} ||(T* y*)(i)||``."""
    g = T.adjoint(ystar)
    gn = lp_norm(g, conjugate_exponent(T.domain.base.p), axis=1)
    return float(sum(gn[i] for i in A))


def convex_series_support(alphas, zs, eta, eta_prime) -> IndexSet:
    """``{i : Re z_i > 1 - eta'}`` for a convex series with ``Re sum a_i z_i > 1 - eta``.

    Works with floats or exact ``Fraction`` inputs (real ``z``).  The
    guarantee is ``sum_{i in A} a_i > 1 - eta/eta'``.
    """
    alphas = list(alphas)
    zs = list(zs)
    if len(alphas) != len(zs):
        raise ValueError("alphas and zs differ in length")
    if not 0 < eta_prime:
        raise ValueError("eta' must be positive")
    if any(a < 0 for a in alphas) or sum(alphas) > 1:
        raise PremiseError("premise violated: alphas are not a convex series")
    if any(abs(z) > 1 for z in zs):
        raise PremiseError("premise violated: some |z_i| exceeds 1")
    total = sum((a * z for a, z in zip(alphas, zs)), 0)
    re_total = total.real if hasattr(total, "real") else total
    if not re_total > 1 - eta:
        raise PremiseError("premise violated: Re sum a_i z_i <= 1 - eta")
    return tuple(i for i, z in enumerate(zs) if z.real > 1 - eta_prime)


@dataclass
class TailReport:
    eps: float
    gamma: float
    norm_T: NormWitness
    norm_A: NormWitness
    norm_tail: NormWitness
    premise_holds: bool
    conclusion_verified: bool
    counterexample: bool
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"eps": self.eps, "gamma": self.gamma, "norm_T": self.norm_T.to_dict(),
                "norm_A": self.norm_A.to_dict(), "norm_tail": self.norm_tail.to_dict(),
                "premise_holds": self.premise_holds, "conclusion_verified": self.conclusion_verified,
                "counterexample": self.counterexample}


def tail_bound_check(T: BlockOperator, A: Sequence[int], eps: float, delta_c,
                     budget: Budget = Budget()) -> TailReport:
    """Check ``||T P_A|| >= 1 - dC/(1+dC)  =>  ||T (I - P_A)|| <= eps``.

    The premise is tested on the lower bound of ``||T P_A||``; a
    counterexample is reported only when the tail's lower bound exceeds
    ``eps`` and ``||T|| <= 1`` is certified, so bracket noise never shows up
    as a violation.
    """
    dc = float(delta_c(eps))
    gamma = dc / (1 + dc)
    A = index_set(A, T.n)
    nT = operator_norm(T, budget)
    nA = operator_norm(project(T, A), budget)
    nR = operator_norm(project(T, complement(A, T.n)), budget)
    premise = nA.lo >= 1 - gamma
    verified = nR.hi <= eps
    counter = premise and nT.hi <= 1 + 1e-12 and nR.lo > eps
    notes = [] if nT.hi <= 1 + 1e-9 else ["||T|| exceeds 1: lemma premise not met"]
    return TailReport(eps, gamma, nT, nA, nR, premise, verified, counter, notes)
