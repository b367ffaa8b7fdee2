"""Bilinear forms on pairs of finite l_inf-sums.

A form is stored through its kernels ``K[i, j]`` (shape ``(n, m, d, e)``) so
that ``B(x, y) = sum_{i,j} x(i)^T K[i, j] y(j)``.  Its norm is computed via the
left slice operator ``L_B : l_inf^n(X) -> l_1^m(X*)``, which is isometric.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .operators import (BlockOperator, Budget, NormWitness, complement, index_set,
                        operator_norm, upper_bound)
from .spaces import (COMPLEX, REAL, SumSpaceDesc, conjugate_exponent, decode_scalars,
                     encode_scalars, lp_norm, space_from_dict, space_to_dict)


@dataclass
class BlockBilinear:
    left: SumSpaceDesc
    right: SumSpaceDesc
    kernels: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.kernels)
        exp = (self.left.blocks, self.right.blocks, self.left.base.dim, self.right.base.dim)
        if K.shape != exp:
            raise ValueError(f"shape mismatch: kernels {K.shape}, expected {exp}")
        if self.left.field != self.right.field:
            raise ValueError("left and right fields differ")
        if self.field == REAL and np.iscomplexobj(K) and np.any(K.imag != 0):
            raise ValueError("complex entries in a real form")
        self.kernels = K.astype(self.left.dtype)

    @property
    def field(self) -> str:
        return self.left.field

    @property
    def n(self) -> int:
        return self.left.blocks

    @property
    def m(self) -> int:
        return self.right.blocks

    def __call__(self, xL, xR):
        return apply(self, xL, xR)

    def with_kernels(self, K) -> "BlockBilinear":
        return BlockBilinear(self.left, self.right, K)

    def __sub__(self, other: "BlockBilinear") -> "BlockBilinear":
        return self.with_kernels(self.kernels - other.kernels)

    def to_dict(self) -> dict:
        return {"left": space_to_dict(self.left), "right": space_to_dict(self.right),
                "kernels": encode_scalars(self.kernels, self.field)}

    @classmethod
    def from_dict(cls, d: dict) -> "BlockBilinear":
        left = space_from_dict(d["left"])
        return cls(left, space_from_dict(d["right"]), decode_scalars(d["kernels"], left.field))


def _check(B: BlockBilinear, xL=None, xR=None):
    if xL is not None and np.shape(xL) != (B.n, B.left.base.dim):
        raise ValueError(f"shape mismatch: left point {np.shape(xL)}")
    if xR is not None and np.shape(xR) != (B.m, B.right.base.dim):
        raise ValueError(f"shape mismatch: right point {np.shape(xR)}")


def apply(B: BlockBilinear, xL, xR):
    _check(B, xL, xR)
    return np.einsum("ijab,ia,jb->", B.kernels, xL, xR)[()]


def left_slice(B: BlockBilinear, xL) -> np.ndarray:
    """``(L_B xL)(j) = sum_i xL(i)^T K_ij``, shape ``(m, e)``."""
    _check(B, xL=xL)
    return np.einsum("ijab,ia->jb", B.kernels, xL)


def right_slice(B: BlockBilinear, xR) -> np.ndarray:
    """``(R_B xR)(i) = sum_j K_ij xR(j)``, shape ``(n, d)``."""
    _check(B, xR=xR)
    return np.einsum("ijab,jb->ia", B.kernels, xR)


def slice_norm(B: BlockBilinear, side: str, s) -> float:
    """Norm of a slice in the dual l_1-sum."""
    base = B.right.base if side == "left" else B.left.base
    return float(lp_norm(s, conjugate_exponent(base.p), axis=1).sum())


def as_left_operator(B: BlockBilinear) -> BlockOperator:
    """``L_B : l_inf^n(X) -> l_1^m(X*)``."""
    rng = SumSpaceDesc(B.right.base.dual, B.m, 1.0)
    blocks = B.kernels.transpose(0, 1, 3, 2).reshape(B.n, B.m * B.right.base.dim, B.left.base.dim)
    return BlockOperator(B.left, rng, blocks)


def as_right_operator(B: BlockBilinear) -> BlockOperator:
    """``R_B : l_inf^m(X) -> l_1^n(X*)``."""
    rng = SumSpaceDesc(B.left.base.dual, B.n, 1.0)
    blocks = B.kernels.transpose(1, 0, 2, 3).reshape(B.m, B.n * B.left.base.dim, B.right.base.dim)
    return BlockOperator(B.right, rng, blocks)


@dataclass
class BilinearWitness:
    lo: float
    hi: float
    left: np.ndarray
    right: np.ndarray
    hi_method: str
    iterations: int = 0

    @property
    def value(self) -> float:
        return self.lo

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "hi_method": self.hi_method}


def _dual_pick(B: BlockBilinear, slices) -> np.ndarray:
    """Unit blocks ``y(j)`` with ``slices(j) y(j) = ||slices(j)||``."""
    base = B.right.base
    q = conjugate_exponent(base.p)
    out = np.zeros_like(slices)
    for j, s in enumerate(slices):
        nrm = float(lp_norm(s, q))
        if nrm == 0:
            out[j, 0] = 1.0
            continue
        u = s / nrm
        a = np.abs(u)
        ph = np.where(a > 0, np.conj(u) / np.where(a > 0, a, 1.0), 0)
        out[j] = (a ** (q - 1.0) if base.dim > 1 else 1.0) * ph
    return out


def bilinear_norm(B: BlockBilinear, budget: Budget = Budget(), starts=None) -> BilinearWitness:
    """Bracket on ``||B||`` with a witness pair on the product of unit spheres.

    Alternating ascent over ``L_B`` (each half-step fixes one side and picks the
    best response on the other); the right witness is the norming point of
    the final slice, so ``B(wL, wR) = ||L_B wL||`` is real and nonnegative.
    """
    L = as_left_operator(B)
    nw: NormWitness = operator_norm(L, budget, starts=starts)
    wL = nw.witness
    wR = _dual_pick(B, left_slice(B, wL).astype(np.complex128))
    if B.field == REAL:
        wR = wR.real.copy()
    wR = wR / lp_norm(wR, B.right.base.p, axis=1)[:, None]
    lo = float(abs(apply(B, wL, wR)))
    hi, method = nw.hi, nw.hi_method
    if budget.certify and method == "crude":
        rhi, rmethod = upper_bound(as_right_operator(B), budget)
        if rhi < hi:
            hi, method = rhi, rmethod
    return BilinearWitness(lo, max(hi, lo), wL, wR, method, nw.iterations)


def project2(B: BlockBilinear, AL: Sequence[int], AR: Sequence[int]) -> BlockBilinear:
    """``B P_{AL,AR}``: kernels outside ``AL x AR`` zeroed."""
    AL = index_set(AL, B.n)
    AR = index_set(AR, B.m)
    mask = np.zeros((B.n, B.m), dtype=bool)
    if AL and AR:
        mask[np.ix_(list(AL), list(AR))] = True
    return B.with_kernels(np.where(mask[:, :, None, None], B.kernels, 0))


def restrict2(B: BlockBilinear, AL: Sequence[int], AR: Sequence[int]) -> BlockBilinear:
    """The restriction to ``l_inf^AL(X) x l_inf^AR(X)``."""
    AL = index_set(AL, B.n)
    AR = index_set(AR, B.m)
    if not AL or not AR:
        raise ValueError("cannot restrict to an empty index set")
    left = SumSpaceDesc(B.left.base, len(AL), B.left.outer)
    right = SumSpaceDesc(B.right.base, len(AR), B.right.outer)
    return BlockBilinear(left, right, B.kernels[np.ix_(list(AL), list(AR))])


def extend2(B: BlockBilinear, AL: Sequence[int], AR: Sequence[int], n: int, m: int) -> BlockBilinear:
    AL = index_set(AL, n)
    AR = index_set(AR, m)
    left = SumSpaceDesc(B.left.base, n, B.left.outer)
    right = SumSpaceDesc(B.right.base, m, B.right.outer)
    K = np.zeros((n, m) + B.kernels.shape[2:], dtype=B.kernels.dtype)
    K[np.ix_(list(AL), list(AR))] = B.kernels
    return BlockBilinear(left, right, K)


@dataclass
class BilinearTailReport:
    eps: float
    gamma: float
    norm_B: BilinearWitness
    norm_P: BilinearWitness
    norm_tail: BilinearWitness
    left_tail: BilinearWitness
    right_tail: BilinearWitness
    premise_holds: bool
    conclusion_verified: bool
    counterexample: bool
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"eps": self.eps, "gamma": self.gamma, "norm_B": self.norm_B.to_dict(),
                "norm_P": self.norm_P.to_dict(), "norm_tail": self.norm_tail.to_dict(),
                "left_tail": self.left_tail.to_dict(), "right_tail": self.right_tail.to_dict(),
                "premise_holds": self.premise_holds,
                "conclusion_verified": self.conclusion_verified,
                "counterexample": self.counterexample}


def bilinear_tail_check(B: BlockBilinear, AL, AR, eps: float, delta_c_dual,
                        budget: Budget = Budget()) -> BilinearTailReport:
    """Check ``||B P_{AL,AR}|| > 1 - gamma(eps)  =>  ||B - B P_{AL,AR}|| < eps``.

    ``gamma(eps) = dC(eps/2)/(1+dC(eps/2))`` with dC the C-modulus of the dual
    l_1-sum.  Also records the two halves of the triangle bound,
    ``||B - B P_{AL,N}||`` and ``||B P_{AL,N} - B P_{AL,AR}||``.
    """
    dc = float(delta_c_dual(eps / 2))
    gamma = dc / (1 + dc)
    AL = index_set(AL, B.n)
    AR = index_set(AR, B.m)
    allR = tuple(range(B.m))
    nB = bilinear_norm(B, budget)
    nP = bilinear_norm(project2(B, AL, AR), budget)
    tail = bilinear_norm(B - project2(B, AL, AR), budget)
    left_tail = bilinear_norm(project2(B, complement(AL, B.n), allR), budget)
    right_tail = bilinear_norm(project2(B, AL, complement(AR, B.m)), budget)
    premise = nP.lo > 1 - gamma
    verified = tail.hi < eps
    counter = premise and nB.hi <= 1 + 1e-12 and tail.lo >= eps
    notes = [] if nB.hi <= 1 + 1e-9 else ["||B|| exceeds 1: lemma premise not met"]
    return BilinearTailReport(eps, gamma, nB, nP, tail, left_tail, right_tail,
                              premise, verified, counter, notes)


def require_complex(B: BlockBilinear):
    if B.field != COMPLEX:
        raise ValueError("unsupported field for this theorem: complex scalars required")
