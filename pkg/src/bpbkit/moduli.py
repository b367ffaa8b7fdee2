"""Moduli of convexity and C-convexity, and the constant schedules built on them.

Brackets are certified by grid enumeration: every point of the relevant
sphere lies within a known distance of a grid point, and the objective is
Lipschitz in each argument, so the grid minimum minus a slack term is a
lower bound and any exactly evaluated feasible point is an upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import ellipe

from . import kernels
from .spaces import COMPLEX, REAL, SpaceDesc, SumSpaceDesc, lp_norm

ModulusFn = Callable[[float], float]


class ScheduleError(ValueError):
    """A schedule cannot be formed because a modulus vanishes."""


@dataclass(frozen=True)
class ModulusBracket:
    epsilon: float
    lo: float
    hi: float
    resolution: float
    slack: float = 0.0
    method: str = "grid"

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"bracket lo {self.lo} exceeds hi {self.hi}")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def certified(self) -> bool:
        """True when the bracket certifies a strictly positive modulus."""
        return self.lo > 0

    @property
    def inconclusive(self) -> bool:
        """The grid suggests a positive value but the slack swallows it."""
        return not self.certified and self.hi > 2 * self.slack

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= value <= self.hi + tol

    def to_dict(self) -> dict:
        return {"eps": self.epsilon, "lo": self.lo, "hi": self.hi,
                "resolution": self.resolution, "slack": self.slack,
                "method": self.method, "certified": self.certified,
                "inconclusive": self.inconclusive}


def _check_eps(eps: float, upper: float = 2.0):
    if not 0 < eps <= upper:
        raise ValueError(f"eps must lie in (0, {upper}], got {eps}")


# -- modulus of convexity ----------------------------------------------------


def delta_convexity_closed(space: SpaceDesc, eps: float) -> float:
    """Exact modulus of convexity for Hilbert spaces and l_p with p >= 2."""
    _check_eps(eps)
    if space.dim == 1 and space.field == REAL:
        return eps / 2.0
    if space.is_hilbert:
        return 1.0 - math.sqrt(1.0 - (eps / 2.0) ** 2)
    if space.p > 2:
        if math.isinf(space.p):
            return 0.0
        return 1.0 - (1.0 - (eps / 2.0) ** space.p) ** (1.0 / space.p)
    raise ValueError("no closed form for 1 <= p < 2: use the bracket estimator")


def _circle_points(space: SpaceDesc, n: int):
    """``n`` equally spaced angles normalized onto the l_p unit circle of R^2."""
    ang = 2 * math.pi * np.arange(n) / n
    u = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    pts = u / lp_norm(u, space.p)[:, None]
    half = n // 2
    pts[half:] = -pts[:half]  # exact antipodes
    return pts


def _circle_cover_radius(p: float, h: float) -> float:
    # distance from any circle point to the nearest grid point (angular step h)
    if p == 2:
        return h / 2
    min_norm = 1.0 if p <= 2 else 2.0 ** (1.0 / p - 0.5)
    return 2.0 ** (1.0 / p) * h / min_norm


def delta_convexity_bracket(space: SpaceDesc, eps: float, resolution: float = 1e-2) -> ModulusBracket:
    """Certified bracket of the modulus of convexity of a real plane (or C).

    Sphere pairs on an angular grid of step ``resolution``.  With covering
    radius ``rho``: every feasible pair has a grid pair at distance >= eps - 2 rho
    whose midpoint depth is within ``rho``.
    """
    _check_eps(eps)
    if space.dim == 1 and space.field == REAL:
        return ModulusBracket(eps, eps / 2, eps / 2, resolution, 0.0, "exact")
    if space.dim == 1 and space.field == COMPLEX:
        plane = SpaceDesc(REAL, 2.0, 2)
    elif space.dim == 2 and space.field == REAL:
        plane = space
    else:
        raise NotImplementedError("grid bracket needs a real two-dimensional sphere")
    n = 8 * max(1, math.ceil(2 * math.pi / resolution / 8))
    h = 2 * math.pi / n
    rho = _circle_cover_radius(plane.p, h)
    pts = _circle_points(plane, n)
    # the symmetries (x1,x2)->(+-x1,+-x2),(x2,x1) map any x into the first octant
    xs = pts[: n // 8 + 1]
    hi = 1.0
    lo_raw = math.inf
    for x in xs:
        dist = lp_norm(x[None, :] - pts, plane.p)
        depth = 1.0 - lp_norm((x[None, :] + pts) / 2, plane.p)
        feas = dist >= eps - 1e-12
        if feas.any():
            hi = min(hi, float(depth[feas].min()))
        relaxed = dist >= eps - 2 * rho
        if relaxed.any():
            lo_raw = min(lo_raw, float(depth[relaxed].min()))
    lo = max(0.0, min(lo_raw - rho, hi))
    hi = max(hi, 0.0)
    return ModulusBracket(eps, lo, hi, h, 3 * rho, "grid")


# -- modulus of C-convexity --------------------------------------------------


def delta_complex_closed(space: SpaceDesc, eps: float) -> float:
    """Exact modulus of C-convexity of a Hilbert space (real or complex)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if space.dim == 1:
        return eps
    if space.is_hilbert:
        return math.sqrt(1.0 + eps * eps) - 1.0
    raise ValueError("closed form only for Hilbert spaces")


def mean_modulus_lower(eps: float) -> float:
    """``mean_theta |1 + eps e^{i theta}| - 1``.

    A lower bound for the C-modulus of complex l_1^n and of l_1-sums of
    complex Hilbert spaces: the sup over unit scalars dominates the circle
    mean, the mean of ``||a + e^{it} b||`` dominates that of
    ``| ||a|| + e^{it} ||b|| |``, and the latter is subadditive in ``(a, b)``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    m = 4 * eps / (1 + eps) ** 2
    return max(0.0, 2 / math.pi * (1 + eps) * float(ellipe(m)) - 1.0 - 1e-13)


def _sup_over_phases(x, y, eps, p, steps: int = 4096) -> float:
    """Upper bound on ``sup_{|l|=1} ||x + l eps y||`` from a dense phase grid."""
    lam = np.exp(2j * math.pi * np.arange(steps) / steps)
    w = x[None, :] + eps * lam[:, None] * y[None, :]
    vals = _norm_any(w, p)
    h = 2 * math.pi / steps
    return float(vals.max()) + eps * (h / 2) * float(_norm_any(y[None, :], p)[0])


def _norm_any(w, p):
    if isinstance(p, tuple):  # (base p, blocks) for an l_1-sum
        bp, nb = p
        return lp_norm(w.reshape(w.shape[0], nb, -1), bp, axis=2).sum(axis=1)
    return lp_norm(w, p)


def _c_bracket_plane(space: SpaceDesc, eps: float, resolution: float) -> ModulusBracket:
    p = space.p
    h = resolution
    ns = max(2, math.ceil(1 / h) + 1)
    s = np.linspace(0.0, 1.0, ns)
    hs = 1.0 / (ns - 1)
    ng = max(4, math.ceil(2 * math.pi / h))
    hg = 2 * math.pi / ng
    gam = hg * np.arange(ng)
    # coordinate-phase isometries make x real and nonnegative; the sup over
    # unit scalars absorbs the global phase of y
    u = np.stack([s, 1 - s], axis=1)
    xs = u / lp_norm(u, p)[:, None]
    cc, gg = np.meshgrid(s, gam, indexing="ij")
    uy = np.stack([cc.ravel(), (1 - cc.ravel()) * np.exp(1j * gg.ravel())], axis=1)
    ys = uy / lp_norm(np.abs(uy), p)[:, None]
    lam = np.exp(1j * hg * np.arange(ng))
    best, arg = kernels.c_modulus_grid(xs.astype(complex), ys, lam, eps, p)
    k = int(np.argmin(best))
    fmin = float(best[k])
    if p == 1:
        rho_x, rho_y = hs, hs + hg / 2
    else:
        rho_x, rho_y = 2 * hs, 2 * hs + hg / 2
    slack = rho_x + eps * rho_y
    lo = max(0.0, fmin - 1.0 - slack)
    hi_grid = fmin - 1.0 + eps * hg / 2
    hi_fine = _sup_over_phases(xs[k].astype(complex), ys[int(arg[k])], eps, p) - 1.0
    hi = max(lo, min(hi_grid, hi_fine))
    return ModulusBracket(eps, lo, hi, h, slack, "grid")


def _candidate_pairs(base: SpaceDesc, nb: int, rng, count: int):
    dim = base.dim * nb
    pairs = []
    e = np.eye(dim, dtype=complex)
    if dim >= 2:
        pairs.append((e[0], e[1]))
        pairs.append((e[0] + e[1], e[0] - e[1]))
        pairs.append((e[0], e[dim - 1]))
        alt = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0).astype(complex)
        pairs.append((np.ones(dim, dtype=complex), alt))
    pairs.append((e[0], e[0]))
    for _ in range(count):
        g = rng.standard_normal((2, dim)) + 1j * rng.standard_normal((2, dim))
        pairs.append((g[0], g[1]))
    out = []
    key = (base.p, nb) if nb > 1 else base.p
    for x, y in pairs:
        nx = _norm_any(x[None, :], key)[0]
        ny = _norm_any(y[None, :], key)[0]
        out.append((x / nx, y / ny))
    return out, key


def delta_complex_bracket(space, eps: float, resolution: float = 2e-2) -> ModulusBracket:
    """Certified bracket of the modulus of C-convexity of a complex space.

    Supported: complex scalars (any p), complex planes ``l_p^2`` (grid over
    sphere pairs reduced by coordinate phases), complex Hilbert spaces
    (closed form), and complex ``l_1^n`` / ``l_1``-sums of complex Hilbert
    blocks (mean-value lower bound, sampled upper bound).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if space.field != COMPLEX:
        raise ValueError("the C-modulus bracket requires a complex space")
    if isinstance(space, SpaceDesc):
        if space.dim == 1:
            steps = max(4, math.ceil(2 * math.pi / resolution))
            lam = np.exp(2j * math.pi * np.arange(steps) / steps)
            val = float(np.abs(1 + eps * lam).max()) - 1.0
            lo = max(0.0, val - 4e-16)  # rounding guard
            # by rotation invariance one pair (1, 1) suffices, and its maximizer
            # lambda = 1 lies on the grid, so the grid value is the exact sup
            return ModulusBracket(eps, lo, val + 4e-16, resolution, 0.0, "grid")
        if space.is_hilbert:
            v = delta_complex_closed(space, eps)
            return ModulusBracket(eps, v, v, 0.0, 0.0, "closed")
        if space.dim == 2 and not math.isinf(space.p):
            return _c_bracket_plane(space, eps, resolution)
        if space.p == 1:
            return _c_bracket_sampled(space.__class__(COMPLEX, 1.0, 1), space.dim, eps, resolution)
        raise NotImplementedError(f"no C-modulus estimator for {space}")
    if isinstance(space, SumSpaceDesc) and space.outer == 1.0 and space.base.is_hilbert:
        return _c_bracket_sampled(space.base, space.blocks, eps, resolution)
    raise NotImplementedError(f"no C-modulus estimator for {space}")


def _c_bracket_sampled(base: SpaceDesc, nb: int, eps: float, resolution: float) -> ModulusBracket:
    rng = np.random.default_rng(12345)
    pairs, key = _candidate_pairs(base, nb, rng, 256)
    hi = min(_sup_over_phases(x, y, eps, key, steps=1024) for x, y in pairs) - 1.0
    lo = mean_modulus_lower(eps)
    return ModulusBracket(eps, lo, max(hi, lo), resolution, 0.0, "mean-bound")


# -- micro-transitivity --------------------------------------------------------


def theta_micro_transitive(space: SpaceDesc, eps: float) -> float:
    """Radius within which planar rotations stay eps-close to the identity."""
    if not space.is_hilbert:
        raise ValueError("micro-transitivity not supported for non-Hilbert spaces")
    if eps <= 0:
        raise ValueError("eps must be positive")
    return eps / 2.0


# -- modulus providers -------------------------------------------------------


@lru_cache(maxsize=4096)
def _cached_delta_x(space: SpaceDesc, eps: float) -> float:
    try:
        return delta_convexity_closed(space, eps)
    except ValueError:
        return delta_convexity_bracket(space, eps, 2e-3).lo


def _delta_c_from_convexity(space, eps: float) -> float:
    # with M = sup ||x +- eps y|| <= 1 + eps, x is the midpoint of two points of
    # norm <= M at distance 2 eps, so M - 1 >= delta_X(2 eps / (1 + eps))
    if isinstance(space, SpaceDesc) and 1 < space.p < math.inf:
        t = min(2.0, 2 * eps / (1 + eps))
        try:
            return delta_convexity_closed(space, t)
        except ValueError:
            if space.dim == 2 and space.field == REAL:
                return delta_convexity_bracket(space, t, 2e-3).lo
    return 0.0


def _mean_bound_applies(space) -> bool:
    if space.field != COMPLEX:
        return False
    if isinstance(space, SpaceDesc):
        return space.p == 1
    return space.outer == 1.0 and space.base.is_hilbert


@lru_cache(maxsize=4096)
def _cached_delta_c(space, eps: float) -> float:
    # every term below is a valid lower bound; keep the best
    if isinstance(space, SpaceDesc) and (space.is_hilbert or space.dim == 1):
        return delta_complex_closed(space, eps)
    lows = [_delta_c_from_convexity(space, eps)]
    if _mean_bound_applies(space):
        lows.append(mean_modulus_lower(eps))
    if space.field == COMPLEX:
        try:
            lows.append(delta_complex_bracket(space, eps).lo)
        except NotImplementedError:
            pass
    return max(lows)


def delta_x_lower(space: SpaceDesc) -> ModulusFn:
    """Certified lower bound ``t -> delta_X(t)`` (closed form when available)."""
    return lambda t: _cached_delta_x(space, float(min(t, 2.0)))


def delta_c_lower(space) -> ModulusFn:
    """Certified lower bound ``t -> delta_C(t)`` for a range space."""
    return lambda t: _cached_delta_c(space, float(t))


# -- schedules -----------------------------------------------------------------


def _ratio(d: float) -> float:
    return d / (1.0 + d)


def _positive(name: str, value: float) -> float:
    if not value > 0:
        raise ScheduleError(f"hypothesis violated: space not (C-)uniformly convex ({name} = {value})")
    return value


def _check_unit_eps(eps: float):
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")


def eta_operator_bpb(eps: float, delta_x: ModulusFn, delta_c: ModulusFn) -> float:
    """``min{eps/16, dC(eps/16)/(1+dC(eps/16)), dX(eps/2)}`` for operators on l_inf-sums."""
    _check_unit_eps(eps)
    dc = _positive("delta_C(eps/16)", delta_c(eps / 16))
    dx = _positive("delta_X(eps/2)", delta_x(eps / 2))
    return min(eps / 16, _ratio(dc), dx)


def operator_bpb_function(delta_x: ModulusFn, delta_c: ModulusFn) -> ModulusFn:
    """The BPB function of the finite-sum operator theorem: ``t -> eta(t)^6 / 64``."""
    return lambda t: eta_operator_bpb(t, delta_x, delta_c) ** 6 / 64


def block_gap(block_norms, unit_tol: float = 1e-12) -> float | None:
    """``min{1 - ||x(i)|| : ||x(i)|| < 1}``; None when every block is a unit vector."""
    gaps = [1.0 - float(b) for b in block_norms if float(b) < 1.0 - unit_tol]
    return min(gaps) if gaps else None


def gamma_operator_local(eps: float, block_norms, bpb: ModulusFn, theta: ModulusFn,
                         delta_c: ModulusFn) -> float:
    """Local schedule ``min{m_x0, bpb(theta(eps/3)/2), dC(eps/6)/(1+dC(eps/6))}``.

    ``bpb`` is the BPB function of the finite-sum theorem.  The ``m_x0`` term
    is dropped when no block of ``x0`` has norm below one.
    """
    _check_unit_eps(eps)
    terms = [bpb(theta(eps / 3) / 2), _ratio(_positive("delta_C(eps/6)", delta_c(eps / 6)))]
    m = block_gap(block_norms)
    if m is not None:
        terms.append(m)
    return _positive("gamma", min(terms))


def lemma_bilinear_gamma(delta_c_dual: ModulusFn) -> ModulusFn:
    """``t -> dC(t/2)/(1+dC(t/2))`` with dC the modulus of the dual l_1-sum."""
    return lambda t: _ratio(_positive("delta_C(t/2)", delta_c_dual(t / 2)))


def eta_bilinear_bpb(eps: float, gamma_l: ModulusFn, delta_x: ModulusFn) -> float:
    """``min{eps/2^4, gamma(eps/2^4), dX(eps/2)}`` for bilinear forms."""
    _check_unit_eps(eps)
    g = _positive("gamma(eps/16)", gamma_l(eps / 16))
    dx = _positive("delta_X(eps/2)", delta_x(eps / 2))
    return min(eps / 16, g, dx)


def bilinear_bpb_function(gamma_l: ModulusFn, delta_x: ModulusFn) -> ModulusFn:
    """The BPB function for bilinear forms: ``t -> eta(t)^12 / 2^22``."""
    return lambda t: eta_bilinear_bpb(t, gamma_l, delta_x) ** 12 / 2 ** 22


def gamma_bilinear_local(eps: float, left_norms, right_norms, bpb: ModulusFn,
                         theta: ModulusFn, delta_c: ModulusFn) -> float:
    """Local bilinear schedule with the two gap terms ``m_xL`` and ``m_xR``."""
    _check_unit_eps(eps)
    terms = [bpb(theta(eps / 3) / 2), _ratio(_positive("delta_C(eps/6)", delta_c(eps / 6)))]
    for norms in (left_norms, right_norms):
        m = block_gap(norms)
        if m is not None:
            terms.append(m)
    return _positive("gamma", min(terms))
