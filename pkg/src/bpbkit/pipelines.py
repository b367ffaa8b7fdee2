"""Bishop-Phelps-Bollobas corrections on finite l_inf-sums.

Each ``correct_*`` function takes an almost norm-attaining map (and point)
and constructs a nearby map attaining its norm at a nearby point, step by
step.  Every inequality the construction relies on is recomputed and logged;
a failing check raises :class:`ContractBreach` naming the step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import moduli
from .bilinear import (BlockBilinear, apply as bapply, as_left_operator, as_right_operator,
                       bilinear_norm, extend2, left_slice, project2, restrict2, right_slice)
from .operators import (BlockOperator, Budget, complement, crude_bound, extend, operator_norm,
                        project, range_functional, range_norm, restrict, upper_bound)
from .spaces import (COMPLEX, REAL, SpaceDesc, SumSpaceDesc, conjugate_exponent, lp_norm,
                     norming_functional)


class PremiseViolation(ValueError):
    """The input does not meet the hypothesis of the construction."""

    exit_code = 2


class ContractBreach(RuntimeError):
    """An inequality the construction guarantees failed numerically."""

    exit_code = 3

    def __init__(self, step: str, message: str):
        super().__init__(f"pipeline contract breach at step '{step}': {message}")
        self.step = step


@dataclass(frozen=True)
class Tolerances:
    attain: float = 1e-8      # |‖S z0‖ - 1| and |‖S‖ - 1|
    arith: float = 1e-10      # identities that hold exactly in exact arithmetic
    check: float = 1e-14      # slack for strict inequalities between O(1) quantities
    premise_floor: float = 1e-14  # premise bands below this are not resolvable in float64
    zero: float = 1e-12       # blocks of the adjoint functional treated as zero
    norm: float = 1e-8        # input normalization ‖T‖ = 1


# -- logging -------------------------------------------------------------------


_REL = {
    "<": lambda a, b, t: a < b + t,
    "<=": lambda a, b, t: a <= b + t,
    ">": lambda a, b, t: a > b - t,
    ">=": lambda a, b, t: a >= b - t,
}


@dataclass
class StepRecord:
    step: str
    claim: str
    lhs: float
    relation: str
    rhs: float
    passed: bool

    def to_dict(self) -> dict:
        return {"step": self.step, "claim": self.claim, "lhs": self.lhs,
                "relation": self.relation, "rhs": self.rhs, "passed": self.passed}


class StepLog:
    def __init__(self, tol: Tolerances, fault: Callable[[str], bool] | None = None):
        self.records: list[StepRecord] = []
        self.values: dict = {}
        self.notes: list[str] = []
        self.tol = tol
        self.fault = fault

    def check(self, step: str, claim: str, lhs: float, relation: str, rhs: float,
              tol: float | None = None, enforce: bool = True) -> bool:
        t = self.tol.check if tol is None else tol
        ok = bool(_REL[relation](float(lhs), float(rhs), t))
        if self.fault is not None and self.fault(step):
            ok = False  # injected failure for harness tests
        self.records.append(StepRecord(step, claim, float(lhs), relation, float(rhs), ok))
        if enforce and not ok:
            raise ContractBreach(step, f"{claim}: {lhs!r} {relation} {rhs!r} failed")
        return ok

    def record(self, **values):
        self.values.update(values)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.records)


# -- certificate ---------------------------------------------------------------


@dataclass
class BpbCertificate:
    theorem: str
    eps: float
    schedule: dict
    corrected: object
    point: object
    attain_residual: float
    norm_bracket: tuple
    map_distance: tuple
    point_distance: float
    premise_margin: float
    premise_resolved: bool
    steps: list
    sets: dict
    notes: list = field(default_factory=list)
    status: str = "ok"

    @property
    def passed(self) -> bool:
        return self.status == "ok" and all(s.passed for s in self.steps)

    def to_dict(self) -> dict:
        pt = self.point
        if isinstance(pt, tuple):
            point = {"left": _enc(pt[0]), "right": _enc(pt[1])}
        else:
            point = _enc(pt)
        return {
            "theorem": self.theorem, "eps": self.eps, "status": self.status,
            "schedule": self.schedule,
            "corrected": self.corrected.to_dict(), "point": point,
            "attain_residual": self.attain_residual,
            "norm_bracket": list(self.norm_bracket),
            "map_distance": {"lo": self.map_distance[0], "hi": self.map_distance[1]},
            "point_distance": self.point_distance,
            "premise_margin": self.premise_margin, "premise_resolved": self.premise_resolved,
            "sets": {k: list(v) for k, v in self.sets.items()},
            "steps": [s.to_dict() for s in self.steps], "notes": list(self.notes),
        }


def _enc(a):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return np.stack([a.real, a.imag], axis=-1).tolist()
    return a.tolist()


# -- isometries and contractions -----------------------------------------------


@dataclass
class IsometryBlock:
    matrix: np.ndarray
    kind: str  # "rotation", "rank-one-contraction" or "identity"

    def __call__(self, x):
        return self.matrix @ np.asarray(x)


def _orthogonal_unit(x: np.ndarray) -> np.ndarray:
    """A deterministic unit vector orthogonal to unit ``x`` (Hermitian product)."""
    k = int(np.argmin(np.abs(x)))
    e = np.zeros_like(x)
    e[k] = 1.0
    u = e - np.vdot(x, e) * x
    return u / np.linalg.norm(u)


def micro_transitive_isometry(x, y, space: SpaceDesc | None = None) -> IsometryBlock:
    """The rotation of the plane ``span{x, y}`` carrying ``x`` to ``y``.

    In the orthonormal basis ``(x, u)`` of that plane the map is
    ``[[a, -b], [b, conj(a)]]`` with ``a = <x, y>`` and ``y = a x + b u``; it is
    the identity on the orthogonal complement.  Its eigenvalues are
    ``exp(+-i t)`` with ``cos t = Re a``, so ``||U - I|| = ||x - y||`` exactly.
    When ``y`` is a unimodular multiple of ``x`` (including ``y = -x``) the
    auxiliary direction ``u`` is a fixed coordinate-derived unit vector.
    """
    if space is not None and not space.is_hilbert:
        raise ValueError("micro-transitivity not supported for non-Hilbert spaces")
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be vectors of equal length")
    if abs(np.linalg.norm(x) - 1) > 1e-9 or abs(np.linalg.norm(y) - 1) > 1e-9:
        raise ValueError("x and y must be unit vectors")
    real = space is not None and space.field == REAL
    d = len(x)
    if d == 1:
        U = (y / x).reshape(1, 1)
        kind = "identity" if np.allclose(x, y, rtol=0, atol=0) else "rotation"
        return IsometryBlock(U.real.copy() if real else U, kind)
    a = np.vdot(x, y)
    r = y - a * x
    b = float(np.linalg.norm(r))
    if b > 1e-14:
        # second Gram-Schmidt pass: r loses orthogonality when y is close to x
        r = r - np.vdot(x, r) * x
        u = r / np.linalg.norm(r)
        a = np.vdot(x, y)
        b = float(np.real(np.vdot(u, y)))
    else:
        u = _orthogonal_unit(x)
        a = a / abs(a)
        b = 0.0
    P = np.outer(x, x.conj()) + np.outer(u, u.conj())
    U = (np.eye(d) - P + np.outer(a * x + b * u, x.conj())
         + np.outer(-b * x + np.conj(a) * u, u.conj()))
    kind = "identity" if np.array_equal(x, y) else "rotation"
    if kind == "identity":
        U = np.eye(d, dtype=complex)
    return IsometryBlock(U.real.copy() if real else U, kind)


def contraction_through_point(xhat, w, space: SpaceDesc) -> IsometryBlock:
    """The rank-one map ``U = w (x) J(xhat)``: ``U xhat = w`` and ``||U|| = ||w||``."""
    xhat = np.asarray(xhat)
    if float(lp_norm(xhat, space.p)) == 0:
        raise ValueError("xhat must be nonzero")
    J = norming_functional(space, xhat / float(lp_norm(xhat, space.p)))
    U = np.outer(np.asarray(w), J)
    if space.field == REAL:
        U = U.real.copy()
    return IsometryBlock(U, "rank-one-contraction")


def finite_norm_attainment(R, budget: Budget, starts=None):
    """Return ``(Q, witness, report)`` with ``Q = R``.

    In finite dimensions the unit balls are compact, so ``R`` attains its norm
    and ``Q := R`` satisfies ``||Q - R|| = 0``.  The witness is the best point
    found by the norm oracle; ``oracle_slack`` compares its value with the
    oracle's lower bound.
    """
    if isinstance(R, BlockBilinear):
        w = bilinear_norm(R, budget, starts=starts)
        val = abs(bapply(R, w.left, w.right))
    else:
        w = operator_norm(R, budget, starts=starts)
        val = float(range_norm(R.range, R.apply(w.witness)))
    report = {"q_minus_r": 0.0, "oracle_slack": float(1 - val / w.lo) if w.lo > 0 else 0.0}
    return R, w, report


# -- moduli bundles ---------------------------------------------------------------


@dataclass
class ModuliBundle:
    delta_x: Callable[[float], float]
    delta_c: Callable[[float], float]
    theta: Callable[[float], float] | None = None


def operator_moduli(T: BlockOperator) -> ModuliBundle:
    base = T.domain.base
    theta = (lambda t: moduli.theta_micro_transitive(base, t)) if base.is_hilbert else None
    return ModuliBundle(moduli.delta_x_lower(base), moduli.delta_c_lower(T.range), theta)


def bilinear_moduli(B: BlockBilinear) -> ModuliBundle:
    base = B.left.base
    dual_sum = SumSpaceDesc(base.dual, max(B.n, B.m), 1.0)
    theta = (lambda t: moduli.theta_micro_transitive(base, t)) if base.is_hilbert else None
    return ModuliBundle(moduli.delta_x_lower(base), moduli.delta_c_lower(dual_sum), theta)


# -- shared helpers ----------------------------------------------------------------


def _phase(z) -> complex:
    a = abs(z)
    return z / a if a > 0 else 1.0


def _cheap(budget: Budget) -> Budget:
    return Budget(budget.starts, budget.maxiter, budget.tol, budget.seed, False, budget.grid_points)


def _op_hi(T: BlockOperator, threshold: float, budget: Budget) -> tuple[float, str]:
    """Upper bound on ``||T||``, refined by grids only when the crude one is not enough."""
    hi = crude_bound(T)
    if hi < threshold or not budget.certify:
        return hi, "crude"
    return upper_bound(T, budget)


def _bil_hi(B: BlockBilinear, threshold: float, budget: Budget) -> tuple[float, str]:
    hi = min(crude_bound(as_left_operator(B)), crude_bound(as_right_operator(B)))
    if hi < threshold or not budget.certify:
        return hi, "crude"
    a = upper_bound(as_left_operator(B), budget)
    b = upper_bound(as_right_operator(B), budget)
    return min(a, b, key=lambda c: c[0])


def _premise(log: StepLog, value: float, band: float, what: str) -> tuple[float, bool]:
    margin = 1.0 - value
    resolved = band >= log.tol.premise_floor
    log.record(premise_band=band, premise_margin=margin, premise_resolved=resolved)
    if not margin < max(band, log.tol.premise_floor):
        raise PremiseViolation(f"premise violated: {what} = {value!r} is not > 1 - {band!r}")
    if not resolved:
        log.notes.append(f"premise band {band:.3e} is below float64 resolution; "
                         f"accepted at margin {margin:.3e}")
    return margin, resolved


def _check_eps(eps: float):
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")


def _unit_blocks(x, p, log: StepLog, step: str) -> np.ndarray:
    nrm = lp_norm(x, p, axis=1)
    if np.any(nrm < 1e-12):
        raise ContractBreach(step, "block of norm below 1e-12 cannot be normalized")
    return x / nrm[:, None]


def _select(re_vals, norms, threshold: float, tol: Tolerances) -> tuple:
    """Indices with ``Re g_i(x_i) > threshold ||g_i||``, up to ``tol.check``.

    The total deficiency ``sum ||g_i|| - Re g_i(x_i)`` is bounded by the premise
    margin, so an absolute slack of ``tol.check`` keeps selections meaningful
    when ``1 - threshold`` is below float64 resolution.
    """
    return tuple(int(i) for i in range(len(norms))
                 if norms[i] > tol.zero and re_vals[i] > threshold * norms[i] - tol.check)


def _functional(T: BlockOperator, y) -> np.ndarray:
    f = range_functional(T.range, y)
    return f.real.copy() if T.field == REAL else f.astype(complex)


def _schedule(fn, *args):
    try:
        return fn(*args)
    except moduli.ScheduleError as exc:
        raise PremiseViolation(str(exc)) from exc


# -- operator BPB ------------------------------------------------------------------


def correct_operator(T: BlockOperator, x0, eps: float, budget: Budget = Budget(),
                     tol: Tolerances = Tolerances(), bundle: ModuliBundle | None = None,
                     fault=None) -> BpbCertificate:
    """Correct ``(T, x0)`` with ``||T x0|| > 1 - eta^6/64`` into ``(S, z0)``.

    Guarantees ``||S z0|| = ||S|| = 1``, ``||S - T|| < eps``, ``||z0 - x0|| < eps``.
    """
    _check_eps(eps)
    log = StepLog(tol, fault)
    x0 = np.asarray(x0)
    base = T.domain.base
    p = base.p
    q = conjugate_exponent(p)
    n = T.n
    bundle = bundle or operator_moduli(T)
    eta = _schedule(moduli.eta_operator_bpb, eps, bundle.delta_x, bundle.delta_c)
    sched = {"eta": eta, "eta^6/64": eta ** 6 / 64, "eta^3/8": eta ** 3 / 8,
             "eta^3/4": eta ** 3 / 4, "eta^2": eta ** 2, "eps/16": eps / 16}
    cheap = _cheap(budget)

    # inputs
    nT = operator_norm(T, cheap)
    if abs(nT.lo - 1) > tol.norm:
        raise PremiseViolation(f"operator is not normalized: ||T|| ~ {nT.lo!r}")
    if x0.shape != (n, base.dim) or abs(float(lp_norm(x0, p, axis=1).max()) - 1) > tol.arith:
        raise PremiseViolation("x0 is not a unit vector of the domain")
    Tx0 = T.apply(x0)
    val = float(range_norm(T.range, Tx0))
    margin, resolved = _premise(log, val, eta ** 6 / 64, "||T x0||")

    # y0* norming T x0, adjoint blocks and the support set A
    y0 = _functional(T, Tx0)
    log.check("choose y0*", "y0*(T x0) = ||T x0||", abs(np.sum(y0 * Tx0) - val), "<=", 0.0, tol.arith)
    g = T.adjoint(y0)
    gn = lp_norm(g, q, axis=1)
    re = np.real(np.sum(g * x0, axis=1))
    N = [i for i in range(n) if gn[i] > tol.zero]
    A = _select(re, gn, 1 - eta ** 3 / 8, tol)
    log.record(N=N)
    log.check("support A", "sum_A ||(T*y0*)(i)|| > 1 - eta^3/8", gn[list(A)].sum(), ">", 1 - eta ** 3 / 8)
    if not A:
        raise ContractBreach("support A", "empty support set")
    tail_hi, tail_m = _op_hi(project(T, complement(A, n)), eps / 16, budget)
    log.check("tail A", "||T P_A - T|| < eps/16", tail_hi, "<", eps / 16, 0.0)

    # restriction and normalized point
    That = restrict(T, A)
    xA = x0[list(A)]
    nA = lp_norm(xA, p, axis=1)
    xhat = xA / nA[:, None]
    log.check("normalize x0 on A", "max ||xhat0(i) - x0(i)|| < eta^3/8",
              float((1 - nA).max()), "<", eta ** 3 / 8)
    v = That.apply(xhat)
    nv = float(range_norm(T.range, v))
    log.check("restrict", "||That xhat0|| > 1 - eta^3/4", nv, ">", 1 - eta ** 3 / 4)

    # perturbation R(z) = That z + eta y1*(That z) That xhat0 / ||That xhat0||
    y1 = _functional(T, v)
    log.check("choose y1*", "Re y1*(That xhat0) = ||That xhat0||",
              abs(np.real(np.sum(y1 * v)) - nv), "<=", 0.0, tol.arith)
    gy = That.adjoint(y1)
    Rb = That.blocks + eta * np.einsum("m,nd->nmd", v / nv, gy)
    R = That.with_blocks(Rb)
    Rx = float(range_norm(R.range, R.apply(xhat)))
    log.check("perturb", "||R xhat0|| >= (1 - eta^3/4)(1 + eta)", Rx, ">=",
              (1 - eta ** 3 / 4) * (1 + eta))

    # attainment in finite dimensions
    Q, wq, att = finite_norm_attainment(R, cheap, starts=xhat[None])
    normR = wq.lo
    log.record(oracle_slack=att["oracle_slack"])
    log.check("attain", "||Q - R|| = 0 <= eta^3/4", att["q_minus_r"], "<=", eta ** 3 / 4, 0.0)
    log.check("attain", "||R|| >= ||R xhat0||", normR, ">=", Rx)
    w0 = wq.witness.copy()
    c = np.sum(y1 * That.apply(w0))
    w0 = w0 * np.conj(_phase(c))
    if T.field == REAL:
        w0 = w0.real
    log.record(w0_rotation_phase=complex(np.conj(_phase(c))))
    re_w = float(np.real(np.sum(y1 * That.apply(w0))))
    log.check("rotate w0", "Re y1*(That w0) >= 1 - eta^2", re_w, ">=", 1 - eta ** 2)
    mid = (w0 + xhat) / 2
    log.check("midpoint", "Re y1*(That (w0+xhat0)/2) >= 1 - eta^2",
              float(np.real(np.sum(y1 * That.apply(mid)))), ">=", 1 - eta ** 2)

    # second support set B inside A
    gyn = lp_norm(gy, q, axis=1)
    re_mid = np.real(np.sum(gy * mid, axis=1))
    Bl = _select(re_mid, gyn, 1 - eta, tol)
    log.check("support B", "sum_B ||That*y1*(i)|| > 1 - eta", gyn[list(Bl)].sum(), ">", 1 - eta)
    tailB_hi, _ = _op_hi(project(That, complement(Bl, len(A))), eps / 16, budget)
    log.check("tail B", "||That (I - P_B)|| < eps/16", tailB_hi, "<", eps / 16, 0.0)
    for k in Bl:
        log.check("uniform convexity", f"||(w0+xhat0)/2 ({A[k]})|| > 1 - eta",
                  float(lp_norm(mid[k], p)), ">", 1 - eta)
        log.check("uniform convexity", f"||w0({A[k]}) - xhat0({A[k]})|| < eps/2",
                  float(lp_norm(w0[k] - xhat[k], p)), "<", eps / 2)

    # assemble S~ = Q P_B + Q (I - P_B) U
    Sb = Q.blocks.copy()
    zhat = xhat.copy()
    for k in range(len(A)):
        if k in Bl:
            zhat[k] = w0[k]
        else:
            U = contraction_through_point(xhat[k], w0[k], base)
            Sb[k] = Q.blocks[k] @ U.matrix
    St = That.with_blocks(Sb)
    Qw = Q.apply(w0)
    log.check("assemble", "S~ z0 = Q w0", float(np.abs(St.apply(zhat) - Qw).max()), "<=", 0.0, tol.arith)
    nSt = operator_norm(St, cheap, starts=zhat[None])
    log.check("assemble", "||S~|| <= ||Q||", nSt.lo, "<=", normR * (1 + 1e-9), 0.0)

    # normalize, extend, and build z0
    S = extend(St.with_blocks(St.blocks / nSt.lo), A, n)
    z0 = x0.copy()
    z0[list(A)] = zhat
    return _finish_operator(log, "operator-bpb", T, x0, S, z0, eps, sched, margin, resolved,
                            {"N": tuple(N), "A": A, "B": tuple(A[k] for k in Bl)},
                            budget, tol, check_point=True,
                            extra_notes=["the normalizing constant written as ||Q~|| is read as ||S~||"])


def _finish_operator(log, theorem, T, x0, S, z0, eps, sched, margin, resolved, sets,
                     budget, tol, check_point, extra_notes=()):
    p = T.domain.base.p
    cheap = _cheap(budget)
    Sz = float(range_norm(S.range, S.apply(z0)))
    resid = abs(Sz - 1)
    log.check("postcondition", "| ||S z0|| - 1 | <= attain_tol", resid, "<=", tol.attain, 0.0)
    nS = operator_norm(S, cheap, starts=z0[None])
    log.check("postcondition", "| ||S|| - 1 | <= attain_tol", abs(nS.lo - 1), "<=", tol.attain, 0.0)
    nS_hi = _op_hi(S, 1.0 + tol.attain, budget)[0]
    if budget.certify:
        log.check("postcondition", "||S|| <= 1 + attain_tol (upper bound)", nS_hi - 1, "<=", tol.attain, 0.0)
    D = S - T
    dist_lo = float(range_norm(D.range, D.apply(x0)))
    dist_hi, method = _op_hi(D, eps, budget)
    if dist_hi >= eps:
        dist_lo = max(dist_lo, operator_norm(D, cheap).lo)
    log.check("postcondition", "||S - T|| < eps", dist_hi, "<", eps, 0.0)
    pd = float(lp_norm(z0 - x0, p, axis=1).max())
    if check_point:
        log.check("postcondition", "||z0 - x0|| < eps", pd, "<", eps, 0.0)
    log.check("postcondition", "||z0|| = 1", abs(float(lp_norm(z0, p, axis=1).max()) - 1), "<=", 0.0, tol.arith)
    notes = list(log.notes) + list(extra_notes)
    return BpbCertificate(theorem, eps, sched, S, z0, resid, (nS.lo, max(nS.lo, nS_hi)), (dist_lo, dist_hi),
                          pd, margin, resolved, log.records, sets,
                          notes + [f"map distance bound: {method}"])


# -- operator local (attainment at x0 itself) -----------------------------------------


def correct_operator_local(T: BlockOperator, x0, eps: float, budget: Budget = Budget(),
                           tol: Tolerances = Tolerances(), bundle: ModuliBundle | None = None,
                           fault=None) -> BpbCertificate:
    """Correct ``(T, x0)`` into ``S`` with ``||S x0|| = ||S|| = 1`` and ``||S - T|| < eps``."""
    _check_eps(eps)
    base = T.domain.base
    if not base.is_hilbert:
        raise PremiseViolation("micro-transitivity not supported for non-Hilbert spaces")
    log = StepLog(tol, fault)
    x0 = np.asarray(x0)
    p, q, n = base.p, conjugate_exponent(base.p), T.n
    bundle = bundle or operator_moduli(T)
    bpb = moduli.operator_bpb_function(bundle.delta_x, bundle.delta_c)
    bnorms = lp_norm(x0, p, axis=1)
    gamma = _schedule(moduli.gamma_operator_local, eps, bnorms, bpb, bundle.theta, bundle.delta_c)
    eps_sub = bundle.theta(eps / 3) / 2
    sched = {"gamma": gamma, "gamma^2/4": gamma ** 2 / 4, "gamma/2": gamma / 2,
             "m_x0": moduli.block_gap(bnorms), "eps_sub": eps_sub, "theta(eps/3)": bundle.theta(eps / 3)}
    cheap = _cheap(budget)

    nT = operator_norm(T, cheap)
    if abs(nT.lo - 1) > tol.norm:
        raise PremiseViolation(f"operator is not normalized: ||T|| ~ {nT.lo!r}")
    if x0.shape != (n, base.dim) or abs(float(bnorms.max()) - 1) > tol.arith:
        raise PremiseViolation("x0 is not a unit vector of the domain")
    Tx0 = T.apply(x0)
    val = float(range_norm(T.range, Tx0))
    margin, resolved = _premise(log, val, gamma ** 2 / 4, "||T x0||")

    y0 = _functional(T, Tx0)
    g = T.adjoint(y0)
    gn = lp_norm(g, q, axis=1)
    re = np.real(np.sum(g * x0, axis=1))
    A = _select(re, gn, 1 - gamma / 2, tol)
    log.check("support A", "sum_A ||(T*y0*)(i)|| > 1 - gamma/2", gn[list(A)].sum(), ">", 1 - gamma / 2)
    if not A:
        raise ContractBreach("support A", "empty support set")
    for i in A:
        log.check("support A", f"||x0({i})|| = 1", abs(bnorms[i] - 1), "<=", 0.0, 1e-12)
    tail_hi, _ = _op_hi(project(T, complement(A, n)), eps / 6, budget)
    log.check("tail A", "||T P_A - T|| < eps/6", tail_hi, "<", eps / 6, 0.0)

    That = restrict(T, A)
    xhat = x0[list(A)]
    log.check("restrict", "||That xhat0|| > 1 - gamma",
              float(range_norm(T.range, That.apply(xhat))), ">", 1 - gamma)
    nTh = operator_norm(That, cheap, starts=xhat[None])
    Ttil = That.with_blocks(That.blocks / nTh.lo)
    log.check("normalize", "||T~ xhat0|| > 1 - gamma",
              float(range_norm(T.range, Ttil.apply(xhat))), ">", 1 - gamma)

    try:
        sub = correct_operator(Ttil, xhat, eps_sub, budget, tol, bundle, fault)
    except PremiseViolation as exc:
        raise ContractBreach("finite-sum correction", str(exc)) from exc
    log.records.extend(sub.steps)
    Shat, z0 = sub.corrected, sub.point
    log.check("finite-sum correction", "||Shat - T~|| < theta(eps/3)/2", sub.map_distance[1], "<", eps_sub, 0.0)
    log.check("finite-sum correction", "||z0 - xhat0|| < theta(eps/3)/2", sub.point_distance, "<", eps_sub, 0.0)

    zhat = _unit_blocks(z0, p, log, "renormalize")
    log.check("renormalize", "||Shat zhat0|| = 1",
              abs(float(range_norm(T.range, Shat.apply(zhat))) - 1), "<=", tol.attain, 0.0)
    log.check("renormalize", "||zhat0 - xhat0|| < theta(eps/3)",
              float(lp_norm(zhat - xhat, p, axis=1).max()), "<", bundle.theta(eps / 3))

    Sb = np.zeros_like(T.blocks)
    rot_dev = 0.0
    for k, i in enumerate(A):
        U = micro_transitive_isometry(x0[i], zhat[k], base)
        dev = float(np.linalg.norm(U.matrix - np.eye(base.dim), 2))
        rot_dev = max(rot_dev, dev)
        log.check("transport", f"U_{i} x0({i}) = zhat0({i})",
                  float(np.abs(U.matrix @ x0[i] - zhat[k]).max()), "<=", 0.0, 1e-12)
        log.check("transport", f"||U_{i} - I|| < eps/3", dev, "<", eps / 3)
        Sb[i] = Shat.blocks[k] @ U.matrix
    log.record(max_rotation=rot_dev)
    S = T.with_blocks(Sb)
    z = x0.copy()  # the point is kept
    return _finish_operator(log, "operator-local", T, x0, S, z, eps, sched, margin, resolved,
                            {"A": A, "B": sub.sets.get("B", ())}, budget, tol, check_point=True,
                            extra_notes=["tail bound after the support set is checked against eps/6"])


# -- bilinear BPB -----------------------------------------------------------------------


def _require_bilinear(B: BlockBilinear):
    if B.field != COMPLEX:
        raise ValueError("unsupported field for this theorem: complex scalars required")
    if B.left.base != B.right.base:
        raise ValueError("left and right base spaces must coincide")


def correct_bilinear(B: BlockBilinear, xL, xR, eps: float, budget: Budget = Budget(),
                     tol: Tolerances = Tolerances(), bundle: ModuliBundle | None = None,
                     fault=None) -> BpbCertificate:
    """Correct ``(B, xL, xR)`` with ``|B(xL, xR)| > 1 - eta^12/2^22``."""
    _require_bilinear(B)
    _check_eps(eps)
    log = StepLog(tol, fault)
    xL = np.asarray(xL, dtype=complex)
    xR = np.asarray(xR, dtype=complex)
    base = B.left.base
    p, q, n, m = base.p, conjugate_exponent(base.p), B.n, B.m
    bundle = bundle or bilinear_moduli(B)
    gam = moduli.lemma_bilinear_gamma(bundle.delta_c)
    eta = _schedule(moduli.eta_bilinear_bpb, eps, gam, bundle.delta_x)
    sched = {"eta": eta, "eta^12/2^22": eta ** 12 / 2 ** 22, "eta^6/2^11": eta ** 6 / 2 ** 11,
             "eta^3/2^5": eta ** 3 / 2 ** 5, "eta^3/2^4": eta ** 3 / 2 ** 4, "eps/16": eps / 16}
    cheap = _cheap(budget)

    nB = bilinear_norm(B, cheap)
    if abs(nB.lo - 1) > tol.norm:
        raise PremiseViolation(f"form is not normalized: ||B|| ~ {nB.lo!r}")
    for x, k in ((xL, n), (xR, m)):
        if x.shape != (k, base.dim) or abs(float(lp_norm(x, p, axis=1).max()) - 1) > tol.arith:
            raise PremiseViolation("points must be unit vectors of the domains")
    c0 = bapply(B, xL, xR)
    margin, resolved = _premise(log, abs(c0), eta ** 12 / 2 ** 22, "|B(xL, xR)|")

    # global rotation: T' = conj(phi) B has T'(xL, xR) > 0
    phi = _phase(c0)
    Tp = B.with_kernels(B.kernels * np.conj(phi))
    log.record(global_phase=complex(phi))

    sl = left_slice(Tp, xL)
    sln = lp_norm(sl, q, axis=1)
    reR = np.real(np.sum(sl * xR, axis=1))
    tR = eta ** 6 / 2 ** 11
    AR = _select(reR, sln, 1 - tR, tol)
    log.check("support A_R", "sum_{A_R} ||(L_T xL)(i)|| > 1 - eta^6/2^11", sln[list(AR)].sum(), ">", 1 - tR)
    if not AR:
        raise ContractBreach("support A_R", "empty support set")
    nR = lp_norm(xR, p, axis=1)
    for j in AR:
        log.check("support A_R", f"||xR({j})|| > 1 - eta^6/2^11", nR[j], ">", 1 - tR)
    xRh = np.zeros_like(xR)
    xRh[list(AR)] = xR[list(AR)] / nR[list(AR)][:, None]
    log.check("support A_R", "Re T(xL, xhatR) > 1 - eta^6/2^10",
              float(np.real(bapply(Tp, xL, xRh))), ">", 1 - eta ** 6 / 2 ** 10)

    sr = right_slice(Tp, xRh)
    srn = lp_norm(sr, q, axis=1)
    reL = np.real(np.sum(sr * xL, axis=1))
    tL = eta ** 3 / 2 ** 5
    AL = _select(reL, srn, 1 - tL, tol)
    log.check("support A_L", "sum_{A_L} ||(R_T xhatR)(i)|| > 1 - eta^3/2^5", srn[list(AL)].sum(), ">", 1 - tL)
    if not AL:
        raise ContractBreach("support A_L", "empty support set")
    nL = lp_norm(xL, p, axis=1)
    for i in AL:
        log.check("support A_L", f"||xL({i})|| > 1 - eta^3/2^5", nL[i], ">", 1 - tL)
    xLh = np.zeros_like(xL)
    xLh[list(AL)] = xL[list(AL)] / nL[list(AL)][:, None]
    log.check("support A_L", "Re T(xhatL, xhatR) > 1 - eta^3/2^4",
              float(np.real(bapply(Tp, xLh, xRh))), ">", 1 - eta ** 3 / 2 ** 4)
    tail_hi, _ = _bil_hi(Tp - project2(Tp, AL, AR), eps / 16, budget)
    log.check("tail A_L x A_R", "||T P_{A_L,A_R} - T|| < eps/2^4", tail_hi, "<", eps / 16, 0.0)

    # restriction and the rank-one perturbation
    That = restrict2(Tp, AL, AR)
    xl = xLh[list(AL)]
    xr = xRh[list(AR)]
    c = bapply(That, xl, xr)
    a = right_slice(That, xr)   # z_L -> T(z_L, xhatR)
    b = left_slice(That, xl)    # z_R -> T(xhatL, z_R)
    Rk = That.kernels + eta * (abs(c) / c) * np.einsum("ia,jb->ijab", a, b)
    R = That.with_kernels(Rk)
    Rxx = abs(bapply(R, xl, xr))
    log.check("perturb", "|R(xhatL, xhatR)| = |c| + eta |c|^2", abs(Rxx - (abs(c) + eta * abs(c) ** 2)),
              "<=", 0.0, tol.arith)
    log.check("perturb", "|R(xhatL, xhatR)| > (1 - eta^3/2^4) + eta (1 - eta^3/2^4)^2", Rxx, ">",
              (1 - eta ** 3 / 16) + eta * (1 - eta ** 3 / 16) ** 2)

    Q, wq, att = finite_norm_attainment(R, cheap, starts=xl[None])
    normR = wq.lo
    log.record(oracle_slack=att["oracle_slack"])
    log.check("attain", "||Q - R|| = 0 < eta^3/2^4", att["q_minus_r"], "<", eta ** 3 / 16, 0.0)
    log.check("attain", "||R|| >= |R(xhatL, xhatR)|", normR, ">=", Rxx)
    wL, wR = wq.left.astype(complex), wq.right.astype(complex)
    cl = bapply(That, wL, xr)
    cr = bapply(That, xl, wR)
    log.check("attain", "min(|T(wL, xhatR)|, |T(xhatL, wR)|) >= 1 - eta^2/4",
              min(abs(cl), abs(cr)), ">=", 1 - eta ** 2 / 4)
    wL = wL * np.conj(_phase(cl))
    wR = wR * np.conj(_phase(cr))
    log.record(wL_rotation_phase=complex(np.conj(_phase(cl))), wR_rotation_phase=complex(np.conj(_phase(cr))))
    log.check("rotate", "|Q(wL, wR)| = ||Q||", abs(abs(bapply(Q, wL, wR)) - normR), "<=", 0.0, tol.arith)

    # second support sets
    midL = (wL + xl) / 2
    midR = (wR + xr) / 2
    rs = right_slice(That, xr)
    rsn = lp_norm(rs, q, axis=1)
    BL = _select(np.real(np.sum(rs * midL, axis=1)), rsn, 1 - eta / 2, tol)
    ls = left_slice(That, xl)
    lsn = lp_norm(ls, q, axis=1)
    BR = _select(np.real(np.sum(ls * midR, axis=1)), lsn, 1 - eta / 2, tol)
    PL = np.zeros_like(midL)
    PL[list(BL)] = midL[list(BL)]
    PR = np.zeros_like(midR)
    PR[list(BR)] = midR[list(BR)]
    log.check("support B_L", "Re T(P_{B_L} (wL+xhatL)/2, xhatR) > 1 - eta",
              float(np.real(bapply(That, PL, xr))), ">", 1 - eta)
    log.check("support B_R", "Re T(xhatL, P_{B_R} (wR+xhatR)/2) > 1 - eta",
              float(np.real(bapply(That, xl, PR))), ">", 1 - eta)
    allL, allR = tuple(range(len(AL))), tuple(range(len(AR)))
    t1, _ = _bil_hi(project2(That, complement(BL, len(AL)), allR), eps / 16, budget)
    t2, _ = _bil_hi(project2(That, allL, complement(BR, len(AR))), eps / 16, budget)
    t3, _ = _bil_hi(That - project2(That, BL, BR), eps / 8, budget)
    log.check("tail B_L", "||T - T P_{B_L,A_R}|| < eps/2^4", t1, "<", eps / 16, 0.0)
    log.check("tail B_R", "||T - T P_{A_L,B_R}|| < eps/2^4", t2, "<", eps / 16, 0.0)
    log.check("tail B_L x B_R", "||T - T P_{B_L,B_R}|| < eps/2^3", min(t3, t1 + t2), "<", eps / 8, 0.0)
    for k in BL:
        log.check("uniform convexity", f"||(wL+xhatL)/2 ({AL[k]})|| > 1 - eta", float(lp_norm(midL[k], p)), ">", 1 - eta)
        log.check("uniform convexity", f"||wL({AL[k]}) - xhatL({AL[k]})|| < eps/2",
                  float(lp_norm(wL[k] - xl[k], p)), "<", eps / 2)
    for k in BR:
        log.check("uniform convexity", f"||(wR+xhatR)/2 ({AR[k]})|| > 1 - eta", float(lp_norm(midR[k], p)), ">", 1 - eta)
        log.check("uniform convexity", f"||wR({AR[k]}) - xhatR({AR[k]})|| < eps/2",
                  float(lp_norm(wR[k] - xr[k], p)), "<", eps / 2)

    # S~(zL, zR) = Q(Phi_L zL, Phi_R zR), Phi = identity on B and the rank-one maps off B
    PhiL = [np.eye(base.dim, dtype=complex) if k in BL else
            contraction_through_point(xl[k], wL[k], base).matrix for k in range(len(AL))]
    PhiR = [np.eye(base.dim, dtype=complex) if k in BR else
            contraction_through_point(xr[k], wR[k], base).matrix for k in range(len(AR))]
    Sk = np.einsum("iac,ijab,jbd->ijcd", np.array(PhiL), Q.kernels, np.array(PhiR))
    St = That.with_kernels(Sk)
    ul = np.array([wL[k] if k in BL else xl[k] for k in range(len(AL))])
    ur = np.array([wR[k] if k in BR else xr[k] for k in range(len(AR))])
    log.check("assemble", "S~(uL, uR) = Q(wL, wR)", abs(bapply(St, ul, ur) - bapply(Q, wL, wR)), "<=", 0.0, tol.arith)
    nSt = bilinear_norm(St, cheap, starts=ul[None])
    log.check("assemble", "||S~|| <= ||Q||", nSt.lo, "<=", normR * (1 + 1e-9), 0.0)

    S = extend2(St.with_kernels(St.kernels / nSt.lo * phi), AL, AR, n, m)
    uL, uR = xL.copy(), xR.copy()
    uL[list(AL)] = ul
    uR[list(AR)] = ur
    sets = {"A_L": AL, "A_R": AR, "B_L": tuple(AL[k] for k in BL), "B_R": tuple(AR[k] for k in BR)}
    notes = ["the estimate chain's index set B_R minus A_R is read as A_R minus B_R",
             "W is applied by composition, S~(zL, zR) = Q(Phi_L zL, Phi_R zR)"]
    return _finish_bilinear(log, "bilinear-bpb", B, xL, xR, S, uL, uR, eps, sched, margin, resolved,
                            sets, budget, tol, True, notes)


def _finish_bilinear(log, theorem, B, xL, xR, S, uL, uR, eps, sched, margin, resolved, sets,
                     budget, tol, check_point, extra_notes=()):
    p = B.left.base.p
    cheap = _cheap(budget)
    val = abs(bapply(S, uL, uR))
    resid = abs(val - 1)
    log.check("postcondition", "| |S(uL, uR)| - 1 | <= attain_tol", resid, "<=", tol.attain, 0.0)
    nS = bilinear_norm(S, cheap, starts=uL[None])
    log.check("postcondition", "| ||S|| - 1 | <= attain_tol", abs(nS.lo - 1), "<=", tol.attain, 0.0)
    nS_hi = _bil_hi(S, 1.0 + tol.attain, budget)[0]
    if budget.certify:
        log.check("postcondition", "||S|| <= 1 + attain_tol (upper bound)", nS_hi - 1, "<=", tol.attain, 0.0)
    D = S - B
    dist_lo = abs(bapply(D, xL, xR))
    dist_hi, method = _bil_hi(D, eps, budget)
    log.check("postcondition", "||S - B|| < eps", dist_hi, "<", eps, 0.0)
    pd = max(float(lp_norm(uL - xL, p, axis=1).max()), float(lp_norm(uR - xR, p, axis=1).max()))
    if check_point:
        log.check("postcondition", "max(||uL - xL||, ||uR - xR||) < eps", pd, "<", eps, 0.0)
    notes = list(log.notes) + list(extra_notes) + [f"map distance bound: {method}"]
    return BpbCertificate(theorem, eps, sched, S, (uL, uR), resid, (nS.lo, max(nS.lo, nS_hi)),
                          (float(dist_lo), dist_hi),
                          pd, margin, resolved, log.records, sets, notes)


# -- bilinear local ---------------------------------------------------------------------


def correct_bilinear_local(B: BlockBilinear, xL, xR, eps: float, budget: Budget = Budget(),
                           tol: Tolerances = Tolerances(), bundle: ModuliBundle | None = None,
                           fault=None) -> BpbCertificate:
    """Correct ``B`` into ``S`` with ``|S(xL, xR)| = ||S|| = 1`` and ``||S - B|| < eps``."""
    _require_bilinear(B)
    _check_eps(eps)
    base = B.left.base
    if not base.is_hilbert:
        raise PremiseViolation("micro-transitivity not supported for non-Hilbert spaces")
    log = StepLog(tol, fault)
    xL = np.asarray(xL, dtype=complex)
    xR = np.asarray(xR, dtype=complex)
    p, q, n, m = base.p, conjugate_exponent(base.p), B.n, B.m
    bundle = bundle or bilinear_moduli(B)
    gam = moduli.lemma_bilinear_gamma(bundle.delta_c)
    bpb = moduli.bilinear_bpb_function(gam, bundle.delta_x)
    nLn = lp_norm(xL, p, axis=1)
    nRn = lp_norm(xR, p, axis=1)
    gamma = _schedule(moduli.gamma_bilinear_local, eps, nLn, nRn, bpb, bundle.theta, bundle.delta_c)
    eps_sub = bundle.theta(eps / 3) / 2
    sched = {"gamma": gamma, "gamma^4/2^6": gamma ** 4 / 64, "gamma^2/8": gamma ** 2 / 8,
             "gamma/2": gamma / 2, "eps_sub": eps_sub, "theta(eps/3)": bundle.theta(eps / 3)}
    cheap = _cheap(budget)

    nB = bilinear_norm(B, cheap)
    if abs(nB.lo - 1) > tol.norm:
        raise PremiseViolation(f"form is not normalized: ||B|| ~ {nB.lo!r}")
    for x, k, nn in ((xL, n, nLn), (xR, m, nRn)):
        if x.shape != (k, base.dim) or abs(float(nn.max()) - 1) > tol.arith:
            raise PremiseViolation("points must be unit vectors of the domains")
    c0 = bapply(B, xL, xR)
    margin, resolved = _premise(log, abs(c0), gamma ** 4 / 64, "|B(xL, xR)|")
    phi = _phase(c0)
    Tp = B.with_kernels(B.kernels * np.conj(phi))

    sl = left_slice(Tp, xL)
    sln = lp_norm(sl, q, axis=1)
    reR = np.real(np.sum(sl * xR, axis=1))
    AR = _select(reR, sln, 1 - gamma ** 2 / 8, tol)
    log.check("support A_R", "sum_{A_R} ||(L_T xL)(i)|| > 1 - gamma^2/8", sln[list(AR)].sum(), ">", 1 - gamma ** 2 / 8)
    xRA = np.zeros_like(xR)
    xRA[list(AR)] = xR[list(AR)]
    sr = right_slice(Tp, xRA)
    srn = lp_norm(sr, q, axis=1)
    reL = np.real(np.sum(sr * xL, axis=1))
    AL = _select(reL, srn, 1 - gamma / 2, tol)
    log.check("support A_L", "sum_{A_L} ||(R_T P xR)(i)|| > 1 - gamma/2", srn[list(AL)].sum(), ">", 1 - gamma / 2)
    if not AL or not AR:
        raise ContractBreach("support sets", "empty support set")
    for i in AL:
        log.check("support A_L", f"||xL({i})|| = 1", abs(nLn[i] - 1), "<=", 0.0, 1e-12)
    for j in AR:
        log.check("support A_R", f"||xR({j})|| = 1", abs(nRn[j] - 1), "<=", 0.0, 1e-12)
    TP = project2(Tp, AL, AR)
    log.check("support sets", "Re T P_{A_L,A_R}(xL, xR) > 1 - gamma",
              float(np.real(bapply(TP, xL, xR))), ">", 1 - gamma)
    tail_hi, _ = _bil_hi(Tp - TP, eps / 6, budget)
    log.check("tail A_L x A_R", "||T P_{A_L,A_R} - T|| < eps/6", tail_hi, "<", eps / 6, 0.0)

    That0 = restrict2(Tp, AL, AR)
    xl = xL[list(AL)]
    xr = xR[list(AR)]
    nTh = bilinear_norm(That0, cheap, starts=xl[None])
    That = That0.with_kernels(That0.kernels / nTh.lo)
    try:
        sub = correct_bilinear(That, xl, xr, eps_sub, budget, tol, bundle, fault)
    except PremiseViolation as exc:
        raise ContractBreach("finite-sum correction", str(exc)) from exc
    log.records.extend(sub.steps)
    Shat = sub.corrected
    zl, zr = sub.point
    log.check("finite-sum correction", "||Shat - That|| < theta(eps/3)/2", sub.map_distance[1], "<", eps_sub, 0.0)
    log.check("finite-sum correction", "||(zL, zR) - (xhatL, xhatR)|| < theta(eps/3)/2",
              sub.point_distance, "<", eps_sub, 0.0)
    zl = _unit_blocks(zl, p, log, "renormalize")
    zr = _unit_blocks(zr, p, log, "renormalize")
    log.check("renormalize", "|Shat(zhatL, zhatR)| = 1", abs(abs(bapply(Shat, zl, zr)) - 1), "<=", tol.attain, 0.0)

    th = bundle.theta(eps / 3)
    Us, Vs = [], []
    for k, i in enumerate(AL):
        log.check("renormalize", f"||zhatL({i}) - xL({i})|| < theta(eps/3)", float(lp_norm(zl[k] - xl[k], p)), "<", th)
        U = micro_transitive_isometry(xl[k], zl[k], base).matrix
        log.check("transport", f"||U_{i} - I|| < eps/3", float(np.linalg.norm(U - np.eye(base.dim), 2)), "<", eps / 3)
        Us.append(U)
    for k, j in enumerate(AR):
        log.check("renormalize", f"||zhatR({j}) - xR({j})|| < theta(eps/3)", float(lp_norm(zr[k] - xr[k], p)), "<", th)
        V = micro_transitive_isometry(xr[k], zr[k], base).matrix
        log.check("transport", f"||V_{j} - I|| < eps/3", float(np.linalg.norm(V - np.eye(base.dim), 2)), "<", eps / 3)
        Vs.append(V)
    Sk = np.einsum("iac,ijab,jbd->ijcd", np.array(Us), Shat.kernels, np.array(Vs))
    S = extend2(Shat.with_kernels(Sk * phi), AL, AR, n, m)
    sets = {"A_L": AL, "A_R": AR, "B_L": sub.sets.get("B_L", ()), "B_R": sub.sets.get("B_R", ())}
    notes = ["A_R uses threshold 1 - gamma^2/8 and A_L uses 1 - gamma/2",
             "tail bound after the support sets is checked against eps/6"]
    return _finish_bilinear(log, "bilinear-local", B, xL, xR, S, xL.copy(), xR.copy(), eps, sched,
                            margin, resolved, sets, budget, tol, True, notes)


PIPELINES = {
    "bpb-op": correct_operator,
    "bpb-local": correct_operator_local,
    "bpb-bilinear": correct_bilinear,
    "bpb-bilinear-local": correct_bilinear_local,
}


def premise_band(pipeline: str, M, eps: float, xL=None, xR=None,
                 bundle: ModuliBundle | None = None) -> tuple[float, float]:
    """``(parameter, band)`` of a pipeline's premise ``1 - value < band``.

    The parameter is eta for the BPB pipelines and gamma for the local ones;
    the local ones read block norms from the point(s).
    """
    if pipeline == "bpb-op":
        b = bundle or operator_moduli(M)
        eta = _schedule(moduli.eta_operator_bpb, eps, b.delta_x, b.delta_c)
        return eta, eta ** 6 / 64
    if pipeline == "bpb-local":
        b = bundle or operator_moduli(M)
        if b.theta is None:
            raise PremiseViolation("micro-transitivity not supported for non-Hilbert spaces")
        bpb = moduli.operator_bpb_function(b.delta_x, b.delta_c)
        g = _schedule(moduli.gamma_operator_local, eps, lp_norm(xL, M.domain.base.p, axis=1),
                      bpb, b.theta, b.delta_c)
        return g, g ** 2 / 4
    if pipeline in ("bpb-bilinear", "bpb-bilinear-local"):
        _require_bilinear(M)
        b = bundle or bilinear_moduli(M)
        gam = moduli.lemma_bilinear_gamma(b.delta_c)
        if pipeline == "bpb-bilinear":
            eta = _schedule(moduli.eta_bilinear_bpb, eps, gam, b.delta_x)
            return eta, eta ** 12 / 2 ** 22
        if b.theta is None:
            raise PremiseViolation("micro-transitivity not supported for non-Hilbert spaces")
        p = M.left.base.p
        bpb = moduli.bilinear_bpb_function(gam, b.delta_x)
        g = _schedule(moduli.gamma_bilinear_local, eps, lp_norm(xL, p, axis=1),
                      lp_norm(xR, p, axis=1), bpb, b.theta, b.delta_c)
        return g, g ** 4 / 64
    raise ValueError(f"unknown pipeline {pipeline!r}")


def run_pipeline(pipeline: str, M, point, eps: float, budget: Budget = Budget(),
                 tol: Tolerances = Tolerances(), fault=None) -> BpbCertificate:
    """Dispatch by pipeline id; ``point`` is ``x0`` or a pair ``(xL, xR)``."""
    fn = PIPELINES[pipeline]
    if pipeline.startswith("bpb-bilinear"):
        return fn(M, point[0], point[1], eps, budget, tol, fault=fault)
    return fn(M, point, eps, budget, tol, fault=fault)
