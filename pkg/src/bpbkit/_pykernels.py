"""Pure numpy implementations of the hot loops.

These are the reference semantics; ``_ckernels.pyx`` mirrors them.  Both
work on complex128 arrays; real problems stay real because every update
only multiplies by conjugated signs of real numbers.
"""

import numpy as np

OUTER_SUM = 1  # l_1-sum of range blocks
OUTER_MAX = 0  # l_inf-sum of range blocks


def _lp(a, p, axis=-1):
    a = np.abs(a)
    if np.isinf(p):
        return a.max(axis=axis)
    if p == 1:
        return a.sum(axis=axis)
    if p == 2:
        return np.sqrt((a * a).sum(axis=axis))
    return (a ** p).sum(axis=axis) ** (1.0 / p)


def _conj_sign(v):
    a = np.abs(v)
    out = np.zeros_like(v)
    nz = a > 0
    out[nz] = np.conj(v[nz]) / a[nz]
    return out


def _unit_dual(v, r):
    """Norming functional of each row of ``v`` (last axis) in l_r; zero rows map to 0."""
    nrm = _lp(v, r)
    safe = np.where(nrm > 0, nrm, 1.0)
    u = v / safe[..., None]
    if r == 1:
        return _conj_sign(u)
    if np.isinf(r):
        a = np.abs(u)
        idx = a.argmax(axis=-1)
        out = np.zeros_like(u)
        np.put_along_axis(out, idx[..., None], np.take_along_axis(_conj_sign(u), idx[..., None], -1), -1)
        out[nrm == 0] = 0
        return out
    return np.abs(u) ** (r - 1.0) * _conj_sign(u)


def range_norm(y, r, nb, mb, outer):
    """Norm of flat range vectors ``y`` (..., nb*mb)."""
    blocks = _lp(y.reshape(y.shape[:-1] + (nb, mb)), r)
    return blocks.sum(axis=-1) if outer == OUTER_SUM else blocks.max(axis=-1)


def range_functional(y, r, nb, mb, outer):
    yb = y.reshape(y.shape[:-1] + (nb, mb))
    f = _unit_dual(yb, r)
    if outer == OUTER_MAX and nb > 1:
        bn = _lp(yb, r)
        keep = bn.argmax(axis=-1)
        mask = np.zeros(bn.shape, dtype=bool)
        np.put_along_axis(mask, keep[..., None], True, -1)
        f = f * mask[..., None]
    return f.reshape(y.shape)


def best_response(g, p):
    """Unit maximizer of ``Re g(x)`` over the l_p sphere, row-wise; zero rows give NaN."""
    q = p / (p - 1.0) if not np.isinf(p) else 1.0
    nrm = _lp(g, q)
    safe = np.where(nrm > 0, nrm, 1.0)
    u = g / safe[..., None]
    if g.shape[-1] == 1:
        x = _conj_sign(u)
    else:
        x = np.abs(u) ** (q - 1.0) * _conj_sign(u)
    x[nrm == 0] = np.nan
    return x


def ascent(T, X0, p, r, nb, mb, outer, maxiter, tol):
    """Multistart alternating ascent for ``max ||T x||`` over unit block vectors.

    T: (n, M, d) complex, X0: (K, n, d) complex unit-block starts.
    Returns (X, values, iterations).
    """
    T = np.ascontiguousarray(T, dtype=np.complex128)
    X = np.array(X0, dtype=np.complex128, copy=True)
    K = X.shape[0]
    vals = range_norm(np.einsum("nmd,knd->km", T, X), r, nb, mb, outer)
    iters = np.zeros(K, dtype=np.int64)
    active = np.ones(K, dtype=bool)
    for it in range(maxiter):
        if not active.any():
            break
        Xa = X[active]
        y = np.einsum("nmd,knd->km", T, Xa)
        f = range_functional(y, r, nb, mb, outer)
        g = np.einsum("km,nmd->knd", f, T)
        Xn = best_response(g, p)
        Xn = np.where(np.isnan(Xn.real), Xa, Xn)
        vn = range_norm(np.einsum("nmd,knd->km", T, Xn), r, nb, mb, outer)
        va = vals[active]
        improved = vn > va
        idx = np.flatnonzero(active)
        upd = idx[improved]
        X[upd] = Xn[improved]
        vals[upd] = vn[improved]
        iters[idx] += 1
        done = vn <= va * (1.0 + tol) + 1e-300
        active[idx[done]] = False
    return X, vals, iters


def c_modulus_grid(xs, ys, lams, eps, p):
    """For each x, min over y of max over lambda of ||x + lambda eps y||_p.

    Returns (best value per x, argmin y index per x).
    """
    xs = np.asarray(xs, dtype=np.complex128)
    ys = np.asarray(ys, dtype=np.complex128)
    lams = np.asarray(lams, dtype=np.complex128)
    best = np.full(len(xs), np.inf)
    arg = np.zeros(len(xs), dtype=np.int64)
    chunk = max(1, 2_000_000 // max(1, len(lams) * ys.shape[1]))
    for start in range(0, len(ys), chunk):
        ly = eps * lams[:, None, None] * ys[None, start:start + chunk, :]  # (L, c, D)
        for k, x in enumerate(xs):
            v = _lp(x[None, None, :] + ly, p).max(axis=0)
            j = int(np.argmin(v))
            if v[j] < best[k]:
                best[k] = v[j]
                arg[k] = start + j
    return best, arg
