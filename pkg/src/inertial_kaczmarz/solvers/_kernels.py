"""Compiled iteration loops.

Each loop runs up to ``kmax`` steps in place on ``x`` and reads uniforms from
a buffer starting at ``pos``. A step whose draws would run past the end of
the buffer is not started; the loop returns so the caller can refill. The
row-selection rule matches :mod:`inertial_kaczmarz.sampling` variate for
variate.

Vector work goes through a few BLAS-1 style primitives shared by every
algorithm. ``dot2`` fuses two inner products against a common row and
``axpy2`` applies a two-row update in one pass; the inertial methods use the
latter because their updates are single closed-form combinations, while the
two-subspace step keeps its projection-then-orthogonal-correction shape.

Return value of every loop: ``(converged, k, pos, prev, n_written)``.
"""
from __future__ import annotations

import math

import numba as nb

_FASTMATH = {"reassoc", "contract"}
_jit = nb.njit(cache=True, fastmath=_FASTMATH, nogil=True)

EPS_PARALLEL = 1e-12

MODE_RSE = 0
MODE_RESIDUAL = 1


@_jit
def dot(a, b):
    s = 0.0
    for t in range(a.shape[0]):
        s += a[t] * b[t]
    return s


@_jit
def sqdist(a, b):
    s = 0.0
    for t in range(a.shape[0]):
        d = a[t] - b[t]
        s += d * d
    return s


@_jit
def dot2(a, x, c):
    # (a . x, a . c) in one pass
    s = 0.0
    t_ = 0.0
    for t in range(a.shape[0]):
        s += a[t] * x[t]
        t_ += a[t] * c[t]
    return s, t_


@_jit
def axpy2(alpha, a, beta, c, y):
    for t in range(y.shape[0]):
        y[t] += alpha * a[t] + beta * c[t]


@_jit
def axpy(alpha, a, y):
    for t in range(y.shape[0]):
        y[t] += alpha * a[t]


@_jit
def lincomb(out, alpha, a, beta, b):
    for t in range(out.shape[0]):
        out[t] = alpha * a[t] + beta * b[t]


@_jit
def pick(cum, total, u):
    # first index with cum[i] > u * total, clamped to the last row
    target = u * total
    lo = 0
    hi = cum.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum[mid] <= target:
            lo = mid + 1
        else:
            hi = mid
    n = cum.shape[0]
    return lo if lo < n else n - 1


@_jit
def stop_stat(mode, A, b, x, xd, scale):
    if mode == MODE_RSE:
        return sqdist(x, xd) / scale
    s = 0.0
    for i in range(A.shape[0]):
        r = dot(A[i], x) - b[i]
        s += r * r
    return math.sqrt(s) / scale


@_jit
def rk_loop(A, b, w, cum, total, xd, scale, mode, tol, x, y, v, u, pos, k, kmax, prev, out):
    n = 0
    nu = u.shape[0]
    while k < kmax:
        if pos >= nu:
            return False, k, pos, prev, n
        i = pick(cum, total, u[pos])
        pos += 1
        ai = A[i]
        axpy(-(dot(ai, x) - b[i]) / w[i], ai, x)
        k += 1
        s = stop_stat(mode, A, b, x, xd, scale)
        out[n] = s
        n += 1
        if s <= tol:
            return True, k, pos, prev, n
    return False, k, pos, prev, n


@_jit
def _draw_pair(cum, total, u, pos):
    nu = u.shape[0]
    while True:
        if pos + 1 >= nu:
            return -1, -1, pos
        j = pick(cum, total, u[pos])
        i = pick(cum, total, u[pos + 1])
        pos += 2
        if i != j:
            return j, i, pos


@_jit
def tsk_loop(A, b, w, cum, total, xd, scale, mode, tol, x, y, v, u, pos, k, kmax, prev, out):
    n = 0
    while k < kmax:
        s_, r_, p2 = _draw_pair(cum, total, u, pos)
        if s_ < 0:
            return False, k, pos, prev, n
        pos = p2
        a_s = A[s_]
        a_r = A[r_]
        xs, mu = dot2(a_s, x, a_r)
        lincomb(y, 1.0, x, b[s_] - xs, a_s)
        one_m = 1.0 - mu * mu
        if one_m < EPS_PARALLEL:
            lincomb(x, 1.0, y, b[r_] - dot(y, a_r), a_r)
        else:
            sq = math.sqrt(one_m)
            lincomb(v, 1.0 / sq, a_r, -mu / sq, a_s)
            beta = (b[r_] - mu * b[s_]) / sq
            lincomb(x, 1.0, y, beta - dot(y, v), v)
        k += 1
        s = stop_stat(mode, A, b, x, xd, scale)
        out[n] = s
        n += 1
        if s <= tol:
            return True, k, pos, prev, n
    return False, k, pos, prev, n


@_jit
def airk_loop(A, b, w, cum, total, xd, scale, mode, tol, x, y, v, u, pos, k, kmax, prev, out):
    n = 0
    while k < kmax:
        j, i, p2 = _draw_pair(cum, total, u, pos)
        if j < 0:
            return False, k, pos, prev, n
        pos = p2
        aj = A[j]
        ai = A[i]
        wj = w[j]
        wi = w[i]
        axpy(-(dot(aj, x) - b[j]) / wj, aj, x)
        xi, mu = dot2(ai, x, aj)
        r = xi - b[i]
        den = wj * wi - mu * mu
        if den < EPS_PARALLEL * wj * wi:
            axpy(-r / wi, ai, x)
        else:
            axpy2(r * mu / den, aj, -r * wj / den, ai, x)
        k += 1
        s = stop_stat(mode, A, b, x, xd, scale)
        out[n] = s
        n += 1
        if s <= tol:
            return True, k, pos, prev, n
    return False, k, pos, prev, n


@_jit
def mirk_loop(A, b, w, cum, total, xd, scale, mode, tol, x, y, v, u, pos, k, kmax, prev, out):
    n = 0
    nu = u.shape[0]
    while k < kmax:
        if prev < 0:
            if pos >= nu:
                return False, k, pos, prev, n
            i = pick(cum, total, u[pos])
            pos += 1
            ai = A[i]
            axpy(-(dot(ai, x) - b[i]) / w[i], ai, x)
        else:
            p2 = pos
            i = prev
            while i == prev and p2 < nu:
                i = pick(cum, total, u[p2])
                p2 += 1
            if i == prev:
                return False, k, pos, prev, n
            pos = p2
            ap = A[prev]
            ai = A[i]
            wp = w[prev]
            wi = w[i]
            xi, mu = dot2(ai, x, ap)
            r = xi - b[i]
            den = wp * wi - mu * mu
            if den < EPS_PARALLEL * wp * wi:
                axpy(-r / wi, ai, x)
            else:
                axpy2(r * mu / den, ap, -r * wp / den, ai, x)
        prev = i
        k += 1
        s = stop_stat(mode, A, b, x, xd, scale)
        out[n] = s
        n += 1
        if s <= tol:
            return True, k, pos, prev, n
    return False, k, pos, prev, n


LOOPS = {"rk": rk_loop, "tsk": tsk_loop, "airk": airk_loop, "mirk": mirk_loop}
