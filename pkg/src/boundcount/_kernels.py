"""Compiled inner loops for the pivot and node recurrences.

Both kernels consume one block of potential values and carry their state
across blocks, so a count on sites 1..L is a prefix of the count on 1..2L.
"""

import numpy as np
from numba import njit

TINY = np.finfo(np.float64).tiny
HUGE = np.finfo(np.float64).max
RESCALE_AT = 2.0**512
RESCALE_BY = 2.0**-512


@njit(cache=True, nogil=True)
def pivot_block(v, lam, d, e, count):
    """Advance the LDL^T pivot recurrence of J - lam over one block.

    ``d`` is the previous pivot and ``e = d - 1`` its offset from one.  The
    textbook step d_n = (2 + V(n) - lam) - 1/d_{n-1} is evaluated as
    e_n = (V(n) - lam) + (1 - 1/d_{n-1}), with 1 - 1/d computed as e/d when
    d is close to one, so a tiny V(n) - lam is never added to 2 first.
    Start the recurrence with d = e = inf.
    """
    for i in range(v.shape[0]):
        if abs(e) < 0.5:
            t = e / d
        else:
            t = 1.0 - 1.0 / d
        e = (v[i] - lam) + t
        if e > HUGE:
            e = HUGE
        elif e < -HUGE:
            e = -HUGE
        d = 1.0 + e
        if d == 0.0:
            # closed-interval convention: a zero pivot counts as negative
            d = -TINY
        if d < 0.0:
            count += 1
    return d, e, count


@njit(cache=True, nogil=True)
def node_block(v, lam, u, w, count):
    """Advance the difference-form solution of (-Delta + V) u = lam u.

    State is (u(n), w(n-1)) with w(n) = u(n+1) - u(n).  Each step applies
    w(n) = w(n-1) + (V(n) - lam) u(n), u(n+1) = u(n) + w(n) and counts a node
    at n when u(n+1) = 0 or u changes sign between n and n+1.  Start with
    u = 1, w = 1 (Dirichlet data u(0) = 0, u(1) = 1).
    """
    for i in range(v.shape[0]):
        w = w + (v[i] - lam) * u
        u_next = u + w
        if u_next == 0.0 or (u > 0.0 and u_next < 0.0) or (u < 0.0 and u_next > 0.0):
            count += 1
        u = u_next
        if abs(u) > RESCALE_AT or abs(w) > RESCALE_AT:
            u *= RESCALE_BY
            w *= RESCALE_BY
    return u, w, count


@njit(cache=True, nogil=True)
def three_term_signs(v, lam, u0, u1):
    """Signs of u(1..L+1) from the plain recurrence u(n+1) = (2 + V(n) - lam) u(n) - u(n-1)."""
    out = np.empty(v.shape[0] + 1, dtype=np.int8)
    out[0] = np.sign(u1)
    a = u0
    b = u1
    for i in range(v.shape[0]):
        c = (2.0 + v[i] - lam) * b - a
        out[i + 1] = np.sign(c)
        a = b
        b = c
    return out


@njit(cache=True, nogil=True)
def difference_signs(v, lam, u1, w0):
    """Signs of u(1..L+1) from the difference-form recurrence, without rescaling."""
    out = np.empty(v.shape[0] + 1, dtype=np.int8)
    out[0] = np.sign(u1)
    u = u1
    w = w0
    for i in range(v.shape[0]):
        w = w + (v[i] - lam) * u
        u = u + w
        out[i + 1] = np.sign(u)
    return out
