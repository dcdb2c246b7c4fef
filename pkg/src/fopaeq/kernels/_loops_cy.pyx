# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-symbol equalizer loops.

Same contract as ``_loops_py``; see that module for the loop semantics.
The window recursion keeps the inverse kernel matrix packed in a fixed
M x M buffer: pruning is staged in a scratch buffer so a failed grow never
corrupts the committed window.
"""

import numpy as np

from libc.math cimport exp

cdef double EPS_SCHUR = 1e-12


cdef inline double _sq_dist(double[:, ::1] d, Py_ssize_t row,
                            double[::1] q, Py_ssize_t two_l) noexcept nogil:
    cdef Py_ssize_t k
    cdef double acc = 0.0, dv
    for k in range(two_l):
        dv = d[row, k] - q[k]
        acc += dv * dv
    return acc


cdef inline double complex _slice(double complex zk, double complex[::1] cpts,
                                  Py_ssize_t n_const) noexcept nogil:
    cdef Py_ssize_t i, best = 0
    cdef double best_d2 = 1e300, d2, dre, dim
    for i in range(n_const):
        dre = zk.real - cpts[i].real
        dim = zk.imag - cpts[i].imag
        d2 = dre * dre + dim * dim
        if d2 < best_d2:
            best_d2 = d2
            best = i
    return cpts[best]


def swkrls_equalize(
    r,
    ref,
    Py_ssize_t n_train,
    const_points,
    Py_ssize_t window_m,
    Py_ssize_t block_l,
    double sigma,
    double lam,
    double eps_div=1e-9,
):
    """Sliding-window kernel RLS compensation loop (compiled)."""
    cdef double complex[::1] rv = np.ascontiguousarray(r, dtype=np.complex128)
    cdef double complex[::1] refv = np.ascontiguousarray(ref, dtype=np.complex128)
    cdef double complex[::1] cpts = np.ascontiguousarray(const_points, dtype=np.complex128)
    cdef Py_ssize_t n = rv.shape[0]
    cdef Py_ssize_t n_const = cpts.shape[0]
    cdef Py_ssize_t m = window_m
    cdef Py_ssize_t ell = block_l
    cdef Py_ssize_t two_l = 2 * ell
    cdef double inv2s2 = 1.0 / (2.0 * sigma * sigma)
    cdef double c_diag = 1.0 + lam
    cdef double eps_div_sq = eps_div * eps_div

    dict_np = np.zeros((m, two_l))
    inv_np = np.zeros((m, m))
    scratch_np = np.zeros((m, m))
    cdef double[:, ::1] dbuf = dict_np
    cdef double[:, ::1] inv = inv_np
    cdef double[:, ::1] scratch = scratch_np
    cdef double complex[::1] ybuf = np.zeros(m, dtype=np.complex128)
    cdef double complex[::1] alpha = np.zeros(m, dtype=np.complex128)
    cdef double[::1] bvec = np.zeros(m)
    cdef double[::1] uvec = np.zeros(m)
    cdef double complex[::1] hist = np.ones(ell, dtype=np.complex128)
    cdef double[::1] query = np.zeros(two_l)

    z_np = np.empty(n, dtype=np.complex128)
    dec_np = np.empty(n, dtype=np.complex128)
    dhat_np = np.empty(n, dtype=np.complex128)
    dtil_np = np.empty(n, dtype=np.complex128)
    train_np = np.zeros(n, dtype=np.uint8)
    clamp_np = np.zeros(n, dtype=np.uint8)
    cdef double complex[::1] z = z_np
    cdef double complex[::1] dec = dec_np
    cdef double complex[::1] dhat = dhat_np
    cdef double complex[::1] dtil = dtil_np
    cdef unsigned char[::1] train = train_np
    cdef unsigned char[::1] clamp = clamp_np

    cdef Py_ssize_t n_dict = 0, n_skipped = 0
    cdef Py_ssize_t k, i, j, base
    cdef double complex d_hat, last_valid, zk, decided, d_tilde, acc
    cdef double mag2, s, f_new, e

    last_valid = 1.0

    with nogil:
        for k in range(n):
            for i in range(ell):
                query[i] = hist[i].real
                query[ell + i] = hist[i].imag

            # predict from the current window
            if n_dict > 0:
                d_hat = 0.0
                for i in range(n_dict):
                    d_hat = d_hat + exp(-_sq_dist(dbuf, i, query, two_l) * inv2s2) * alpha[i]
            else:
                d_hat = 1.0

            mag2 = d_hat.real * d_hat.real + d_hat.imag * d_hat.imag
            if mag2 < eps_div_sq:
                d_hat = last_valid
                clamp[k] = 1
            else:
                last_valid = d_hat

            zk = rv[k] / d_hat
            if k < n_train:
                decided = refv[k]
                train[k] = 1
            else:
                decided = _slice(zk, cpts, n_const)
            d_tilde = rv[k] / decided

            z[k] = zk
            dec[k] = decided
            dhat[k] = d_hat
            dtil[k] = d_tilde

            # window update once the history ring holds observed values
            if k >= ell:
                if n_dict == 0 or (n_dict == m and m == 1):
                    # fresh or single-slot window: 1x1 inverse, cannot fail
                    inv[0, 0] = 1.0 / c_diag
                    for j in range(two_l):
                        dbuf[0, j] = query[j]
                    ybuf[0] = d_tilde
                    n_dict = 1
                    alpha[0] = inv[0, 0] * ybuf[0]
                elif n_dict == m:
                    # prune oldest into scratch, then grow; commit on success
                    e = inv[0, 0]
                    if -EPS_SCHUR <= e <= EPS_SCHUR:
                        n_skipped += 1
                    else:
                        base = m - 1
                        for i in range(base):
                            for j in range(base):
                                scratch[i, j] = inv[i + 1, j + 1] - inv[i + 1, 0] * inv[0, j + 1] / e
                        s = c_diag
                        for i in range(base):
                            bvec[i] = exp(-_sq_dist(dbuf, i + 1, query, two_l) * inv2s2)
                        for i in range(base):
                            acc = 0.0
                            for j in range(base):
                                acc = acc + scratch[i, j] * bvec[j]
                            uvec[i] = acc.real
                            s -= bvec[i] * acc.real
                        if s <= EPS_SCHUR * c_diag:
                            n_skipped += 1
                        else:
                            f_new = 1.0 / s
                            for i in range(base):
                                for j in range(base):
                                    scratch[i, j] += f_new * uvec[i] * uvec[j]
                            for i in range(base):
                                scratch[i, base] = -uvec[i] * f_new
                                scratch[base, i] = -uvec[i] * f_new
                            scratch[base, base] = f_new
                            for i in range(base):
                                for j in range(two_l):
                                    dbuf[i, j] = dbuf[i + 1, j]
                                ybuf[i] = ybuf[i + 1]
                            for i in range(m):
                                for j in range(m):
                                    inv[i, j] = scratch[i, j]
                            for j in range(two_l):
                                dbuf[base, j] = query[j]
                            ybuf[base] = d_tilde
                            for i in range(m):
                                acc = 0.0
                                for j in range(m):
                                    acc = acc + inv[i, j] * ybuf[j]
                                alpha[i] = acc
                else:
                    # grow in place (window below capacity)
                    base = n_dict
                    s = c_diag
                    for i in range(base):
                        bvec[i] = exp(-_sq_dist(dbuf, i, query, two_l) * inv2s2)
                    for i in range(base):
                        acc = 0.0
                        for j in range(base):
                            acc = acc + inv[i, j] * bvec[j]
                        uvec[i] = acc.real
                        s -= bvec[i] * acc.real
                    if s <= EPS_SCHUR * c_diag:
                        n_skipped += 1
                    else:
                        f_new = 1.0 / s
                        for i in range(base):
                            for j in range(base):
                                inv[i, j] += f_new * uvec[i] * uvec[j]
                        for i in range(base):
                            inv[i, base] = -uvec[i] * f_new
                            inv[base, i] = -uvec[i] * f_new
                        inv[base, base] = f_new
                        for j in range(two_l):
                            dbuf[base, j] = query[j]
                        ybuf[base] = d_tilde
                        n_dict = base + 1
                        for i in range(n_dict):
                            acc = 0.0
                            for j in range(n_dict):
                                acc = acc + inv[i, j] * ybuf[j]
                            alpha[i] = acc

            # shift history ring (newest first)
            for i in range(ell - 1, 0, -1):
                hist[i] = hist[i - 1]
            hist[0] = d_tilde

    return {
        "z": z_np,
        "decided": dec_np,
        "d_hat": dhat_np,
        "d_tilde": dtil_np,
        "training": train_np,
        "clamped": clamp_np,
        "n_skipped": int(n_skipped),
    }


def lms_equalize(r, ref, Py_ssize_t n_train, const_points, double mu):
    """One-tap decision-directed LMS loop (compiled)."""
    cdef double complex[::1] rv = np.ascontiguousarray(r, dtype=np.complex128)
    cdef double complex[::1] refv = np.ascontiguousarray(ref, dtype=np.complex128)
    cdef double complex[::1] cpts = np.ascontiguousarray(const_points, dtype=np.complex128)
    cdef Py_ssize_t n = rv.shape[0]
    cdef Py_ssize_t n_const = cpts.shape[0]

    z_np = np.empty(n, dtype=np.complex128)
    dec_np = np.empty(n, dtype=np.complex128)
    err_np = np.empty(n, dtype=np.complex128)
    train_np = np.zeros(n, dtype=np.uint8)
    cdef double complex[::1] z = z_np
    cdef double complex[::1] dec = dec_np
    cdef double complex[::1] err = err_np
    cdef unsigned char[::1] train = train_np

    cdef double complex w = 1.0, zk, decided, e, rconj
    cdef Py_ssize_t k

    with nogil:
        for k in range(n):
            zk = w * rv[k]
            if k < n_train:
                decided = refv[k]
                train[k] = 1
            else:
                decided = _slice(zk, cpts, n_const)
            e = decided - zk
            rconj = rv[k].real - 1j * rv[k].imag
            w = w + mu * e * rconj
            z[k] = zk
            dec[k] = decided
            err[k] = e

    return {"z": z_np, "decided": dec_np, "err": err_np, "training": train_np,
            "w": complex(w)}
