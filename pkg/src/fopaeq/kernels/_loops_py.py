"""Pure-NumPy implementations of the per-symbol equalizer loops.

Semantics are shared with the compiled backend in ``_loops_cy.pyx``:

* the distortion history ring holds the last L decision-driven distortions
  (newest first), initialized to 1+0j;
* the filter is only updated once the ring is filled with observed values
  (from symbol L onward), so the first L+1 symbols are corrected with the
  neutral estimate 1+0j;
* at window capacity the oldest pair is pruned (Schur downdate) before the
  new pair is grown in; a vanishing pivot or Schur complement skips the
  update and leaves the previous window intact;
* predicted distortions with magnitude below ``eps_div`` are replaced by
  the last valid estimate (1 at start) and flagged.
"""

import numpy as np

EPS_SCHUR = 1e-12


def swkrls_equalize(
    r,
    ref,
    n_train,
    const_points,
    window_m,
    block_l,
    sigma,
    lam,
    eps_div=1e-9,
):
    """Run the sliding-window kernel RLS compensation loop over a block.

    Parameters
    ----------
    r : complex array
        Received symbols (unit average power).
    ref : complex array
        Reference symbols; entries [0, n_train) are used as decisions in
        training mode.
    n_train : int
        Number of training symbols.
    const_points : complex array
        Slicer alphabet for the decision-directed region.
    window_m, block_l, sigma, lam :
        Kernel filter hyperparameters (M, L, kernel width, ridge).
    eps_div : float
        Division guard on the predicted distortion magnitude.

    Returns
    -------
    dict with per-symbol arrays ``z`` (corrected), ``decided``, ``d_hat``,
    ``d_tilde``, ``training`` (uint8), ``clamped`` (uint8) and the scalar
    ``n_skipped`` counting skipped window updates.
    """
    r = np.asarray(r, dtype=np.complex128).ravel()
    ref = np.asarray(ref, dtype=np.complex128).ravel()
    const_points = np.asarray(const_points, dtype=np.complex128).ravel()
    n = r.size
    m = int(window_m)
    ell = int(block_l)
    two_l = 2 * ell
    inv_two_sigma_sq = 1.0 / (2.0 * float(sigma) ** 2)
    c_diag = 1.0 + float(lam)

    dict_buf = np.zeros((m, two_l))
    y_buf = np.zeros(m, dtype=np.complex128)
    inv = np.zeros((m, m))
    scratch = np.zeros((m, m))
    alpha = np.zeros(m, dtype=np.complex128)
    n_dict = 0

    hist = np.ones(ell, dtype=np.complex128)  # newest first
    query = np.empty(two_l)

    z = np.empty(n, dtype=np.complex128)
    decided = np.empty(n, dtype=np.complex128)
    d_hat_out = np.empty(n, dtype=np.complex128)
    d_tilde_out = np.empty(n, dtype=np.complex128)
    training = np.zeros(n, dtype=np.uint8)
    clamped = np.zeros(n, dtype=np.uint8)
    n_skipped = 0
    last_valid = 1.0 + 0.0j

    for k in range(n):
        query[:ell] = hist.real
        query[ell:] = hist.imag

        if n_dict > 0:
            diff = dict_buf[:n_dict] - query[None, :]
            h = np.exp(-np.einsum("ij,ij->i", diff, diff) * inv_two_sigma_sq)
            d_hat = complex(h @ alpha[:n_dict])
        else:
            d_hat = 1.0 + 0.0j

        if abs(d_hat) < eps_div:
            d_hat = last_valid
            clamped[k] = 1
        else:
            last_valid = d_hat

        zk = r[k] / d_hat
        if k < n_train:
            dec = ref[k]
            training[k] = 1
        else:
            dec = const_points[np.argmin(np.abs(const_points - zk))]
        d_tilde = r[k] / dec

        z[k] = zk
        decided[k] = dec
        d_hat_out[k] = d_hat
        d_tilde_out[k] = d_tilde

        if k >= ell:
            n_dict, n_skipped = _window_update(
                dict_buf, y_buf, inv, scratch, alpha, n_dict, m,
                query, d_tilde, c_diag, inv_two_sigma_sq, n_skipped,
            )

        hist[1:] = hist[:-1].copy()
        hist[0] = d_tilde

    return {
        "z": z,
        "decided": decided,
        "d_hat": d_hat_out,
        "d_tilde": d_tilde_out,
        "training": training,
        "clamped": clamped,
        "n_skipped": n_skipped,
    }


def _window_update(
    dict_buf, y_buf, inv, scratch, alpha, n_dict, m,
    query, d_tilde, c_diag, inv_two_sigma_sq, n_skipped,
):
    """Prune (if at capacity) + grow, committing only on success."""
    prune = n_dict == m
    if prune:
        if m == 1:
            base = 0
            work = scratch
        else:
            e = inv[0, 0]
            if abs(e) <= EPS_SCHUR:
                return n_dict, n_skipped + 1
            f = inv[1:n_dict, 0]
            scratch[: n_dict - 1, : n_dict - 1] = (
                inv[1:n_dict, 1:n_dict] - np.outer(f, f) / e
            )
            base = n_dict - 1
            work = scratch
    else:
        base = n_dict
        work = inv

    dict_view = dict_buf[1 : base + 1] if prune else dict_buf[:base]

    if base > 0:
        diff = dict_view - query[None, :]
        b = np.exp(-np.einsum("ij,ij->i", diff, diff) * inv_two_sigma_sq)
        u = work[:base, :base] @ b
        s = c_diag - b @ u
        if s <= EPS_SCHUR * c_diag:
            return n_dict, n_skipped + 1
        f_new = 1.0 / s
        work[:base, :base] += f_new * np.outer(u, u)
        work[:base, base] = -u * f_new
        work[base, :base] = -u * f_new
        work[base, base] = f_new
    else:
        work[0, 0] = 1.0 / c_diag

    if prune:
        dict_buf[:base] = dict_buf[1 : base + 1]
        y_buf[:base] = y_buf[1 : base + 1]
        inv[: base + 1, : base + 1] = work[: base + 1, : base + 1]

    dict_buf[base] = query
    y_buf[base] = d_tilde
    n_new = base + 1
    alpha[:n_new] = inv[:n_new, :n_new] @ y_buf[:n_new]
    return n_new, n_skipped


def lms_equalize(r, ref, n_train, const_points, mu):
    """One-tap decision-directed LMS loop.

    z_n = w_n r_n with error e_n = d_n - z_n (d_n the reference while
    training, the sliced decision afterwards) and update
    w_{n+1} = w_n + mu e_n conj(r_n); w_0 = 1.

    Returns
    -------
    dict with ``z``, ``decided``, ``err``, ``training`` arrays and the
    final tap ``w``.
    """
    r = np.asarray(r, dtype=np.complex128).ravel()
    ref = np.asarray(ref, dtype=np.complex128).ravel()
    const_points = np.asarray(const_points, dtype=np.complex128).ravel()
    n = r.size
    mu = float(mu)

    z = np.empty(n, dtype=np.complex128)
    decided = np.empty(n, dtype=np.complex128)
    err = np.empty(n, dtype=np.complex128)
    training = np.zeros(n, dtype=np.uint8)

    w = 1.0 + 0.0j
    for k in range(n):
        zk = w * r[k]
        if k < n_train:
            dec = ref[k]
            training[k] = 1
        else:
            dec = const_points[np.argmin(np.abs(const_points - zk))]
        e = dec - zk
        w = w + mu * e * np.conj(r[k])
        z[k] = zk
        decided[k] = dec
        err[k] = e

    return {"z": z, "decided": decided, "err": err, "training": training, "w": w}
