"""
Sliding-window kernel recursive least squares over a complexified Gaussian
RKHS.

Complex length-L inputs are embedded as real 2L-vectors [Re(x), Im(x)] and
regressed against complex targets with a real Gaussian kernel.  The window
keeps the last M input/output pairs; the regularized kernel matrix inverse
is maintained recursively: growing appends a bordered row/column via its
Schur complement, pruning removes the oldest row/column by downdating with
the stored inverse's leading pivot.  Coefficients are re-solved as
``alpha = K^-1 y`` after every structural change.

The functions here are pure: they never mutate an input state.  They are
the reference implementation; the streaming equalizer loops in
:mod:`fopaeq.kernels` reproduce the same recursion in compiled form.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, StateError

__all__ = [
    "KernelParams",
    "SwkrlsState",
    "gaussian_kernel",
    "complexify",
    "empty_state",
    "kernel_vector",
    "predict",
    "grow",
    "prune_oldest",
    "update",
    "reconstruct_kernel_matrix",
    "dump_state_csv",
    "load_state_csv",
]

#: Relative singularity guard for Schur complements and prune pivots.
EPS_SCHUR = 1e-12


@dataclass(frozen=True)
class KernelParams:
    """Hyperparameters of the sliding-window kernel filter.

    sigma : Gaussian kernel width (> 0).
    lam : ridge regularization constant (>= 0).
    window_m : maximum dictionary size M (>= 1).
    block_l : complex input block length L (>= 1); composite inputs have
        length 2L.
    """

    sigma: float
    lam: float
    window_m: int
    block_l: int

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.window_m < 1:
            raise ValueError("window_m must be >= 1")
        if self.block_l < 1:
            raise ValueError("block_l must be >= 1")


@dataclass(frozen=True)
class SwkrlsState:
    """Window state of the kernel filter.

    dictionary : (n, 2L) float64, composite inputs, oldest row first.
    outputs : (n,) complex128 regression targets, same order.
    inv_kernel : (n, n) float64, inverse of the regularized kernel matrix
        built on the dictionary (kappa(x_i, x_j) + lam on the diagonal).
    alpha : (n,) complex128, ``inv_kernel @ outputs``.
    """

    dictionary: np.ndarray
    outputs: np.ndarray
    inv_kernel: np.ndarray
    alpha: np.ndarray

    def __len__(self) -> int:
        return self.dictionary.shape[0]


def gaussian_kernel(p, q, sigma: float) -> float:
    """Evaluate exp(-||p - q||^2 / (2 sigma^2)) for real vectors p, q."""
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.shape != q.shape:
        raise ValueError("p and q must have the same length")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    d = p - q
    return float(np.exp(-np.dot(d, d) / (2.0 * sigma * sigma)))


def complexify(x) -> np.ndarray:
    """Map a complex L-vector to its composite real 2L-vector [Re, Im]."""
    x = np.asarray(x, dtype=np.complex128).ravel()
    return np.concatenate([x.real, x.imag])


def empty_state(block_l: int) -> SwkrlsState:
    """A zero-entry state for composite inputs of length 2*block_l."""
    return SwkrlsState(
        dictionary=np.empty((0, 2 * block_l), dtype=np.float64),
        outputs=np.empty(0, dtype=np.complex128),
        inv_kernel=np.empty((0, 0), dtype=np.float64),
        alpha=np.empty(0, dtype=np.complex128),
    )


def _kernel_row(dictionary: np.ndarray, query: np.ndarray, sigma: float) -> np.ndarray:
    d = dictionary - query[None, :]
    return np.exp(-np.einsum("ij,ij->i", d, d) / (2.0 * sigma * sigma))


def kernel_vector(state: SwkrlsState, query, params: KernelParams) -> np.ndarray:
    """Kernel evaluations of ``query`` against the dictionary, oldest first."""
    if len(state) == 0:
        raise StateError("kernel_vector on an empty dictionary")
    query = np.asarray(query, dtype=np.float64).ravel()
    if query.size != 2 * params.block_l:
        raise ValueError("query length must be 2 * block_l")
    return _kernel_row(state.dictionary, query, params.sigma)


def predict(state: SwkrlsState, query, params: KernelParams) -> complex:
    """One-step prediction h^T alpha for a composite query point."""
    h = kernel_vector(state, query, params)
    return complex(h @ state.alpha)


def grow(state: SwkrlsState, new_input, new_output, params: KernelParams) -> SwkrlsState:
    """Append an input/output pair, bordering the stored inverse.

    With b the kernels of the new point against the dictionary and
    c = kappa(x, x) + lam, the new inverse block uses
    f = 1/(c - b^T K^-1 b) and e = -K^-1 b f.  Raises
    :class:`NumericalError` when the Schur complement falls below
    ``EPS_SCHUR`` relative to c.
    """
    if len(state) >= params.window_m:
        raise StateError("dictionary is at capacity; prune before growing")
    x = np.asarray(new_input, dtype=np.float64).ravel()
    if x.size != 2 * params.block_l:
        raise ValueError("new_input length must be 2 * block_l")

    n = len(state)
    c = 1.0 + params.lam  # kappa(x, x) = 1 for the Gaussian kernel
    if n == 0:
        inv = np.array([[1.0 / c]])
        outputs = np.array([new_output], dtype=np.complex128)
        return SwkrlsState(
            dictionary=x[None, :].copy(),
            outputs=outputs,
            inv_kernel=inv,
            alpha=inv @ outputs,
        )

    b = _kernel_row(state.dictionary, x, params.sigma)
    u = state.inv_kernel @ b
    s = c - b @ u
    if s <= EPS_SCHUR * c:
        raise NumericalError(f"singular Schur complement ({s:.3e}) while growing")
    f = 1.0 / s

    inv = np.empty((n + 1, n + 1), dtype=np.float64)
    inv[:n, :n] = state.inv_kernel + f * np.outer(u, u)
    inv[:n, n] = -u * f
    inv[n, :n] = -u * f
    inv[n, n] = f

    dictionary = np.vstack([state.dictionary, x[None, :]])
    outputs = np.concatenate([state.outputs, [complex(new_output)]])
    return SwkrlsState(
        dictionary=dictionary,
        outputs=outputs,
        inv_kernel=inv,
        alpha=inv @ outputs,
    )


def prune_oldest(state: SwkrlsState) -> SwkrlsState:
    """Drop the oldest pair, downdating the inverse by its leading pivot.

    Partitioning the stored inverse as [[e, f^T], [f, G]], the pruned
    inverse is G - f f^T / e.  Raises :class:`NumericalError` when
    |e| <= EPS_SCHUR and :class:`StateError` for windows shorter than 2.
    """
    n = len(state)
    if n < 2:
        raise StateError("prune_oldest needs at least 2 dictionary entries")
    e = state.inv_kernel[0, 0]
    if abs(e) <= EPS_SCHUR:
        raise NumericalError(f"vanishing pivot ({e:.3e}) while pruning")
    f = state.inv_kernel[1:, 0]
    inv = state.inv_kernel[1:, 1:] - np.outer(f, f) / e
    outputs = state.outputs[1:].copy()
    return SwkrlsState(
        dictionary=state.dictionary[1:].copy(),
        outputs=outputs,
        inv_kernel=inv,
        alpha=inv @ outputs,
    )


def update(state: SwkrlsState, new_input, new_output, params: KernelParams) -> SwkrlsState:
    """Sliding-window step: prune when at capacity M, then grow.

    For M = 1 the window is rebuilt from empty (a 1-entry window cannot be
    pruned), which keeps the single-slot semantics of the window contract.
    """
    if len(state) >= params.window_m:
        if params.window_m == 1:
            state = empty_state(params.block_l)
        else:
            state = prune_oldest(state)
    return grow(state, new_input, new_output, params)


def reconstruct_kernel_matrix(state: SwkrlsState, params: KernelParams) -> np.ndarray:
    """Dense regularized kernel matrix of the current dictionary.

    Direct evaluation (no recursion); pairs with ``inv_kernel`` in the
    oracle identity ``inv_kernel @ reconstruct_kernel_matrix(...) = I``.
    """
    d = state.dictionary
    sq = np.sum((d[:, None, :] - d[None, :, :]) ** 2, axis=-1)
    k = np.exp(-sq / (2.0 * params.sigma**2))
    return k + params.lam * np.eye(len(state))


def dump_state_csv(state: SwkrlsState, path) -> None:
    """Serialize a state to CSV (long format: kind, i, j, value)."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "i", "j", "value"])
        for i, row in enumerate(state.dictionary):
            for j, v in enumerate(row):
                w.writerow(["dict", i, j, repr(float(v))])
        for i, v in enumerate(state.outputs):
            w.writerow(["y_re", i, 0, repr(float(v.real))])
            w.writerow(["y_im", i, 0, repr(float(v.imag))])
        for i in range(len(state)):
            for j in range(len(state)):
                w.writerow(["inv", i, j, repr(float(state.inv_kernel[i, j]))])
        for i, v in enumerate(state.alpha):
            w.writerow(["alpha_re", i, 0, repr(float(v.real))])
            w.writerow(["alpha_im", i, 0, repr(float(v.imag))])


def load_state_csv(path) -> SwkrlsState:
    """Load a state written by :func:`dump_state_csv`."""
    import csv

    cells: dict[str, dict[tuple[int, int], float]] = {}
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        next(rd)
        for kind, i, j, value in rd:
            cells.setdefault(kind, {})[(int(i), int(j))] = float(value)

    def _grid(kind):
        if kind not in cells:
            return np.empty((0, 0))
        block = cells[kind]
        ni = 1 + max(k[0] for k in block)
        nj = 1 + max(k[1] for k in block)
        out = np.empty((ni, nj))
        for (i, j), v in block.items():
            out[i, j] = v
        return out

    dictionary = _grid("dict")
    outputs = (_grid("y_re") + 1j * _grid("y_im")).ravel()
    alpha = (_grid("alpha_re") + 1j * _grid("alpha_im")).ravel()
    return SwkrlsState(
        dictionary=dictionary,
        outputs=outputs.astype(np.complex128),
        inv_kernel=_grid("inv"),
        alpha=alpha.astype(np.complex128),
    )
