"""
Decision-directed distortion compensation loop around the kernel filter.

Per symbol: predict the complex channel factor d_hat from the recent
decision-driven distortions, divide it out, slice, form the new
decision-driven distortion d_tilde = r / decision, update the filter and
shift the history ring.  A reference block drives training; the remainder
runs decision-directed.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from . import kernels, swkrls
from .dsp import Constellation, qam16
from .swkrls import KernelParams, SwkrlsState
from .errors import NumericalError

__all__ = [
    "EqualizerConfig",
    "DistortionHistory",
    "EqualizerOutput",
    "EqualizerTrace",
    "new_history",
    "step",
    "run_block",
]

#: Division guard on |d_hat| (received stream is unit power).
EPS_DIV = 1e-9


@dataclass(frozen=True)
class EqualizerConfig:
    kernel: KernelParams
    training_len: int = 2000
    constellation: Constellation = field(default_factory=qam16)

    def __post_init__(self):
        if self.training_len < self.kernel.block_l + 1:
            raise ValueError(
                "training_len must be >= block_l + 1 (the filter needs a full "
                "lag vector before its first prediction)"
            )


@dataclass(frozen=True)
class DistortionHistory:
    """Ring of the last L decision-driven distortions, newest first.

    ``n_seen`` counts observed distortions (the ring starts as neutral
    1+0j padding); ``last_valid_dhat`` backs the division guard.
    """

    values: np.ndarray
    n_seen: int = 0
    last_valid_dhat: complex = 1.0 + 0.0j


def new_history(block_l: int) -> DistortionHistory:
    return DistortionHistory(values=np.ones(block_l, dtype=np.complex128))


@dataclass(frozen=True)
class EqualizerOutput:
    corrected: complex
    decided: complex
    predicted_distortion: complex
    decision_distortion: complex
    mode: str  # "training" | "decision_directed"
    clamped: bool = False
    update_skipped: bool = False


def step(
    state: SwkrlsState,
    history: DistortionHistory,
    r_n: complex,
    reference: complex | None,
    cfg: EqualizerConfig,
) -> tuple[SwkrlsState, DistortionHistory, EqualizerOutput]:
    """One symbol through the compensation loop.

    ``reference`` present selects training mode (the decision is the
    reference symbol); absent, the slicer decides.  Returns the advanced
    filter state and history alongside the per-symbol quantities.
    """
    params = cfg.kernel
    query = swkrls.complexify(history.values)

    clamped = False
    if len(state) > 0:
        d_hat = swkrls.predict(state, query, params)
    else:
        d_hat = 1.0 + 0.0j
    if abs(d_hat) < EPS_DIV:
        d_hat = history.last_valid_dhat
        clamped = True
    last_valid = history.last_valid_dhat if clamped else d_hat

    z = r_n / d_hat
    if reference is not None:
        decided = complex(reference)
        mode = "training"
    else:
        pts = cfg.constellation.points
        decided = complex(pts[np.argmin(np.abs(pts - z))])
        mode = "decision_directed"
    d_tilde = r_n / decided

    skipped = False
    if history.n_seen >= params.block_l:
        try:
            state = swkrls.update(state, query, d_tilde, params)
        except NumericalError:
            skipped = True

    values = np.empty_like(history.values)
    values[1:] = history.values[:-1]
    values[0] = d_tilde
    history = DistortionHistory(
        values=values, n_seen=history.n_seen + 1, last_valid_dhat=last_valid
    )
    out = EqualizerOutput(
        corrected=z,
        decided=decided,
        predicted_distortion=d_hat,
        decision_distortion=d_tilde,
        mode=mode,
        clamped=clamped,
        update_skipped=skipped,
    )
    return state, history, out


@dataclass(frozen=True)
class EqualizerTrace:
    """Per-symbol record of a block run."""

    r: np.ndarray
    d_hat: np.ndarray
    d_tilde: np.ndarray
    z: np.ndarray
    decided: np.ndarray
    training: np.ndarray  # uint8, 1 while training
    clamped: np.ndarray  # uint8, 1 where the division guard fired
    n_skipped: int = 0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["n", "re_r", "im_r", "re_dhat", "im_dhat", "re_dtilde",
                 "im_dtilde", "re_z", "im_z", "re_decision", "im_decision", "mode"]
            )
            for n in range(self.r.size):
                w.writerow(
                    [n]
                    + [repr(float(v)) for v in (
                        self.r[n].real, self.r[n].imag,
                        self.d_hat[n].real, self.d_hat[n].imag,
                        self.d_tilde[n].real, self.d_tilde[n].imag,
                        self.z[n].real, self.z[n].imag,
                        self.decided[n].real, self.decided[n].imag,
                    )]
                    + ["training" if self.training[n] else "decision_directed"]
                )


def run_block(
    symbols_rx,
    reference,
    cfg: EqualizerConfig,
    normalize: bool = True,
) -> tuple[np.ndarray, EqualizerTrace]:
    """Equalize a symbol block: training head, decision-directed tail.

    The received stream is normalized to unit average symbol power before
    the loop (the distortion factor is relative).  Dispatches to the
    active streaming backend in :mod:`fopaeq.kernels`.

    Returns
    -------
    (corrected, trace)
    """
    r = np.asarray(symbols_rx, dtype=np.complex128).ravel()
    reference = np.asarray(reference, dtype=np.complex128).ravel()
    if reference.size < cfg.training_len:
        raise ValueError("reference must cover at least training_len symbols")
    if normalize:
        r = r / np.sqrt(np.mean(np.abs(r) ** 2))

    ref_full = np.zeros(r.size, dtype=np.complex128)
    ref_full[: min(reference.size, r.size)] = reference[: r.size]

    res = kernels.swkrls_equalize(
        r,
        ref_full,
        cfg.training_len,
        cfg.constellation.points,
        cfg.kernel.window_m,
        cfg.kernel.block_l,
        cfg.kernel.sigma,
        cfg.kernel.lam,
        eps_div=EPS_DIV,
    )
    trace = EqualizerTrace(
        r=r,
        d_hat=res["d_hat"],
        d_tilde=res["d_tilde"],
        z=res["z"],
        decided=res["decided"],
        training=res["training"],
        clamped=res["clamped"],
        n_skipped=res["n_skipped"],
    )
    return res["z"], trace
