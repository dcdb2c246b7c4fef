"""One-tap decision-directed LMS carrier recovery (comparison baseline).

z_n = w_n r_n, e_n = d_n - z_n, w_{n+1} = w_n + mu e_n conj(r_n), with d_n
the reference while training and the sliced decision afterwards.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dsp import Constellation, qam16
from .equalizer import EqualizerTrace

__all__ = ["LmsConfig", "lms_step", "run_block_lms"]


@dataclass(frozen=True)
class LmsConfig:
    mu: float = 0.01
    training_len: int = 2000
    constellation: Constellation = field(default_factory=qam16)

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise ValueError("mu must be in (0, 1)")


def lms_step(
    w: complex, r_n: complex, reference: complex | None, cfg: LmsConfig
) -> tuple[complex, complex, complex]:
    """One LMS update; returns (new tap, corrected symbol, decision)."""
    z = w * r_n
    if reference is not None:
        decided = complex(reference)
    else:
        pts = cfg.constellation.points
        decided = complex(pts[np.argmin(np.abs(pts - z))])
    w = w + cfg.mu * (decided - z) * np.conj(r_n)
    return w, z, decided


def run_block_lms(
    symbols_rx, reference, cfg: LmsConfig, normalize: bool = True
) -> tuple[np.ndarray, EqualizerTrace]:
    """Equalize a block with the one-tap LMS; mirrors run_block.

    The trace reuses the kernel equalizer's record shape: the implied
    distortion estimate is d_hat = 1/w (so r/z) and d_tilde = r/decision.
    """
    r = np.asarray(symbols_rx, dtype=np.complex128).ravel()
    reference = np.asarray(reference, dtype=np.complex128).ravel()
    if reference.size < cfg.training_len:
        raise ValueError("reference must cover at least training_len symbols")
    if normalize:
        r = r / np.sqrt(np.mean(np.abs(r) ** 2))

    ref_full = np.zeros(r.size, dtype=np.complex128)
    ref_full[: min(reference.size, r.size)] = reference[: r.size]

    res = kernels.lms_equalize(
        r, ref_full, cfg.training_len, cfg.constellation.points, cfg.mu
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        d_hat = np.where(res["z"] != 0, r / res["z"], 1.0 + 0.0j)
    trace = EqualizerTrace(
        r=r,
        d_hat=d_hat,
        d_tilde=r / res["decided"],
        z=res["z"],
        decided=res["decided"],
        training=res["training"],
        clamped=np.zeros(r.size, dtype=np.uint8),
        n_skipped=0,
    )
    return res["z"], trace
