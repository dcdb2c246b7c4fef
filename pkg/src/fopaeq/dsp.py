"""
16-QAM transmitter / receiver DSP primitives.

Gray-mapped constellation, root-raised-cosine pulse shaping and matched
filtering, bit-error counting and per-class RMS symbol deviation metrics.
All symbol streams are 1-D complex128 arrays normalized to unit average
symbol power.
"""

import csv
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Constellation",
    "ShapingConfig",
    "qam16",
    "map_bits",
    "demap_symbols",
    "nearest_points",
    "rrc_taps",
    "rrc_shape",
    "rrc_matched_filter",
    "symbol_samples",
    "count_ber",
    "rms_deviation",
    "write_cseq",
    "read_cseq",
    "write_cseq_csv",
    "read_cseq_csv",
]

# Gray code along one axis: bit pair b0b1 -> PAM-4 level.
# 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3 (adjacent levels differ in one bit).
_GRAY_LEVELS = np.array([-3.0, -1.0, 3.0, 1.0])


@dataclass(frozen=True)
class Constellation:
    """Square 16-QAM alphabet, Gray mapped, unit average power.

    Attributes
    ----------
    points : np.ndarray
        The 16 complex constellation points; ``points[i]`` is the symbol
        for the 4-bit nibble ``i`` read as ``b0 b1 b2 b3`` where ``b0 b1``
        select the in-phase level and ``b2 b3`` the quadrature level.
        All-zero bits map to the corner ``(-3 - 3j)/sqrt(10)``.
    bits : np.ndarray
        (16, 4) array of the bit pattern for each point.
    """

    points: np.ndarray
    bits: np.ndarray
    bits_per_symbol: int = 4

    def __post_init__(self):
        mean_power = np.mean(np.abs(self.points) ** 2)
        if abs(mean_power - 1.0) > 1e-12:
            raise ValueError("constellation is not unit power")


def qam16() -> Constellation:
    """Build the Gray-mapped unit-power 16-QAM constellation."""
    nibbles = np.arange(16)
    b = ((nibbles[:, None] >> np.array([3, 2, 1, 0])) & 1).astype(np.uint8)
    i_level = _GRAY_LEVELS[b[:, 0] * 2 + b[:, 1]]
    q_level = _GRAY_LEVELS[b[:, 2] * 2 + b[:, 3]]
    points = (i_level + 1j * q_level) / np.sqrt(10.0)
    return Constellation(points=points, bits=b)


def map_bits(bits, constellation: Constellation | None = None) -> np.ndarray:
    """Map a bit stream to 16-QAM symbols.

    Parameters
    ----------
    bits : array_like
        0/1 values, length divisible by 4.

    Returns
    -------
    np.ndarray
        complex128 symbols, one per 4 bits.
    """
    if constellation is None:
        constellation = qam16()
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size % 4:
        raise ValueError("bit count must be divisible by 4")
    nib = bits.reshape(-1, 4)
    idx = (nib[:, 0] << 3) | (nib[:, 1] << 2) | (nib[:, 2] << 1) | nib[:, 3]
    return constellation.points[idx]


def nearest_points(z, constellation: Constellation) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-Euclidean-distance slicer.

    Returns
    -------
    (decided, indices)
        Nearest constellation points and their alphabet indices.
    """
    z = np.asarray(z, dtype=np.complex128).ravel()
    d2 = np.abs(z[:, None] - constellation.points[None, :]) ** 2
    idx = np.argmin(d2, axis=1)
    return constellation.points[idx], idx


def demap_symbols(decisions, constellation: Constellation | None = None) -> np.ndarray:
    """Recover the bit stream from sliced symbols (inverse of map_bits)."""
    if constellation is None:
        constellation = qam16()
    _, idx = nearest_points(decisions, constellation)
    return constellation.bits[idx].ravel()


@dataclass(frozen=True)
class ShapingConfig:
    """Nyquist pulse-shaping parameters.

    Defaults give a 28-GBd root-raised-cosine pair at roll-off 0.1 with
    2 samples per symbol and a 32-symbol filter span.
    """

    rolloff: float = 0.1
    symbol_rate: float = 28e9
    samples_per_symbol: int = 2
    filter_span_symbols: int = 32

    def __post_init__(self):
        if not 0.0 < self.rolloff <= 1.0:
            raise ValueError("rolloff must be in (0, 1]")
        if self.samples_per_symbol < 1 or self.filter_span_symbols < 1:
            raise ValueError("samples_per_symbol and filter_span_symbols must be >= 1")

    @property
    def sample_rate(self) -> float:
        return self.symbol_rate * self.samples_per_symbol


def rrc_taps(cfg: ShapingConfig) -> np.ndarray:
    """Root-raised-cosine impulse response.

    Odd-length symmetric taps spanning ``filter_span_symbols`` symbol
    periods at ``samples_per_symbol``, normalized to unit energy so the
    shape/matched-filter cascade has a unit center tap.
    """
    sps = cfg.samples_per_symbol
    a = cfg.rolloff
    n_taps = cfg.filter_span_symbols * sps + 1
    t = (np.arange(n_taps) - (n_taps - 1) / 2) / sps  # in symbol periods

    h = np.empty(n_taps)
    singular = np.isclose(np.abs(t), 1.0 / (4.0 * a), atol=1e-12)
    center = np.isclose(t, 0.0, atol=1e-12)
    regular = ~(singular | center)

    tr = t[regular]
    num = np.sin(np.pi * tr * (1 - a)) + 4 * a * tr * np.cos(np.pi * tr * (1 + a))
    den = np.pi * tr * (1 - (4 * a * tr) ** 2)
    h[regular] = num / den
    h[center] = 1.0 + a * (4.0 / np.pi - 1.0)
    h[singular] = (a / np.sqrt(2.0)) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * a))
        + (1 - 2 / np.pi) * np.cos(np.pi / (4 * a))
    )
    return h / np.sqrt(np.sum(h**2))


def rrc_shape(symbols, cfg: ShapingConfig) -> np.ndarray:
    """Upsample symbols and apply the RRC shaping filter.

    The output has ``samples_per_symbol`` samples per input symbol; symbol
    k is centered on sample ``k * samples_per_symbol``.
    """
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    sps = cfg.samples_per_symbol
    up = np.zeros(symbols.size * sps, dtype=np.complex128)
    up[::sps] = symbols
    h = rrc_taps(cfg)
    return np.convolve(up, h, mode="same")


def rrc_matched_filter(samples, cfg: ShapingConfig) -> np.ndarray:
    """Apply the matched RRC filter (same taps, zero group delay)."""
    samples = np.asarray(samples, dtype=np.complex128).ravel()
    h = rrc_taps(cfg)
    return np.convolve(samples, h, mode="same")


def symbol_samples(samples, cfg: ShapingConfig) -> np.ndarray:
    """Decimate a matched-filtered waveform to symbol rate (phase 0)."""
    return np.asarray(samples, dtype=np.complex128)[:: cfg.samples_per_symbol]


def count_ber(tx_bits, rx_bits) -> tuple[int, int, float]:
    """Directly counted bit errors.

    Returns
    -------
    (errors, total, ber)
    """
    tx_bits = np.asarray(tx_bits, dtype=np.uint8).ravel()
    rx_bits = np.asarray(rx_bits, dtype=np.uint8).ravel()
    if tx_bits.size != rx_bits.size:
        raise ValueError("bit streams must have equal length")
    errors = int(np.count_nonzero(tx_bits != rx_bits))
    total = int(tx_bits.size)
    return errors, total, errors / total if total else 0.0


def rms_deviation(
    tx_symbols, rx_symbols, constellation: Constellation | None = None
) -> tuple[float, float]:
    """Class-averaged RMS phase and relative amplitude deviation.

    For each constellation point, the RMS of the phase difference
    ``arg(rx) - arg(tx)`` (wrapped to (-pi, pi]) and of the relative
    amplitude error ``(|rx| - |tx|)/|tx|`` is taken over the symbols of
    that class; the result is the mean over the occupied classes.

    Returns
    -------
    (rms_phase, rms_amp)
        Phase in radians, amplitude dimensionless.
    """
    if constellation is None:
        constellation = qam16()
    tx = np.asarray(tx_symbols, dtype=np.complex128).ravel()
    rx = np.asarray(rx_symbols, dtype=np.complex128).ravel()
    if tx.size != rx.size:
        raise ValueError("symbol streams must have equal length")
    _, cls = nearest_points(tx, constellation)

    dphi = np.angle(rx * np.conj(tx))
    damp = (np.abs(rx) - np.abs(tx)) / np.abs(tx)

    phase_terms, amp_terms = [], []
    for c in range(constellation.points.size):
        mask = cls == c
        if not np.any(mask):
            warnings.warn(f"constellation class {c} has no occupancy; excluded")
            continue
        phase_terms.append(np.sqrt(np.mean(dphi[mask] ** 2)))
        amp_terms.append(np.sqrt(np.mean(damp[mask] ** 2)))
    return float(np.mean(phase_terms)), float(np.mean(amp_terms))


def write_cseq(path, x) -> None:
    """Write a complex sequence as little-endian float64 (re, im) pairs."""
    x = np.asarray(x, dtype=np.complex128).ravel()
    data = np.empty(2 * x.size, dtype="<f8")
    data[0::2] = x.real
    data[1::2] = x.imag
    data.tofile(path)


def read_cseq(path) -> np.ndarray:
    """Read a complex sequence written by :func:`write_cseq`."""
    data = np.fromfile(path, dtype="<f8")
    if data.size % 2:
        raise ValueError("file does not hold an even number of float64 values")
    return data[0::2] + 1j * data[1::2]


def write_cseq_csv(path, x) -> None:
    """Write a complex sequence as CSV with columns n, re, im."""
    x = np.asarray(x, dtype=np.complex128).ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "re", "im"])
        for n, v in enumerate(x):
            w.writerow([n, repr(float(v.real)), repr(float(v.imag))])


def read_cseq_csv(path) -> np.ndarray:
    """Read a complex sequence written by :func:`write_cseq_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    out = np.empty(len(rows) - 1, dtype=np.complex128)
    for k, row in enumerate(rows[1:]):
        out[k] = float(row[1]) + 1j * float(row[2])
    return out
