"""
fopaeq: kernel-adaptive equalization for pump-dithered parametric
amplifier links.

Subpackages / modules
---------------------
swkrls     sliding-window complexified-Gaussian kernel RLS (reference)
kernels    streaming equalizer loops (compiled core + NumPy fallback)
equalizer  decision-directed kernel compensation loop
lms        one-tap LMS carrier-recovery baseline
channel    FOPA gain model, pump dithering, cascade simulation
dsp        16-QAM mapping, RRC shaping, BER and RMS-deviation metrics
config     experiment configuration (INI) and defaults
experiment simulation / grid-search / profile pipelines and CSV reports
cli        command-line entry point
"""

__version__ = "0.1.0"

from .kernels import BACKEND as LOOP_BACKEND  # noqa: F401
