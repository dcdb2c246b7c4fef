"""
Experiment pipelines: transmission simulation, hyperparameter grid search,
gain-profile scan and tone optimization, with CSV/JSON reporting.

Every pipeline is a deterministic function of (config, seed).  Per-batch
random streams derive from ``SeedSequence([seed, batch])`` spawned into
(bit source, Tx laser, Rx laser, link) children; the link stream is
consumed per stage as (dither shift, pump phase noise, ASE).  One Rx-laser
realization per batch is reused for every stage tap so per-stage curves
and the kernel/LMS comparison stay paired.
"""

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__, channel, dsp
from .config import ExperimentConfig, GridSpec, config_hash
from .equalizer import EqualizerConfig, run_block
from .kernels import BACKEND
from .lms import LmsConfig, run_block_lms
from .swkrls import KernelParams

__all__ = [
    "ResolvedSetup",
    "RunMetrics",
    "resolve_setup",
    "run_simulate",
    "run_gridsearch",
    "run_gain_profile",
    "run_optimize_tones",
    "write_manifest",
]

CSV_SCHEMAS = {
    "ber_vs_stage": "stage,ber_kernel,errors_kernel,ber_lms,errors_lms,bits",
    "rms_vs_stage": (
        "stage,rms_phase_kernel,rms_amp_kernel,rms_phase_lms,rms_amp_lms"
    ),
    "convergence": "n,abs_err_kernel,abs_err_lms",
    "grid_results": "window_m,sigma,lambda,ber,errors,bits,is_best",
    "gain_profile": "detuning_nm,mean_amp_db,mean_phase_rad,rms_amp,rms_phase",
    "tone_spectrum": "line_index,freq_ghz,power_before,power_after",
}


def _write_csv(out_dir, name, rows):
    path = f"{out_dir}/{name}.csv"
    with open(path, "w", newline="") as fh:
        fh.write(f"# fopaeq.{name}.v1\n")
        w = csv.writer(fh)
        w.writerow(CSV_SCHEMAS[name].split(","))
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return path


@dataclass(frozen=True)
class ResolvedSetup:
    """Config with calibration and transparency applied."""

    fopa: channel.FopaParams
    span_loss_db: float
    stage: channel.StageConfig


def resolve_setup(cfg: ExperimentConfig) -> ResolvedSetup:
    fopa = cfg.fopa
    if cfg.target_peak_gain_db is not None:
        fopa = channel.calibrate_gain(cfg.target_peak_gain_db, fopa)
    loss = cfg.span_loss_db
    if loss is None:
        loss = channel.transparent_span_loss_db(fopa, cfg.dither)
    stage = channel.StageConfig(
        fopa=fopa,
        dither=cfg.dither,
        span_loss_db=loss,
        noise_figure_db=cfg.noise_figure_db,
        pump_linewidth_hz=cfg.pump_linewidth_hz,
    )
    return ResolvedSetup(fopa=fopa, span_loss_db=loss, stage=stage)


def _batch_rngs(seed: int, batch: int):
    ss = np.random.SeedSequence([seed, batch])
    return [np.random.default_rng(s) for s in ss.spawn(4)]


def _transmit_batch(cfg: ExperimentConfig, setup: ResolvedSetup, batch: int):
    """One batch through Tx + link; returns symbols, taps and Rx laser."""
    shaping = cfg.shaping
    fs = shaping.sample_rate
    n_guard = shaping.filter_span_symbols
    n_block = cfg.training_len + cfg.symbols_per_batch
    n_sym = n_guard + n_block + n_guard

    rng_bits, rng_tx, rng_rx, rng_link = _batch_rngs(cfg.seed, batch)
    bits = rng_bits.integers(0, 2, size=4 * n_sym).astype(np.uint8)
    symbols = dsp.map_bits(bits)

    wf = dsp.rrc_shape(symbols, shaping)
    launch_w = 10.0 ** (cfg.launch_power_dbm / 10.0) * 1e-3
    wf = wf * np.sqrt(launch_w / np.mean(np.abs(wf) ** 2))
    if cfg.tx_linewidth_hz > 0:
        wf = wf * np.exp(
            1j * channel.laser_phase_noise(wf.size, cfg.tx_linewidth_hz, 1 / fs, rng_tx)
        )

    _, taps = channel.propagate_link(wf, [setup.stage] * cfg.n_stages, fs, rng_link)
    phi_rx = channel.laser_phase_noise(wf.size, cfg.rx_linewidth_hz, 1 / fs, rng_rx)

    block = slice(n_guard, n_guard + n_block)
    return symbols[block], taps, phi_rx


def _receive_tap(cfg: ExperimentConfig, tap, phi_rx):
    """Matched filter + decimation + guard removal for one stage tap."""
    shaping = cfg.shaping
    n_guard = shaping.filter_span_symbols
    n_block = cfg.training_len + cfg.symbols_per_batch
    rx = tap * np.exp(1j * phi_rx)
    syms = dsp.symbol_samples(dsp.rrc_matched_filter(rx, shaping), shaping)
    return syms[n_guard : n_guard + n_block]


@dataclass
class RunMetrics:
    """Per-stage results of a simulation run."""

    stages: np.ndarray
    ber_kernel: np.ndarray
    ber_lms: np.ndarray
    errors_kernel: np.ndarray
    errors_lms: np.ndarray
    bits_total: int
    rms_phase_kernel: np.ndarray
    rms_amp_kernel: np.ndarray
    rms_phase_lms: np.ndarray
    rms_amp_lms: np.ndarray
    n_skipped_kernel: int
    runtime_s: float
    convergence: np.ndarray  # (n, 3): symbol index, |e| kernel, |e| lms

    def ber_stderr_kernel(self) -> np.ndarray:
        """Poisson standard error of the per-stage kernel BER."""
        return np.sqrt(np.maximum(self.errors_kernel, 1)) / self.bits_total


def run_simulate(cfg: ExperimentConfig, out_dir=None, log=None) -> RunMetrics:
    """Full pipeline: Tx -> cascade -> per-stage kernel and LMS equalizers.

    Per-stage metrics re-run the equalizers from scratch on each stage tap
    (fresh training), with both equalizers consuming the identical stream.
    Writes ``ber_vs_stage.csv``, ``rms_vs_stage.csv``, ``convergence.csv``
    and ``manifest.json`` when ``out_dir`` is given.
    """
    t0 = time.perf_counter()
    setup = resolve_setup(cfg)
    n_stages = cfg.n_stages
    n_train = cfg.training_len

    eq_cfg = EqualizerConfig(kernel=cfg.kernel, training_len=n_train)
    lms_cfg = LmsConfig(mu=cfg.lms_mu, training_len=n_train)

    err_k = np.zeros(n_stages, dtype=np.int64)
    err_l = np.zeros(n_stages, dtype=np.int64)
    rms = np.zeros((4, n_stages))
    bits_total = 0
    skipped = 0
    convergence = None

    for b in range(cfg.n_batches):
        symbols, taps, phi_rx = _transmit_batch(cfg, setup, b)
        ref = symbols[:n_train]
        tx_payload = symbols[n_train:]
        tx_bits = dsp.demap_symbols(tx_payload)
        bits_total += tx_bits.size
        for s in range(n_stages):
            block = _receive_tap(cfg, taps[s], phi_rx)
            z_k, tr_k = run_block(block, ref, eq_cfg)
            z_l, tr_l = run_block_lms(block, ref, lms_cfg)
            e_k, _, _ = dsp.count_ber(tx_bits, dsp.demap_symbols(tr_k.decided[n_train:]))
            e_l, _, _ = dsp.count_ber(tx_bits, dsp.demap_symbols(tr_l.decided[n_train:]))
            err_k[s] += e_k
            err_l[s] += e_l
            skipped += tr_k.n_skipped
            rp_k, ra_k = dsp.rms_deviation(tx_payload, z_k[n_train:])
            rp_l, ra_l = dsp.rms_deviation(tx_payload, z_l[n_train:])
            rms[:, s] += (rp_k, ra_k, rp_l, ra_l)
            if b == 0 and s == n_stages - 1:
                step = 16
                idx = np.arange(0, block.size, step)
                convergence = np.column_stack(
                    [
                        idx,
                        np.abs(tr_k.d_hat - tr_k.d_tilde)[idx],
                        np.abs(tr_l.d_hat - tr_l.d_tilde)[idx],
                    ]
                )
        if log:
            log(f"batch {b + 1}/{cfg.n_batches} done")

    rms /= cfg.n_batches
    metrics = RunMetrics(
        stages=np.arange(1, n_stages + 1),
        ber_kernel=err_k / bits_total,
        ber_lms=err_l / bits_total,
        errors_kernel=err_k,
        errors_lms=err_l,
        bits_total=bits_total,
        rms_phase_kernel=rms[0],
        rms_amp_kernel=rms[1],
        rms_phase_lms=rms[2],
        rms_amp_lms=rms[3],
        n_skipped_kernel=skipped,
        runtime_s=time.perf_counter() - t0,
        convergence=convergence,
    )
    if out_dir is not None:
        _write_csv(
            out_dir,
            "ber_vs_stage",
            [
                (int(s), float(metrics.ber_kernel[i]), int(err_k[i]),
                 float(metrics.ber_lms[i]), int(err_l[i]), bits_total)
                for i, s in enumerate(metrics.stages)
            ],
        )
        _write_csv(
            out_dir,
            "rms_vs_stage",
            [
                (int(s), float(rms[0, i]), float(rms[1, i]),
                 float(rms[2, i]), float(rms[3, i]))
                for i, s in enumerate(metrics.stages)
            ],
        )
        _write_csv(
            out_dir,
            "convergence",
            [(int(n), float(a), float(bb)) for n, a, bb in metrics.convergence],
        )
        write_manifest(out_dir, cfg, "simulate")
    return metrics


def _grid_cell(args):
    """Evaluate one grid cell on the shared stage-N streams (picklable)."""
    m, sigma, lam, block_l, n_train, streams = args
    eq_cfg = EqualizerConfig(
        kernel=KernelParams(sigma=sigma, lam=lam, window_m=m, block_l=block_l),
        training_len=n_train,
    )
    errors = 0
    bits = 0
    for block, ref, tx_bits in streams:
        _, tr = run_block(block, ref, eq_cfg)
        e, t, _ = dsp.count_ber(tx_bits, dsp.demap_symbols(tr.decided[n_train:]))
        errors += e
        bits += t
    return errors, bits


def run_gridsearch(
    cfg: ExperimentConfig,
    grid: GridSpec | None = None,
    out_dir=None,
    jobs: int = 1,
    log=None,
):
    """Kernel hyperparameter search on a shared channel realization.

    The cascade is simulated once per batch (seeded); every grid cell
    equalizes the identical final-stage streams, so the comparison is
    paired.  Cells may run in parallel; results are aggregated in grid
    order so the output does not depend on scheduling.

    Returns
    -------
    (rows, best) where rows are (M, sigma, lambda, ber, errors, bits) in
    grid order and best is the argmin row.
    """
    if grid is None:
        grid = cfg.grid
    setup = resolve_setup(cfg)
    n_train = cfg.training_len
    n_batches = max(1, round(grid.symbols_budget / cfg.symbols_per_batch))

    streams = []
    for b in range(n_batches):
        symbols, taps, phi_rx = _transmit_batch(cfg, setup, b)
        block = _receive_tap(cfg, taps[-1], phi_rx)
        streams.append(
            (block, symbols[:n_train], dsp.demap_symbols(symbols[n_train:]))
        )
        if log:
            log(f"channel batch {b + 1}/{n_batches} ready")

    cells = [
        (int(m), float(sg), float(lm), cfg.kernel.block_l, n_train, streams)
        for m in grid.m_values
        for sg in grid.sigma_values
        for lm in grid.lambda_values
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            outcomes = list(ex.map(_grid_cell, cells))
    else:
        outcomes = [_grid_cell(c) for c in cells]

    rows = []
    for (m, sg, lm, *_), (errors, bits) in zip(cells, outcomes):
        rows.append((m, sg, lm, errors / bits, errors, bits))
        if log:
            log(f"cell M={m} sigma={sg:.4g} lambda={lm:.4g}: BER {errors / bits:.3e}")
    best = min(rows, key=lambda r: r[3])

    if out_dir is not None:
        _write_csv(
            out_dir,
            "grid_results",
            [
                (m, float(sg), float(lm), float(ber), errors, bits,
                 int((m, sg, lm) == best[:3]))
                for m, sg, lm, ber, errors, bits in rows
            ],
        )
        write_manifest(out_dir, cfg, "gridsearch")
    return rows, best


def run_gain_profile(
    cfg: ExperimentConfig,
    out_dir=None,
    span_nm: float = 40.0,
    step_nm: float = 0.25,
    n_time: int = 1024,
):
    """Scan the calibrated amplifier profile over +-span_nm."""
    setup = resolve_setup(cfg)
    grid = np.concatenate(
        [-np.arange(step_nm, span_nm + step_nm / 2, step_nm)[::-1],
         np.arange(step_nm, span_nm + step_nm / 2, step_nm)]
    )
    prof = channel.gain_profile_scan(setup.fopa, cfg.dither, grid, n_time=n_time)
    if out_dir is not None:
        _write_csv(
            out_dir,
            "gain_profile",
            [
                (float(prof["detuning_nm"][i]), float(prof["mean_amp_db"][i]),
                 float(prof["mean_phase_rad"][i]), float(prof["rms_amp"][i]),
                 float(prof["rms_phase"][i]))
                for i in range(grid.size)
            ],
        )
        write_manifest(out_dir, cfg, "gain-profile")
    return prof


def run_optimize_tones(cfg: ExperimentConfig, out_dir=None, budget: int = 20000):
    """Optimize the dither tone set and export spec + spectra."""
    start = replace(
        cfg.dither,
        amps_rad=(1.0,) * cfg.dither.n_tones,
        phases_rad=(0.0,) * cfg.dither.n_tones,
    )
    result = channel.optimize_tones(
        start, pump_linewidth_hz=cfg.pump_linewidth_hz, budget=budget, seed=cfg.seed
    )
    if out_dir is not None:
        idx, p_before = channel.comb_line_powers(start)
        _, p_after = channel.comb_line_powers(result.spec)
        f0_ghz = start.base_freq_hz / 1e9
        _write_csv(
            out_dir,
            "tone_spectrum",
            [
                (int(idx[i]), float(idx[i] * f0_ghz), float(p_before[i]),
                 float(p_after[i]))
                for i in range(idx.size)
            ],
        )
        with open(f"{out_dir}/tones.cfg", "w") as fh:
            fh.write("[dither]\n")
            fh.write(f"freqs_ghz = {', '.join(repr(float(f)) for f in result.spec.freqs_ghz)}\n")
            fh.write(f"amps_rad = {', '.join(repr(float(a)) for a in result.spec.amps_rad)}\n")
            fh.write(f"phases_rad = {', '.join(repr(float(p)) for p in result.spec.phases_rad)}\n")
        write_manifest(out_dir, cfg, "optimize-tones")
    return result


def write_manifest(out_dir, cfg: ExperimentConfig, command: str) -> None:
    """Record config hash, seed and versions (no timestamps: outputs of a
    given config/seed are bit-reproducible)."""
    import scipy

    manifest = {
        "command": command,
        "seed": cfg.seed,
        "config_sha256": config_hash(cfg),
        "fopaeq_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "loop_backend": BACKEND,
    }
    with open(f"{out_dir}/manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
