"""Monte Carlo simulation of the passively prepared protocol, end to end.

One round draws a thermal source state, splits it, attenuates the
outgoing arm, measures the retained arm with Alice's noisy receiver and
rescales the outcome into an estimate of the outgoing quadratures, then
applies the lossy noisy channel and Bob's receiver.  The empirical
second moments of ``(x_A, p_A, x_B, p_B)`` must reproduce the
closed-form noise budget; the outgoing quadrature is additionally
tracked as simulation-only ground truth so the preparation noise can be
estimated directly.

Rounds are independent, so the run is partitioned into independent
random streams and merged by summing sufficient statistics; the result
depends only on ``(master_seed, partitions)``, not on worker scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, ParameterError, TrackingDisabledError
from .gaussian import DetectorModel, RngStream, beamsplitter, heterodyne_measure, sample_thermal_quadratures
from .noise import ChannelModel, ProtocolParams, alice_uncertainty, channel_transmittance

__all__ = [
    "SimConfig",
    "SimSummary",
    "analytic_delta",
    "analytic_moments",
    "empirical_mi_stderr",
    "empirical_mutual_information",
    "estimate_excess_noise",
    "run_protocol",
]

DUMP_HEADER = "round,xA,pA,xB,pB"

# Rounds are processed in fixed-size chunks so that draws, and therefore
# results, do not depend on how partitions are scheduled.
_CHUNK = 1 << 17


@dataclass(frozen=True)
class SimConfig:
    """Inputs of one simulation run."""

    params: ProtocolParams
    det_a: DetectorModel
    det_b: DetectorModel
    channel: ChannelModel
    count: int
    master_seed: int
    partitions: int = 1
    track_internal: bool = True

    def __post_init__(self):
        if self.count < 1:
            raise ParameterError(f"count must be >= 1, got {self.count}")
        if self.partitions < 1:
            raise ParameterError(f"partitions must be >= 1, got {self.partitions}")
        RngStream(self.master_seed)  # validates the seed range


@dataclass(eq=False)
class SimSummary:
    """Accumulated statistics of a run.

    ``moments`` holds the raw second moments of ``(x_A, p_A, x_B, p_B)``
    about zero as a symmetric 4x4 matrix in SNU, with per-entry standard
    errors in ``moment_stderr``.  ``delta_hat`` is the mean squared error
    of Alice's estimate against the tracked outgoing quadrature (both
    quadratures pooled); it is None when tracking was disabled.
    """

    count: int
    moments: np.ndarray
    moment_stderr: np.ndarray
    delta_hat: float | None
    delta_stderr: float | None
    tracked: bool

    @property
    def eps_a_hat(self) -> float | None:
        return None if self.delta_hat is None else self.delta_hat - 1.0


class _Kahan:
    """Compensated accumulator, elementwise over a fixed shape."""

    def __init__(self, shape: tuple[int, ...] = ()):
        self.total = np.zeros(shape)
        self._c = np.zeros(shape)

    def add(self, value) -> None:
        y = value - self._c
        t = self.total + y
        self._c = (t - self.total) - y
        self.total = t


def _partition_sums(args):
    """Run one partition; returns summed sufficient statistics."""
    cfg, index, n_rounds, want_samples = args
    params, det_a, det_b = cfg.params, cfg.det_a, cfg.det_b
    eta_a = params.eta_a
    t = channel_transmittance(cfg.channel)
    scale_a = math.sqrt(2.0 * eta_a / det_a.eta_d)
    sqrt_eps0 = math.sqrt(params.eps0)

    g = RngStream(cfg.master_seed, index).generator()
    moments = _Kahan((4, 4))
    d2_sum = _Kahan()
    d4_sum = _Kahan()
    samples = [] if want_samples else None

    done = 0
    while done < n_rounds:
        m = min(_CHUNK, n_rounds - done)
        src = sample_thermal_quadratures(params.n0, m, g)
        # Each splitter arm gets its own vacuum admixture, so the noise on
        # Alice's estimate is independent of the noise on the outgoing
        # mode; this is the preparation model whose estimate-error
        # variance is alice_uncertainty().
        mod1, _ = beamsplitter(src, g.standard_normal((m, 2)), 0.5)
        _, mod2 = beamsplitter(g.standard_normal((m, 2)), src, 0.5)
        out, _ = beamsplitter(mod1, g.standard_normal((m, 2)), eta_a)
        est = scale_a * heterodyne_measure(mod2, det_a, g)
        # Channel excess noise is injected at the channel input.
        excess = sqrt_eps0 * g.standard_normal((m, 2))
        received, _ = beamsplitter(out + excess, g.standard_normal((m, 2)), t)
        meas_b = heterodyne_measure(received, det_b, g)

        v4 = np.concatenate([est, meas_b], axis=1)
        moments.add(v4.T @ v4)
        if cfg.track_internal:
            d2 = np.square(est - out)
            d2_sum.add(d2.sum())
            d4_sum.add(np.square(d2).sum())
        if samples is not None:
            samples.append(v4)
        done += m

    stacked = np.concatenate(samples, axis=0) if samples is not None else None
    return moments.total, d2_sum.total, d4_sum.total, stacked


def run_protocol(
    cfg: SimConfig,
    dump_path: str | None = None,
    workers: int | None = None,
) -> SimSummary:
    """Simulate ``cfg.count`` protocol rounds and summarize them.

    Args:
        cfg: run configuration; ``cfg.partitions`` independent streams
            are merged in index order, so the summary is identical for
            any ``workers`` value.
        dump_path: optional CSV path for the raw per-round samples, with
            header ``round,xA,pA,xB,pB`` in SNU at full precision.
        workers: process count for parallel partitions; None or 1 runs
            sequentially.

    Returns:
        SimSummary with moments and, if tracked, the estimate-error
        statistics.
    """
    base, rem = divmod(cfg.count, cfg.partitions)
    counts = [base + (1 if k < rem else 0) for k in range(cfg.partitions)]
    jobs = [(cfg, k, n, dump_path is not None) for k, n in enumerate(counts) if n > 0]

    if workers is not None and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_partition_sums, jobs))
    else:
        results = [_partition_sums(job) for job in jobs]

    moments = _Kahan((4, 4))
    d2_sum = _Kahan()
    d4_sum = _Kahan()
    for m_part, d2_part, d4_part, _ in results:
        moments.add(m_part)
        d2_sum.add(d2_part)
        d4_sum.add(d4_part)

    if dump_path is not None:
        with open(dump_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(DUMP_HEADER + "\n")
            row = 0
            for _, _, _, block in results:
                for xa, pa, xb, pb in block.tolist():  # repr of float round-trips exactly
                    fh.write(f"{row},{xa!r},{pa!r},{xb!r},{pb!r}\n")
                    row += 1

    n = cfg.count
    second = moments.total / n
    # Standard error of a raw second moment of a zero-mean Gaussian:
    # var(m_ij) = (m_ii m_jj + m_ij^2) / n.
    diag = np.diag(second)
    stderr = np.sqrt((np.outer(diag, diag) + second**2) / n)

    if cfg.track_internal:
        n_q = 2.0 * n  # both quadratures pooled
        delta_hat = float(d2_sum.total / n_q)
        var_d2 = max(float(d4_sum.total / n_q) - delta_hat**2, 0.0)
        delta_stderr = math.sqrt(var_d2 / n_q)
        return SimSummary(n, second, stderr, delta_hat, delta_stderr, True)
    return SimSummary(n, second, stderr, None, None, False)


def estimate_excess_noise(summary: SimSummary) -> tuple[float, float]:
    """Empirical preparation excess noise with its standard error.

    Requires a summary produced with internal tracking enabled.
    """
    if not summary.tracked or summary.delta_hat is None:
        raise TrackingDisabledError("run_protocol was executed without internal tracking")
    return summary.delta_hat - 1.0, summary.delta_stderr


def _block_mi_bits(var_a: float, var_b: float, cov: float) -> float:
    if var_a <= 0.0 or var_b <= 0.0:
        if cov == 0.0 and var_b > 0.0:
            return 0.0  # nothing was modulated; zero information
        raise DegenerateDataError("singular empirical covariance block")
    rho2 = cov * cov / (var_a * var_b)
    if rho2 >= 1.0:
        raise DegenerateDataError(f"empirical correlation {math.sqrt(rho2):.6f} is not below 1")
    return -math.log2(1.0 - rho2)


def empirical_mutual_information(summary: SimSummary) -> float:
    """Gaussian mutual information from the empirical moment matrix.

    Computed per quadrature from the (sender estimate, receiver outcome)
    covariance blocks as a log variance ratio, then averaged over the two
    quadratures; comparable to the closed-form prediction.
    """
    m = summary.moments
    mi_x = _block_mi_bits(m[0, 0], m[2, 2], m[0, 2])
    mi_p = _block_mi_bits(m[1, 1], m[3, 3], m[1, 3])
    return 0.5 * (mi_x + mi_p)


def empirical_mi_stderr(summary: SimSummary) -> float:
    """Propagated standard error of empirical_mutual_information."""
    m = summary.moments
    n = summary.count
    total = 0.0
    for i, j in ((0, 2), (1, 3)):
        if m[i, i] <= 0.0 or m[j, j] <= 0.0:
            continue
        rho2 = m[i, j] ** 2 / (m[i, i] * m[j, j])
        # sd(rho_hat) ~ (1 - rho^2) / sqrt(n); d(mi)/d(rho) = 2 rho / (ln2 (1 - rho^2))
        total += (2.0 * math.sqrt(rho2) / math.log(2.0)) ** 2 / n
    return 0.5 * math.sqrt(total)


def analytic_moments(
    params: ProtocolParams,
    det_a: DetectorModel,
    det_b: DetectorModel,
    ch: ChannelModel,
) -> np.ndarray:
    """Predicted second-moment matrix of ``(x_A, p_A, x_B, p_B)``.

    Derived from the same linear chain the simulation implements: the
    sender estimate carries the modulation plus rescaled receiver noise,
    the receiver outcome sees the attenuated modulation plus channel
    excess noise through the trusted detector.
    """
    t = channel_transmittance(ch)
    eta_a = params.eta_a
    var_a = params.v_a + (2.0 * eta_a / det_a.eta_d) * (1.0 + det_a.v_el)
    var_b = 0.5 * det_b.eta_d * t * (params.v_a + params.eps0) + 1.0 + det_b.v_el
    cov = math.sqrt(0.5 * det_b.eta_d * t) * (params.v_a + 0.5 * eta_a)
    out = np.zeros((4, 4))
    out[0, 0] = out[1, 1] = var_a
    out[2, 2] = out[3, 3] = var_b
    out[0, 2] = out[2, 0] = out[1, 3] = out[3, 1] = cov
    return out


def analytic_delta(params: ProtocolParams, det_a: DetectorModel) -> float:
    """Predicted mean squared estimate error (the closed-form uncertainty)."""
    return alice_uncertainty(params.eta_a, det_a)
