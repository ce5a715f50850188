"""Photon statistics from paired-quadrature records.

The pipeline ingests raw conjugate-homodyne samples, normalizes them to
shot-noise units against a vacuum reference record, estimates the mean
photon number of a thermal input from the excess variance, and computes
the single-time second-order intensity correlation

    g2 = (<Z^2> - 4 <Z> + 2) / (<Z> - 1)^2,   Z = X^2 + P^2,

which is 2 for any zero-mean Gaussian record regardless of its variance
(so detector loss and noise do not bias it on thermal light) and tends
to 1 for strongly displaced light.  The estimator is not scale-free, so
it refuses records that have not been calibrated to SNU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateDataError, ParameterError, RecordFormatError, UnitError
from .gaussian import DetectorModel, RngStream, _generator

__all__ = [
    "CalibrationResult",
    "G2Result",
    "QuadratureRecord",
    "UNIT_RAW",
    "UNIT_SNU",
    "calibrate_photon_number",
    "export_histogram",
    "g2_estimate",
    "load_quadrature_records",
]

UNIT_RAW = "raw"
UNIT_SNU = "snu"

DEGENERATE_MEAN_Z_TOL = 1e-6
HISTOGRAM_BINS = 128
HISTOGRAM_SPAN_SIGMAS = 5.0


@dataclass
class QuadratureRecord:
    """A sequence of paired (x, p) outcomes plus calibration metadata."""

    samples: np.ndarray
    unit_flag: str = UNIT_RAW
    label: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2 or self.samples.shape[1] != 2:
            raise ParameterError(f"samples must have shape (n, 2), got {self.samples.shape}")
        if len(self.samples) < 2:
            raise RecordFormatError(f"need at least 2 samples, got {len(self.samples)}")
        if not np.isfinite(self.samples).all():
            raise ParameterError("samples contain NaN or Inf values")
        if self.unit_flag not in (UNIT_RAW, UNIT_SNU):
            raise ParameterError(f"unit_flag must be '{UNIT_RAW}' or '{UNIT_SNU}', got {self.unit_flag!r}")

    def __len__(self) -> int:
        return len(self.samples)

    def pooled_variance(self) -> float:
        """Per-quadrature variance about the mean, x and p pooled."""
        return float(np.mean(np.var(self.samples, axis=0, ddof=1)))

    def in_snu(self, shot_variance: float) -> "QuadratureRecord":
        """Rescale a raw record into shot-noise units.

        ``shot_variance`` is the raw-unit variance corresponding to one
        SNU, as determined by a vacuum reference.
        """
        if self.unit_flag == UNIT_SNU:
            raise UnitError("record is already in shot-noise units")
        if not (shot_variance > 0.0 and math.isfinite(shot_variance)):
            raise ParameterError(f"shot_variance must be > 0, got {shot_variance}")
        return replace(self, samples=self.samples / math.sqrt(shot_variance), unit_flag=UNIT_SNU)


def load_quadrature_records(
    path: str,
    columns: tuple[str, str] | None = None,
    label: str = "",
) -> QuadratureRecord:
    """Parse a CSV file of paired quadrature outcomes, in raw units.

    The file must contain numeric rows of exactly two columns (x, p), or
    carry a header from which a pair of columns is selected by name via
    ``columns``.  Any malformed row aborts the load with its line number.

    Raises:
        FileNotFoundError: the file does not exist.
        RecordFormatError: non-numeric fields, wrong column counts,
            unknown column names, or fewer than 2 samples.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    start = 0
    idx_x, idx_p = 0, 1
    header: list[str] | None = None
    first_idx = next((i for i, line in enumerate(lines) if line.strip()), None)
    if first_idx is not None:
        cells = [c.strip() for c in lines[first_idx].split(",")]
        if not _all_numeric(cells):
            header = cells
    if header is not None:
        start = first_idx + 1
        if columns is not None:
            try:
                idx_x, idx_p = header.index(columns[0]), header.index(columns[1])
            except ValueError:
                raise RecordFormatError(
                    f"columns {columns} not found in header {header} of {path}"
                ) from None
        elif len(header) != 2:
            raise RecordFormatError(
                f"{path} has {len(header)} columns; pass columns=(x_name, p_name) to select a pair"
            )
    elif columns is not None:
        raise RecordFormatError(f"{path} has no header row to resolve columns {columns}")

    needed = max(idx_x, idx_p) + 1
    rows: list[tuple[float, float]] = []
    bad: list[int] = []
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) < needed or (header is None and len(cells) != 2):
            bad.append(lineno)
            continue
        try:
            x, p = float(cells[idx_x]), float(cells[idx_p])
        except ValueError:
            bad.append(lineno)
            continue
        if not (math.isfinite(x) and math.isfinite(p)):
            bad.append(lineno)
            continue
        rows.append((x, p))

    if bad:
        shown = ", ".join(str(n) for n in bad[:20])
        more = "" if len(bad) <= 20 else f" (+{len(bad) - 20} more)"
        raise RecordFormatError(f"{path}: malformed rows at lines {shown}{more}", lines=bad)
    if len(rows) < 2:
        raise RecordFormatError(f"{path}: need at least 2 samples, got {len(rows)}")
    return QuadratureRecord(np.array(rows), unit_flag=UNIT_RAW, label=label or path)


def _all_numeric(cells: list[str]) -> bool:
    try:
        for c in cells:
            float(c)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class CalibrationResult:
    """Photon-number calibration of a thermal record against vacuum."""

    n_hat: float
    stderr: float
    shot_variance: float  # raw-unit variance per SNU
    thermal_variance: float
    vacuum_variance: float


def calibrate_photon_number(
    thermal: QuadratureRecord,
    vacuum: QuadratureRecord,
    det: DetectorModel,
) -> CalibrationResult:
    """Mean photon number of a thermal record, normalized to vacuum noise.

    With ``s_th`` and ``s_vac`` the measured per-quadrature variances and
    ``sigma^2 = s_vac / (1 + v_el)`` the raw-unit shot-noise scale, the
    conjugate-homodyne variance law gives

        n_hat = (s_th - s_vac) / (sigma^2 * eta_d).

    Raises:
        UnitError: records are not in the same units.
        DegenerateDataError: thermal variance below the vacuum reference.
    """
    if thermal.unit_flag != vacuum.unit_flag:
        raise UnitError(
            f"unit mismatch: thermal is {thermal.unit_flag!r}, vacuum is {vacuum.unit_flag!r}"
        )
    s_th = thermal.pooled_variance()
    s_vac = vacuum.pooled_variance()
    if s_vac <= 0.0:
        raise DegenerateDataError("vacuum record has zero variance")
    if s_th < s_vac:
        raise DegenerateDataError(
            f"thermal variance {s_th:.6g} is below the vacuum reference {s_vac:.6g}"
        )
    shot = s_vac / (1.0 + det.v_el)
    k = (1.0 + det.v_el) / det.eta_d
    n_hat = k * (s_th / s_vac - 1.0)

    # Delta method on the two independent pooled variances; each has
    # var(s_hat) = 2 s^2 / dof for Gaussian data.
    var_s_th = 2.0 * s_th**2 / (2.0 * (len(thermal) - 1))
    var_s_vac = 2.0 * s_vac**2 / (2.0 * (len(vacuum) - 1))
    stderr = k * math.sqrt(var_s_th / s_vac**2 + (s_th / s_vac**2) ** 2 * var_s_vac)
    return CalibrationResult(
        n_hat=n_hat,
        stderr=stderr,
        shot_variance=shot,
        thermal_variance=s_th,
        vacuum_variance=s_vac,
    )


@dataclass(frozen=True)
class G2Result:
    """Second-order correlation estimate with bootstrap uncertainty."""

    g2: float
    mean_z: float
    mean_z2: float
    stderr: float
    resamples: int = field(default=0, compare=False)


def g2_estimate(
    record: QuadratureRecord,
    n_boot: int = 200,
    min_samples: int = 10_000,
    rng: int | RngStream | np.random.Generator = 0,
    subtract_electronic: DetectorModel | None = None,
) -> G2Result:
    """Second-order intensity correlation from calibrated samples.

    Moments of ``Z = X^2 + P^2`` are taken about zero (displacement is
    part of the statistic, not an offset to remove).  The standard error
    comes from a nonparametric bootstrap, since the estimator is a
    nonlinear moment ratio.

    Args:
        record: SNU-calibrated record (raw records are refused, the
            estimator is not scale invariant).
        n_boot: bootstrap resamples for the standard error.
        min_samples: required record length.
        rng: seed, stream, or generator for the bootstrap.
        subtract_electronic: when given, removes the detector's
            electronic-noise variance from Z before the moments; a
            diagnostic option, unnecessary for Gaussian inputs.

    Raises:
        UnitError: the record is not calibrated to SNU.
        DegenerateDataError: the mean of Z is too close to 1.
    """
    if record.unit_flag != UNIT_SNU:
        raise UnitError("g2 requires an SNU-calibrated record; calibrate against vacuum first")
    n = len(record)
    if n < min_samples:
        raise ParameterError(f"g2 needs at least {min_samples} samples, got {n}")
    if n_boot < 2:
        raise ParameterError(f"n_boot must be >= 2, got {n_boot}")

    z = np.square(record.samples).sum(axis=1)
    if subtract_electronic is not None:
        z = z - 2.0 * subtract_electronic.v_el

    def ratio(m1: float, m2: float) -> float:
        return (m2 - 4.0 * m1 + 2.0) / (m1 - 1.0) ** 2

    mean_z = float(z.mean())
    mean_z2 = float(np.square(z).mean())
    if abs(mean_z - 1.0) < DEGENERATE_MEAN_Z_TOL:
        raise DegenerateDataError(
            f"mean of Z is {mean_z:.9f}, within {DEGENERATE_MEAN_Z_TOL:g} of 1; g2 is undefined"
        )

    g = RngStream(int(rng)).generator() if isinstance(rng, (int, np.integer)) else _generator(rng)
    boots = []
    for _ in range(n_boot):
        zb = z[g.integers(0, n, n)]
        m1 = float(zb.mean())
        if abs(m1 - 1.0) < DEGENERATE_MEAN_Z_TOL:
            continue
        boots.append(ratio(m1, float(np.square(zb).mean())))
    if len(boots) < 2:
        raise DegenerateDataError("bootstrap produced no usable resamples")
    stderr = float(np.std(boots, ddof=1))
    return G2Result(
        g2=ratio(mean_z, mean_z2),
        mean_z=mean_z,
        mean_z2=mean_z2,
        stderr=stderr,
        resamples=len(boots),
    )


def export_histogram(
    record: QuadratureRecord,
    path: str | None = None,
    bins: int = HISTOGRAM_BINS,
    span_sigmas: float = HISTOGRAM_SPAN_SIGMAS,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fixed-binning 2-D histogram of a record, optionally written as CSV.

    The range is symmetric, ``span_sigmas`` standard deviations of the
    pooled per-quadrature spread on each side of zero.  The CSV carries
    one row per bin with the bin-center coordinates: ``bin_x,bin_p,count``.

    Returns:
        ``(counts, x_edges, p_edges)`` with counts shaped (bins, bins).
    """
    s = record.pooled_variance()
    if s <= 0.0:
        raise DegenerateDataError("record has zero spread; histogram range is empty")
    half = span_sigmas * math.sqrt(s)
    counts, x_edges, p_edges = np.histogram2d(
        record.samples[:, 0],
        record.samples[:, 1],
        bins=bins,
        range=[[-half, half], [-half, half]],
    )
    if path is not None:
        x_centers = 0.5 * (x_edges[:-1] + x_edges[1:])
        p_centers = 0.5 * (p_edges[:-1] + p_edges[1:])
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("bin_x,bin_p,count\n")
            for i, xc in enumerate(x_centers):
                for j, pc in enumerate(p_centers):
                    fh.write(f"{xc:.9g},{pc:.9g},{int(counts[i, j])}\n")
    return counts.astype(np.int64), x_edges, p_edges
