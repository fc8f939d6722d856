"""Error analysis: per-frequency error curves, spectral distortion, size accounting.

All comparisons happen at the measured sample points: a reconstruction
matrix (directions x bins, dB) against the raw magnitude matrix.  On the
product grid, pooling "all samples at a frequency" is simply a column
selection, so each curve value aggregates one bin over all directions.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .ingest import MagnitudeDataset
from .model import CoefficientSet, ShModel, decode_grid, decode_sh_grid

# Percentiles use linear interpolation between order statistics
# (numpy's default, a.k.a. quantile type 7); pinned for reproducibility.
PERCENTILE_METHOD = "linear"


@dataclass(frozen=True)
class ErrorCurve:
    """A per-frequency error summary: values[i] belongs to freqs[i]."""

    freqs: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        freqs = np.atleast_1d(np.asarray(self.freqs, dtype=float))
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if freqs.shape != values.shape or freqs.ndim != 1:
            raise ValueError("freqs and values must be equal-length 1-D arrays")
        if freqs.size > 1 and not (np.diff(freqs) > 0).all():
            raise ValueError("freqs must be strictly increasing")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.freqs.size)


@dataclass(frozen=True)
class SizeAccounting:
    """Coefficient counts against the raw sample count."""

    hsh_coeffs: int
    sh_coeffs: int
    raw_samples: int
    compression_ratio: float


@dataclass(frozen=True)
class ComparisonReport:
    """Everything the error analysis produces for one HSH/SH model pair."""

    rms_hsh: ErrorCurve
    rms_sh: ErrorCurve
    p95_hsh: ErrorCurve
    p95_sh: ErrorCurve
    rms_diff: ErrorCurve
    p5_diff: ErrorCurve
    p95_diff: ErrorCurve
    sd_hsh: float
    sd_sh: float
    size_accounting: SizeAccounting


def _check_shapes(freqs: np.ndarray, *matrices: np.ndarray) -> tuple[np.ndarray, ...]:
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    out = []
    for m in matrices:
        m = np.asarray(m, dtype=float)
        if m.ndim != 2:
            raise ValueError(f"expected a (directions, bins) matrix, got shape {m.shape}")
        if m.shape != matrices[0].shape:
            raise ValueError(f"shape mismatch: {m.shape} vs {np.asarray(matrices[0]).shape}")
        if m.shape[1] != freqs.size:
            raise ValueError(f"matrix has {m.shape[1]} bins but freqs has {freqs.size}")
        out.append(m)
    return (freqs, *out)


def rms_per_frequency(approx: np.ndarray, raw: np.ndarray, freqs: np.ndarray) -> ErrorCurve:
    """Root-mean-square dB error over directions, one value per bin."""
    freqs, approx, raw = _check_shapes(freqs, approx, raw)
    return ErrorCurve(freqs, np.sqrt(np.mean((approx - raw) ** 2, axis=0)))


def percentile_abs_error(
    approx: np.ndarray, raw: np.ndarray, freqs: np.ndarray, p: float
) -> ErrorCurve:
    """Per-bin p-th percentile of |approx - raw| over directions."""
    if not 0.0 < p < 100.0:
        raise ValueError(f"p must be in (0, 100), got {p}")
    freqs, approx, raw = _check_shapes(freqs, approx, raw)
    vals = np.percentile(np.abs(approx - raw), p, axis=0, method=PERCENTILE_METHOD)
    return ErrorCurve(freqs, vals)


def error_diff_percentiles(
    hsh: np.ndarray, sh: np.ndarray, raw: np.ndarray, freqs: np.ndarray, p: float
) -> ErrorCurve:
    """Per-bin percentile of |hsh error| - |sh error| (signed differences)."""
    if not 0.0 < p < 100.0:
        raise ValueError(f"p must be in (0, 100), got {p}")
    freqs, hsh, sh, raw = _check_shapes(freqs, hsh, sh, raw)
    diff = np.abs(hsh - raw) - np.abs(sh - raw)
    return ErrorCurve(freqs, np.percentile(diff, p, axis=0, method=PERCENTILE_METHOD))


def spectral_distortion(
    approx: np.ndarray, raw: np.ndarray, freqs: np.ndarray, f_lo: float, f_hi: float
) -> float:
    """RMS dB error pooled over directions and all bins with f_lo <= f <= f_hi."""
    if not f_lo < f_hi:
        raise ValueError(f"need f_lo < f_hi, got ({f_lo}, {f_hi})")
    freqs, approx, raw = _check_shapes(freqs, approx, raw)
    selected = (freqs >= f_lo) & (freqs <= f_hi)
    if not selected.any():
        raise ValueError(f"no frequency bins inside [{f_lo}, {f_hi}] Hz")
    residual = approx[:, selected] - raw[:, selected]
    return float(np.sqrt(np.mean(residual**2)))


def size_accounting(
    hsh_model: CoefficientSet, sh_model: ShModel, dataset: MagnitudeDataset
) -> SizeAccounting:
    """Coefficient counts of both representations against the raw samples."""
    hsh_coeffs = int(hsh_model.coefficients.size)
    sh_coeffs = int(sh_model.coefficients.size)
    raw = dataset.num_samples
    return SizeAccounting(
        hsh_coeffs=hsh_coeffs,
        sh_coeffs=sh_coeffs,
        raw_samples=raw,
        compression_ratio=raw / hsh_coeffs,
    )


def build_comparison(
    dataset: MagnitudeDataset,
    hsh_model: CoefficientSet,
    sh_model: ShModel,
    f_lo: float,
    f_hi: float,
) -> ComparisonReport:
    """Reconstruct both models on the dataset grid and assemble all metrics.

    Curves cover every measured bin; the spectral-distortion scalars
    pool only bins inside [f_lo, f_hi].
    """
    if not (dataset.sample_rate == hsh_model.sample_rate == sh_model.sample_rate):
        raise ValueError(
            "sample rates disagree: dataset "
            f"{dataset.sample_rate}, HSH model {hsh_model.sample_rate}, "
            f"SH model {sh_model.sample_rate}"
        )
    if sh_model.num_bins != dataset.num_bins:
        raise ValueError(
            f"SH model has {sh_model.num_bins} bins but the dataset has {dataset.num_bins}"
        )
    directions = list(zip(dataset.phi, dataset.theta))
    freqs = dataset.bin_freqs
    hsh_rec = decode_grid(hsh_model, directions, freqs)
    sh_rec = decode_sh_grid(sh_model, directions)
    raw = dataset.h_db
    return ComparisonReport(
        rms_hsh=rms_per_frequency(hsh_rec, raw, freqs),
        rms_sh=rms_per_frequency(sh_rec, raw, freqs),
        p95_hsh=percentile_abs_error(hsh_rec, raw, freqs, 95.0),
        p95_sh=percentile_abs_error(sh_rec, raw, freqs, 95.0),
        rms_diff=ErrorCurve(
            freqs,
            rms_per_frequency(hsh_rec, raw, freqs).values
            - rms_per_frequency(sh_rec, raw, freqs).values,
        ),
        p5_diff=error_diff_percentiles(hsh_rec, sh_rec, raw, freqs, 5.0),
        p95_diff=error_diff_percentiles(hsh_rec, sh_rec, raw, freqs, 95.0),
        sd_hsh=spectral_distortion(hsh_rec, raw, freqs, f_lo, f_hi),
        sd_sh=spectral_distortion(sh_rec, raw, freqs, f_lo, f_hi),
        size_accounting=size_accounting(hsh_model, sh_model, dataset),
    )


def _fmt(value: float | int) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".9g")


def write_curve_csv(curve: ErrorCurve, path: str | Path) -> None:
    """Emit one curve as `freq_hz,value_db` rows with 9 significant digits."""
    lines = ["freq_hz,value_db"]
    lines.extend(f"{_fmt(f)},{_fmt(v)}" for f, v in zip(curve.freqs, curve.values))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_summary_csv(
    report: ComparisonReport, path: str | Path, extra: Mapping[str, object] | None = None
) -> None:
    """Emit the scalar results and size accounting as `key,value` rows."""
    acc = report.size_accounting
    rows: list[tuple[str, object]] = [
        ("sd_hsh_db", report.sd_hsh),
        ("sd_sh_db", report.sd_sh),
        ("hsh_coeffs", acc.hsh_coeffs),
        ("sh_coeffs", acc.sh_coeffs),
        ("raw_samples", acc.raw_samples),
        ("compression_ratio", acc.compression_ratio),
    ]
    if extra:
        rows.extend(extra.items())
    lines = ["key,value"]
    lines.extend(f"{k},{_fmt(v) if isinstance(v, (int, float, np.floating, np.integer)) else v}" for k, v in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
