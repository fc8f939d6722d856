"""Weighted least-squares fitting of HSH coefficients and the per-bin SH baseline.

The overdetermined system stacks one basis row per (direction, bin)
sample against its dB magnitude.  Forming the full design matrix is
wasteful (182470 x 3081 for a typical measured set), so the normal
equations (Z^T W Z) a = Z^T W H are accumulated bin-block by bin-block
and solved by a symmetric positive-definite factorization.  Weights
enter by scaling each block's rows and targets by sqrt(w), which is
algebraically the same but better conditioned than forming W.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, pinvh
from scipy.linalg.lapack import dpocon

from .basis import IndexSet, sh_matrix
from .ingest import MagnitudeDataset
from .model import CoefficientSet, ShModel

# Condition estimates above this trigger a warning: fitted values are
# still usable but trailing coefficient digits are noise.
CONDITION_WARN_THRESHOLD = 1e10


class FitError(RuntimeError):
    """A least-squares fit could not be carried out."""


class SingularNormalMatrixError(FitError):
    """Normal matrix is singular or indefinite; carries the condition estimate."""

    def __init__(self, message: str, condition_estimate: float) -> None:
        super().__init__(message)
        self.condition_estimate = condition_estimate


@dataclass(frozen=True)
class WeightingSpec:
    """Per-frequency-bin weighting: drop leading bins, taper the top end.

    Bins below ``dropped_low_bins`` get weight 0 (measurement-chain
    artifacts near 0 Hz), weights stay 1 up to ``taper_start_hz`` and
    then fall along a raised cosine to exactly 0 at ``taper_end_hz``,
    which must be the Nyquist frequency.
    """

    dropped_low_bins: int = 2
    taper_start_hz: float = 20000.0
    taper_end_hz: float = 22050.0
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.dropped_low_bins < 0:
            raise ValueError(f"dropped_low_bins must be >= 0, got {self.dropped_low_bins}")
        if not 0 <= self.taper_start_hz < self.taper_end_hz:
            raise ValueError(
                f"need 0 <= taper_start < taper_end, got ({self.taper_start_hz}, {self.taper_end_hz})"
            )

    @classmethod
    def for_sample_rate(
        cls, sample_rate: float, dropped_low_bins: int = 2, taper_start_hz: float = 20000.0
    ) -> "WeightingSpec":
        return cls(
            dropped_low_bins=dropped_low_bins,
            taper_start_hz=taper_start_hz,
            taper_end_hz=0.5 * sample_rate,
            enabled=True,
        )

    @classmethod
    def disabled(cls) -> "WeightingSpec":
        return cls(enabled=False)


@dataclass(frozen=True)
class FitReport:
    """Summary of one least-squares solve."""

    weighted_rss: float
    normal_matrix_condition_estimate: float
    num_samples_used: int
    num_coefficients: int


def build_weights(dataset: MagnitudeDataset, spec: WeightingSpec) -> np.ndarray:
    """Per-sample weight vector of length num_samples, in flattened sample order."""
    num_bins = dataset.num_bins
    if spec.enabled and spec.dropped_low_bins >= num_bins:
        raise ValueError(
            f"dropped_low_bins={spec.dropped_low_bins} would remove all {num_bins} bins"
        )
    if not spec.enabled:
        return np.ones(dataset.num_samples)
    nyquist = 0.5 * dataset.sample_rate
    if abs(spec.taper_end_hz - nyquist) > 1e-6 * nyquist:
        raise ValueError(
            f"taper_end_hz={spec.taper_end_hz} must equal the Nyquist frequency {nyquist}"
        )
    freqs = dataset.bin_freqs
    w = np.ones(num_bins)
    span = spec.taper_end_hz - spec.taper_start_hz
    taper = freqs >= spec.taper_start_hz
    w[taper] = 0.5 * (1.0 + np.cos(np.pi * (freqs[taper] - spec.taper_start_hz) / span))
    # the Nyquist bin must land exactly on zero even if its center
    # frequency round-tripped through psi with an ulp of error
    w[freqs >= spec.taper_end_hz * (1.0 - 1e-12)] = 0.0
    w[: spec.dropped_low_bins] = 0.0
    return np.tile(w, dataset.num_directions)


def _condition_from_cholesky(factor: np.ndarray, anorm: float) -> float:
    rcond, info = dpocon(factor, anorm, uplo=b"L")
    if info != 0 or rcond <= 0.0:
        return np.inf
    return 1.0 / rcond


def _condition_from_eigs(normal: np.ndarray) -> float:
    eigs = np.linalg.eigvalsh(normal)
    top = float(eigs[-1])
    bottom = float(eigs[0])
    if top <= 0.0:
        return np.inf
    return np.inf if bottom <= 0.0 else top / bottom


def fit_hsh(
    dataset: MagnitudeDataset,
    index_set: IndexSet,
    weights: np.ndarray,
    *,
    on_singular: str = "raise",
    provenance: dict[str, str] | None = None,
) -> tuple[CoefficientSet, FitReport]:
    """Solve for the coefficients minimizing the weighted squared dB error.

    Parameters
    ----------
    dataset : MagnitudeDataset
        Samples on the (direction, bin) product grid.
    index_set : IndexSet
        Truncated basis; coefficient order follows ``index_set.indices``.
    weights : ndarray
        One non-negative weight per sample, flattened sample order.
    on_singular : {"raise", "lstsq"}
        What to do when the normal matrix is not positive definite:
        raise :class:`SingularNormalMatrixError` (default), or fall back
        to the minimum-norm least-squares solution via a pseudoinverse
        (useful when the sampling deliberately underdetermines some
        coefficients, e.g. single-bin datasets).

    Returns
    -------
    (CoefficientSet, FitReport)
    """
    if on_singular not in ("raise", "lstsq"):
        raise ValueError(f"on_singular must be 'raise' or 'lstsq', got {on_singular!r}")
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (dataset.num_samples,):
        raise ValueError(
            f"weights must have shape ({dataset.num_samples},), got {weights.shape}"
        )
    if not np.isfinite(weights).all() or (weights < 0).any():
        raise ValueError("weights must be finite and non-negative")
    size = len(index_set)
    effective = int(np.count_nonzero(weights))
    if effective < size:
        raise FitError(
            f"need at least {size} samples with nonzero weight, have {effective}"
        )

    num_dirs, num_bins = dataset.num_directions, dataset.num_bins
    spherical = index_set.sh_table(dataset.phi, dataset.theta)
    radial = index_set.radial_table(dataset.psi)
    sph_cols = spherical[:, index_set.lm_positions]
    rad_cols = radial[:, index_set.nl_positions]
    w_grid = weights.reshape(num_dirs, num_bins)

    normal = np.zeros((size, size))
    rhs = np.zeros(size)
    for b in range(num_bins):
        sqrt_w = np.sqrt(w_grid[:, b])
        if not sqrt_w.any():
            continue  # zero rows contribute exactly nothing
        block = sph_cols * rad_cols[b]
        block = block * sqrt_w[:, None]
        normal += block.T @ block
        rhs += block.T @ (dataset.h_db[:, b] * sqrt_w)

    anorm = float(np.abs(normal).sum(axis=0).max())
    try:
        factor = cho_factor(normal, lower=True, check_finite=False)
    except LinAlgError:
        cond = _condition_from_eigs(normal)
        if on_singular == "raise":
            raise SingularNormalMatrixError(
                f"normal matrix is singular or indefinite (condition estimate {cond:.3e}); "
                "reduce the index set or sample more of the hypersphere",
                condition_estimate=cond,
            ) from None
        coeffs = pinvh(normal) @ rhs
    else:
        cond = _condition_from_cholesky(factor[0], anorm)
        if cond > CONDITION_WARN_THRESHOLD:
            warnings.warn(
                f"normal matrix condition estimate {cond:.3e} exceeds "
                f"{CONDITION_WARN_THRESHOLD:.0e}; trailing coefficient digits are unreliable",
                stacklevel=2,
            )
        coeffs = cho_solve(factor, rhs)
        # one iterative-refinement step recovers the digits the squared
        # condition number of the normal equations would otherwise cost
        coeffs += cho_solve(factor, rhs - normal @ coeffs)

    model = CoefficientSet(
        index_set=index_set,
        coefficients=coeffs,
        sample_rate=dataset.sample_rate,
        provenance=provenance or {},
    )
    scatter = np.zeros((len(index_set.lm_pairs), len(index_set.nl_pairs)))
    scatter[index_set.lm_positions, index_set.nl_positions] = coeffs
    fitted = spherical @ scatter @ radial.T
    rss = float(np.sum(w_grid * (fitted - dataset.h_db) ** 2))
    report = FitReport(
        weighted_rss=rss,
        normal_matrix_condition_estimate=cond,
        num_samples_used=effective,
        num_coefficients=size,
    )
    return model, report


def fit_sh_per_bin(dataset: MagnitudeDataset, sh_order: int) -> ShModel:
    """Independent unweighted SH fit of every frequency bin.

    All bins share one direction design matrix, so a single orthogonal
    factorization solves every bin's system at once.
    """
    if sh_order < 0:
        raise ValueError(f"sh_order must be >= 0, got {sh_order}")
    num_funcs = (sh_order + 1) ** 2
    if dataset.num_directions < num_funcs:
        raise FitError(
            f"SH fit of order {sh_order} needs at least {num_funcs} directions, "
            f"have {dataset.num_directions}"
        )
    design = sh_matrix(sh_order, dataset.phi, dataset.theta)
    solution, _, rank, _ = np.linalg.lstsq(design, dataset.h_db, rcond=None)
    if rank < num_funcs:
        raise SingularNormalMatrixError(
            f"SH design matrix is rank deficient (rank {rank} of {num_funcs}); "
            "directions do not resolve the requested order",
            condition_estimate=np.inf,
        )
    return ShModel(
        sh_order=sh_order,
        sample_rate=dataset.sample_rate,
        num_bins=dataset.num_bins,
        coefficients=solution.T.copy(),
    )
