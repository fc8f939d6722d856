"""Continuous HRTF magnitude representation via 4D hyperspherical harmonics.

Encode discrete HRIR measurements into one coefficient set that is
continuous over direction and frequency, decode magnitudes anywhere on
the audible half-hypersphere, and compare against the classic per-bin
spherical-harmonic baseline.
"""

from .basis import (
    HshIndex,
    IndexSet,
    assoc_legendre,
    build_index_set,
    eval_basis_row,
    gegenbauer,
    hsh,
    hsh_normalization,
    real_sh,
    sh_matrix,
    sh_normalization,
)
from .coords import (
    Direction4D,
    FrequencyMapping,
    MappingMode,
    angles_from_az_el,
    freq_to_psi,
    hcs_to_cartesian,
    psi_to_freq,
)
from .fitting import (
    FitError,
    FitReport,
    SingularNormalMatrixError,
    WeightingSpec,
    build_weights,
    fit_hsh,
    fit_sh_per_bin,
)
from .ingest import (
    HrirFormatError,
    HrirSet,
    MagnitudeDataset,
    direction_grid,
    load_hrir_set,
    magnitude_spectra,
)
from .metrics import (
    ComparisonReport,
    ErrorCurve,
    SizeAccounting,
    build_comparison,
    error_diff_percentiles,
    percentile_abs_error,
    rms_per_frequency,
    size_accounting,
    spectral_distortion,
    write_curve_csv,
    write_summary_csv,
)
from .model import (
    CoefficientSet,
    ModelFormatError,
    ShModel,
    decode,
    decode_at_psi,
    decode_grid,
    decode_sh,
    decode_sh_grid,
    load_any_model,
    load_model,
    load_sh_model,
    save_model,
    save_sh_model,
)

__version__ = "0.1.0"

__all__ = [
    "HshIndex",
    "IndexSet",
    "assoc_legendre",
    "build_index_set",
    "eval_basis_row",
    "gegenbauer",
    "hsh",
    "hsh_normalization",
    "real_sh",
    "sh_matrix",
    "sh_normalization",
    "Direction4D",
    "FrequencyMapping",
    "MappingMode",
    "angles_from_az_el",
    "freq_to_psi",
    "hcs_to_cartesian",
    "psi_to_freq",
    "FitError",
    "FitReport",
    "SingularNormalMatrixError",
    "WeightingSpec",
    "build_weights",
    "fit_hsh",
    "fit_sh_per_bin",
    "HrirFormatError",
    "HrirSet",
    "MagnitudeDataset",
    "direction_grid",
    "load_hrir_set",
    "magnitude_spectra",
    "ComparisonReport",
    "ErrorCurve",
    "SizeAccounting",
    "build_comparison",
    "error_diff_percentiles",
    "percentile_abs_error",
    "rms_per_frequency",
    "size_accounting",
    "spectral_distortion",
    "write_curve_csv",
    "write_summary_csv",
    "CoefficientSet",
    "ModelFormatError",
    "ShModel",
    "decode",
    "decode_at_psi",
    "decode_grid",
    "decode_sh",
    "decode_sh_grid",
    "load_any_model",
    "load_model",
    "load_sh_model",
    "save_model",
    "save_sh_model",
    "__version__",
]
