"""Fitted coefficient sets, decoding, and bit-exact model serialization.

Two binary containers are defined, both little-endian and ending in a
CRC32 of everything before it:

HSHC (continuous 4D model)::

    "HSHC" | version u16 | flags u16 (bit 0: psi-symmetric) | n_max u16
    | l_max u16 | m_max u16 | reserved u16 | sample_rate f64
    | count u32 | coefficients f64 x count (canonical (n, l, m) order)
    | metadata length u32 | metadata UTF-8 "key=value" lines | CRC32 u32

SHMB (per-bin spherical-harmonic baseline)::

    "SHMB" | version u16 | flags u16 | sh_order u16 | reserved u16
    | sample_rate f64 | num_bins u32 | count u32
    | coefficients f64, row-major bin-by-bin in (l, m) order
    | metadata length u32 | metadata | CRC32 u32

Coefficients survive save/load round trips bit-exactly.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .basis import IndexSet, build_index_set, eval_basis_row, sh_matrix
from .coords import FrequencyMapping, MappingMode, freq_to_psi

FORMAT_VERSION = 1
HSHC_MAGIC = b"HSHC"
SHMB_MAGIC = b"SHMB"

_HSHC_HEADER = struct.Struct("<4sHHHHHHd")
_SHMB_HEADER = struct.Struct("<4sHHHHdI")
_U32 = struct.Struct("<I")


class ModelFormatError(ValueError):
    """Raised when a model file cannot be read back safely."""


@dataclass(frozen=True)
class CoefficientSet:
    """Fitted weights for a truncated HSH basis, in the dB domain.

    Carries everything needed to decode standalone: the index-set
    limits, the sample rate anchoring the frequency mapping, and free-form
    provenance metadata (weighting used, source digest, tool version).
    """

    index_set: IndexSet
    coefficients: np.ndarray
    sample_rate: float
    mapping_mode: MappingMode = MappingMode.LINEAR_HALF_SPHERE
    provenance: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coefficients, dtype=float)
        if coeffs.ndim != 1 or coeffs.size != len(self.index_set):
            raise ValueError(
                f"need {len(self.index_set)} coefficients for the index set, got shape {coeffs.shape}"
            )
        if not np.isfinite(coeffs).all():
            raise ValueError("coefficients must be finite")
        if self.sample_rate <= 0 or not np.isfinite(self.sample_rate):
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate!r}")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "provenance", dict(self.provenance))

    @property
    def mapping(self) -> FrequencyMapping:
        return FrequencyMapping(self.sample_rate, self.mapping_mode)

    @property
    def nyquist(self) -> float:
        return 0.5 * self.sample_rate


@dataclass(frozen=True)
class ShModel:
    """Independent per-bin real-SH fits: one coefficient row per frequency bin."""

    sh_order: int
    sample_rate: float
    num_bins: int
    coefficients: np.ndarray
    provenance: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.sh_order < 0:
            raise ValueError(f"sh_order must be >= 0, got {self.sh_order}")
        if self.num_bins < 1:
            raise ValueError(f"num_bins must be >= 1, got {self.num_bins}")
        if self.sample_rate <= 0 or not np.isfinite(self.sample_rate):
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate!r}")
        coeffs = np.asarray(self.coefficients, dtype=float)
        expected = (self.num_bins, (self.sh_order + 1) ** 2)
        if coeffs.shape != expected:
            raise ValueError(f"coefficients must have shape {expected}, got {coeffs.shape}")
        if not np.isfinite(coeffs).all():
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "provenance", dict(self.provenance))


def decode_at_psi(model: CoefficientSet, phi: float, theta: float, psi: float) -> float:
    """Basis sum at an explicit psi angle in [0, pi] (no frequency mapping)."""
    row = eval_basis_row(model.index_set, phi, theta, psi)
    return float(row @ model.coefficients)


def decode(model: CoefficientSet, phi: float, theta: float, f: float) -> float:
    """dB magnitude at (phi, theta) and frequency f in [0, Nyquist].

    Continuous in all three arguments; frequencies beyond Nyquist are
    rejected rather than extrapolated.
    """
    return decode_at_psi(model, phi, theta, freq_to_psi(f, model.mapping))


def decode_grid(
    model: CoefficientSet,
    directions: Sequence[tuple[float, float]],
    freqs: Sequence[float],
) -> np.ndarray:
    """dB magnitudes for every (direction, frequency) pair.

    Element (i, j) equals ``decode(model, *directions[i], freqs[j])``;
    the evaluation factors into one spherical-harmonic table over the
    directions and one radial table over the mapped frequencies.
    """
    directions = np.asarray(list(directions), dtype=float).reshape(-1, 2)
    mapping = model.mapping
    psi = np.array([freq_to_psi(f, mapping) for f in freqs])
    if directions.shape[0] == 0 or psi.size == 0:
        return np.zeros((directions.shape[0], psi.size))
    iset = model.index_set
    spherical = iset.sh_table(directions[:, 0], directions[:, 1])
    radial = iset.radial_table(psi)
    scatter = np.zeros((len(iset.lm_pairs), len(iset.nl_pairs)))
    scatter[iset.lm_positions, iset.nl_positions] = model.coefficients
    return spherical @ scatter @ radial.T


def decode_sh(model: ShModel, phi: float, theta: float, bin_index: int) -> float:
    """SH sum of the given bin's coefficient row at (phi, theta)."""
    if not 0 <= bin_index < model.num_bins:
        raise ValueError(f"bin_index must be in [0, {model.num_bins}), got {bin_index}")
    row = sh_matrix(model.sh_order, np.array([phi]), np.array([theta]))[0]
    return float(row @ model.coefficients[bin_index])


def decode_sh_grid(model: ShModel, directions: Sequence[tuple[float, float]]) -> np.ndarray:
    """Reconstructed dB magnitudes for all bins at once, shape (D, num_bins)."""
    directions = np.asarray(list(directions), dtype=float).reshape(-1, 2)
    if directions.shape[0] == 0:
        return np.zeros((0, model.num_bins))
    design = sh_matrix(model.sh_order, directions[:, 0], directions[:, 1])
    return design @ model.coefficients.T


def _encode_metadata(metadata: Mapping[str, str]) -> bytes:
    lines = []
    for key, value in metadata.items():
        key = str(key)
        value = str(value)
        if "=" in key or "\n" in key or not key:
            raise ValueError(f"metadata key {key!r} must be non-empty and free of '=' and newlines")
        if "\n" in value:
            raise ValueError(f"metadata value for {key!r} must not contain newlines")
        lines.append(f"{key}={value}")
    return "\n".join(lines).encode("utf-8")


def _decode_metadata(blob: bytes) -> dict[str, str]:
    if not blob:
        return {}
    out: dict[str, str] = {}
    for line in blob.decode("utf-8").split("\n"):
        key, sep, value = line.partition("=")
        if not sep:
            raise ModelFormatError(f"metadata line {line!r} is not key=value")
        out[key] = value
    return out


class _Reader:
    """Sequential reader over a fully loaded payload with truncation checks."""

    def __init__(self, data: bytes, path: Path) -> None:
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelFormatError(
                f"{self.path}: truncated file: needed {n} bytes for {what}, "
                f"{len(self.data) - self.pos} left"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def done(self) -> None:
        if self.pos != len(self.data):
            raise ModelFormatError(
                f"{self.path}: {len(self.data) - self.pos} unexpected trailing bytes"
            )


def _read_checked(path: Path, magic: bytes) -> _Reader:
    data = path.read_bytes()
    if len(data) < len(magic):
        raise ModelFormatError(f"{path}: truncated file: shorter than the magic")
    if data[:4] != magic:
        raise ModelFormatError(f"{path}: bad magic {data[:4]!r}, expected {magic!r}")
    if len(data) < 8:
        raise ModelFormatError(f"{path}: truncated file: no room for checksum")
    stored_crc = _U32.unpack(data[-4:])[0]
    computed_crc = zlib.crc32(data[:-4]) & 0xFFFFFFFF
    if stored_crc != computed_crc:
        raise ModelFormatError(
            f"{path}: CRC mismatch: stored 0x{stored_crc:08x}, computed 0x{computed_crc:08x}"
        )
    return _Reader(data[:-4], path)


def _check_version(path: Path, version: int) -> None:
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format version {version} (supported: {FORMAT_VERSION})"
        )


def save_model(model: CoefficientSet, path: str | Path) -> None:
    """Write a CoefficientSet as an HSHC file (atomic byte-exact layout)."""
    iset = model.index_set
    flags = 1 if iset.psi_symmetric else 0
    meta = _encode_metadata(model.provenance)
    blob = bytearray()
    blob += _HSHC_HEADER.pack(
        HSHC_MAGIC, FORMAT_VERSION, flags, iset.n_max, iset.l_max, iset.m_max, 0, model.sample_rate
    )
    blob += _U32.pack(len(model.coefficients))
    blob += model.coefficients.astype("<f8").tobytes()
    blob += _U32.pack(len(meta))
    blob += meta
    blob += _U32.pack(zlib.crc32(bytes(blob)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(blob))


def load_model(path: str | Path) -> CoefficientSet:
    """Read an HSHC file back; coefficients are bit-identical to what was saved."""
    path = Path(path)
    reader = _read_checked(path, HSHC_MAGIC)
    (_, version, flags, n_max, l_max, m_max, _, sample_rate) = _HSHC_HEADER.unpack(
        reader.take(_HSHC_HEADER.size, "header")
    )
    _check_version(path, version)
    count = _U32.unpack(reader.take(4, "coefficient count"))[0]
    coeffs = np.frombuffer(reader.take(8 * count, "coefficients"), dtype="<f8").copy()
    meta_len = _U32.unpack(reader.take(4, "metadata length"))[0]
    metadata = _decode_metadata(reader.take(meta_len, "metadata"))
    reader.done()
    index_set = build_index_set(n_max, l_max, m_max, bool(flags & 1))
    if count != len(index_set):
        raise ModelFormatError(
            f"{path}: coefficient count {count} does not match index-set size {len(index_set)}"
        )
    return CoefficientSet(
        index_set=index_set,
        coefficients=coeffs,
        sample_rate=sample_rate,
        provenance=metadata,
    )


def save_sh_model(model: ShModel, path: str | Path) -> None:
    """Write an ShModel as an SHMB file."""
    meta = _encode_metadata(model.provenance)
    count = model.coefficients.size
    blob = bytearray()
    blob += _SHMB_HEADER.pack(SHMB_MAGIC, FORMAT_VERSION, 0, model.sh_order, 0, model.sample_rate, model.num_bins)
    blob += _U32.pack(count)
    blob += model.coefficients.astype("<f8").tobytes()
    blob += _U32.pack(len(meta))
    blob += meta
    blob += _U32.pack(zlib.crc32(bytes(blob)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(blob))


def load_sh_model(path: str | Path) -> ShModel:
    """Read an SHMB file back bit-exactly."""
    path = Path(path)
    reader = _read_checked(path, SHMB_MAGIC)
    (_, version, _, sh_order, _, sample_rate, num_bins) = _SHMB_HEADER.unpack(
        reader.take(_SHMB_HEADER.size, "header")
    )
    _check_version(path, version)
    count = _U32.unpack(reader.take(4, "coefficient count"))[0]
    per_bin = (sh_order + 1) ** 2
    if count != num_bins * per_bin:
        raise ModelFormatError(
            f"{path}: coefficient count {count} does not match {num_bins} bins x {per_bin}"
        )
    coeffs = np.frombuffer(reader.take(8 * count, "coefficients"), dtype="<f8").copy()
    meta_len = _U32.unpack(reader.take(4, "metadata length"))[0]
    metadata = _decode_metadata(reader.take(meta_len, "metadata"))
    reader.done()
    return ShModel(
        sh_order=sh_order,
        sample_rate=sample_rate,
        num_bins=num_bins,
        coefficients=coeffs.reshape(num_bins, per_bin),
        provenance=metadata,
    )


def load_any_model(path: str | Path) -> CoefficientSet | ShModel:
    """Load either container, dispatching on the magic bytes."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == HSHC_MAGIC:
        return load_model(path)
    if magic == SHMB_MAGIC:
        return load_sh_model(path)
    raise ModelFormatError(
        f"{path}: bad magic {magic!r}, expected {HSHC_MAGIC!r} or {SHMB_MAGIC!r}"
    )
