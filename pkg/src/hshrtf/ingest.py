"""Loading HRIR sets and converting them to dB magnitudes on the half-hypersphere.

The interchange format is a plain text "HRIR-CSV" file: three required
header lines ``# hrir-csv v1`` (first), ``# fs=<Hz>`` and ``# n=<samples>``,
then one row per measured direction holding ``azimuth_deg,elevation_deg``
followed by exactly n impulse-response samples.  One file carries one ear.
Converters from container formats such as SOFA/HDF5 live outside this
package; they only need to emit this text layout.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coords import FrequencyMapping, angles_from_az_el, freq_to_psi

# Smallest magnitude kept before the dB conversion; exact zeros in a
# spectrum would otherwise map to -inf dB.
DEFAULT_DB_FLOOR = 2.0**-52


class HrirFormatError(ValueError):
    """Raised for malformed HRIR-CSV input; message cites file and line."""


@dataclass(frozen=True)
class HrirSet:
    """A measured set of head-related impulse responses, one ear.

    ``directions`` is (D, 2) of (azimuth_deg, elevation_deg) and
    ``impulses`` is (D, ir_length); rows correspond.
    """

    sample_rate: float
    ir_length: int
    directions: np.ndarray
    impulses: np.ndarray

    def __post_init__(self) -> None:
        if self.sample_rate <= 0 or not np.isfinite(self.sample_rate):
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate!r}")
        if self.ir_length < 2 or self.ir_length % 2 != 0:
            raise ValueError(f"ir_length must be even and >= 2, got {self.ir_length}")
        directions = np.asarray(self.directions, dtype=float)
        impulses = np.asarray(self.impulses, dtype=float)
        if directions.ndim != 2 or directions.shape[1] != 2:
            raise ValueError(f"directions must be (D, 2), got {directions.shape}")
        if impulses.shape != (directions.shape[0], self.ir_length):
            raise ValueError(
                f"impulses must be ({directions.shape[0]}, {self.ir_length}), got {impulses.shape}"
            )
        if not np.isfinite(directions).all() or not np.isfinite(impulses).all():
            raise ValueError("directions and impulses must be finite")
        seen = {tuple(row) for row in directions}
        if len(seen) != directions.shape[0]:
            raise ValueError("directions must be pairwise distinct")
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "impulses", impulses)

    @property
    def num_directions(self) -> int:
        return int(self.directions.shape[0])

    @property
    def num_bins(self) -> int:
        return self.ir_length // 2 + 1


@dataclass(frozen=True)
class MagnitudeDataset:
    """dB magnitudes on the product grid of D directions and B frequency bins.

    ``phi``/``theta`` have length D, ``psi`` length B and ``h_db`` shape
    (D, B).  Flattened sample order is row-major over
    (direction_index, bin_index); weight vectors follow it.
    """

    sample_rate: float
    phi: np.ndarray
    theta: np.ndarray
    psi: np.ndarray
    h_db: np.ndarray

    def __post_init__(self) -> None:
        if self.sample_rate <= 0 or not np.isfinite(self.sample_rate):
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate!r}")
        phi = np.atleast_1d(np.asarray(self.phi, dtype=float))
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        psi = np.atleast_1d(np.asarray(self.psi, dtype=float))
        h_db = np.asarray(self.h_db, dtype=float)
        if phi.shape != theta.shape or phi.ndim != 1 or phi.size == 0:
            raise ValueError("phi and theta must be equal-length 1-D arrays")
        if psi.ndim != 1 or psi.size == 0:
            raise ValueError("psi must be a non-empty 1-D array")
        if h_db.shape != (phi.size, psi.size):
            raise ValueError(f"h_db must be ({phi.size}, {psi.size}), got {h_db.shape}")
        for name, arr in (("phi", phi), ("theta", theta), ("psi", psi), ("h_db", h_db)):
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} must be finite")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "h_db", h_db)

    @property
    def num_directions(self) -> int:
        return int(self.phi.size)

    @property
    def num_bins(self) -> int:
        return int(self.psi.size)

    @property
    def num_samples(self) -> int:
        return self.num_directions * self.num_bins

    @property
    def bin_freqs(self) -> np.ndarray:
        """Center frequency of each bin, inverted from psi."""
        return self.psi * self.sample_rate / np.pi

    def flat_angles(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-sample (phi, theta, psi) in flattened sample order."""
        b = self.num_bins
        return (np.repeat(self.phi, b), np.repeat(self.theta, b), np.tile(self.psi, self.num_directions))

    def flat_values(self) -> np.ndarray:
        """Per-sample dB magnitudes in flattened sample order."""
        return self.h_db.reshape(-1)


def load_hrir_set(path: str | Path) -> HrirSet:
    """Parse an HRIR-CSV file into an :class:`HrirSet`.

    Raises :class:`HrirFormatError` with the offending line number for
    malformed headers, wrong row lengths, duplicate directions or
    non-finite samples.
    """
    path = Path(path)

    def fail(lineno: int, msg: str) -> HrirFormatError:
        return HrirFormatError(f"{path}: line {lineno}: {msg}")

    sample_rate: float | None = None
    ir_length: int | None = None
    version_seen = False
    rows: list[np.ndarray] = []
    directions: list[tuple[float, float]] = []
    seen: dict[tuple[float, float], int] = {}

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if not version_seen:
                if line != "# hrir-csv v1":
                    raise fail(lineno, f"expected header '# hrir-csv v1', got {line!r}")
                version_seen = True
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("fs="):
                    try:
                        sample_rate = float(int(body[3:]))
                    except ValueError:
                        raise fail(lineno, f"fs must be an integer, got {body[3:]!r}") from None
                    if sample_rate <= 0:
                        raise fail(lineno, "fs must be positive")
                elif body.startswith("n="):
                    try:
                        ir_length = int(body[2:])
                    except ValueError:
                        raise fail(lineno, f"n must be an integer, got {body[2:]!r}") from None
                    if ir_length < 2 or ir_length % 2 != 0:
                        raise fail(lineno, f"n must be even and >= 2, got {ir_length}")
                # other comment lines are ignored
                continue
            if sample_rate is None or ir_length is None:
                missing = " and ".join(
                    name for name, v in (("fs", sample_rate), ("n", ir_length)) if v is None
                )
                raise fail(lineno, f"data row before required header field(s): {missing}")
            fields = line.split(",")
            if len(fields) != 2 + ir_length:
                raise fail(
                    lineno,
                    f"expected {2 + ir_length} comma-separated values "
                    f"(azimuth, elevation, {ir_length} samples), got {len(fields)}",
                )
            try:
                values = np.array([float(tok) for tok in fields])
            except ValueError:
                raise fail(lineno, "could not parse value as a decimal float") from None
            if not np.isfinite(values).all():
                raise fail(lineno, "non-finite value in row")
            key = (values[0], values[1])
            if key in seen:
                raise fail(lineno, f"duplicate direction ({values[0]:g}, {values[1]:g}), first seen on line {seen[key]}")
            seen[key] = lineno
            directions.append(key)
            rows.append(values[2:])

    if not version_seen:
        raise HrirFormatError(f"{path}: empty file, expected '# hrir-csv v1' header")
    if sample_rate is None or ir_length is None:
        raise HrirFormatError(f"{path}: missing required header field(s) fs/n")
    if not rows:
        raise HrirFormatError(f"{path}: no data rows")
    return HrirSet(
        sample_rate=sample_rate,
        ir_length=ir_length,
        directions=np.array(directions),
        impulses=np.vstack(rows),
    )


def direction_grid(hrir_set: HrirSet) -> list[tuple[float, float]]:
    """(phi, theta) for every measured direction, in file order."""
    return [angles_from_az_el(az, el) for az, el in hrir_set.directions]


def magnitude_spectra(hrir_set: HrirSet, db_floor: float = DEFAULT_DB_FLOOR) -> MagnitudeDataset:
    """One-sided DFT magnitudes of every impulse response, in dB re 1.

    Bin k of an N-sample response sits at f_k = k * fs / N for
    k = 0..N/2 (N/2 + 1 bins) and at psi = pi * f_k / fs.  Magnitudes
    below ``db_floor`` are clamped to it so every dB value is finite.
    The forward transform is un-normalized (no 1/N), the usual
    convention for transfer-function magnitudes.
    """
    if not (np.isfinite(db_floor) and db_floor > 0):
        raise ValueError(f"db_floor must be a positive linear magnitude, got {db_floor!r}")
    angles = direction_grid(hrir_set)
    phi = np.array([a for a, _ in angles])
    theta = np.array([t for _, t in angles])
    mags = np.abs(np.fft.rfft(hrir_set.impulses, axis=1))
    h_db = 20.0 * np.log10(np.maximum(mags, db_floor))
    mapping = FrequencyMapping(hrir_set.sample_rate)
    n = hrir_set.ir_length
    psi = np.array([freq_to_psi(k * hrir_set.sample_rate / n, mapping) for k in range(n // 2 + 1)])
    return MagnitudeDataset(
        sample_rate=hrir_set.sample_rate, phi=phi, theta=theta, psi=psi, h_db=h_db
    )
