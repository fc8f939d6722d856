import os
from pathlib import Path

import numpy as np
import pytest

from hshrtf import CoefficientSet, MagnitudeDataset, decode_grid

KEMAR_ENV = "HSHRTF_KEMAR_CSV"
REPO_ROOT = Path(__file__).resolve().parent.parent


def kemar_csv_path() -> Path | None:
    """The measured KEMAR large-pinna left-ear set, if converted and present."""
    env = os.environ.get(KEMAR_ENV)
    if env:
        p = Path(env)
        if p.exists():
            return p
    for name in ("kemar_large_left.csv", "kemar_large_left.hrir.csv"):
        p = REPO_ROOT / "data" / name
        if p.exists():
            return p
    return None


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def kemar_csv():
    path = kemar_csv_path()
    if path is None:
        pytest.skip(f"KEMAR HRIR-CSV not available (set {KEMAR_ENV} or put it under data/)")
    return path


def write_hrir_csv(path: Path, sample_rate: int, directions, impulses) -> Path:
    """Write a minimal HRIR-CSV file; sample values use repr for lossless round trips."""
    impulses = np.asarray(impulses, dtype=float)
    lines = ["# hrir-csv v1", f"# fs={sample_rate}", f"# n={impulses.shape[1]}"]
    for (az, el), row in zip(directions, impulses):
        lines.append(",".join([format(az, ".10g"), format(el, ".10g")] + [repr(float(v)) for v in row]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def hrir_file_factory(tmp_path):
    def factory(name="toy.csv", sample_rate=44100, directions=((0.0, 0.0), (90.0, 0.0)), impulses=None):
        if impulses is None:
            impulses = np.zeros((len(directions), 8))
            impulses[:, 0] = 1.0
        return write_hrir_csv(tmp_path / name, sample_rate, directions, impulses)

    return factory


def make_solver_instance(seed: int):
    """Random small weighted least-squares instance (<= 200 samples, <= 30 coeffs).

    Frequencies are spread across the band so the comparison between the
    blockwise normal-equation path and a dense orthogonal-factorization
    oracle is not dominated by the instance's own conditioning floor;
    directions, data, and weights (including exact zeros) are random.
    """
    import hshrtf as h

    rng = np.random.default_rng(seed)
    index_set = h.build_index_set(3, 2, 2, False)  # 23 coefficients
    num_dirs = int(rng.integers(18, 26))
    phi = rng.uniform(0, 2 * np.pi, num_dirs)
    theta = np.arccos(rng.uniform(-1, 1, num_dirs))
    freqs = np.linspace(2000.0, 22050.0, 8)
    psi = np.pi * freqs / 44100.0
    truth = rng.standard_normal(len(index_set))
    model = h.CoefficientSet(index_set, truth, 44100.0)
    h_db = h.decode_grid(model, list(zip(phi, theta)), freqs)
    h_db = h_db + 1e-2 * rng.standard_normal(h_db.shape)
    dataset = h.MagnitudeDataset(44100.0, phi, theta, psi, h_db)
    weights = rng.uniform(0.25, 2.0, dataset.num_samples)
    weights[rng.uniform(size=dataset.num_samples) < 0.05] = 0.0
    return dataset, index_set, weights


def synthesize_dataset(
    index_set,
    coefficients,
    num_directions: int,
    num_bins: int,
    rng: np.random.Generator,
    sample_rate: float = 44100.0,
) -> MagnitudeDataset:
    """Exact samples of a known coefficient set on a random product grid."""
    phi = rng.uniform(0.0, 2.0 * np.pi, num_directions)
    theta = np.arccos(rng.uniform(-1.0, 1.0, num_directions))
    psi = np.linspace(0.0, np.pi / 2.0, num_bins) if num_bins > 1 else np.array([np.pi / 4.0])
    model = CoefficientSet(index_set, coefficients, sample_rate)
    freqs = psi * sample_rate / np.pi
    h_db = decode_grid(model, list(zip(phi, theta)), freqs)
    return MagnitudeDataset(sample_rate, phi, theta, psi, h_db)
