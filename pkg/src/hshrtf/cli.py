"""Batch command-line front end: encode, sh-encode, decode, compare, info.

Exit codes: 0 success, 2 usage error, 3 input/parse error, 4 numerical
failure.  Every file-writing run also emits a JSON manifest next to its
outputs recording the resolved parameters, input digests and tool
version, so results can be reproduced byte for byte (timestamp aside).

Heavy imports happen after argument parsing so that ``--threads`` can
cap the linear-algebra thread pools via environment variables before
numpy loads.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

__version__ = "0.1.0"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERICAL = 4

_THREAD_ENV_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)
_thread_limits = None  # keeps a threadpoolctl handle alive for the process


def _cap_threads(n: int) -> None:
    for var in _THREAD_ENV_VARS:
        os.environ[var] = str(n)
    if "numpy" in sys.modules:  # env vars are too late, adjust live pools
        try:
            import threadpoolctl

            global _thread_limits
            _thread_limits = threadpoolctl.threadpool_limits(limits=n)
        except ImportError:
            pass


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _manifest_params(args: argparse.Namespace) -> dict:
    skip = {"func", "command"}
    params = {}
    for key, value in vars(args).items():
        if key in skip:
            continue
        params[key] = str(value) if isinstance(value, Path) else value
    return params


def _write_manifest(path: Path, args: argparse.Namespace, inputs: list[Path]) -> None:
    doc = {
        "command": args.command,
        "parameters": _manifest_params(args),
        "inputs": {str(p): _sha256(p) for p in inputs},
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _parse_grid(spec: str) -> tuple[list[float], list[float], list[float]]:
    parts = spec.split("x")
    if len(parts) != 3:
        raise ValueError(
            f"grid must have three 'start:step:end' parts separated by 'x', got {spec!r}"
        )
    axes = []
    for part in parts:
        fields = part.strip().split(":")
        if len(fields) != 3:
            raise ValueError(f"grid axis must be 'start:step:end', got {part.strip()!r}")
        start, step, end = (float(tok) for tok in fields)
        if step <= 0:
            raise ValueError(f"grid step must be positive, got {step}")
        if end < start:
            raise ValueError(f"grid end {end} is below start {start}")
        count = int((end - start) / step + 1e-9) + 1
        axes.append([start + k * step for k in range(count)])
    return axes[0], axes[1], axes[2]


def cmd_encode(args: argparse.Namespace) -> int:
    from .basis import build_index_set
    from .fitting import WeightingSpec, build_weights, fit_hsh
    from .ingest import load_hrir_set, magnitude_spectra
    from .model import save_model

    index_set = build_index_set(args.n_max, args.l_max, args.m_max, args.symmetric)
    hrir = load_hrir_set(args.input)
    dataset = magnitude_spectra(hrir, db_floor=args.db_floor)
    if args.no_weighting:
        spec = WeightingSpec.disabled()
    else:
        spec = WeightingSpec.for_sample_rate(
            dataset.sample_rate, dropped_low_bins=args.drop_bins, taper_start_hz=args.taper_start
        )
    weights = build_weights(dataset, spec)
    provenance = {
        "tool_version": __version__,
        "source_sha256": _sha256(args.input),
        "n_max": str(args.n_max),
        "l_max": str(args.l_max),
        "m_max": str(args.m_max),
        "psi_symmetric": str(args.symmetric).lower(),
        "weighting_enabled": str(spec.enabled).lower(),
        "dropped_low_bins": str(spec.dropped_low_bins if spec.enabled else 0),
        "taper_start_hz": format(spec.taper_start_hz, ".9g"),
        "taper_end_hz": format(spec.taper_end_hz, ".9g"),
        "taper_shape": "raised-cosine",
        "mapping": "linear-half-sphere",
        "db_floor": format(args.db_floor, ".17g"),
    }
    model, report = fit_hsh(dataset, index_set, weights, provenance=provenance)
    save_model(model, args.output)
    _write_manifest(args.output.with_name(args.output.name + ".manifest.json"), args, [args.input])
    print(f"coefficients: {report.num_coefficients}")
    print(f"samples used: {report.num_samples_used} of {dataset.num_samples}")
    print(f"weighted RSS: {report.weighted_rss:.6g} dB^2")
    print(f"condition estimate: {report.normal_matrix_condition_estimate:.6g}")
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_sh_encode(args: argparse.Namespace) -> int:
    import dataclasses

    from .fitting import fit_sh_per_bin
    from .ingest import load_hrir_set, magnitude_spectra
    from .model import save_sh_model

    hrir = load_hrir_set(args.input)
    dataset = magnitude_spectra(hrir, db_floor=args.db_floor)
    model = fit_sh_per_bin(dataset, args.order)
    provenance = {
        "tool_version": __version__,
        "source_sha256": _sha256(args.input),
        "sh_order": str(args.order),
        "db_floor": format(args.db_floor, ".17g"),
    }
    model = dataclasses.replace(model, provenance=provenance)
    save_sh_model(model, args.output)
    _write_manifest(args.output.with_name(args.output.name + ".manifest.json"), args, [args.input])
    print(f"coefficients: {model.coefficients.size} ({model.num_bins} bins x {(args.order + 1) ** 2})")
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_decode(args: argparse.Namespace) -> int:
    import numpy as np

    from .coords import angles_from_az_el
    from .model import decode_grid, load_model

    model = load_model(args.model)
    if args.grid is not None:
        if args.az is not None or args.el is not None or args.freq is not None:
            print("error: give either --grid or --az/--el/--freq, not both", file=sys.stderr)
            return EXIT_USAGE
        az_values, el_values, freqs = _parse_grid(args.grid)
    else:
        if args.az is None or args.el is None or args.freq is None:
            print("error: need --az, --el and --freq (or --grid)", file=sys.stderr)
            return EXIT_USAGE
        az_values, el_values, freqs = [args.az], [args.el], [args.freq]

    pairs = [(az, el) for az in az_values for el in el_values]
    directions = [angles_from_az_el(az, el) for az, el in pairs]
    values = decode_grid(model, directions, freqs)
    if args.linear:
        values = np.power(10.0, values / 20.0)

    header = "azimuth_deg,elevation_deg,freq_hz," + ("value_linear" if args.linear else "value_db")
    lines = [header]
    for i, (az, el) in enumerate(pairs):
        for j, f in enumerate(freqs):
            lines.append(
                f"{format(az, '.9g')},{format(el, '.9g')},{format(f, '.9g')},{format(values[i, j], '.9g')}"
            )
    text = "\n".join(lines) + "\n"
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.write_text(text, encoding="utf-8")
        _write_manifest(
            args.output.with_name(args.output.name + ".manifest.json"), args, [args.model]
        )
        print(f"wrote {args.output}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    from .ingest import load_hrir_set, magnitude_spectra
    from .metrics import build_comparison, write_curve_csv, write_summary_csv
    from .model import load_model, load_sh_model

    hrir = load_hrir_set(args.raw)
    dataset = magnitude_spectra(hrir, db_floor=args.db_floor)
    hsh_model = load_model(args.hsh_model)
    sh_model = load_sh_model(args.sh_model)
    try:
        report = build_comparison(dataset, hsh_model, sh_model, args.f_lo, args.f_hi)
    except ValueError as exc:
        print(f"error: inconsistent inputs: {exc}", file=sys.stderr)
        return EXIT_INPUT

    outdir = args.outdir
    outdir.mkdir(parents=True, exist_ok=True)
    for name in ("rms_hsh", "rms_sh", "p95_hsh", "p95_sh", "rms_diff", "p5_diff", "p95_diff"):
        write_curve_csv(getattr(report, name), outdir / f"{name}.csv")
    extra: dict[str, object] = {"f_lo_hz": args.f_lo, "f_hi_hz": args.f_hi}
    dropped = hsh_model.provenance.get("dropped_low_bins")
    if dropped is not None and dropped.isdigit():
        per_bin = (sh_model.sh_order + 1) ** 2
        extra["sh_coeffs_excluding_dropped_bins"] = per_bin * (sh_model.num_bins - int(dropped))
    write_summary_csv(report, outdir / "summary.csv", extra=extra)
    _write_manifest(outdir / "manifest.json", args, [args.raw, args.hsh_model, args.sh_model])
    print(f"SD (HSH): {report.sd_hsh:.6g} dB")
    print(f"SD (SH):  {report.sd_sh:.6g} dB")
    print(f"wrote {outdir}/*.csv")
    return EXIT_OK


def cmd_info(args: argparse.Namespace) -> int:
    from .model import CoefficientSet, load_any_model

    model = load_any_model(args.model)
    if isinstance(model, CoefficientSet):
        iset = model.index_set
        print("format=HSHC")
        print(f"psi_symmetric={str(iset.psi_symmetric).lower()}")
        print(f"n_max={iset.n_max}")
        print(f"l_max={iset.l_max}")
        print(f"m_max={iset.m_max}")
        print(f"sample_rate={format(model.sample_rate, '.9g')}")
        print(f"coefficients={len(model.coefficients)}")
    else:
        print("format=SHMB")
        print(f"sh_order={model.sh_order}")
        print(f"num_bins={model.num_bins}")
        print(f"sample_rate={format(model.sample_rate, '.9g')}")
        print(f"coefficients={model.coefficients.size}")
    for key, value in model.provenance.items():
        print(f"meta.{key}={value}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hshrtf",
        description="Encode HRTF magnitudes into a continuous 4D hyperspherical-harmonic "
        "model, decode at arbitrary direction/frequency, and compare against a "
        "per-bin spherical-harmonic baseline.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, metavar="N", help="cap linear-algebra threads")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", parents=[common], help="fit a continuous HSH model to an HRIR-CSV set")
    p.add_argument("input", type=Path, help="HRIR-CSV input file")
    p.add_argument("-o", "--output", type=Path, required=True, help="output .hshc model path")
    p.add_argument("--n-max", type=int, default=80, help="frequency-angle resolution limit (default 80)")
    p.add_argument("--l-max", type=int, default=8, help="inclination resolution limit (default 8)")
    p.add_argument("--m-max", type=int, default=8, help="azimuth resolution limit (default 8)")
    p.add_argument(
        "--symmetric",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="keep only basis functions symmetric about the Nyquist angle (default on)",
    )
    p.add_argument("--drop-bins", type=int, default=2, help="zero-weight this many leading bins (default 2)")
    p.add_argument("--taper-start", type=float, default=20000.0, help="start of the high-frequency taper in Hz")
    p.add_argument("--no-weighting", action="store_true", help="fit all samples with unit weight")
    p.add_argument("--db-floor", type=float, default=2.0**-52, help="clamp for zero magnitudes before dB")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("sh-encode", parents=[common], help="fit the per-bin SH baseline model")
    p.add_argument("input", type=Path, help="HRIR-CSV input file")
    p.add_argument("-o", "--output", type=Path, required=True, help="output .shmb model path")
    p.add_argument("--order", type=int, default=8, help="maximum SH order (default 8)")
    p.add_argument("--db-floor", type=float, default=2.0**-52)
    p.set_defaults(func=cmd_sh_encode)

    p = sub.add_parser("decode", parents=[common], help="read magnitudes out of a model")
    p.add_argument("model", type=Path, help=".hshc model path")
    p.add_argument("--az", type=float, help="azimuth in degrees")
    p.add_argument("--el", type=float, help="elevation in degrees")
    p.add_argument("--freq", type=float, help="frequency in Hz")
    p.add_argument(
        "--grid",
        help="batched decode: 'azStart:azStep:azEnd x elStart:elStep:elEnd x fStart:fStep:fEnd'",
    )
    p.add_argument("--linear", action="store_true", help="emit linear magnitude 10^(dB/20)")
    p.add_argument("-o", "--output", type=Path, help="output CSV (default: stdout)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("compare", parents=[common], help="error analysis of HSH vs SH models against raw data")
    p.add_argument("raw", type=Path, help="HRIR-CSV input the models were fitted to")
    p.add_argument("hsh_model", type=Path, help=".hshc model path")
    p.add_argument("sh_model", type=Path, help=".shmb model path")
    p.add_argument("--f-lo", type=float, default=100.0, help="lower edge for spectral distortion (Hz)")
    p.add_argument("--f-hi", type=float, default=20000.0, help="upper edge for spectral distortion (Hz)")
    p.add_argument("--db-floor", type=float, default=2.0**-52)
    p.add_argument("-o", "--outdir", type=Path, required=True, help="directory for the report CSVs")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("info", parents=[common], help="print a model file's header and metadata")
    p.add_argument("model", type=Path)
    p.set_defaults(func=cmd_info)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return EXIT_USAGE
        _cap_threads(args.threads)

    from .fitting import FitError
    from .ingest import HrirFormatError
    from .model import ModelFormatError

    try:
        return args.func(args)
    except (HrirFormatError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename}", file=sys.stderr)
        return EXIT_INPUT
    except IsADirectoryError as exc:
        print(f"error: not a file: {exc.filename}", file=sys.stderr)
        return EXIT_INPUT
    except FitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
