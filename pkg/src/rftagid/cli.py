"""Command-line driver: simulate datasets, run the study, export plot data.

Exit status is 0 on success, 1 for invalid input or configuration and 2 for
runtime failures. Errors are printed to stderr as one JSON object per line.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .dataset import (
    Dataset,
    averaged_spectrum,
    calibrate_noise_std,
)
from .errors import PeakDetectionError, RFTagError, ValidationError
from .features import SCENARIOS, detect_peaks, fit_pca, fit_standardizer
from .io import (
    csv_text,
    dataset_csv,
    dumps_json,
    read_dataset_csv,
    report_csv,
    sha256_file,
    write_atomic,
)
from .ml.study import make_splits, regime_training_set, run_study, simulate_all
from .nonlin import DeviceModel, device_pair, distort_constellation, envelope_response, intermod_frequencies, qam16

log = logging.getLogger("rftagid")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON or YAML run configuration")
    p.add_argument("--out", type=Path, help="output directory (default: config out_dir)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--snr-db", type=float, help="SNR at the reference position in dB")
    p.add_argument("--perturb-frac", type=float, help="coefficient perturbation fraction")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rftagid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate scenario dataset CSVs")
    _common(p)
    p.add_argument("--scenario", help="comma-separated scenarios (default: all)")
    p.add_argument("--samples", type=int, help="samples per position")

    p = sub.add_parser("study", help="train and score the classifier suite")
    _common(p)
    p.add_argument("--classifiers", help="comma-separated classifier names")
    p.add_argument("--samples", type=int, help="samples per position")
    p.add_argument("--data", type=Path, help="directory holding dataset_<scenario>.csv files")

    p = sub.add_parser("spectrum", help="averaged spectra, peak tables and their difference")
    _common(p)
    p.add_argument("--averages", type=int, help="captures per averaged spectrum")
    p.add_argument("--clean", action="store_true", help="disable receiver noise")
    p.add_argument("--device", type=Path, action="append", help="device model JSON (repeatable)")

    p = sub.add_parser("constellation", help="16-QAM constellation and AM/AM curves through the amplifier")
    _common(p)
    p.add_argument("--rms", type=float, help="RMS symbol amplitude at the amplifier input")

    p = sub.add_parser("pca", help="two-component projections of each training regime")
    _common(p)
    p.add_argument("--samples", type=int, help="samples per position")
    p.add_argument("--data", type=Path, help="directory holding dataset_<scenario>.csv files")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.snr_db is not None:
        changes["snr_db"] = args.snr_db
    if args.perturb_frac is not None:
        changes["perturb_fraction"] = args.perturb_frac
    if getattr(args, "samples", None) is not None:
        changes["samples_per_position"] = args.samples
    if getattr(args, "scenario", None):
        changes["scenarios"] = tuple(s.strip() for s in args.scenario.split(","))
    if getattr(args, "classifiers", None):
        changes["classifiers"] = tuple(c.strip() for c in args.classifiers.split(",") if c.strip())
    if getattr(args, "averages", None) is not None:
        changes["n_averages"] = args.averages
    if getattr(args, "rms", None) is not None:
        changes["constellation_rms"] = args.rms
    if getattr(args, "data", None) is not None:
        changes["data_dir"] = str(args.data)
    if getattr(args, "device", None):
        changes["device_files"] = tuple(str(p) for p in args.device)
    if args.out is not None:
        changes["out_dir"] = str(args.out)
    return cfg.override(**changes) if changes else cfg


class Outputs:
    """Collects written files for the manifest."""

    def __init__(self, out_dir: Path):
        self.dir = Path(out_dir)
        self.files: dict[str, dict] = {}

    def write(self, name: str, text: str, rows: int | None = None):
        path = write_atomic(self.dir / name, text)
        if rows is None and name.endswith(".csv"):
            rows = max(text.count("\n") - 1, 0)
        entry = {"sha256": sha256_file(path)}
        if rows is not None:
            entry["rows"] = rows
        self.files[name] = entry

    def manifest(self, command: str, cfg: RunConfig, extra: dict | None = None):
        doc = {
            "command": command,
            "version": __version__,
            "config_hash": cfg.config_hash(),
            "config": cfg.to_dict(),
            "seeds": {"master_seed": cfg.master_seed, "device_seeds": list(cfg.device_seeds)},
            "files": dict(sorted(self.files.items())),
        }
        if extra:
            doc.update(extra)
        write_atomic(self.dir / "manifest.json", dumps_json(doc))


def _devices(cfg: RunConfig) -> tuple[DeviceModel, ...]:
    return cfg.study_config().device_models()


def _load_or_simulate(cfg: RunConfig) -> dict[str, Dataset]:
    if cfg.data_dir is None:
        return simulate_all(cfg.study_config())
    ids = [d.device_id for d in _devices(cfg)]
    data = {}
    for s in SCENARIOS:
        path = Path(cfg.data_dir) / f"dataset_{s}.csv"
        if not path.is_file():
            raise ValidationError(f"missing dataset file: {path}")
        data[s] = read_dataset_csv(path, ids)
    return data


def cmd_simulate(cfg: RunConfig) -> Outputs:
    out = Outputs(cfg.out_dir)
    study = cfg.study_config()
    devices = study.device_models()
    for d in devices:
        out.write(f"devices/{d.device_id}.json", dumps_json(d.to_dict()))
    data = simulate_all(study, cfg.scenarios)
    for s in cfg.scenarios:
        out.write(f"dataset_{s}.csv", dataset_csv(data[s]), rows=len(data[s]))
    out.manifest("simulate", cfg, {"row_counts": {s: len(data[s]) for s in cfg.scenarios}})
    return out


def _pca_tables(cfg: RunConfig, data: dict[str, Dataset]) -> dict[str, tuple[str, dict]]:
    study = cfg.study_config()
    splits = make_splits(study, data)
    standardizer = fit_standardizer(splits.train["static"].features)
    tables = {}
    for regime in cfg.regimes:
        raw = regime_training_set(study, regime, splits)
        # all features share dB units, so by default PCA runs on them directly
        z = standardizer.transform(raw.features) if cfg.pca_standardize else raw.features
        model = fit_pca(z, 2)
        proj = model.project(z)
        rows = zip(proj[:, 0], proj[:, 1], raw.truth, raw.device_id, raw.scenario, raw.position)
        text = csv_text(("pc1", "pc2", "truth", "device_id", "scenario", "position"), rows)
        summary = {
            "components": model.components.tolist(),
            "explained_variance": model.explained_variance.tolist(),
            "explained_variance_ratio": model.explained_variance_ratio.tolist(),
            "mean": model.mean.tolist(),
            "standardized": cfg.pca_standardize,
        }
        tables[regime] = (text, summary)
    return tables


def _write_pca(out: Outputs, tables):
    for regime, (text, _) in tables.items():
        out.write(f"pca_{regime}.csv", text)
    out.write("pca_summary.json", dumps_json({r: s for r, (_, s) in tables.items()}))


def cmd_study(cfg: RunConfig) -> Outputs:
    out = Outputs(cfg.out_dir)
    data = _load_or_simulate(cfg)
    report = run_study(cfg.study_config(), data)
    out.write("report.csv", report_csv(report), rows=len(report.cells))
    out.write("report.json", dumps_json(report.to_json()))
    _write_pca(out, _pca_tables(cfg, data))
    _write_spectra(out, cfg)
    out.manifest("study", cfg, {"row_counts": {s: len(d) for s, d in data.items()}, "cells": len(report.cells)})
    return out


def product_label(m: int, n: int) -> str:
    """Readable name of the mixing product ``m f1 + n f2``, e.g. ``2f1-f2``."""
    terms = []
    for c, name in ((m, "f1"), (n, "f2")):
        if c:
            terms.append((c, ("" if abs(c) == 1 else str(abs(c))) + name))
    terms.sort(key=lambda t: t[0] < 0)
    out = ""
    for c, t in terms:
        out += ("-" if c < 0 else ("+" if out else "")) + t
    return out or "dc"


def _annotate(freqs, f1: float, f2: float, df: float, max_order: int, tol_bins: float = 1.0):
    """Name the lattice product within ``tol_bins`` of each frequency."""
    lattice = intermod_frequencies(f1, f2, max_order)
    labels = []
    for f in freqs:
        hit = next((p for p in lattice if abs(p.frequency - f) <= tol_bins * df), None)
        labels.append((product_label(hit.m, hit.n), hit.order) if hit else ("", 0))
    return labels


def _write_spectra(out: Outputs, cfg: RunConfig, clean: bool = False):
    devices = list(_devices(cfg))
    sim = cfg.sim
    noise_std = 0.0 if clean else calibrate_noise_std(sim, devices, cfg.master_seed)
    freqs = sorted(sim.excitation().frequencies)
    # products are only named for two-tone plans
    f1, f2 = (freqs[0], freqs[1]) if len(freqs) == 2 else (None, None)
    order = max(d.order for d in devices)
    spectra = []
    for d in devices:
        spec = averaged_spectrum(d, cfg.n_averages, sim, noise_std, cfg.master_seed)
        spectra.append(spec)
        out.write(f"spectrum_{d.device_id}.csv", csv_text(("freq_hz", "mag_db"), zip(spec.bin_freqs, spec.magnitudes_db)))
        try:
            fv = detect_peaks(spec, sim.k, sim.min_separation_bins, sim.analysis_band())
        except PeakDetectionError as exc:
            raise PeakDetectionError(f"{exc} [device={d.device_id}]") from None
        labels = _annotate(fv.peak_freqs, f1, f2, spec.df, order) if f2 else [("", 0)] * fv.k
        rows = [(i + 1, f, m, lab, o) for i, (f, m, (lab, o)) in enumerate(zip(fv.peak_freqs, fv.peak_mags_db, labels))]
        out.write(f"peaks_{d.device_id}.csv", csv_text(("rank", "freq_hz", "mag_db", "product", "order"), rows))
    if len(spectra) >= 2:
        a, b = spectra[0], spectra[1]
        diff = b.magnitudes_db - a.magnitudes_db
        rows = zip(a.bin_freqs, a.magnitudes_db, b.magnitudes_db, diff)
        header = ("freq_hz", f"{devices[0].device_id}_db", f"{devices[1].device_id}_db", "diff_db")
        out.write("spectrum_difference.csv", csv_text(header, rows))
        i = int(np.argmax(np.abs(diff)))
        lab = _annotate([a.bin_freqs[i]], f1, f2, a.df, order)[0] if f2 else ("", 0)
        return {"max_abs_diff_db": float(abs(diff[i])), "max_abs_diff_freq_hz": float(a.bin_freqs[i]), "max_abs_diff_product": lab[0]}
    return {}


def cmd_spectrum(cfg: RunConfig, clean: bool = False) -> Outputs:
    out = Outputs(cfg.out_dir)
    summary = _write_spectra(out, cfg, clean)
    out.manifest("spectrum", cfg, {"clean": clean, **summary})
    return out


def cmd_constellation(cfg: RunConfig) -> Outputs:
    out = Outputs(cfg.out_dir)
    base = DeviceModel(cfg.amplifier_coefficients, "amplifier")
    series = [("ideal", None), ("amplifier", base)]
    series += [(d.device_id, d) for d in device_pair(base, cfg.perturb_fraction, cfg.device_seeds, cfg.perturb_all)]
    symbols = qam16(cfg.constellation_rms)
    rows = []
    for name, model in series:
        pts = symbols if model is None else distort_constellation(model, symbols)
        rows += [(name, j, p.real, p.imag) for j, p in enumerate(pts)]
    out.write("constellation.csv", csv_text(("series", "symbol", "i", "q"), rows))

    r = np.linspace(0.0, 1.0, 101)
    models = [(name, m) for name, m in series if m is not None]
    cols = [envelope_response(m, r) for _, m in models]
    header = ("amplitude_in", *[f"{name}_out" for name, _ in models])
    out.write("am_am.csv", csv_text(header, zip(r, *cols)))
    out.manifest("constellation", cfg)
    return out


def cmd_pca(cfg: RunConfig) -> Outputs:
    out = Outputs(cfg.out_dir)
    data = _load_or_simulate(cfg)
    _write_pca(out, _pca_tables(cfg, data))
    out.manifest("pca", cfg, {"row_counts": {s: len(d) for s, d in data.items()}})
    return out


def _error(kind: str, code: int, message: str) -> int:
    print(json.dumps({"status": "error", "kind": kind, "exit_code": code, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ValidationError as exc:
        return _error("usage", EXIT_VALIDATION, str(exc))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "simulate":
            out = cmd_simulate(cfg)
        elif args.command == "study":
            out = cmd_study(cfg)
        elif args.command == "spectrum":
            out = cmd_spectrum(cfg, clean=args.clean)
        elif args.command == "constellation":
            out = cmd_constellation(cfg)
        else:
            out = cmd_pca(cfg)
    except ValidationError as exc:
        return _error("validation", EXIT_VALIDATION, str(exc))
    except (RFTagError, OSError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _error(type(exc).__name__, EXIT_RUNTIME, str(exc))
    except Exception as exc:  # noqa: BLE001 - unexpected failures still get a parsable line
        return _error("internal", EXIT_RUNTIME, f"{type(exc).__name__}: {exc}")
    print(out.dir / "manifest.json")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
