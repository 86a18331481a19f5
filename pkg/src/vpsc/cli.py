"""Command-line experiment runner.

Reads a YAML spec (every CLI flag overrides its config key), executes one
experiment, and writes machine-readable CSV plus a JSON run manifest and a
rendered figure per report into the output directory.  Exit codes: 0 on
success, 2 on a spec/config error, 3 on a sync failure, each with a JSON
error record on stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from . import __version__
from .bench import (
    ExperimentSpec,
    run_autocorrelation_analysis,
    run_ber_experiment,
    run_spectrum_report,
    run_sync_trial,
)
from .channel import ChannelConfig
from .errors import ConfigError, SyncFailure, VpscError
from .modem import ModemConfig

_FIG_KW = {"dpi": 110}
_PNG_META = {"metadata": {"Software": None}}  # keep PNG bytes reproducible


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return f"{x:.10g}"
    return str(x)


def build_spec(config: dict) -> ExperimentSpec:
    """Map the declarative config document onto an ExperimentSpec."""
    config = dict(config)
    modem = ModemConfig(**config.pop("modem", {}))
    channel = ChannelConfig(**config.pop("channel", {}))
    cparams = config.pop("cipher_params", {})
    sync = config.pop("sync", {})
    autocorr = config.pop("autocorr", {})
    keystream = config.pop("keystream", {})
    band = cparams.get("band")
    spec = ExperimentSpec(
        experiment=config.pop("experiment", "ber"),
        cipher=config.pop("cipher", "vpsc"),
        mode=config.pop("mode", "combined"),
        symbols=int(config.pop("symbols", 10_000)),
        snr_db=[float(v) for v in _as_list(config.pop("snr_db", [6, 8, 10, 12, 14, 16]))],
        delay_scale=[float(v) for v in _as_list(config.pop("delay_scale", [1.0]))],
        seeds=[int(v) for v in _as_list(config.pop("seed", 1))],
        out_dir=str(config.pop("out", "out")),
        modem=modem,
        channel=channel,
        secret_seed=str(keystream.get("secret_seed", ExperimentSpec.secret_seed)),
        sc=int(keystream.get("sc", 0)),
        st=float(keystream.get("st", 0.0)),
        band_hz=tuple(band) if band else None,
        phi_headroom=float(cparams.get("phi_headroom", 1.05)),
        lambda_multiplier=float(cparams.get("lambda_multiplier", 10.0)),
        psi_multiplier=int(cparams.get("psi_multiplier", 10)),
        sync_delays=[int(v) for v in _as_list(sync.get("delays", [0, 17, 37, 101]))],
        sync_n_keys=int(sync.get("n_keys", 8)),
        wrong_seed_trials=int(sync.get("wrong_seed_trials", 0)),
        autocorr_keys=int(autocorr.get("keys", 3)),
        autocorr_symbols=int(autocorr.get("symbols", 64)),
    )
    if config:
        raise ConfigError(f"unknown config keys: {sorted(config)}")
    return spec


def _as_list(value):
    if isinstance(value, (list, tuple)):
        return list(value)
    if isinstance(value, str):
        return [v for v in value.replace(",", " ").split() if v]
    return [value]


def _write_csv(path: Path, header: list, rows: list) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _manifest(spec: ExperimentSpec, outputs: list, extra: dict | None = None) -> dict:
    doc = {
        "library_version": __version__,
        "spec": _spec_dict(spec),
        "outputs": sorted(outputs),
    }
    if extra:
        doc.update(extra)
    return doc


def _spec_dict(spec: ExperimentSpec) -> dict:
    def clean(obj):
        if dataclasses.is_dataclass(obj):
            return {k: clean(v) for k, v in dataclasses.asdict(obj).items()}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        if isinstance(obj, bytes):
            return obj.hex()
        if isinstance(obj, float) and math.isinf(obj):
            return "inf"
        return obj

    return clean(spec)


# -- per experiment output writers ------------------------------------------

def _run_ber(spec: ExperimentSpec, out: Path) -> list:
    records = run_ber_experiment(spec)
    name = "ber" if spec.experiment == "ber" else "ber_delay"
    csv_path = out / f"{name}.csv"
    _write_csv(
        csv_path,
        ["cipher", "snr_db", "delay_scale", "bit_errors", "bits_total", "ber", "seed", "theory_ber"],
        [
            (r.cipher, r.snr_db, r.delay_scale, r.bit_errors, r.bits_total, r.ber, r.seed, r.theory_ber)
            for r in records
        ],
    )
    fig_path = out / f"{name}.png"
    xkey = "snr_db" if spec.experiment == "ber" else "delay_scale"
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = [getattr(r, xkey) for r in records]
    floor = 0.5 / records[0].bits_total
    ax.semilogy(xs, [max(r.ber, floor) for r in records], "o-", label=spec.cipher)
    if spec.experiment == "ber" and not spec.channel.taps:
        ax.semilogy(
            xs,
            [max(r.theory_ber, floor) for r in records],
            "k--",
            label="16-QAM closed form",
        )
    ax.set_xlabel("SNR (dB)" if xkey == "snr_db" else "delay scale")
    ax.set_ylabel("BER (floored at half a count)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(fig_path, **_FIG_KW, **_PNG_META)
    plt.close(fig)
    return [csv_path, fig_path]


def _run_autocorr(spec: ExperimentSpec, out: Path) -> list:
    records = run_autocorrelation_analysis(spec)
    csv_path = out / "autocorr.csv"
    rows = []
    for r in records:
        for lag, value in enumerate(r.trace):
            rows.append((r.cipher, r.key_index, lag, value))
    _write_csv(csv_path, ["cipher", "key_index", "lag", "normalized_autocorrelation"], rows)

    fig, axes = plt.subplots(5, 1, figsize=(7, 10), sharex=True)
    by_cipher = {}
    for r in records:
        by_cipher.setdefault(r.cipher, []).append(r)
    for ax, (cipher, recs) in zip(axes, by_cipher.items()):
        for r in recs:
            ax.plot(np.arange(len(r.trace)), r.trace, lw=0.8)
        ax.set_ylabel(cipher)
        ax.set_ylim(-1.05, 1.05)
        ax.grid(alpha=0.3)
    axes[-1].set_xlabel("lag (samples)")
    fig.suptitle("ciphertext autocorrelation, 3 keys per cipher")
    fig_path = out / "autocorr.png"
    fig.savefig(fig_path, **_FIG_KW, **_PNG_META)
    plt.close(fig)

    summary_path = out / "autocorr_summary.csv"
    _write_csv(
        summary_path,
        ["cipher", "key_index", "off_peak_max"],
        [(r.cipher, r.key_index, r.off_peak_max) for r in records],
    )
    return [csv_path, fig_path, summary_path]


def _run_spectrum(spec: ExperimentSpec, out: Path) -> list:
    records = run_spectrum_report(spec)
    csv_path = out / "spectrum.csv"
    rows = []
    n = spec.modem.samples_per_symbol
    freqs = np.arange(n // 2 + 1) * spec.modem.sample_rate_hz / n
    for r in records:
        for f, p in zip(freqs, r.psd):
            rows.append((r.cipher, f, p))
    _write_csv(csv_path, ["cipher", "freq_hz", "power"], rows)
    summary_path = out / "spectrum_summary.csv"
    _write_csv(
        summary_path,
        ["cipher", "out_of_band_fraction", "mean_masked_magnitude"],
        [(r.cipher, r.out_of_band_fraction, r.mean_masked_magnitude) for r in records],
    )
    fig, ax = plt.subplots(figsize=(7, 4))
    for r in records:
        ax.semilogy(freqs / 1e3, np.maximum(r.psd, r.psd.max() * 1e-12), label=r.cipher, lw=0.9)
    ax.set_xlabel("frequency (kHz)")
    ax.set_ylabel("power")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig_path = out / "spectrum.png"
    fig.savefig(fig_path, **_FIG_KW, **_PNG_META)
    plt.close(fig)
    return [csv_path, summary_path, fig_path]


def _run_sync(spec: ExperimentSpec, out: Path) -> list:
    records = run_sync_trial(spec, capture_dir=out)
    csv_path = out / "sync.csv"
    _write_csv(
        csv_path,
        ["injected_samples", "inferred_samples", "error_samples", "status", "wrong_seed"],
        [
            (r.injected_samples, r.inferred_samples, r.error_samples, r.status, int(r.wrong_seed))
            for r in records
        ],
    )
    fig, ax = plt.subplots(figsize=(6, 4))
    ok = [r for r in records if r.status == "ok" and not r.wrong_seed]
    ax.plot([r.injected_samples for r in ok], [r.inferred_samples for r in ok], "o")
    lim = max([r.injected_samples for r in records], default=1) or 1
    ax.plot([0, lim], [0, lim], "k--", lw=0.8)
    ax.set_xlabel("injected delay (samples)")
    ax.set_ylabel("inferred delay (samples)")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig_path = out / "sync.png"
    fig.savefig(fig_path, **_FIG_KW, **_PNG_META)
    plt.close(fig)
    captures = sorted(out.glob("capture_*.vpsc"))
    if any(r.status == "sync-failure" and not r.wrong_seed for r in records):
        raise SyncFailure("one or more ground-truth sync trials failed")
    return [csv_path, fig_path, *captures]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vpsc-bench", description="spectral cipher benchmark experiments"
    )
    parser.add_argument("--spec", type=Path, help="YAML experiment spec")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument(
        "--experiment", choices=["ber", "ber-delay", "autocorr", "spectrum", "sync"]
    )
    parser.add_argument("--cipher", choices=["none", "vpsc", "fcs", "alm", "rsa"])
    parser.add_argument(
        "--mode",
        choices=["plain", "preemptive_rise", "statistical_floor", "combined"],
    )
    parser.add_argument("--snr-db", help="comma-separated SNR sweep in dB")
    parser.add_argument("--symbols", type=int, help="symbols per sweep point")
    args = parser.parse_args(argv)

    try:
        config = {}
        if args.spec:
            config = yaml.safe_load(args.spec.read_text()) or {}
        for key, value in (
            ("out", args.out),
            ("seed", args.seed),
            ("experiment", args.experiment),
            ("cipher", args.cipher),
            ("mode", args.mode),
            ("snr_db", args.snr_db),
            ("symbols", args.symbols),
        ):
            if value is not None:
                config[key] = value
        spec = build_spec(config)
        spec.validate()
        out = Path(spec.out_dir)
        out.mkdir(parents=True, exist_ok=True)

        runner = {
            "ber": _run_ber,
            "ber-delay": _run_ber,
            "autocorr": _run_autocorr,
            "spectrum": _run_spectrum,
            "sync": _run_sync,
        }[spec.experiment]
        outputs = runner(spec, out)

        manifest = _manifest(spec, [Path(p).name for p in outputs])
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
        print(f"wrote {len(outputs) + 1} files to {out}")
        return 0
    except SyncFailure as exc:
        json.dump({"error": {"type": "sync-failure", "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 3
    except (ConfigError, VpscError, TypeError, ValueError, OSError) as exc:
        json.dump({"error": {"type": type(exc).__name__, "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
