"""Run-to-failure vibration data: loaders, spectra, synthetic generation.

Supported on-disk formats
-------------------------
PRONOSTIA-style directory
    One ``acc_XXXXX.csv`` file per vibration snapshot, rows of
    ``hour,minute,second,microsecond,horizontal_accel,vertical_accel``
    (comma- or semicolon-delimited). Only the horizontal channel is kept.
    Every file must contain exactly the configured number of rows
    (2560 by default).

Generic directory
    ``manifest.json`` with ``bearing_id``, ``sample_rate_hz``,
    ``end_of_life_index`` and an ordered ``windows`` list of CSV file names;
    each CSV holds one column of raw samples. Synthetic records can be
    exported to this layout.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, DimensionError

DEFAULT_WINDOW_LEN = 2560
DEFAULT_SAMPLE_RATE = 25600.0

STD_FLOOR = 1e-12


@dataclass
class SignalWindow:
    """One raw vibration snapshot within a run-to-failure record."""

    index: int
    samples: np.ndarray
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE


@dataclass
class RunRecord:
    """An ordered run-to-failure sequence of vibration windows."""

    bearing_id: str
    windows: list[SignalWindow]
    end_of_life_index: int

    def __post_init__(self):
        if not self.windows:
            raise DataError(f"record {self.bearing_id!r} has no windows")
        indices = [w.index for w in self.windows]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise DataError(f"record {self.bearing_id!r} has non-increasing window indices")
        if self.end_of_life_index > indices[-1]:
            raise DataError(
                f"record {self.bearing_id!r}: end_of_life_index {self.end_of_life_index} "
                f"exceeds last window index {indices[-1]}"
            )

    def __len__(self):
        return len(self.windows)

    def sample_matrix(self) -> np.ndarray:
        return np.stack([w.samples for w in self.windows])

    def rms_series(self) -> np.ndarray:
        """Root-mean-square of each raw window (classic amplitude indicator)."""
        x = self.sample_matrix()
        return np.sqrt(np.mean(x * x, axis=1))


# -- PRONOSTIA-format loading --------------------------------------------


def _acc_file_order(paths):
    def key(path: Path):
        stem = path.stem  # acc_00001
        try:
            return int(stem.split("_")[-1])
        except ValueError as exc:
            raise DataError(f"{path.name}: cannot parse file number") from exc
    return sorted(paths, key=key)


def _parse_acc_file(path: Path, window_len: int) -> np.ndarray:
    text = path.read_text(encoding="utf-8")
    delimiter = ";" if ";" in text.splitlines()[0] else ","
    values = []
    for row_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split(delimiter)
        if len(fields) < 6:
            raise DataError(f"{path.name}: row {row_no} has {len(fields)} fields, expected 6")
        try:
            values.append(float(fields[4]))  # horizontal acceleration
        except ValueError as exc:
            raise DataError(f"{path.name}: row {row_no}: {exc}") from exc
    if len(values) != window_len:
        raise DataError(f"{path.name}: found {len(values)} rows, expected {window_len}")
    return np.asarray(values)


def load_pronostia(dir_path, window_len: int = DEFAULT_WINDOW_LEN,
                   sample_rate_hz: float = DEFAULT_SAMPLE_RATE,
                   bearing_id: str | None = None) -> RunRecord:
    """Load a PRONOSTIA-style directory of acc_*.csv snapshot files.

    Windows are ordered by file number regardless of directory listing order.
    """
    dir_path = Path(dir_path)
    if not dir_path.is_dir():
        raise DataError(f"not a directory: {dir_path}")
    files = _acc_file_order(dir_path.glob("acc_*.csv"))
    if not files:
        raise DataError(f"no acc_*.csv files found in {dir_path}")
    windows = [
        SignalWindow(index=i, samples=_parse_acc_file(path, window_len),
                     sample_rate_hz=sample_rate_hz)
        for i, path in enumerate(files, start=1)
    ]
    return RunRecord(
        bearing_id=bearing_id or dir_path.name,
        windows=windows,
        end_of_life_index=len(windows),
    )


# -- generic format -------------------------------------------------------


def save_generic(record: RunRecord, dir_path):
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    manifest = {
        "bearing_id": record.bearing_id,
        "sample_rate_hz": record.windows[0].sample_rate_hz,
        "end_of_life_index": record.end_of_life_index,
        "windows": [],
    }
    for w in record.windows:
        name = f"window_{w.index:05d}.csv"
        np.savetxt(dir_path / name, w.samples, fmt="%.17g")
        manifest["windows"].append({"index": w.index, "file": name})
    (dir_path / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )


def load_generic(dir_path) -> RunRecord:
    dir_path = Path(dir_path)
    manifest_path = dir_path / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"no manifest.json in {dir_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    windows = []
    for entry in sorted(manifest["windows"], key=lambda e: e["index"]):
        path = dir_path / entry["file"]
        if not path.exists():
            raise DataError(f"missing window file {path.name} listed in manifest")
        samples = np.loadtxt(path)
        windows.append(SignalWindow(index=int(entry["index"]), samples=np.atleast_1d(samples),
                                    sample_rate_hz=float(manifest["sample_rate_hz"])))
    return RunRecord(
        bearing_id=manifest["bearing_id"],
        windows=windows,
        end_of_life_index=int(manifest["end_of_life_index"]),
    )


# -- frequency-domain conversion ------------------------------------------


@dataclass
class SpectrumSample:
    """One-sided magnitude spectrum of a raw window (half its length)."""

    index: int
    bins: np.ndarray


def to_spectrum(window: SignalWindow) -> SpectrumSample:
    """Magnitude of the one-sided DFT: m samples -> m/2 non-negative bins.

    Bins 1..m/2-1 are scaled by 2/m so a pure sinusoid of amplitude A shows up
    as a bin of height A; the DC bin is scaled by 1/m. The Nyquist bin is
    dropped to keep the length at exactly half the window.
    """
    m = window.samples.shape[0]
    if m % 2 != 0:
        raise ConfigError(f"window length must be even for spectrum conversion, got {m}")
    spectrum = np.abs(np.fft.rfft(window.samples))[: m // 2]
    spectrum *= 2.0 / m
    spectrum[0] /= 2.0
    return SpectrumSample(index=window.index, bins=spectrum)


def spectrum_matrix(record: RunRecord) -> np.ndarray:
    """Stack the spectra of all windows into an (n_windows, m/2) matrix."""
    return np.stack([to_spectrum(w).bins for w in record.windows])


# -- dataset standardization ------------------------------------------------


@dataclass
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, spectra: np.ndarray) -> np.ndarray:
        spectra = np.asarray(spectra, dtype=np.float64)
        if spectra.shape[-1] != self.mean.shape[0]:
            raise DimensionError(
                f"bin axis mismatch: spectra have {spectra.shape[-1]} bins, "
                f"stats were fit on {self.mean.shape[0]}"
            )
        return (spectra - self.mean) / self.std

    def save(self, path):
        np.savez(path, mean=self.mean, std=self.std)

    @staticmethod
    def load(path) -> "StandardizationStats":
        with np.load(path) as arrays:
            return StandardizationStats(mean=arrays["mean"], std=arrays["std"])


def standardize(train_spectra: np.ndarray) -> tuple[np.ndarray, StandardizationStats]:
    """Per-bin z-score fit on the training set; reapply the stats verbatim to
    any test bearing. Applying the transform twice is *not* the identity.
    """
    train_spectra = np.asarray(train_spectra, dtype=np.float64)
    if train_spectra.ndim != 2 or train_spectra.shape[0] == 0:
        raise DataError("standardize needs a non-empty (n_samples, n_bins) matrix")
    mean = train_spectra.mean(axis=0)
    std = train_spectra.std(axis=0)
    degenerate = std < STD_FLOOR
    if degenerate.any():
        warnings.warn(
            f"{int(degenerate.sum())} spectral bins have (near-)zero variance; "
            f"their scale is clamped to {STD_FLOOR}",
            stacklevel=2,
        )
        std = np.where(degenerate, STD_FLOOR, std)
    stats = StandardizationStats(mean=mean, std=std)
    return stats.apply(train_spectra), stats


# -- synthetic run-to-failure generation ------------------------------------


@dataclass
class SynthConfig:
    """Synthetic degradation run: broadband noise, then periodic impulses whose
    amplitude grows exponentially after fault onset."""

    n_windows: int = 200
    window_len: int = DEFAULT_WINDOW_LEN
    noise_std: float = 0.05
    fault_onset_fraction: float = 0.25
    growth_rate: float = 0.015
    impulse_frequency_hz: float = 160.0
    seed: int = 0
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE
    bearing_id: str = "synthetic"
    impulse_amplitude: float = field(default=0.5, repr=False)

    def __post_init__(self):
        if self.n_windows < 50:
            raise ConfigError(f"n_windows must be >= 50, got {self.n_windows}")
        if not (0.0 < self.fault_onset_fraction < 1.0):
            raise ConfigError(
                f"fault_onset_fraction must lie in (0, 1), got {self.fault_onset_fraction}"
            )

    @property
    def onset_index(self) -> int:
        return int(self.fault_onset_fraction * self.n_windows)


def _impulse_train(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """One window of repeated resonance ring-downs with a random phase offset."""
    period = int(round(cfg.sample_rate_hz / cfg.impulse_frequency_hz))
    t = np.arange(cfg.window_len)
    resonance_hz = cfg.sample_rate_hz / 8.0
    decay = period / 6.0
    offset = int(rng.integers(0, period))
    phase = (t + offset) % period
    ring = np.exp(-phase / decay) * np.sin(2 * np.pi * resonance_hz * phase / cfg.sample_rate_hz)
    return ring


def synth_generate(cfg: SynthConfig) -> RunRecord:
    """Deterministic (seeded) synthetic run-to-failure record.

    Windows before fault onset contain only broadband noise; afterwards an
    impulse train is added with amplitude exp(growth_rate * steps_since_onset)
    times the base impulse amplitude.
    """
    rng = np.random.default_rng(cfg.seed)
    windows = []
    for k in range(1, cfg.n_windows + 1):
        samples = cfg.noise_std * rng.standard_normal(cfg.window_len)
        if k > cfg.onset_index:
            amplitude = cfg.impulse_amplitude * np.exp(cfg.growth_rate * (k - cfg.onset_index))
            samples = samples + amplitude * _impulse_train(cfg, rng)
        windows.append(SignalWindow(index=k, samples=samples, sample_rate_hz=cfg.sample_rate_hz))
    return RunRecord(bearing_id=cfg.bearing_id, windows=windows,
                     end_of_life_index=cfg.n_windows)
