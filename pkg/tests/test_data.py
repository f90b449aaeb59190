"""Loaders, spectrum conversion, standardization, synthetic generation."""

import random

import numpy as np
import pytest

from dynhi import data
from dynhi.data import (
    RunRecord,
    SignalWindow,
    StandardizationStats,
    SynthConfig,
    load_generic,
    load_pronostia,
    save_generic,
    spectrum_matrix,
    standardize,
    synth_generate,
    to_spectrum,
)
from dynhi.errors import ConfigError, DataError


def _write_acc_file(path, rows, delimiter=","):
    lines = [delimiter.join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _acc_rows(values):
    return [[0, 0, 0, i, v, -v] for i, v in enumerate(values)]


def test_load_pronostia_orders_by_file_number(tmp_path):
    values = {1: 1.0, 2: 2.0, 3: 3.0}
    # create out of order on purpose
    for idx in (2, 3, 1):
        _write_acc_file(tmp_path / f"acc_{idx:05d}.csv",
                        _acc_rows([values[idx]] * 16))
    record = load_pronostia(tmp_path, window_len=16)
    assert [w.index for w in record.windows] == [1, 2, 3]
    assert [w.samples[0] for w in record.windows] == [1.0, 2.0, 3.0]
    assert record.end_of_life_index == 3


def test_load_pronostia_order_is_listing_independent():
    files = [f"acc_{i:05d}.csv" for i in range(1, 30)]
    shuffled = files.copy()
    random.Random(3).shuffle(shuffled)
    from pathlib import Path
    ordered = data._acc_file_order(Path(name) for name in shuffled)
    assert [p.name for p in ordered] == files


def test_load_pronostia_short_file_names_the_file(tmp_path):
    _write_acc_file(tmp_path / "acc_00001.csv", _acc_rows([0.0] * 15))
    with pytest.raises(DataError, match="acc_00001.csv"):
        load_pronostia(tmp_path, window_len=16)


def test_load_pronostia_empty_directory(tmp_path):
    with pytest.raises(DataError, match="no acc_"):
        load_pronostia(tmp_path)


def test_load_pronostia_delimiter_variants_parse_identically(tmp_path):
    rows = _acc_rows(np.linspace(-1, 1, 16))
    comma = tmp_path / "comma"
    semi = tmp_path / "semi"
    comma.mkdir()
    semi.mkdir()
    _write_acc_file(comma / "acc_00001.csv", rows, delimiter=",")
    _write_acc_file(semi / "acc_00001.csv", rows, delimiter=";")
    a = load_pronostia(comma, window_len=16)
    b = load_pronostia(semi, window_len=16)
    np.testing.assert_array_equal(a.windows[0].samples, b.windows[0].samples)


def test_to_spectrum_sinusoid_oracle():
    m = 2560
    t = np.arange(m)
    window = SignalWindow(index=1, samples=3.0 * np.sin(2 * np.pi * 5 * t / m))
    spec = to_spectrum(window)
    assert spec.bins.shape == (1280,)
    assert spec.bins[5] == pytest.approx(3.0, abs=1e-9)
    others = np.delete(spec.bins, 5)
    assert np.max(others) < 1e-9


def test_to_spectrum_zero_and_shape_contracts():
    zero = to_spectrum(SignalWindow(index=1, samples=np.zeros(2560)))
    np.testing.assert_array_equal(zero.bins, np.zeros(1280))
    with pytest.raises(ConfigError):
        to_spectrum(SignalWindow(index=1, samples=np.zeros(7)))
    rng = np.random.default_rng(0)
    for m in (8, 64, 402, 2560):
        out = to_spectrum(SignalWindow(index=1, samples=rng.standard_normal(m)))
        assert out.bins.shape == (m // 2,)
        assert (out.bins >= 0).all()


def test_spectrum_energy_tracks_time_domain_variance():
    rng = np.random.default_rng(1)
    variances, energies = [], []
    for _ in range(100):
        std = rng.uniform(0.1, 4.0)
        w = SignalWindow(index=1, samples=std * rng.standard_normal(512))
        variances.append(np.var(w.samples))
        energies.append(np.sum(to_spectrum(w).bins ** 2))
    corr = np.corrcoef(variances, energies)[0, 1]
    assert corr > 0.9


def test_standardize_zero_mean_unit_std_on_train():
    rng = np.random.default_rng(2)
    train = rng.standard_normal((50, 16)) * 3 + 1
    out, stats = standardize(train)
    np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.std(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(stats.apply(train), out)


def test_standardize_is_not_idempotent():
    rng = np.random.default_rng(3)
    train = rng.standard_normal((20, 4)) + 5
    out, stats = standardize(train)
    twice = stats.apply(out)
    assert not np.allclose(twice, out)


def test_standardize_constant_bin_maps_to_zero_with_warning():
    rng = np.random.default_rng(4)
    train = rng.standard_normal((30, 3))
    train[:, 1] = 2.5
    with pytest.warns(UserWarning, match="zero variance"):
        out, _ = standardize(train)
    np.testing.assert_array_equal(out[:, 1], np.zeros(30))


def test_standardization_stats_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    _, stats = standardize(rng.standard_normal((10, 8)))
    path = tmp_path / "stats.npz"
    stats.save(path)
    loaded = StandardizationStats.load(path)
    np.testing.assert_array_equal(loaded.mean, stats.mean)
    np.testing.assert_array_equal(loaded.std, stats.std)


def test_synth_same_seed_is_bit_identical():
    cfg = SynthConfig(n_windows=60, window_len=256, seed=11)
    a = synth_generate(cfg)
    b = synth_generate(cfg)
    assert np.array_equal(a.sample_matrix(), b.sample_matrix())
    assert a.end_of_life_index == 60


def test_synth_degenerate_parameters_give_constant_impulse_train():
    cfg = SynthConfig(n_windows=60, window_len=512, noise_std=0.0, growth_rate=0.0,
                      seed=1, fault_onset_fraction=0.5)
    record = synth_generate(cfg)
    rms = record.rms_series()
    onset = cfg.onset_index
    np.testing.assert_array_equal(rms[:onset], np.zeros(onset))
    post = rms[onset:]
    assert post.min() > 0
    np.testing.assert_allclose(post, post[0], rtol=0.15)  # phase jitter only


def test_synth_smoothed_rms_trends_upward_after_onset():
    cfg = SynthConfig(n_windows=120, window_len=1024, seed=7)
    record = synth_generate(cfg)
    from dynhi.nn import moving_average_same

    smoothed = moving_average_same(record.rms_series(), 11)
    post = smoothed[cfg.onset_index + 5 :]
    diffs = np.diff(post)
    assert (diffs >= 0).mean() > 0.9
    assert post[-1] > post[0]


def test_generic_format_round_trip(tmp_path):
    record = synth_generate(SynthConfig(n_windows=50, window_len=128, seed=3))
    save_generic(record, tmp_path / "bearing")
    loaded = load_generic(tmp_path / "bearing")
    assert loaded.bearing_id == record.bearing_id
    assert loaded.end_of_life_index == record.end_of_life_index
    np.testing.assert_allclose(loaded.sample_matrix(), record.sample_matrix(), rtol=1e-15)


def test_generic_format_missing_window_file(tmp_path):
    record = synth_generate(SynthConfig(n_windows=50, window_len=64, seed=4))
    save_generic(record, tmp_path / "bearing")
    (tmp_path / "bearing" / "window_00007.csv").unlink()
    with pytest.raises(DataError, match="window_00007"):
        load_generic(tmp_path / "bearing")


def test_run_record_invariants():
    w = [SignalWindow(index=1, samples=np.zeros(4))]
    with pytest.raises(DataError):
        RunRecord(bearing_id="b", windows=[], end_of_life_index=0)
    with pytest.raises(DataError, match="end_of_life"):
        RunRecord(bearing_id="b", windows=w, end_of_life_index=5)


def test_spectrum_matrix_shape():
    record = synth_generate(SynthConfig(n_windows=50, window_len=256, seed=9))
    mat = spectrum_matrix(record)
    assert mat.shape == (50, 128)
