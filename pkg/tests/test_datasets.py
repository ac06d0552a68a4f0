import numpy as np
import pytest

from cryodrum import calibration, datasets, tomography
from cryodrum.dynamics import Spectrum
from cryodrum.errors import SchemaMismatch


def test_spectrum_roundtrip_lossless(tmp_path):
    rng = np.random.default_rng(0)
    freq = np.sort(rng.uniform(-1e6, 1e6, 64))
    spec = Spectrum(freq=freq, values=rng.standard_normal(64) * 1e-7,
                    rbw=1.0, floor=0.5, label="blue")
    path = tmp_path / "spec.csv"
    datasets.write_spectrum(path, spec)
    again = datasets.load_dataset(path, "spectrum")
    assert np.array_equal(again.freq, spec.freq)
    assert np.array_equal(again.values, spec.values)
    assert again.rbw == spec.rbw
    assert again.floor == spec.floor
    assert again.label == "blue"


def test_spectrum_missing_rbw(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# label=x\nfreq_hz,value\n0.0,1.0\n1.0,2.0\n")
    with pytest.raises(SchemaMismatch):
        datasets.read_spectrum(path)


def test_spectrum_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# rbw_hz=0.0\nfrequency,psd\n0.0,1.0\n")
    with pytest.raises(SchemaMismatch):
        datasets.read_spectrum(path)


def test_quadratures_roundtrip(tmp_path):
    batch = tomography.sample_quadratures(
        tomography.GaussianMechState.thermal(0.4), 1.13, 0.8, 200, seed=5)
    path = tmp_path / "batch.csv"
    datasets.write_quadratures(path, batch)
    again = datasets.load_dataset(path, "quadratures")
    assert np.array_equal(again.samples, batch.samples)
    assert again.g_opt == batch.g_opt
    assert again.n_add_opt == batch.n_add_opt
    assert again.seed == 5


def test_quadratures_missing_sidecar(tmp_path):
    path = tmp_path / "orphan.csv"
    path.write_text("I_uV,Q_uV\n0.1,0.2\n")
    with pytest.raises(SchemaMismatch):
        datasets.read_quadratures(path)


def test_sweep_roundtrip(tmp_path, params):
    rows = calibration.synthesize_g0_sweep(params, 13.4,
                                           np.linspace(0.05, 0.4, 5))
    path = tmp_path / "sweep.csv"
    datasets.write_sweep(path, rows)
    again = datasets.load_dataset(path, "sweep")
    assert len(again) == 5
    for a, b in zip(again, rows):
        assert a.calibrated_ratio == pytest.approx(b.calibrated_ratio,
                                                   rel=1e-15)


def test_peaks_table(tmp_path):
    path = tmp_path / "peaks.csv"
    path.write_text("N_p,N_b,N_c,r_gamma,N_floor\n"
                    "0.021,0.273,0.0105,1.0,0.25\n")
    rows = datasets.load_dataset(path, "peaks")
    assert rows[0].N_p == 0.021
    assert rows[0].N_floor == 0.25
    path2 = tmp_path / "peaks2.csv"
    path2.write_text("N_p,N_b,N_c,r_gamma\n0.021,0.273,0.0105,1.0\n")
    rows2 = datasets.load_dataset(path2, "peaks")
    assert rows2[0].N_floor is None


def test_rates_table(tmp_path):
    path = tmp_path / "rates.csv"
    path.write_text("rate,value_hz,error_hz\ngamma_sq,17.7,0.7\n"
                    "gamma_asq,16.5,0.6\n")
    rates = datasets.load_dataset(path, "rates")
    assert rates["gamma_sq"] == (17.7, 0.7)


def test_unknown_kind(tmp_path):
    with pytest.raises(SchemaMismatch):
        datasets.load_dataset(tmp_path / "x.csv", "telemetry")
