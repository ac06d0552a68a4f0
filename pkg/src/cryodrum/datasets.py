"""CSV/JSON dataset formats shared by the CLI and analysis pipelines.

All datasets are plain CSV with a documented header plus, where needed,
metadata: spectra carry `# key=value` comment lines (label, rbw_hz, floor),
quadrature batches a JSON sidecar `<name>.json` (seed, g_opt, n_add_opt,
state metadata).  Floats are written with shortest-roundtrip repr, so a
write/read cycle is lossless.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .calibration import G0SweepPoint, ScaledPeaks
from .dynamics import Spectrum
from .errors import SchemaMismatch
from .tomography import QuadratureBatch

SPECTRUM_HEADER = ["freq_hz", "value"]
QUADRATURE_HEADER = ["I_uV", "Q_uV"]
SWEEP_HEADER = ["T_K", "P_SB_meas", "P_cal_meas", "P_MW_src", "P_cal_src"]
RATES_HEADER = ["rate", "value_hz", "error_hz"]
PEAKS_HEADER = ["N_p", "N_b", "N_c", "r_gamma"]
TRAJECTORY_HEADER = ["t_s", "Xsq2", "Xasq2", "n"]


def _require_header(row, expected, path, optional_tail=()):
    if row is None or row[:len(expected)] != expected:
        raise SchemaMismatch(
            f"{path}: expected header {expected} (got {row})")
    extras = row[len(expected):]
    for col in extras:
        if col not in optional_tail:
            raise SchemaMismatch(f"{path}: unexpected column {col!r}")
    return extras


def write_spectrum(path, spec: Spectrum):
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# label={spec.label}\n")
        fh.write(f"# rbw_hz={spec.rbw!r}\n")
        fh.write(f"# floor={spec.floor!r}\n")
        writer = csv.writer(fh)
        writer.writerow(SPECTRUM_HEADER)
        for f, v in zip(spec.freq, spec.values):
            writer.writerow([repr(float(f)), repr(float(v))])


def read_spectrum(path) -> Spectrum:
    path = Path(path)
    meta = {}
    rows = []
    with path.open() as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
                continue
            cells = next(csv.reader([line]))
            if header is None:
                header = cells
                _require_header(header, SPECTRUM_HEADER, path)
                continue
            rows.append([float(c) for c in cells])
    if header is None or not rows:
        raise SchemaMismatch(f"{path}: no spectrum rows")
    if "rbw_hz" not in meta:
        raise SchemaMismatch(f"{path}: missing rbw_hz metadata line")
    data = np.asarray(rows)
    return Spectrum(freq=data[:, 0], values=data[:, 1],
                    rbw=float(meta["rbw_hz"]),
                    floor=float(meta.get("floor", 0.0)),
                    label=meta.get("label", ""))


def write_quadratures(path, batch: QuadratureBatch):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(QUADRATURE_HEADER)
        for i, q in batch.samples:
            writer.writerow([repr(float(i)), repr(float(q))])
    sidecar = {
        "seed": batch.seed,
        "g_opt_uv2_per_quanta": batch.g_opt,
        "n_add_opt": batch.n_add_opt,
        "count": batch.count,
        "state": batch.state_meta,
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, indent=2) + "\n")


def read_quadratures(path) -> QuadratureBatch:
    path = Path(path)
    sidecar_path = path.with_suffix(path.suffix + ".json")
    if not sidecar_path.exists():
        raise SchemaMismatch(f"{path}: missing JSON sidecar {sidecar_path}")
    sidecar = json.loads(sidecar_path.read_text())
    with path.open() as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _require_header(header, QUADRATURE_HEADER, path)
        samples = [[float(c) for c in row] for row in reader if row]
    if not samples:
        raise SchemaMismatch(f"{path}: no quadrature rows")
    try:
        return QuadratureBatch(samples=np.asarray(samples),
                               g_opt=float(sidecar["g_opt_uv2_per_quanta"]),
                               n_add_opt=float(sidecar["n_add_opt"]),
                               seed=sidecar.get("seed"),
                               state_meta=sidecar.get("state", {}))
    except KeyError as exc:
        raise SchemaMismatch(f"{sidecar_path}: missing key {exc}") from exc


def write_sweep(path, points):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_HEADER)
        for p in points:
            writer.writerow([repr(float(x)) for x in (
                p.temperature, p.p_sb_meas, p.p_cal_meas, p.p_mw_src,
                p.p_cal_src)])


def read_sweep(path) -> list:
    path = Path(path)
    with path.open() as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _require_header(header, SWEEP_HEADER, path)
        points = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise SchemaMismatch(f"{path}:{lineno}: expected 5 columns")
            points.append(G0SweepPoint(*[float(c) for c in row]))
    if not points:
        raise SchemaMismatch(f"{path}: no sweep rows")
    return points


def read_rates(path) -> dict:
    """Named rates table: rate,value_hz,error_hz -> {name: (value, error)}."""
    path = Path(path)
    with path.open() as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _require_header(header, RATES_HEADER, path)
        rates = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise SchemaMismatch(f"{path}:{lineno}: expected 3 columns")
            rates[row[0]] = (float(row[1]), float(row[2]))
    return rates


def read_peaks(path) -> list:
    """Scaled-peak rows for the asymmetry solver (optional N_floor column)."""
    path = Path(path)
    with path.open() as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        extras = _require_header(header, PEAKS_HEADER, path,
                                 optional_tail=("N_floor",))
        has_floor = "N_floor" in extras
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            expected = len(PEAKS_HEADER) + (1 if has_floor else 0)
            if len(row) != expected:
                raise SchemaMismatch(
                    f"{path}:{lineno}: expected {expected} columns")
            values = [float(c) for c in row]
            rows.append(ScaledPeaks(
                N_p=values[0], N_b=values[1], N_c=values[2],
                r_gamma=values[3],
                N_floor=values[4] if has_floor else None))
    if not rows:
        raise SchemaMismatch(f"{path}: no peak rows")
    return rows


def write_trajectory(path, times, v_sq, v_asq, n):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_HEADER)
        for row in zip(times, v_sq, v_asq, n):
            writer.writerow([repr(float(x)) for x in row])


def load_dataset(path, kind: str):
    """Typed dataset loader: kind in {spectrum, quadratures, sweep, rates,
    peaks}."""
    loaders = {"spectrum": read_spectrum, "quadratures": read_quadratures,
               "sweep": read_sweep, "rates": read_rates, "peaks": read_peaks}
    if kind not in loaders:
        raise SchemaMismatch(f"unknown dataset kind {kind!r}; "
                             f"expected one of {sorted(loaders)}")
    return loaders[kind](path)
