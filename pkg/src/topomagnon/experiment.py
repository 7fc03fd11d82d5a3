"""Scenario configs, built-in presets, and the files a run leaves behind.

A scenario is a nested mapping (YAML on disk) validated against ``SCHEMA``
before anything is computed.  Three kinds exist:

``dynamics``  evolve one excitation and write trajectory, summary, heatmap and
              optionally shot-sampled readout;
``spectrum``  in-gap mode count and mid-gap splitting of one chain;
``rwa``       full time-dependent check of the drive-engineered coupling.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from numbers import Real
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import yaml

from . import drive, dynamics, lattice, readout, topology
from .errors import ConfigurationError, GapClosureError, OutputError

FLOAT_FORMAT = "%.9g"

_NUM = "number"
_INT = "integer"
_NUMS = "number list"
_ANY_LIST = "list"

# leaf types; nested dicts are sections
SCHEMA: dict = {
    "preset": str,
    "scenario": str,
    "kind": ("dynamics", "spectrum", "rwa"),
    "note": str,
    "seed": _INT,
    "initial_site": _INT,
    "chain": {
        "n_qubits": _INT,
        "bonds": _NUMS,
        "phases": _NUMS,
        "dimer": _NUMS,
        "drives": {"g": _NUMS, "tolerance_mhz": _NUM, "qubits": _ANY_LIST},
    },
    "evolution": {"t_max": _NUM, "dt": _NUM},
    "noise": {"enabled": bool, "t1_us": _NUMS, "t2_star_us": _NUMS},
    "readout": {"shots": _INT, "error": _NUM, "calibration": str},
    "output": {"directory": str, "heatmap": bool},
    "rwa": {"g": _NUM, "alpha": _NUM, "mu": _NUMS},
}

DEFAULTS: dict = {
    "scenario": "custom",
    "kind": "dynamics",
    "seed": 0,
    "initial_site": 1,
    "chain": {},
    "evolution": {"t_max": 1.0, "dt": dynamics.DEFAULT_SAMPLE_DT},
    "noise": {"enabled": False},
    "readout": {"shots": 0, "error": readout.DEFAULT_READOUT_ERROR},
    "output": {"heatmap": True},
    "rwa": {"g": 17.5, "alpha": 0.589, "mu": [350.0, 700.0, 1400.0]},
}


def _is_num(v) -> bool:
    return isinstance(v, Real) and not isinstance(v, bool)


def _check_leaf(path, spec, value):
    if spec is _NUM:
        ok = _is_num(value) and np.isfinite(value)
    elif spec is _INT:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif spec is _NUMS:
        ok = isinstance(value, (list, tuple)) and all(_is_num(v) and np.isfinite(v) for v in value)
    elif spec is _ANY_LIST:
        ok = isinstance(value, (list, tuple))
    elif isinstance(spec, tuple):
        ok = value in spec
        spec = "one of " + ", ".join(spec)
    else:
        ok = isinstance(value, spec)
        spec = spec.__name__
    if not ok:
        raise ConfigurationError(f"{path}: expected {spec}, got {value!r}")


def validate(data: dict, schema: dict = SCHEMA, prefix: str = "") -> None:
    """Raise ConfigurationError on unknown keys or mistyped values."""
    if not isinstance(data, dict):
        raise ConfigurationError(f"{prefix or 'config'}: expected a mapping, got {type(data).__name__}")
    for key, value in data.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise ConfigurationError(
                f"unknown key {path!r}; allowed here: {', '.join(sorted(schema))}")
        spec = schema[key]
        if isinstance(spec, dict):
            validate(value, spec, path + ".")
        elif value is not None:
            _check_leaf(path, spec, value)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _schema_at(path: str):
    spec: Any = SCHEMA
    for part in path.split("."):
        if not isinstance(spec, dict) or part not in spec:
            raise ConfigurationError(f"{path!r} does not name a config field")
        spec = spec[part]
    return spec


def set_path(data: dict, path: str, value) -> dict:
    """Copy of ``data`` with the dotted ``path`` set to ``value``."""
    _schema_at(path)
    out = copy.deepcopy(data)
    node = out
    parts = path.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value
    return out


def _load_presets() -> dict:
    text = resources.files("topomagnon").joinpath("data/scenarios.yaml").read_text()
    return yaml.safe_load(text)


PRESETS: dict = _load_presets()


def preset_names() -> list[str]:
    return sorted(PRESETS)


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario; ``data`` holds the full nested mapping with defaults applied."""

    data: dict = field(repr=False)

    def __post_init__(self):
        validate(self.data)
        self._check_semantics()

    # construction -------------------------------------------------------

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        if raw is None:
            raw = {}
        validate(raw)
        base = DEFAULTS
        name = raw.get("preset")
        if name is not None:
            if name not in PRESETS:
                raise ConfigurationError(
                    f"unknown preset {name!r}; choose from {', '.join(preset_names())}")
            base = _merge(DEFAULTS, {"scenario": name, **PRESETS[name]})
        data = _merge(base, {k: v for k, v in raw.items() if k != "preset"})
        return cls(data)

    @classmethod
    def preset(cls, name: str, **overrides) -> "ScenarioConfig":
        return cls.from_dict({"preset": name, **overrides})

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"{path} is not valid YAML: {exc}") from None
        return cls.from_dict(raw or {})

    def replace(self, path: str, value) -> "ScenarioConfig":
        return ScenarioConfig(set_path(self.data, path, value))

    def with_overrides(self, overrides: dict) -> "ScenarioConfig":
        validate(overrides)
        return ScenarioConfig(_merge(self.data, overrides))

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=True)

    # accessors ----------------------------------------------------------

    def get(self, path: str, default=None):
        node: Any = self.data
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    @property
    def name(self) -> str:
        return self.data["scenario"]

    @property
    def kind(self) -> str:
        return self.data["kind"]

    @property
    def seed(self) -> int:
        return self.data["seed"]

    @property
    def t_max(self) -> float:
        return float(self.data["evolution"]["t_max"])

    @property
    def dt(self) -> float:
        return float(self.data["evolution"]["dt"])

    @property
    def shots(self) -> int:
        return int(self.data["readout"]["shots"])

    @property
    def noise_enabled(self) -> bool:
        return bool(self.data["noise"].get("enabled", False))

    @property
    def output_directory(self) -> Optional[str]:
        return self.data["output"].get("directory")

    def _check_semantics(self):
        chain = self.data.get("chain", {})
        sources = [k for k in ("bonds", "dimer", "drives") if chain.get(k) is not None]
        if self.kind in ("dynamics", "spectrum"):
            if len(sources) != 1:
                raise ConfigurationError(
                    "chain needs exactly one of 'bonds' (MHz list), 'dimer' ([J1, J2] with n_qubits) "
                    f"or 'drives'; got {sources or 'none'}")
            if chain.get("dimer") is not None:
                if len(chain["dimer"]) != 2 or chain.get("n_qubits") is None:
                    raise ConfigurationError("chain.dimer must be [J1, J2] together with chain.n_qubits")
        if self.data["evolution"]["t_max"] <= 0 or self.data["evolution"]["dt"] <= 0:
            raise ConfigurationError("evolution.t_max and evolution.dt must be positive")
        if self.data["evolution"]["dt"] > self.data["evolution"]["t_max"]:
            raise ConfigurationError("evolution.dt exceeds evolution.t_max")
        if self.shots < 0:
            raise ConfigurationError(f"readout.shots must be >= 0, got {self.shots}")
        if self.seed < 0:
            raise ConfigurationError(f"seed must be >= 0, got {self.seed}")
        if self.kind == "rwa" and not self.data["rwa"].get("mu"):
            raise ConfigurationError("rwa.mu needs at least one modulation frequency")

    # physics ------------------------------------------------------------

    def bonds(self) -> lattice.BondPattern:
        chain = self.data["chain"]
        n = chain.get("n_qubits")
        if chain.get("bonds") is not None:
            pattern = lattice.BondPattern(tuple(chain["bonds"]), _opt_tuple(chain.get("phases")))
        elif chain.get("dimer") is not None:
            j1, j2 = chain["dimer"]
            if n < 2:
                raise ConfigurationError(f"chain.n_qubits must be >= 2, got {n}")
            pattern = lattice.BondPattern.dimerized(j1, j2, n)
        else:
            pattern = _bonds_from_drive_section(chain["drives"])
        if n is not None and pattern.n_qubits != n:
            raise ConfigurationError(
                f"chain.n_qubits = {n} but the bond list implies {pattern.n_qubits} qubits")
        return pattern

    def noise_model(self, n_qubits: int) -> dynamics.NoiseModel:
        sec = self.data["noise"]
        if not sec.get("enabled"):
            return dynamics.NoiseModel.ideal(n_qubits)
        t1, t2 = sec.get("t1_us"), sec.get("t2_star_us")
        if t1 is None and t2 is None:
            hw = drive.load_hardware_preset()
            if n_qubits > len(hw.qubits):
                raise ConfigurationError(
                    f"the bundled coherence table covers {len(hw.qubits)} qubits; give noise.t1_us "
                    f"and noise.t2_star_us for a {n_qubits}-qubit chain")
            return hw.noise_model(n_qubits)
        if t1 is None or t2 is None:
            raise ConfigurationError("give both noise.t1_us and noise.t2_star_us, or neither")
        if len(t1) == 1 and len(t2) == 1:
            t1, t2 = t1 * n_qubits, t2 * n_qubits
        return dynamics.NoiseModel(tuple(t1), tuple(t2)).first(n_qubits)

    def calibration(self, n_qubits: int) -> readout.ReadoutCalibration:
        path = self.data["readout"].get("calibration")
        if path is not None:
            return readout.load_calibration(path).first(n_qubits)
        return readout.ReadoutCalibration.uniform(n_qubits, self.data["readout"]["error"])


def _opt_tuple(v):
    return None if v is None else tuple(v)


def _bonds_from_drive_section(sec: dict) -> lattice.BondPattern:
    qubits = sec.get("qubits") or []
    specs = []
    for i, q in enumerate(qubits, start=1):
        if not isinstance(q, dict) or set(q) - {"omega_ghz", "tones"} or "omega_ghz" not in q:
            raise ConfigurationError(
                f"chain.drives.qubits[{i}] must be a mapping with omega_ghz and optional "
                "tones: [[eps_mhz, mu_mhz, phi_rad], ...]")
        tones = []
        for t in q.get("tones") or []:
            if not (isinstance(t, (list, tuple)) and len(t) in (2, 3) and all(_is_num(v) for v in t)):
                raise ConfigurationError(f"chain.drives.qubits[{i}] tone {t!r} is not [eps, mu(, phi)]")
            tones.append(drive.Tone(*t))
        specs.append(drive.DriveSpec(float(q["omega_ghz"]), tuple(tones)))
    g = sec.get("g")
    if g is None or len(specs) < 2:
        raise ConfigurationError("chain.drives needs g (one value per bond) and at least two qubits")
    tol = sec.get("tolerance_mhz", drive.RESONANCE_TOLERANCE)
    return drive.bonds_from_drives(tuple(g), specs, tol)


# ----------------------------------------------------------------------
# computation


def _analytic_winding(pattern: lattice.BondPattern) -> Optional[int]:
    pair = pattern.dimer_pair()
    if pair is None:
        return None
    try:
        return topology.winding_number(*pair).nu
    except GapClosureError:
        return None


def _gap_window(pattern: lattice.BondPattern) -> float:
    pair = pattern.dimer_pair()
    mags = np.abs(pattern.bonds)
    if pair is not None and pair[0] != pair[1]:
        return lattice.in_gap_window(*pair)
    return 0.5 * float(mags.max() - mags.min())


def _hamiltonian(pattern: lattice.BondPattern) -> np.ndarray:
    return lattice.build_hamiltonian(lattice.ChainSpec(pattern.n_qubits), pattern)


def simulate(config: ScenarioConfig) -> dynamics.Trajectory:
    """Trajectory of a dynamics scenario (no files written)."""
    pattern = config.bonds()
    n = pattern.n_qubits
    site = config.data["initial_site"]
    h = _hamiltonian(pattern)
    times = dynamics.time_grid(config.t_max, config.dt)
    if config.noise_enabled:
        return dynamics.evolve_lindblad(h, config.noise_model(n), dynamics.site_density(n, site), times)
    return dynamics.evolve_unitary(h, dynamics.site_state(n, site), times)


def spectrum_row(config: ScenarioConfig) -> dict:
    """(n_qubits, in-gap count, gap) for one chain.

    ``gap_mhz`` is the splitting of the two mid-spectrum levels for even
    chains and the magnitude of the single zero mode for odd chains.
    """
    pattern = config.bonds()
    n = pattern.n_qubits
    spec = lattice.spectrum(_hamiltonian(pattern))
    window = _gap_window(pattern)
    idx = spec.in_gap(window)
    if n % 2 == 0:
        gap = lattice.mid_gap(pattern)
    else:
        gap = float(np.min(np.abs(spec.energies)))
    return {"n_qubits": n, "in_gap_count": int(len(idx)), "gap_mhz": gap,
            "in_gap_energies_mhz": [float(e) for e in spec.energies[idx]]}


def rwa_rows(config: ScenarioConfig) -> list[dict]:
    sec = config.data["rwa"]
    g, alpha = float(sec["g"]), float(sec["alpha"])
    rows = []
    for mu in sec["mu"]:
        mu = float(mu)
        pair = (drive.DriveSpec.static(5.0), drive.DriveSpec.modulated(5.0 + mu * 1e-3, alpha * mu, mu))
        check = drive.validate_rwa(g, pair)
        rows.append({"mu_mhz": mu, "alpha": alpha, "extracted_mhz": check.extracted,
                     "predicted_mhz": check.predicted, "relative_error": check.relative_error,
                     "transfer_time_us": check.transfer_time})
    return rows


def dynamics_summary(config: ScenarioConfig, traj: dynamics.Trajectory) -> dict:
    pattern = config.bonds()
    window = _gap_window(pattern)
    spec = lattice.spectrum(_hamiltonian(pattern))
    cd_avg = dynamics.time_averaged_cd(traj)
    return {
        "scenario": config.name,
        "kind": "dynamics",
        "n_qubits": pattern.n_qubits,
        "bonds_mhz": list(pattern.bonds),
        "bond_phases_rad": None if pattern.phases is None else list(pattern.phases),
        "initial_site": config.data["initial_site"],
        "t_max_us": config.t_max,
        "dt_us": config.dt,
        "noise": config.noise_enabled,
        "seed": config.seed,
        "shots": config.shots,
        "time_averaged_cd": cd_avg,
        "winding_estimate": 2 * cd_avg,
        "analytic_winding": _analytic_winding(pattern),
        "in_gap_window_mhz": window,
        "in_gap_energies_mhz": [float(e) for e in spec.energies[spec.in_gap(window)]],
        "final_vacuum_population": float(traj.vacuum[-1]),
    }


def summarize(config: ScenarioConfig) -> dict:
    """One summary row for a scenario, without touching the filesystem."""
    if config.kind == "spectrum":
        row = spectrum_row(config)
        row.pop("in_gap_energies_mhz")
        return row
    if config.kind == "rwa":
        rows = rwa_rows(config)
        errs = [r["relative_error"] for r in rows]
        return {"max_relative_error": max(errs),
                "monotone": bool(all(b < a for a, b in zip(errs, errs[1:])))}
    traj = simulate(config)
    s = dynamics_summary(config, traj)
    return {k: s[k] for k in ("time_averaged_cd", "winding_estimate", "analytic_winding")}


# ----------------------------------------------------------------------
# output


def _prepare_dir(directory) -> Path:
    if directory is None:
        raise OutputError("no output directory; set output.directory or pass --out")
    path = Path(directory)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {path}: {exc}") from None
    if not path.is_dir() or not os.access(path, os.W_OK):
        raise OutputError(f"output directory {path} is not writable")
    return path


def write_atomic(path: Path, text: str) -> Path:
    """Write via a temp file in the same directory, then rename over ``path``."""
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(x) for x in v)
    return FLOAT_FORMAT % v


def table_text(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def trajectory_table(traj: dynamics.Trajectory) -> str:
    n = traj.n_sites
    cols = ["time_us"] + [f"p_site_{j}" for j in range(1, n + 1)] + ["p_vacuum", "cd"]
    data = np.column_stack([traj.times, traj.populations, traj.vacuum, traj.cd])
    return table_text(cols, data.tolist())


def heatmap_text(traj: dynamics.Trajectory) -> str:
    buf = io.StringIO()
    buf.write(f"# site populations: {len(traj.times)} rows (time_us "
              f"{FLOAT_FORMAT % traj.times[0]}..{FLOAT_FORMAT % traj.times[-1]}) x "
              f"{traj.n_sites} columns (site 1..{traj.n_sites})\n")
    np.savetxt(buf, traj.populations, fmt=FLOAT_FORMAT)
    return buf.getvalue()


def readout_table(traj, record: readout.ShotRecord, corrected: readout.CorrectedReadout) -> str:
    n = traj.n_sites
    cols = ["time_us"]
    for j in range(1, n + 1):
        cols += [f"counts_{j}", f"f_raw_{j}", f"p_corrected_{j}", f"clamped_{j}"]
    rows = []
    for i, t in enumerate(traj.times):
        row: list = [float(t)]
        for q in range(n):
            row += [int(record.counts[i, q]), float(corrected.raw[i, q]),
                    float(corrected.probabilities[i, q]), bool(corrected.clamped[i, q])]
        rows.append(row)
    return table_text(cols, rows)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class OutputBundle:
    directory: Path
    files: dict
    summary: dict


def run_scenario(config: ScenarioConfig, out: Optional[str | Path] = None) -> OutputBundle:
    """Run one scenario and write its files into ``out`` (or output.directory)."""
    directory = _prepare_dir(out if out is not None else config.output_directory)
    files = {}
    if config.kind == "spectrum":
        row = spectrum_row(config)
        summary = {"scenario": config.name, "kind": "spectrum", **row}
        files["spectrum"] = write_atomic(directory / "spectrum.csv", table_text(
            ["n_qubits", "in_gap_count", "gap_mhz"], [[row["n_qubits"], row["in_gap_count"], row["gap_mhz"]]]))
    elif config.kind == "rwa":
        rows = rwa_rows(config)
        cols = list(rows[0])
        files["rwa"] = write_atomic(directory / "rwa.csv", table_text(cols, [[r[c] for c in cols] for r in rows]))
        errs = [r["relative_error"] for r in rows]
        summary = {"scenario": config.name, "kind": "rwa", "checks": rows,
                   "max_relative_error": max(errs),
                   "monotone": bool(all(b < a for a, b in zip(errs, errs[1:])))}
    else:
        traj = simulate(config)
        summary = dynamics_summary(config, traj)
        files["trajectory"] = write_atomic(directory / "trajectory.csv", trajectory_table(traj))
        if config.data["output"].get("heatmap", True):
            files["heatmap"] = write_atomic(directory / "heatmap.txt", heatmap_text(traj))
        if config.shots > 0:
            cal = config.calibration(traj.n_sites)
            record = readout.sample_shots(traj.populations, config.shots, cal, config.seed)
            corrected = readout.bayes_correct(record, cal)
            summary["readout_clamped_points"] = int(corrected.clamped.sum())
            files["readout"] = write_atomic(directory / "readout.csv",
                                            readout_table(traj, record, corrected))
    files["summary"] = write_atomic(directory / "summary.json", _json(summary))
    files["config"] = write_atomic(directory / "config.yaml", config.to_yaml())
    return OutputBundle(directory, files, summary)


# ----------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepTable:
    axis: str
    columns: list
    rows: list

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        return table_text(self.columns, self.rows)


def _check_axis(axis: str, values: Sequence) -> None:
    spec = _schema_at(axis)
    if spec not in (_NUM, _INT, _NUMS):
        raise ConfigurationError(f"sweep axis {axis!r} is not numeric")
    for v in values:
        if spec is _NUMS:
            ok = isinstance(v, (list, tuple)) and all(_is_num(x) for x in v)
        else:
            ok = _is_num(v)
        if not ok:
            raise ConfigurationError(f"sweep value {v!r} is not valid for numeric axis {axis!r}")


def _sweep_row(data: dict) -> dict:
    return summarize(ScenarioConfig(data))


def run_sweep(base: ScenarioConfig, axis: str, values: Sequence, workers: int = 1,
              out: Optional[str | Path] = None) -> SweepTable:
    """One summary row per value of the dotted config field ``axis``.

    With ``workers > 1`` rows are computed in separate processes; each
    worker receives its own config copy, so row order and content do not
    depend on the worker count.
    """
    values = list(values)
    _check_axis(axis, values)
    configs = [base.replace(axis, v) for v in values]
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, [c.data for c in configs]))
    else:
        rows = [summarize(c) for c in configs]
    keys = list(rows[0]) if rows else list(summarize_columns(base.kind))
    if axis.split(".")[-1] in keys:
        # the row already reports the swept quantity (spectrum rows carry n_qubits)
        table = SweepTable(axis, keys, [[r[k] for k in keys] for r in rows])
    else:
        table = SweepTable(axis, [axis] + keys, [[v] + [r[k] for k in keys] for v, r in zip(values, rows)])
    if out is not None:
        write_atomic(_prepare_dir(out) / "sweep.csv", table.to_csv())
    return table


def summarize_columns(kind: str) -> tuple:
    return {"spectrum": ("n_qubits", "in_gap_count", "gap_mhz"),
            "rwa": ("max_relative_error", "monotone"),
            "dynamics": ("time_averaged_cd", "winding_estimate", "analytic_winding")}[kind]


__all__ = [
    "ScenarioConfig", "OutputBundle", "SweepTable", "SCHEMA", "DEFAULTS", "PRESETS",
    "preset_names", "validate", "set_path", "simulate", "summarize", "spectrum_row", "rwa_rows",
    "run_scenario", "run_sweep", "write_atomic",
]
