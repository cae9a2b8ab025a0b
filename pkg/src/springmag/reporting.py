"""Plain-text result tables: comma-separated rows under a `#` header block.

Every file starts with a header carrying the tool name, a timestamp (the
only line excluded from byte-for-byte determinism), the effective config
echo, column names, and units.  Snapshots store spin components with 17
significant digits so a save/load/save cycle is byte-identical and the
restored state reproduces the stored residual exactly.
"""

from __future__ import annotations

import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .model import AppliedField, ChainState
from .sweep import SweepRecord

FLOAT_FMT = "%.10g"
EXACT_FMT = "%.17g"


def _header(kind: str, config_text: str, columns: list[str], units: list[str],
            extra: list[str] | None = None) -> list[str]:
    lines = [f"# springmag {kind}",
             f"# generated: {datetime.now(timezone.utc).isoformat()}"]
    lines += [f"# config: {line}" for line in config_text.strip().splitlines()]
    for line in extra or []:
        lines.append(f"# {line}")
    lines.append("# columns: " + ",".join(columns))
    lines.append("# units: " + ",".join(units))
    return lines


def _write(path: Path, lines: list[str]):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_profile(state: ChainState, path: Path, config_text: str = "") -> None:
    """Per-layer table: 1-based layer index, angles in degrees, spin components."""
    prof_theta = np.degrees(np.unwrap(np.arctan2(state.spins[:, 1], state.spins[:, 0])))
    prof_phi = np.degrees(np.arcsin(np.clip(state.spins[:, 2], -1.0, 1.0)))
    lines = _header("profile", config_text,
                    ["layer", "theta_deg", "phi_deg", "m_x", "m_y", "m_z"],
                    ["1", "deg", "deg", "1", "1", "1"])
    for i in range(state.n_layers):
        lines.append(",".join([str(i + 1),
                               FLOAT_FMT % prof_theta[i], FLOAT_FMT % prof_phi[i],
                               EXACT_FMT % state.spins[i, 0],
                               EXACT_FMT % state.spins[i, 1],
                               EXACT_FMT % state.spins[i, 2]]))
    _write(path, lines)


def write_sweep(records: list[SweepRecord], path: Path, config_text: str = "") -> None:
    """One row per sweep record: the six summary columns, then per-layer theta."""
    n = records[0].profile.n_layers if records else 0
    columns = ["theta_a_deg", "torque", "alpha_deg", "chirality",
               "equilibration_time", "steps"] + [f"theta_{i+1}_deg" for i in range(n)]
    units = ["deg", "erg/cm^2", "deg", "1", "reduced", "1"] + ["deg"] * n
    warnings = [f"WARNING non-converged at theta_a_deg = {math.degrees(r.theta_a):.6g}"
                for r in records if not r.converged]
    lines = _header("sweep", config_text, columns, units, extra=warnings)
    for r in records:
        row = [FLOAT_FMT % math.degrees(r.theta_a), FLOAT_FMT % r.torque,
               FLOAT_FMT % math.degrees(r.mag_angle), str(r.chirality),
               FLOAT_FMT % r.equilibration_time, str(r.steps)]
        row += [FLOAT_FMT % v for v in np.degrees(r.profile.theta)]
        lines.append(",".join(row))
    _write(path, lines)


def write_curve(theta_a: np.ndarray, values: np.ndarray, branches: list[str],
                value_name: str, value_unit: str, path: Path,
                config_text: str = "") -> None:
    """Two-branch observable curve (torque or magnetization angle) vs theta_a."""
    lines = _header(value_name, config_text,
                    ["theta_a_deg", "branch", value_name], ["deg", "", value_unit])
    for t, v, b in zip(theta_a, values, branches):
        lines.append(",".join([FLOAT_FMT % math.degrees(t), b, FLOAT_FMT % v]))
    _write(path, lines)


def write_table(rows: list[dict], columns: list[str], units: list[str],
                kind: str, path: Path, config_text: str = "") -> None:
    """Generic small table (critical-angle/critical-fields summaries)."""
    lines = _header(kind, config_text, columns, units)
    for row in rows:
        cells = []
        for c in columns:
            v = row[c]
            if isinstance(v, float):
                cells.append("nan" if math.isnan(v) else FLOAT_FMT % v)
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    _write(path, lines)


def write_trace_header(path: Path, config_text: str, with_context: bool) -> None:
    columns = (["theta_a_deg"] if with_context else []) + \
        ["step", "time", "residual", "energy"]
    units = (["deg"] if with_context else []) + ["1", "reduced", "1", "erg/cm^2"]
    _write(path, _header("trace", config_text, columns, units))


def append_trace_row(path: Path, row: list) -> None:
    cells = [FLOAT_FMT % v if isinstance(v, float) else str(v) for v in row]
    with path.open("a") as fh:
        fh.write(",".join(cells) + "\n")


def write_snapshot(state: ChainState, applied: AppliedField, resid: float,
                   fingerprint: str, path: Path) -> None:
    """Full-precision state dump; restores bit-exactly via read_snapshot."""
    lines = ["# springmag snapshot",
             f"# fingerprint: {fingerprint}",
             f"# H_a: {EXACT_FMT % applied.magnitude}",
             f"# theta_a_rad: {EXACT_FMT % applied.angle}",
             f"# time: {EXACT_FMT % state.time}",
             f"# residual: {EXACT_FMT % resid}",
             "# columns: layer,m_x,m_y,m_z",
             "# units: 1,1,1,1"]
    for i in range(state.n_layers):
        lines.append(",".join([str(i + 1),
                               EXACT_FMT % state.spins[i, 0],
                               EXACT_FMT % state.spins[i, 1],
                               EXACT_FMT % state.spins[i, 2]]))
    _write(path, lines)


def read_snapshot(path: Path):
    """Inverse of write_snapshot: returns (state, applied, residual, fingerprint)."""
    meta: dict[str, str] = {}
    spins = []
    time_val = 0.0
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    for line in text.splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                k, v = body.split(":", 1)
                meta[k.strip()] = v.strip()
            continue
        if not line.strip():
            continue
        parts = line.split(",")
        spins.append([float(parts[1]), float(parts[2]), float(parts[3])])
    if not spins:
        raise ValueError(f"{path}: snapshot contains no spin rows")
    time_val = float(meta.get("time", "0"))
    state = ChainState(spins=np.array(spins), time=time_val)
    applied = AppliedField(float(meta["H_a"]), float(meta["theta_a_rad"]))
    return state, applied, float(meta["residual"]), meta.get("fingerprint", "")
