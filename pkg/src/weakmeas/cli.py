"""Command-line front end.

Configuration is a flat ``key = value`` text file with ``#`` comments and
dotted keys (``system.eps``, ``detector.s_i``, ``run.dt`` ...).  Values are
resolved in this order, later ones winning: built-in defaults, the preset,
the config file, command-line flags.

Exit codes: 0 success, 2 configuration error, 3 numerical error,
4 protocol precondition violated.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import ensemble as ens
from . import protocols as prot
from .model import (
    DensityMatrix,
    DetectorParams,
    ModelError,
    SystemParams,
    derived_quantities,
    validate_params,
)
from .trajectory import (
    NumericalBlowup,
    Scheme,
    TimestepTooLarge,
    cumulative_average,
    filter_current,
    run_trajectory,
)

MODES = ("simulate", "ensemble", "recover", "purify")
FORMATS = ("csv", "json")

TRAJECTORY_COLUMNS = (
    "t", "sigma11", "re_sigma12", "im_sigma12", "purity_defect", "i_step", "i_window", "i_cum",
)
ENSEMBLE_COLUMNS = (
    "t", "mean_sigma11", "se_sigma11", "mean_re_s12", "mean_im_s12",
    "abs_mean_s12", "mean_purity_defect", "n_traj",
)
PURIFY_COLUMNS = ("t", "sigma11", "re_sigma12", "im_sigma12", "purity_defect")
RECOVER_KEYS = (
    "seed", "tau_meas", "cond_sigma11", "cond_re_sigma12", "cond_im_sigma12",
    "eps_rec", "delta_t_rec", "omega_rec", "final_sigma11", "success",
    "literal_eps_rec", "literal_delta_t_rec", "literal_final_sigma11",
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_PROTOCOL = 0, 2, 3, 4


class ConfigError(Exception):
    pass


class MissingField(ConfigError):
    def __init__(self, name: str):
        super().__init__(f"missing required field {name!r}")
        self.field = name


class ParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


class ValidationError(ConfigError):
    pass


# Scenario presets.  Each scenario fixes only dimensionless combinations
# (H = 0 with a symmetric start; eps = H, sigma11(0) = 1 and C); the remaining
# numbers are normalization choices and are echoed as such in output headers.
PRESETS: dict[str, dict[str, object]] = {
    "fig1": {
        "system.eps": 0.0, "system.h": 0.0, "system.hbar": 1.0,
        "detector.i0": 10.0, "detector.delta_i": 1.0, "detector.s_i": 1.0, "detector.gamma_d": 0.0,
        "rho0.sigma11": 0.5, "rho0.re_sigma12": 0.5, "rho0.im_sigma12": 0.0,
        "run.dt": 0.02, "run.t_end": 20.0,
    },
}
for _c, _name in ((0.3, "fig2-c0.3"), (3.0, "fig2-c3"), (30.0, "fig2-c30")):
    PRESETS[_name] = {
        "system.eps": 1.0, "system.h": 1.0, "system.hbar": 1.0,
        "detector.i0": 100.0, "detector.delta_i": math.sqrt(_c), "detector.s_i": 1.0,
        "detector.gamma_d": 0.0,
        "rho0.sigma11": 1.0, "rho0.re_sigma12": 0.0, "rho0.im_sigma12": 0.0,
        "run.dt": 0.005, "run.t_end": 100.0,
    }

PRESET_NOTES = {
    "fig1": "H=0, symmetric pure start; S_I=dI=1 (tau_loc=2), I0=10, dt=0.01 tau_loc, t_end=10 tau_loc are normalization choices",
    "fig2-c0.3": "eps=H, sigma11(0)=1, C=0.3; hbar=H=S_I=1, dI=sqrt(C), I0=100, dt=0.005, t_end=100 are normalization choices",
    "fig2-c3": "eps=H, sigma11(0)=1, C=3; hbar=H=S_I=1, dI=sqrt(C), I0=100, dt=0.005, t_end=100 are normalization choices",
    "fig2-c30": "eps=H, sigma11(0)=1, C=30; hbar=H=S_I=1, dI=sqrt(C), I0=100, dt=0.005, t_end=100 are normalization choices",
}

FLOAT_KEYS = {
    "system.eps", "system.h", "system.hbar",
    "detector.i0", "detector.delta_i", "detector.s_i", "detector.gamma_d",
    "rho0.sigma11", "rho0.re_sigma12", "rho0.im_sigma12",
    "run.dt", "run.t_end", "run.tau_meas", "run.h_rec",
}
INT_KEYS = {"run.seed", "run.n_traj", "run.workers"}
BOOL_KEYS = {"run.allow_large_dt"}
STR_KEYS = {"run.mode", "run.preset", "run.scheme", "output.path", "output.format"}
ALL_KEYS = FLOAT_KEYS | INT_KEYS | BOOL_KEYS | STR_KEYS


@dataclass(frozen=True)
class RunConfig:
    mode: str
    system: SystemParams
    detector: DetectorParams
    rho0: DensityMatrix | None
    t_end: float | None
    dt: float
    seed: int | None
    n_traj: int | None = None
    scheme: Scheme = Scheme.BAYES_SPLIT
    out_path: str | None = None
    out_format: str = "csv"
    preset: str | None = None
    workers: int = 1
    allow_large_dt: bool = False
    tau_meas: float | None = None
    h_rec: float = 1.0
    warnings: tuple[str, ...] = field(default=(), compare=False)


def _convert(key: str, raw, line: int | None = None):
    if key not in ALL_KEYS:
        raise ParseError(f"unknown key {key!r}", line)
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if key in FLOAT_KEYS:
            return float(text)
        if key in INT_KEYS:
            return int(text)
        if key in BOOL_KEYS:
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
    except ValueError:
        raise ParseError(f"bad value for {key}: {text!r}", line) from None
    return text


def parse_config_text(text: str) -> dict[str, object]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError("empty key", lineno)
        values[key] = _convert(key, value, lineno)
    return values


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_number(value)
    return str(value)


def format_number(x: float) -> str:
    return "%.17g" % x


def config_items(cfg: RunConfig, *, provenance: bool = False) -> list[tuple[str, object]]:
    """Flat key/value view of a config.

    With ``provenance`` the execution-only keys (output path, worker count) are
    left out, so identical runs echo identical headers.
    """
    items: list[tuple[str, object]] = [("run.mode", cfg.mode)]
    if cfg.preset:
        items.append(("run.preset", cfg.preset))
    items += [
        ("run.scheme", cfg.scheme.value),
        ("run.dt", cfg.dt),
        ("run.allow_large_dt", cfg.allow_large_dt),
        ("run.h_rec", cfg.h_rec),
    ]
    for key, value in (("run.t_end", cfg.t_end), ("run.seed", cfg.seed),
                       ("run.n_traj", cfg.n_traj), ("run.tau_meas", cfg.tau_meas)):
        if value is not None:
            items.append((key, value))
    items += [
        ("system.eps", cfg.system.eps),
        ("system.h", cfg.system.h_coupling),
        ("system.hbar", cfg.system.hbar),
        ("detector.i0", cfg.detector.i0),
        ("detector.delta_i", cfg.detector.delta_i),
        ("detector.s_i", cfg.detector.s_i),
        ("detector.gamma_d", cfg.detector.gamma_d_extra),
    ]
    if cfg.rho0 is not None:
        items += [
            ("rho0.sigma11", cfg.rho0.sigma11),
            ("rho0.re_sigma12", cfg.rho0.re_sigma12),
            ("rho0.im_sigma12", cfg.rho0.im_sigma12),
        ]
    items.append(("output.format", cfg.out_format))
    if not provenance:
        items.append(("run.workers", cfg.workers))
        if cfg.out_path is not None:
            items.append(("output.path", cfg.out_path))
    return items


def write_config(cfg: RunConfig) -> str:
    return "".join(f"{k} = {_format_value(v)}\n" for k, v in config_items(cfg))


def _require(values: dict, key: str):
    if key not in values:
        raise MissingField(key.split(".", 1)[1] if key.startswith("run.") else key)
    return values[key]


def resolve_config(file_values: dict | None = None, flag_values: dict | None = None) -> RunConfig:
    """Merge preset, file and flag values into a validated :class:`RunConfig`."""
    file_values = dict(file_values or {})
    flag_values = {k: _convert(k, v) for k, v in (flag_values or {}).items() if v is not None}
    preset = flag_values.get("run.preset", file_values.get("run.preset"))
    values: dict[str, object] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ValidationError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        values.update(PRESETS[preset])
    values.update(file_values)
    values.update(flag_values)

    mode = _require(values, "run.mode")
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r}; choose from {MODES}")
    fmt = values.get("output.format", "csv")
    if fmt not in FORMATS:
        raise ValidationError(f"unknown format {fmt!r}; choose from {FORMATS}")
    try:
        scheme = Scheme.parse(values.get("run.scheme", Scheme.BAYES_SPLIT.value))
    except ValueError as exc:
        raise ValidationError(str(exc)) from None

    dt = _require(values, "run.dt")
    seed = _require(values, "run.seed")
    t_end = values.get("run.t_end")
    tau_meas = values.get("run.tau_meas")
    n_traj = values.get("run.n_traj")
    if mode in ("simulate", "ensemble", "purify") and t_end is None:
        raise MissingField("t_end")
    if mode == "ensemble" and n_traj is None:
        raise MissingField("n_traj")
    if mode == "recover" and tau_meas is None:
        raise MissingField("tau_meas")
    if seed < 0:
        raise ValidationError("seed must be non-negative")
    if n_traj is not None and n_traj < 1:
        raise ValidationError("n_traj must be >= 1")

    system = SystemParams(
        float(values.get("system.eps", 0.0)),
        float(values.get("system.h", 0.0)),
        float(values.get("system.hbar", 1.0)),
    )
    detector = DetectorParams(
        float(_require(values, "detector.i0")),
        float(_require(values, "detector.delta_i")),
        float(_require(values, "detector.s_i")),
        float(values.get("detector.gamma_d", 0.0)),
    )
    try:
        validated = validate_params(system, detector, warn=False)
    except ModelError as exc:
        raise ValidationError(f"model: {exc}") from None

    # purify starts fully mixed unless a start state is given explicitly
    explicit_rho0 = any(k.startswith("rho0.") for k in (*file_values, *flag_values))
    rho0 = None
    if mode in ("simulate", "ensemble") or (
        "rho0.sigma11" in values and (mode != "purify" or explicit_rho0)
    ):
        try:
            rho0 = DensityMatrix(
                float(_require(values, "rho0.sigma11")),
                float(values.get("rho0.re_sigma12", 0.0)),
                float(values.get("rho0.im_sigma12", 0.0)),
            )
        except ModelError as exc:
            raise ValidationError(f"model: {exc}") from None

    return RunConfig(
        mode=mode,
        system=system,
        detector=detector,
        rho0=rho0,
        t_end=None if t_end is None else float(t_end),
        dt=float(dt),
        seed=int(seed),
        n_traj=None if n_traj is None else int(n_traj),
        scheme=scheme,
        out_path=values.get("output.path"),
        out_format=fmt,
        preset=preset,
        workers=int(values.get("run.workers", 1)),
        allow_large_dt=bool(values.get("run.allow_large_dt", False)),
        tau_meas=None if tau_meas is None else float(tau_meas),
        h_rec=float(values.get("run.h_rec", 1.0)),
        warnings=validated.warnings,
    )


def load_config(path: str | None = None, flags: dict | None = None) -> RunConfig:
    """Read a config file (optional) and apply flag overrides on top."""
    file_values = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from None
        file_values = parse_config_text(text)
    return resolve_config(file_values, flags)


# ---------------------------------------------------------------- output


def _header_items(cfg: RunConfig) -> list[tuple[str, str]]:
    d = derived_quantities(cfg.system, cfg.detector)
    items = [(k, _format_value(v)) for k, v in config_items(cfg, provenance=True)]
    items += [
        ("derived.gamma_d_meas", format_number(d.gamma_d_meas)),
        ("derived.tau_loc", format_number(d.tau_loc)),
        ("derived.omega", format_number(d.omega)),
        ("derived.coupling_c", "undefined" if d.coupling_c is None else format_number(d.coupling_c)),
    ]
    if cfg.preset:
        items.append(("preset_note", PRESET_NOTES[cfg.preset]))
    for w in cfg.warnings:
        items.append(("warning", w))
    return items


def _csv_text(header: list[tuple[str, str]], columns, rows) -> str:
    out = io.StringIO()
    for k, v in header:
        out.write(f"# {k} = {v}\n")
    out.write(",".join(columns) + "\n")
    for row in rows:
        out.write(",".join(v if isinstance(v, str) else format_number(float(v)) for v in row) + "\n")
    return out.getvalue()


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=1, allow_nan=True) + "\n"


def _column_rows(data: dict[str, np.ndarray], columns) -> list:
    arrays = [np.asarray(data[c], dtype=float) for c in columns]
    return list(zip(*arrays))


def read_csv_output(text: str) -> tuple[dict[str, str], list[str], np.ndarray]:
    """Parse an output CSV back into (header, columns, rows)."""
    header = {}
    lines = text.splitlines()
    k = 0
    while k < len(lines) and lines[k].startswith("#"):
        key, _, value = lines[k][1:].partition("=")
        header.setdefault(key.strip(), value.strip())
        k += 1
    if k == len(lines):
        raise ValueError("no column header")
    columns = lines[k].split(",")
    rows = [[float(v) for v in line.split(",")] for line in lines[k + 1:] if line]
    data = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    return header, columns, data


def _validate_output(text: str, fmt: str, columns) -> None:
    if fmt == "csv":
        _, cols, data = read_csv_output(text)
        if tuple(cols) != tuple(columns):
            raise ValueError(f"written columns {cols} do not match schema {columns}")
        if data.shape[0] == 0:
            raise ValueError("no data rows written")
    else:
        payload = json.loads(text)
        for key in ("config", "columns", "data"):
            if key not in payload:
                raise ValueError(f"json output lacks {key!r}")
        if tuple(payload["columns"]) != tuple(columns):
            raise ValueError("json columns do not match schema")
        lengths = {len(payload["data"][c]) for c in columns}
        if len(lengths) != 1:
            raise ValueError("json columns have unequal lengths")


def _render(cfg: RunConfig, columns, data: dict, summary: dict | None = None) -> str:
    header = _header_items(cfg)
    if cfg.out_format == "csv":
        if summary:
            header = header + [(f"summary.{k}", _format_value(v)) for k, v in summary.items()]
        return _csv_text(header, columns, _column_rows(data, columns))
    payload = {
        "config": dict(header),
        "summary": summary or {},
        "columns": list(columns),
        "data": {c: [float(v) for v in np.asarray(data[c], dtype=float)] for c in columns},
    }
    return _json_text(payload)


# ---------------------------------------------------------------- modes


def _simulate(cfg: RunConfig):
    rec = run_trajectory(
        cfg.rho0, cfg.t_end, cfg.dt, cfg.system, cfg.detector, cfg.seed, cfg.scheme,
        allow_large_dt=cfg.allow_large_dt,
    )
    d = derived_quantities(cfg.system, cfg.detector)
    window = cfg.detector.s_i / cfg.detector.delta_i ** 2 if cfg.detector.delta_i else math.inf
    window = min(max(window, cfg.dt), rec.times[-1])
    nan = np.array([math.nan])
    data = {
        "t": rec.times,
        "sigma11": rec.states[:, 0],
        "re_sigma12": rec.states[:, 1],
        "im_sigma12": rec.states[:, 2],
        "purity_defect": rec.purity_defects(),
        "i_step": np.concatenate([nan, rec.currents]),
        "i_window": np.concatenate([nan, filter_current(rec, window)]),
        "i_cum": np.concatenate([nan, cumulative_average(rec)]),
    }
    summary = {"window": window, "tau_loc": d.tau_loc}
    return TRAJECTORY_COLUMNS, data, summary


def _ensemble(cfg: RunConfig):
    stats = ens.run_ensemble(
        cfg.rho0, cfg.t_end, cfg.dt, cfg.system, cfg.detector, cfg.n_traj, cfg.seed,
        cfg.scheme, workers=cfg.workers, allow_large_dt=cfg.allow_large_dt,
    )
    d = derived_quantities(cfg.system, cfg.detector)
    expected = d.gamma_d_meas + cfg.detector.gamma_d_extra
    summary: dict[str, object] = {"n_traj": stats.n_traj, "expected_rate": expected}
    t_fit = 2.0 / d.gamma_d_meas if d.gamma_d_meas > 0 else stats.times[-1]
    mask = (stats.times <= t_fit + 1e-12) & (stats.abs_mean_offdiag > 0)
    if mask.sum() >= 3:
        fit = ens.fit_decay_rate(stats.times[mask], stats.abs_mean_offdiag[mask])
        summary.update(fitted_rate=fit.rate, r_squared=fit.r_squared, fit_t_max=float(stats.times[mask][-1]))
    loc = ens.localization_stats(stats.final_states, 0.99)
    summary.update(
        frac_dot1=loc.frac_dot1, frac_dot2=loc.frac_dot2, frac_undecided=loc.frac_undecided,
        final_mean_sigma11=float(stats.mean_sigma11[-1]),
    )
    data = {
        "t": stats.times,
        "mean_sigma11": stats.mean_sigma11,
        "se_sigma11": stats.se_sigma11,
        "mean_re_s12": stats.mean_state[:, 1],
        "mean_im_s12": stats.mean_state[:, 2],
        "abs_mean_s12": stats.abs_mean_offdiag,
        "mean_purity_defect": stats.mean_purity_defect,
        "n_traj": np.full(len(stats.times), float(stats.n_traj)),
    }
    return ENSEMBLE_COLUMNS, data, summary


def _purify(cfg: RunConfig):
    rho0 = cfg.rho0 if cfg.rho0 is not None else DensityMatrix(0.5, 0.0, 0.0)
    rec = run_trajectory(
        rho0, cfg.t_end, cfg.dt, cfg.system, cfg.detector, cfg.seed, Scheme.BAYES_SPLIT,
        allow_large_dt=cfg.allow_large_dt,
    )
    data = {
        "t": rec.times,
        "sigma11": rec.states[:, 0],
        "re_sigma12": rec.states[:, 1],
        "im_sigma12": rec.states[:, 2],
        "purity_defect": rec.purity_defects(),
    }
    return PURIFY_COLUMNS, data, {"final_purity_defect": float(data["purity_defect"][-1])}


def _recover(cfg: RunConfig):
    if cfg.system.h_coupling != 0 or cfg.system.eps != 0:
        raise prot.ProtocolError("the measurement phase of the recovery protocol needs eps = H = 0")
    rep = prot.measurement_then_recovery(
        cfg.tau_meas, cfg.dt, cfg.detector, cfg.seed, h_rec=cfg.h_rec, hbar=cfg.system.hbar,
        rho0=cfg.rho0,
    )
    nan = math.nan
    c, lit = rep.controls, rep.literal_controls
    record = {
        "seed": float(cfg.seed),
        "tau_meas": cfg.tau_meas,
        "cond_sigma11": rep.conditioned.sigma11,
        "cond_re_sigma12": rep.conditioned.re_sigma12,
        "cond_im_sigma12": rep.conditioned.im_sigma12,
        "eps_rec": c.eps_rec if c else nan,
        "delta_t_rec": c.delta_t_rec if c else nan,
        "omega_rec": c.omega_rec if c else nan,
        "final_sigma11": rep.final_sigma11,
        "success": 1.0 if rep.success else 0.0,
        "literal_eps_rec": lit.eps_rec if lit else nan,
        "literal_delta_t_rec": lit.delta_t_rec if lit else nan,
        "literal_final_sigma11": rep.literal_final.sigma11 if rep.literal_final else nan,
    }
    data = {k: np.array([v]) for k, v in record.items()}
    return RECOVER_KEYS, data, None


_RUNNERS = {"simulate": _simulate, "ensemble": _ensemble, "purify": _purify, "recover": _recover}


def render(cfg: RunConfig) -> str:
    """Run the configured mode and return the validated output text."""
    columns, data, summary = _RUNNERS[cfg.mode](cfg)
    text = _render(cfg, columns, data, summary)
    _validate_output(text, cfg.out_format, columns)
    return text


def _error_record(kind: str, exc: BaseException, module: str) -> str:
    return json.dumps({"error": kind, "type": type(exc).__name__, "module": module, "message": str(exc)})


def dispatch(cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        text = render(cfg)
    except TimestepTooLarge as exc:
        print(_error_record("config", exc, "trajectory"), file=stderr)
        return EXIT_CONFIG
    except prot.ProtocolError as exc:
        print(_error_record("protocol", exc, "protocols"), file=stderr)
        return EXIT_PROTOCOL
    except (NumericalBlowup, FloatingPointError) as exc:
        print(_error_record("numerical", exc, "trajectory"), file=stderr)
        return EXIT_NUMERIC
    except ModelError as exc:
        print(_error_record("config", exc, "model"), file=stderr)
        return EXIT_CONFIG
    if cfg.out_path:
        with open(cfg.out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        with open(cfg.out_path, encoding="utf-8") as fh:
            _validate_output(fh.read(), cfg.out_format, _columns_for(cfg.mode))
    else:
        stdout.write(text)
    return EXIT_OK


def _columns_for(mode: str):
    return {
        "simulate": TRAJECTORY_COLUMNS,
        "ensemble": ENSEMBLE_COLUMNS,
        "purify": PURIFY_COLUMNS,
        "recover": RECOVER_KEYS,
    }[mode]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="weakmeas",
        description="Conditioned evolution of a double dot under continuous weak measurement.",
    )
    p.add_argument("--config", metavar="PATH", help="key = value config file")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-traj", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", type=float)
    p.add_argument("--tau-meas", type=float, help="measurement duration (recover mode)")
    p.add_argument("--h-rec", type=float, help="tunnelling used for recovery (recover mode)")
    p.add_argument("--scheme", choices=[s.value for s in Scheme])
    p.add_argument("--workers", type=int, help="threads for ensemble mode; does not change results")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--allow-large-dt", action="store_true", default=None)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key, e.g. detector.gamma_d=0.1")
    return p


def flags_from_args(args: argparse.Namespace) -> dict:
    flags = {
        "run.preset": args.preset,
        "run.mode": args.mode,
        "run.seed": args.seed,
        "run.n_traj": args.n_traj,
        "run.dt": args.dt,
        "run.t_end": args.t_end,
        "run.tau_meas": args.tau_meas,
        "run.h_rec": args.h_rec,
        "run.scheme": args.scheme,
        "run.workers": args.workers,
        "run.allow_large_dt": args.allow_large_dt,
        "output.path": args.out,
        "output.format": args.format,
    }
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ParseError(f"--set expects KEY=VALUE, got {item!r}")
        flags[key.strip()] = value
    return {k: v for k, v in flags.items() if v is not None}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, flags_from_args(args))
    except ConfigError as exc:
        print(_error_record("config", exc, "cli"), file=sys.stderr)
        return EXIT_CONFIG
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
