"""Run and sweep configuration files.

Format: ``[section]`` headers, ``key = value`` lines, ``#`` comments. Lists
are comma separated. A file with a ``[sweep]`` section describes a parameter
sweep; anything else is a single run. Every key has a documented default
(see ``SCHEMA``), so a minimal simulate file only needs what differs.

Validation collects every problem before failing; each message carries the
line number of the offending key (``--set`` overrides report line 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from .integrator import StepControl, StopCondition
from .model import ForcingSpec, ModelParams

__all__ = [
    "ConfigError",
    "InitialData",
    "DiagnosticsSpec",
    "OutputSpec",
    "RunConfig",
    "Axis",
    "SweepConfig",
    "parse_config",
    "serialize_config",
    "SCHEMA",
]


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


# -- typed values -------------------------------------------------------------


def _float(text):
    return float(text)


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError
    return int(v)


def _bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError


def _opt_float(text):
    return None if text.strip().lower() in ("", "none") else float(text)


def _float_list(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _choice(*options):
    def conv(text):
        v = text.strip()
        if v not in options:
            raise ValueError
        return v

    conv.__name__ = "one of " + "|".join(options)
    return conv


_TYPE_NAMES = {_float: "real", _int: "integer", _bool: "boolean", _opt_float: "real or none", _float_list: "list of reals"}


@dataclass(frozen=True)
class Key:
    conv: object
    default: object
    check: object = None  # value -> bool
    rule: str = ""


def _gt(x):
    return lambda v: v > x


def _ge(x):
    return lambda v: v >= x


_RUN_MODES = ("simulate", "simulate+certify")
_SWEEP_MODES = ("certify", "simulate+certify")

SCHEMA = {
    "run": {
        "mode": Key(_choice(*sorted(set(_RUN_MODES + _SWEEP_MODES))), "simulate"),
    },
    "model": {
        "lambda": Key(_float, 2.0, _gt(1), "lambda > 1"),
        "alpha": Key(_float, 1.0, _ge(0), "alpha >= 0"),
        "beta": Key(_float, 0.0, _ge(0), "beta >= 0"),
        "nu": Key(_float, 0.0, _ge(0), "nu >= 0"),
        "gamma": Key(_float, 0.25, _gt(0), "gamma > 0"),
        "J": Key(_int, 24, _ge(2), "J >= 2"),
    },
    "forcing": {
        "f0": Key(_float, 0.0, _ge(0), "f0 >= 0"),
    },
    "initial": {
        "kind": Key(_choice("explicit", "single_shell", "geometric"), "explicit"),
        "values": Key(_float_list, (1.0, 1.0)),
        "k": Key(_int, 0, _ge(0), "k >= 0"),
        "M": Key(_float, 1.0),
        "r": Key(_float, 0.5),
        "k_max": Key(_int, 4, _ge(0), "k_max >= 0"),
    },
    "control": {
        "abs_tol": Key(_float, 1e-10, _gt(0), "abs_tol > 0"),
        "rel_tol": Key(_float, 1e-10, _gt(0), "rel_tol > 0"),
        "dt_init": Key(_float, 1e-4, _gt(0), "dt_init > 0"),
        "dt_min": Key(_float, 1e-14, _gt(0), "dt_min > 0"),
        "dt_max": Key(_float, 0.1, _gt(0), "dt_max > 0"),
        "safety": Key(_float, 0.9, lambda v: 0 < v < 1, "0 < safety < 1"),
    },
    "stop": {
        "t_end": Key(_float, 1.0),
        "norm_s": Key(_float, 1.0),
        "norm_cap": Key(_float, 1e6, _gt(0), "norm_cap > 0"),
        "max_steps": Key(_int, 1_000_000, _ge(1), "max_steps >= 1"),
        "tail_cap": Key(_opt_float, None, lambda v: v is None or 0 < v <= 1, "0 < tail_cap <= 1"),
    },
    "diagnostics": {
        "s_list": Key(_float_list, (0.0, 1.0)),
        "w": Key(_float, 1.05, _gt(1), "w > 1"),
        "sample_every": Key(_float, 1e-3, _gt(0), "sample_every > 0"),
    },
    "certificate": {
        "s": Key(_float, 1.0, _gt(1 / 3), "s > 1/3"),
    },
    "output": {
        "csv_path": Key(str, "trajectory.csv", bool, "nonempty path"),
        "json_path": Key(str, "summary.json", bool, "nonempty path"),
    },
    "sweep": {
        "s_lo": Key(_float, 1.0),
        "s_hi": Key(_float, 1.0),
        "s_count": Key(_int, 1, _ge(1), "count >= 1"),
        "gamma_lo": Key(_float, 0.25),
        "gamma_hi": Key(_float, 0.25),
        "gamma_count": Key(_int, 1, _ge(1), "count >= 1"),
        "beta_lo": Key(_float, 0.0),
        "beta_hi": Key(_float, 0.0),
        "beta_count": Key(_int, 1, _ge(1), "count >= 1"),
        "inviscid": Key(_bool, False),
        "lambda": Key(_float, 2.0, _gt(1), "lambda > 1"),
        "workers": Key(_int, 1, _ge(1), "workers >= 1"),
        "output": Key(str, "sweep.csv", bool, "nonempty path"),
    },
}

# `s = 1` in [sweep] is shorthand for s_lo = s_hi = 1, s_count = 1
_AXIS_SHORTHAND = ("s", "gamma", "beta")


# -- config objects -----------------------------------------------------------


@dataclass(frozen=True)
class InitialData:
    kind: str = "explicit"
    values: tuple = (1.0, 1.0)
    k: int = 0
    M: float = 1.0
    r: float = 0.5
    k_max: int = 4

    def build(self, J: int):
        import numpy as np

        a = np.zeros(J)
        if self.kind == "explicit":
            vals = np.asarray(self.values, dtype=float)[:J]
            a[: vals.size] = vals
        elif self.kind == "single_shell":
            a[self.k] = self.M
        else:
            n = min(self.k_max + 1, J)
            a[:n] = self.M * self.r ** np.arange(n)
        return a


@dataclass(frozen=True)
class DiagnosticsSpec:
    s_list: tuple = (0.0, 1.0)
    w: float = 1.05
    sample_every: float = 1e-3


@dataclass(frozen=True)
class OutputSpec:
    csv_path: str = "trajectory.csv"
    json_path: str = "summary.json"


@dataclass(frozen=True)
class RunConfig:
    mode: str = "simulate"
    model: ModelParams = field(default_factory=ModelParams)
    forcing: ForcingSpec = field(default_factory=ForcingSpec)
    initial: InitialData = field(default_factory=InitialData)
    ctrl: StepControl = field(default_factory=StepControl)
    stop: StopCondition = field(default_factory=StopCondition)
    diagnostics: DiagnosticsSpec = field(default_factory=DiagnosticsSpec)
    cert_s: float | None = None
    output: OutputSpec = field(default_factory=OutputSpec)


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    count: int

    def values(self):
        if self.count == 1:
            return [self.lo]
        step = (self.hi - self.lo) / (self.count - 1)
        return [self.lo + i * step for i in range(self.count - 1)] + [self.hi]


@dataclass(frozen=True)
class SweepConfig:
    mode: str = "certify"
    s: Axis = Axis(1.0, 1.0, 1)
    gamma: Axis | None = Axis(0.25, 0.25, 1)  # None: inviscid
    beta: Axis = Axis(0.0, 0.0, 1)
    lam: float = 2.0
    workers: int = 1
    output: str = "sweep.csv"
    J: int = 24
    ctrl: StepControl = field(default_factory=StepControl)
    stop: StopCondition = field(default_factory=StopCondition)
    sample_every: float = 1e-3

    def grid(self):
        gammas = [None] if self.gamma is None else self.gamma.values()
        return [(s, g, b) for s in self.s.values() for g in gammas for b in self.beta.values()]


# -- parsing ------------------------------------------------------------------


def _tokenize(text: str, errors: list):
    """Raw ``{(section, key): (value, line)}``."""
    raw = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("[") and body.endswith("]"):
            section = body[1:-1].strip()
            if section not in SCHEMA:
                errors.append(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in body:
            errors.append(f"line {lineno}: expected 'key = value', got {body!r}")
            continue
        key, value = (p.strip() for p in body.split("=", 1))
        if section is None:
            errors.append(f"line {lineno}: key {key!r} outside any section")
            continue
        if (section, key) in raw:
            errors.append(f"line {lineno}: duplicate key {section}.{key}")
        raw[(section, key)] = (value, lineno)
    return raw


def _apply_overrides(raw: dict, overrides, errors: list):
    for item in overrides or ():
        if "=" not in item or "." not in item.split("=", 1)[0]:
            errors.append(f"line 0: --set expects section.key=value, got {item!r}")
            continue
        lhs, value = item.split("=", 1)
        section, key = lhs.strip().split(".", 1)
        raw[(section.strip(), key.strip())] = (value.strip(), 0)


def _expand_shorthand(raw: dict):
    for axis in _AXIS_SHORTHAND:
        if ("sweep", axis) in raw:
            value, line = raw.pop(("sweep", axis))
            raw[("sweep", f"{axis}_lo")] = (value, line)
            raw[("sweep", f"{axis}_hi")] = (value, line)
            raw[("sweep", f"{axis}_count")] = ("1", line)


def _convert(raw: dict, errors: list):
    values, lines = {}, {}
    for (section, key), (text, line) in raw.items():
        entry = SCHEMA.get(section, {}).get(key)
        if section not in SCHEMA:
            continue  # reported by the tokenizer
        if entry is None:
            errors.append(f"line {line}: unknown key {key!r} in [{section}]")
            continue
        try:
            v = entry.conv(text)
        except (ValueError, TypeError):
            tname = _TYPE_NAMES.get(entry.conv, getattr(entry.conv, "__name__", "value"))
            errors.append(f"line {line}: {section}.{key} = {text!r} is not a valid {tname}")
            continue
        if entry.check is not None and not entry.check(v):
            errors.append(f"line {line}: {section}.{key} = {text} violates {entry.rule}")
            continue
        values[(section, key)] = v
        lines[(section, key)] = line
    return values, lines


def parse_config(text: str, overrides=None) -> RunConfig | SweepConfig:
    """Parse and validate a config; raises ConfigError listing every problem."""
    errors: list = []
    raw = _tokenize(text, errors)
    _apply_overrides(raw, overrides, errors)
    sweep = any(sec == "sweep" for sec, _ in raw)
    _expand_shorthand(raw)
    values, lines = _convert(raw, errors)

    def get(section, key):
        if (section, key) in values:
            return values[(section, key)]
        return SCHEMA[section][key].default

    def line(section, key):
        return lines.get((section, key), 0)

    mode = get("run", "mode") if ("run", "mode") in values else ("certify" if sweep else "simulate")
    allowed = _SWEEP_MODES if sweep else _RUN_MODES
    if mode not in allowed:
        errors.append(f"line {line('run', 'mode')}: mode {mode!r} not valid for a {'sweep' if sweep else 'run'} config")

    ctrl = stop = None
    if get("control", "dt_min") > get("control", "dt_init") or get("control", "dt_init") > get("control", "dt_max"):
        errors.append(f"line {line('control', 'dt_init')}: need dt_min <= dt_init <= dt_max")
    else:
        ctrl = StepControl(**{k: get("control", k) for k in SCHEMA["control"]})
    if not get("stop", "t_end") > 0:
        errors.append(f"line {line('stop', 't_end')}: t_end must exceed the start time 0")
    else:
        stop = StopCondition(**{k: get("stop", k) for k in SCHEMA["stop"]})

    if sweep:
        cfg = _build_sweep(get, line, mode, ctrl, stop, errors)
    else:
        cfg = _build_run(get, line, mode, ctrl, stop, errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def _build_run(get, line, mode, ctrl, stop, errors):
    J = get("model", "J")
    certify = mode == "simulate+certify"
    if certify:
        if get("model", "alpha") != 1:
            errors.append(f"line {line('model', 'alpha')}: certificates need alpha = 1")
        nu = get("model", "nu")
        if nu not in (0, 1):
            errors.append(f"line {line('model', 'nu')}: certificates need nu = 0 or nu = 1")
        if nu and not get("model", "gamma") < 1 / 3:
            errors.append(f"line {line('model', 'gamma')}: certificate requires gamma < 1/3, got {get('model', 'gamma')}")
    kind = get("initial", "kind")
    if kind == "single_shell" and get("initial", "k") >= J:
        errors.append(f"line {line('initial', 'k')}: single-shell index k must be < J = {J}")
    if kind == "explicit" and len(get("initial", "values")) > J:
        errors.append(f"line {line('initial', 'values')}: more initial values than shells (J = {J})")
    values = get("initial", "values")
    if not all(math.isfinite(v) for v in values):
        errors.append(f"line {line('initial', 'values')}: initial values must be finite")
    if errors:
        return None
    return RunConfig(
        mode=mode,
        model=ModelParams(
            lam=get("model", "lambda"),
            alpha=get("model", "alpha"),
            beta=get("model", "beta"),
            nu=get("model", "nu"),
            gamma=get("model", "gamma"),
            J=J,
        ),
        forcing=ForcingSpec(get("forcing", "f0")),
        initial=InitialData(**{k: get("initial", k) for k in SCHEMA["initial"]}),
        ctrl=ctrl,
        stop=stop,
        diagnostics=DiagnosticsSpec(**{k: get("diagnostics", k) for k in SCHEMA["diagnostics"]}),
        cert_s=get("certificate", "s") if certify else None,
        output=OutputSpec(**{k: get("output", k) for k in SCHEMA["output"]}),
    )


def _build_sweep(get, line, mode, ctrl, stop, errors):
    axes = {}
    for name in _AXIS_SHORTHAND:
        lo, hi, n = get("sweep", f"{name}_lo"), get("sweep", f"{name}_hi"), get("sweep", f"{name}_count")
        if hi < lo:
            errors.append(f"line {line('sweep', f'{name}_hi')}: {name}_hi < {name}_lo")
        axes[name] = Axis(lo, hi, n)
    if axes["s"].lo <= 1 / 3:
        errors.append(f"line {line('sweep', 's_lo')}: certificate requires s > 1/3, got {axes['s'].lo}")
    inviscid = get("sweep", "inviscid")
    if not inviscid:
        g = axes["gamma"]
        if not g.lo > 0:
            errors.append(f"line {line('sweep', 'gamma_lo')}: certificate requires gamma > 0, got {g.lo}")
        if not g.hi < 1 / 3:
            errors.append(f"line {line('sweep', 'gamma_hi')}: certificate requires gamma < 1/3, got {g.hi}")
    if axes["beta"].lo < 0:
        errors.append(f"line {line('sweep', 'beta_lo')}: beta >= 0 required, got {axes['beta'].lo}")
    if errors:
        return None
    return SweepConfig(
        mode=mode,
        s=axes["s"],
        gamma=None if inviscid else axes["gamma"],
        beta=axes["beta"],
        lam=get("sweep", "lambda"),
        workers=get("sweep", "workers"),
        output=get("sweep", "output"),
        J=get("model", "J"),
        ctrl=ctrl,
        stop=stop,
        sample_every=get("diagnostics", "sample_every"),
    )


# -- serialization ------------------------------------------------------------


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _section(name, pairs):
    return [f"[{name}]"] + [f"{k} = {_fmt(v)}" for k, v in pairs] + [""]


def serialize_config(cfg: RunConfig | SweepConfig) -> str:
    """Text that parses back to an equal config."""
    lines = _section("run", [("mode", cfg.mode)])
    ctrl = [(f.name, getattr(cfg.ctrl, f.name)) for f in fields(StepControl)]
    stop = [(f.name, getattr(cfg.stop, f.name)) for f in fields(StopCondition)]
    if isinstance(cfg, SweepConfig):
        sw = []
        for name in _AXIS_SHORTHAND:
            ax = getattr(cfg, name)
            if ax is None:
                continue
            sw += [(f"{name}_lo", ax.lo), (f"{name}_hi", ax.hi), (f"{name}_count", ax.count)]
        sw += [("inviscid", cfg.gamma is None), ("lambda", cfg.lam), ("workers", cfg.workers), ("output", cfg.output)]
        lines += _section("sweep", sw)
        lines += _section("model", [("J", cfg.J)])
        lines += _section("control", ctrl) + _section("stop", stop)
        lines += _section("diagnostics", [("sample_every", cfg.sample_every)])
        return "\n".join(lines)
    m = cfg.model
    lines += _section(
        "model",
        [("lambda", m.lam), ("alpha", m.alpha), ("beta", m.beta), ("nu", m.nu), ("gamma", m.gamma), ("J", m.J)],
    )
    lines += _section("forcing", [("f0", cfg.forcing.f0)])
    lines += _section("initial", [(f.name, getattr(cfg.initial, f.name)) for f in fields(InitialData)])
    lines += _section("control", ctrl) + _section("stop", stop)
    lines += _section("diagnostics", [(f.name, getattr(cfg.diagnostics, f.name)) for f in fields(DiagnosticsSpec)])
    if cfg.cert_s is not None:
        lines += _section("certificate", [("s", cfg.cert_s)])
    lines += _section("output", [(f.name, getattr(cfg.output, f.name)) for f in fields(OutputSpec)])
    return "\n".join(lines)
