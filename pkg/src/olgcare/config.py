"""Run configuration: a flat ``key = value`` file with section headers.

Example::

    [model]
    A = 3.75
    alpha = 0.1
    regime = complements
    b = 0.1

    [experiment]
    kind = simulate
    branch = high
    k0 = 12.0
    N0 = 50.0
    T = 50

    [sweep]
    alpha = 0.05:0.2:16
    b = 0.1, 0.3

    [output]
    format = csv

Grid values are either a comma-separated list or ``start:stop:num`` (inclusive,
``num`` points). Unknown sections and keys are errors, reported with their line.
The standard library's configparser is not used because it drops line numbers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import Branch, MacroState, ModelParams, Regime


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None,
                 source: str | None = None):
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        if key:
            where.append(f"'{key}'")
        prefix = ":".join(where[:2]) + (f" {where[2]}" if len(where) > 2 else "")
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.line = line
        self.key = key


class Experiment(enum.Enum):
    STEADY = "steady"
    TIME_ALLOC = "time-alloc"
    FOC = "foc"
    ALPHA_SWEEP = "alpha-sweep"
    THRESHOLD = "threshold"
    SIMULATE = "simulate"


class Format(enum.Enum):
    CSV = "csv"
    JSON = "json"


BENCHMARK_STATE = MacroState(12.0, 51.6)

_MODEL_KEYS = {"A", "alpha", "beta", "gamma", "phi", "b", "regime", "rho"}
_EXPERIMENT_KEYS = {"kind", "branch", "k0", "N0", "T", "theta_d", "k", "N", "mode"}
_SWEEP_KEYS = {"alpha", "b", "k", "N", "n", "theta_d", "regimes"}
_OUTPUT_KEYS = {"path", "format", "overlay"}
_SECTIONS = {"model": _MODEL_KEYS, "experiment": _EXPERIMENT_KEYS, "sweep": _SWEEP_KEYS,
             "output": _OUTPUT_KEYS}


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    experiment: Experiment | None = None
    branch: Branch | None = None
    mode: str | None = None
    state0: MacroState | None = None
    T: int = 50
    state: MacroState = BENCHMARK_STATE
    theta_d: float | None = None
    grids: dict[str, tuple[float, ...]] = field(default_factory=dict)
    regimes: tuple[Regime, ...] | None = None
    out_path: Path | None = None
    format: Format = Format.CSV
    overlay: Path | None = None

    def grid(self, name: str, default=None) -> tuple[float, ...]:
        values = self.grids.get(name)
        if values is None:
            if default is None:
                raise ConfigError(f"this experiment needs a [sweep] grid '{name}'", key=name)
            return tuple(default)
        return values

    def validate_for(self, experiment: Experiment) -> None:
        if self.experiment is not None and self.experiment is not experiment:
            raise ConfigError(
                f"config is for experiment '{self.experiment.value}', not '{experiment.value}'",
                key="kind",
            )
        if experiment is Experiment.SIMULATE:
            if self.T < 1:
                raise ConfigError("T must be at least 1 for a simulation", key="T")
        for name, values in self.grids.items():
            if not values:
                raise ConfigError("grid is empty", key=name)


def parse_regime(text: str, rho: float | None = None) -> Regime:
    t = text.strip().lower()
    if t in ("substitutes", "s", "subs"):
        return Regime.substitutes()
    if t in ("complements", "c", "comp"):
        return Regime.complements()
    if t == "ces":
        if rho is None:
            raise ValueError("regime 'ces' needs rho")
        return Regime.ces(rho)
    raise ValueError(f"unknown regime '{text}' (substitutes, complements, ces)")


def parse_branch(text: str) -> Branch:
    try:
        return Branch(text.strip().lower())
    except ValueError:
        raise ValueError(f"unknown branch '{text}' (low, high, unique)") from None


def parse_grid(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    if ":" in text:
        parts = [p.strip() for p in text.split(":")]
        if len(parts) != 3:
            raise ValueError("range grids are start:stop:num")
        start, stop = float(parts[0]), float(parts[1])
        num = int(parts[2])
        if num < 1:
            raise ValueError("a range grid needs num >= 1")
        return tuple(float(v) for v in np.linspace(start, stop, num))
    return tuple(float(v) for v in text.split(","))


def _float(value: str) -> float:
    x = float(value)
    if math.isnan(x):
        raise ValueError("NaN is not allowed")
    return x


def _read_sections(text: str, source) -> dict[str, dict[str, tuple[str, int]]]:
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header '{raw.strip()}'", lineno, source=source)
            current = line[1:-1].strip().lower()
            if current not in _SECTIONS:
                raise ConfigError(f"unknown section [{current}]", lineno, source=source)
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got '{raw.strip()}'", lineno, source=source)
        if current is None:
            raise ConfigError("key outside of any section", lineno, source=source)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _SECTIONS[current]:
            allowed = ", ".join(sorted(_SECTIONS[current]))
            raise ConfigError(f"unknown key in [{current}] (allowed: {allowed})", lineno, key, source)
        if key in sections[current]:
            raise ConfigError(f"duplicate key (first set on line {sections[current][key][1]})",
                              lineno, key, source)
        sections[current][key] = (value, lineno)
    return sections


def loads(text: str, source: str | None = None, base_dir: Path | None = None) -> RunConfig:
    sections = _read_sections(text, source)

    def convert(section, key, fn):
        value, lineno = sections[section][key]
        try:
            return fn(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc), lineno, key, source) from None

    model = sections.get("model", {})
    kwargs = {}
    for key in ("A", "alpha", "beta", "gamma", "phi", "b"):
        if key in model:
            kwargs[key] = convert("model", key, _float)
    rho = convert("model", "rho", _float) if "rho" in model else None
    if "regime" in model:
        kwargs["regime"] = convert("model", "regime", lambda v: parse_regime(v, rho))
    elif rho is not None:
        kwargs["regime"] = convert("model", "rho", lambda v: Regime.ces(_float(v)))
    try:
        params = ModelParams(**kwargs)
    except (ValueError, TypeError) as exc:
        line = min((ln for _, ln in model.values()), default=None)
        raise ConfigError(f"invalid model parameters: {exc}", line, source=source) from None

    exp = sections.get("experiment", {})
    out: dict = {"params": params}
    if "kind" in exp:
        out["experiment"] = convert("experiment", "kind", lambda v: Experiment(v.strip().lower()))
    if "branch" in exp:
        out["branch"] = convert("experiment", "branch", parse_branch)
    if "mode" in exp:
        out["mode"] = convert("experiment", "mode", _parse_mode)
    if "T" in exp:
        out["T"] = convert("experiment", "T", int)
    if "theta_d" in exp:
        out["theta_d"] = convert("experiment", "theta_d", _float)
    if ("k0" in exp) != ("N0" in exp):
        key = "k0" if "k0" not in exp else "N0"
        raise ConfigError("k0 and N0 must be given together", key=key, source=source)
    if "k0" in exp:
        k0, n0 = convert("experiment", "k0", _float), convert("experiment", "N0", _float)
        out["state0"] = convert("experiment", "k0", lambda _: MacroState(k0, n0))
    if "k" in exp or "N" in exp:
        k = convert("experiment", "k", _float) if "k" in exp else BENCHMARK_STATE.k
        n = convert("experiment", "N", _float) if "N" in exp else BENCHMARK_STATE.N
        out["state"] = convert("experiment", "k" if "k" in exp else "N", lambda _: MacroState(k, n))

    sweep = sections.get("sweep", {})
    grids = {}
    for key in sweep:
        if key == "regimes":
            out["regimes"] = convert(
                "sweep", key, lambda v: tuple(parse_regime(r, rho) for r in v.split(","))
            )
            continue
        grids[key] = convert("sweep", key, parse_grid)
        if not grids[key]:
            raise ConfigError("grid is empty", sweep[key][1], key, source)
    out["grids"] = grids

    output = sections.get("output", {})
    base = base_dir or Path(".")
    if "path" in output:
        out["out_path"] = base / output["path"][0]
    if "format" in output:
        out["format"] = convert("output", "format", lambda v: Format(v.strip().lower()))
    if "overlay" in output:
        out["overlay"] = base / output["overlay"][0]
    return RunConfig(**out)


def _parse_mode(value: str) -> str:
    v = value.strip().lower()
    if v not in ("ricardian", "distorted"):
        raise ValueError(f"unknown fiscal mode '{value}' (ricardian, distorted)")
    return v


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", source=str(path)) from None
    return loads(text, source=str(path), base_dir=path.parent)
