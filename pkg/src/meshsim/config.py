"""Flat sectioned key/value run configuration.

Every section is optional; absent sections fall back to the desk-scale
defaults.  Unknown sections or keys are errors.

Sections and keys
-----------------
``[run]``
    ``seeds`` (count ``N`` meaning ``0..N-1``, or a comma list),
    ``seed`` (single-run seed), ``workers``, ``architecture``
    (``mesh`` | ``macro``), ``check_coverage``.
``[traffic]``
    Every :class:`~meshsim.traffic.TrafficScenario` field except
    ``surge`` and ``seed``, plus ``surge_start``, ``surge_end``,
    ``surge_multiplier``.
``[macro]`` / ``[mesh]``
    Every :class:`~meshsim.engine.ArchitectureConfig` field.
    ``positions`` is ``x,y; x,y; ...`` in metres.
``[forecast]``
    :class:`~meshsim.forecast.ForecastConfig` fields.
``[reward]``
    :class:`~meshsim.powerctl.RewardConfig` fields; ``qos_floor_dbm`` is
    a comma list.
``[train]``
    :class:`~meshsim.powerctl.TrainHyper` fields.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from . import engine
from .errors import ConfigError
from .forecast import ForecastConfig
from .powerctl import RewardConfig, TrainHyper
from .traffic import Surge, TrafficScenario

RUN_KEYS = {"seeds", "seed", "workers", "architecture", "check_coverage"}
SURGE_KEYS = {"surge_start", "surge_end", "surge_multiplier"}


@dataclass(frozen=True)
class RunConfig:
    source: str
    text: str
    macro: engine.ArchitectureConfig
    mesh: engine.ArchitectureConfig
    traffic: TrafficScenario
    forecast: ForecastConfig
    reward: RewardConfig | None
    train: TrainHyper
    seeds: tuple[int, ...] = tuple(range(10))
    seed: int = 0
    workers: int = 1
    architecture: str = "mesh"
    check_coverage: bool = True
    sections: tuple[str, ...] = field(default=())

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.replace("\r\n", "\n").encode()).hexdigest()

    def arch(self, name: str | None = None) -> engine.ArchitectureConfig:
        name = name or self.architecture
        if name == "mesh":
            return self.mesh
        if name == "macro":
            return self.macro
        raise ConfigError(f"{self.source}: [run] architecture: unknown architecture {name!r}")

    def effective(self) -> str:
        """Canonical dump of every resolved value, for the manifest."""
        lines = []
        for sec in ("macro", "mesh", "traffic", "forecast", "reward", "train"):
            obj = getattr(self, sec)
            if obj is None:
                lines.append(f"[{sec}] default")
                continue
            for f in fields(obj):
                lines.append(f"[{sec}] {f.name}={getattr(obj, f.name)!r}")
        lines.append(f"[run] seeds={list(self.seeds)!r} seed={self.seed} workers={self.workers} "
                     f"architecture={self.architecture} check_coverage={self.check_coverage}")
        return "\n".join(lines) + "\n"


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(v) for v in raw.split(",") if v.strip())


def _positions(raw: str) -> tuple[tuple[float, float], ...]:
    out = []
    for chunk in raw.split(";"):
        if chunk.strip():
            xy = _floats(chunk)
            if len(xy) != 2:
                raise ValueError(f"position {chunk.strip()!r} is not 'x,y'")
            out.append(xy)
    return tuple(out)


def _convert(annotation: str, raw: str):
    raw = raw.strip()
    if "None" in annotation and raw.lower() in ("none", ""):
        return None
    if annotation.startswith("bool"):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if annotation.startswith("int"):
        return int(raw)
    if annotation.startswith("float"):
        return float(raw)
    if annotation.startswith("tuple[tuple"):
        return _positions(raw)
    if annotation.startswith("tuple[float"):
        return _floats(raw)
    return raw


def _build(cls, base, section: configparser.SectionProxy, source: str, skip=frozenset()):
    known = {f.name: f.type for f in fields(cls)}
    over = {}
    for key, raw in section.items():
        if key in skip:
            continue
        if key not in known:
            raise ConfigError(f"{source}: [{section.name}] {key}: unknown key")
        try:
            over[key] = _convert(str(known[key]), raw)
        except ValueError as exc:
            raise ConfigError(f"{source}: [{section.name}] {key}: {exc}") from None
    try:
        return replace(base, **over) if base is not None else cls(**over)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{source}: [{section.name}]: {exc}") from None


def _traffic(section, source):
    base = engine.desk_scenario()
    if section is None:
        return base
    sc = _build(TrafficScenario, base, section, source, skip=SURGE_KEYS | {"seed"})
    if "seed" in section:
        raise ConfigError(f"{source}: [traffic] seed: traffic seeds come from [run] seeds")
    present = SURGE_KEYS & set(section.keys())
    if present:
        if present != SURGE_KEYS:
            missing = ", ".join(sorted(SURGE_KEYS - present))
            raise ConfigError(f"{source}: [traffic] surge: missing {missing}")
        try:
            surge = Surge(int(section["surge_start"]), int(section["surge_end"]),
                          float(section["surge_multiplier"]))
            sc = replace(sc, surge=surge)
        except ValueError as exc:
            raise ConfigError(f"{source}: [traffic] surge: {exc}") from None
    return sc


def _seeds(raw: str) -> tuple[int, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if len(parts) == 1:
        n = int(parts[0])
        if n < 1:
            raise ValueError("seed count must be >= 1")
        return tuple(range(n))
    return tuple(int(p) for p in parts)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    allowed = {"run", "traffic", "macro", "mesh", "forecast", "reward", "train"}
    for sec in cp.sections():
        if sec not in allowed:
            raise ConfigError(f"{source}: [{sec}]: unknown section")
    get = lambda s: cp[s] if cp.has_section(s) else None  # noqa: E731

    macro = engine.desk_macro()
    mesh_arch = engine.desk_mesh()
    if get("macro") is not None:
        macro = _build(engine.ArchitectureConfig, macro, cp["macro"], source)
    if get("mesh") is not None:
        mesh_arch = _build(engine.ArchitectureConfig, mesh_arch, cp["mesh"], source)
    forecast = ForecastConfig()
    if get("forecast") is not None:
        forecast = _build(ForecastConfig, forecast, cp["forecast"], source)
    reward = None
    if get("reward") is not None:
        reward = _build(RewardConfig, RewardConfig(i_threshold_dbm=mesh_arch.conflict_threshold_dbm),
                        cp["reward"], source)
    train = TrainHyper()
    if get("train") is not None:
        train = _build(TrainHyper, train, cp["train"], source)

    run = {}
    if get("run") is not None:
        for key, raw in cp["run"].items():
            if key not in RUN_KEYS:
                raise ConfigError(f"{source}: [run] {key}: unknown key")
            try:
                if key == "seeds":
                    run[key] = _seeds(raw)
                elif key in ("seed", "workers"):
                    run[key] = int(raw)
                elif key == "check_coverage":
                    run[key] = _convert("bool", raw)
                else:
                    run[key] = raw.strip()
            except ValueError as exc:
                raise ConfigError(f"{source}: [run] {key}: {exc}") from None
    cfg = RunConfig(source, text, macro, mesh_arch, _traffic(get("traffic"), source), forecast,
                    reward, train, sections=tuple(cp.sections()), **run)
    cfg.arch()
    return cfg


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except FileNotFoundError:
        raise ConfigError(f"{p}: config file not found") from None
    except OSError as exc:
        raise ConfigError(f"{p}: {exc.strerror}") from None
    return parse_config(text, p.name)


def default_config() -> RunConfig:
    return parse_config("", "<defaults>")
