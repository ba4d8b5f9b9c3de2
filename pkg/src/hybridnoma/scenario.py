"""Problem instances: system parameters, channel draws, and the scenario file format.

Users are dropped uniformly over a disk around the base station and the
channel power gain follows deterministic path loss,
``gain = beta / (d / d0) ** kappa``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


class ParameterError(ValueError):
    """A system parameter or channel value violates its stated bound."""


class ScenarioFormatError(ValueError):
    """A scenario file could not be parsed."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class SystemParams:
    """Budgets and propagation constants of a hybrid TDMA-NOMA downlink.

    Attenuation and noise are kept in the decibel form they are written in
    (``beta_db``, ``noise_dbm``) so files round-trip exactly; ``beta`` and
    ``noise_variance`` give the linear values used everywhere else.
    """

    num_users: int = 10
    num_clusters: int = 5
    total_time: float = 10.0
    max_power: float = 10.0
    cell_radius: float = 50.0
    min_distance: float = 1.0
    beta_db: float = -30.0
    pathloss_exponent: float = 2.0
    noise_dbm: float = -100.0

    def __post_init__(self) -> None:
        K, C = self.num_users, self.num_clusters
        if isinstance(K, bool) or not isinstance(K, (int, np.integer)) or K < 2:
            raise ParameterError(f"num_users K must be an integer >= 2, got {K!r}")
        if isinstance(C, bool) or not isinstance(C, (int, np.integer)) or C < 1:
            raise ParameterError(f"num_clusters C must be an integer >= 1, got {C!r}")
        if K != 2 * C:
            raise ParameterError(f"K must equal 2*C (two users per cluster), got K={K}, C={C}")
        checks = [
            ("total_time T", self.total_time > 0),
            ("max_power Pmax", self.max_power > 0),
            ("min_distance d0", self.min_distance > 0),
            ("cell_radius >= d0", self.cell_radius >= self.min_distance),
            ("pathloss_exponent kappa", self.pathloss_exponent > 0),
        ]
        for name, ok in checks:
            if not ok:
                raise ParameterError(f"{name} out of range in {self!r}")
        for name in ("beta_db", "noise_dbm", "total_time", "max_power", "cell_radius"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")

    @property
    def beta(self) -> float:
        return db_to_linear(self.beta_db)

    @property
    def noise_variance(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    def gain_at(self, distance: np.ndarray | float) -> np.ndarray:
        d = np.asarray(distance, dtype=float)
        return self.beta / (d / self.min_distance) ** self.pathloss_exponent

    def replace(self, **changes: Any) -> "SystemParams":
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return SystemParams(**values)


@dataclass(frozen=True)
class ChannelRealization:
    gains: tuple[float, ...]
    distances: tuple[float, ...]
    seed: int | None = None

    def __post_init__(self) -> None:
        if len(self.gains) != len(self.distances):
            raise ParameterError("gains and distances must have the same length")
        for k, g in enumerate(self.gains):
            if not (g > 0 and math.isfinite(g)):
                raise ParameterError(f"gain of user {k} must be positive, got {g!r}")
        for k, d in enumerate(self.distances):
            if not (d > 0 and math.isfinite(d)):
                raise ParameterError(f"distance of user {k} must be positive, got {d!r}")

    @property
    def num_users(self) -> int:
        return len(self.gains)


@dataclass(frozen=True)
class Scenario:
    params: SystemParams
    channels: ChannelRealization
    noise: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        K = self.params.num_users
        if self.channels.num_users != K:
            raise ParameterError(f"expected {K} channel gains, got {self.channels.num_users}")
        if not self.noise:
            object.__setattr__(self, "noise", (self.params.noise_variance,) * K)
        if len(self.noise) != K or any(not (s > 0) for s in self.noise):
            raise ParameterError("noise variances must be K positive values")

    @property
    def gains(self) -> np.ndarray:
        return np.asarray(self.channels.gains, dtype=float)

    @property
    def noise_vars(self) -> np.ndarray:
        return np.asarray(self.noise, dtype=float)

    def with_params(self, **changes: Any) -> "Scenario":
        """Same channels under modified budgets (e.g. a different ``max_power``)."""
        params = self.params.replace(**changes)
        return Scenario(params, self.channels)


def generate_scenario(params: SystemParams, seed: int) -> ChannelRealization:
    """Drop ``K`` users uniformly over the cell area and evaluate path loss."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.0, 1.0, size=params.num_users)
    d = np.maximum(params.min_distance, params.cell_radius * np.sqrt(u))
    gains = params.gain_at(d)
    return ChannelRealization(
        gains=tuple(float(g) for g in gains),
        distances=tuple(float(x) for x in d),
        seed=int(seed),
    )


def make_scenario(params: SystemParams | None = None, seed: int = 0) -> Scenario:
    params = params or SystemParams()
    return Scenario(params, generate_scenario(params, seed))


_PARAM_KEYS = {
    "K": "num_users",
    "C": "num_clusters",
    "T": "total_time",
    "Pmax": "max_power",
    "radius": "cell_radius",
    "d0": "min_distance",
    "beta_db": "beta_db",
    "kappa": "pathloss_exponent",
    "noise_dbm": "noise_dbm",
}


def params_to_dict(params: SystemParams) -> dict[str, Any]:
    return {key: getattr(params, attr) for key, attr in _PARAM_KEYS.items()}


def params_from_dict(raw: dict[str, Any], *, partial: bool = False) -> SystemParams:
    if not isinstance(raw, dict):
        raise ScenarioFormatError("field 'params' must be an object")
    unknown = sorted(set(raw) - set(_PARAM_KEYS))
    if unknown:
        raise ScenarioFormatError(f"unknown field(s) in 'params': {', '.join(unknown)}")
    missing = [k for k in _PARAM_KEYS if k not in raw]
    if missing and not partial:
        raise ScenarioFormatError(f"missing field(s) in 'params': {', '.join(missing)}")
    values: dict[str, Any] = {}
    for key, value in raw.items():
        attr = _PARAM_KEYS[key]
        if key in ("K", "C"):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ScenarioFormatError(f"field 'params.{key}' must be an integer, got {value!r}")
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioFormatError(f"field 'params.{key}' must be a number, got {value!r}")
        else:
            value = float(value)
        values[attr] = value
    return SystemParams().replace(**values) if partial else SystemParams(**values)


def scenario_to_dict(params: SystemParams, channels: ChannelRealization) -> dict[str, Any]:
    return {
        "params": params_to_dict(params),
        "channels": {
            "gains": list(channels.gains),
            "distances": list(channels.distances),
            "seed": channels.seed,
        },
    }


def save_scenario(path: str | Path, params: SystemParams, channels: ChannelRealization) -> None:
    text = json.dumps(scenario_to_dict(params, channels), indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def _read_json(path: str | Path) -> Any:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def _number_list(raw: Any, name: str) -> tuple[float, ...]:
    if not isinstance(raw, list):
        raise ScenarioFormatError(f"field 'channels.{name}' must be a list")
    out = []
    for k, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ScenarioFormatError(f"field 'channels.{name}[{k}]' must be a number, got {v!r}")
        out.append(float(v))
    return tuple(out)


def load_scenario(path: str | Path) -> tuple[SystemParams, ChannelRealization]:
    raw = _read_json(path)
    if not isinstance(raw, dict) or "params" not in raw or "channels" not in raw:
        raise ScenarioFormatError(f"{path}: top-level keys 'params' and 'channels' are required")
    params = params_from_dict(raw["params"])
    ch = raw["channels"]
    if not isinstance(ch, dict):
        raise ScenarioFormatError(f"{path}: field 'channels' must be an object")
    for key in ("gains", "distances"):
        if key not in ch:
            raise ScenarioFormatError(f"{path}: missing field 'channels.{key}'")
    seed = ch.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ScenarioFormatError(f"{path}: field 'channels.seed' must be an integer or null")
    channels = ChannelRealization(
        gains=_number_list(ch["gains"], "gains"),
        distances=_number_list(ch["distances"], "distances"),
        seed=seed,
    )
    if channels.num_users != params.num_users:
        raise ParameterError(
            f"{path}: params.K = {params.num_users} but {channels.num_users} gains given"
        )
    return params, channels


def load_config(path: str | Path) -> SystemParams:
    """Read parameter overrides from a config file sharing the scenario schema.

    Only the ``params`` object is used; missing keys keep their defaults.
    """
    raw = _read_json(path)
    if not isinstance(raw, dict):
        raise ScenarioFormatError(f"{path}: expected an object")
    return params_from_dict(raw.get("params", {}), partial=True)
