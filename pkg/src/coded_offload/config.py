"""System configuration, simulator knobs and their JSON form.

Rationals travel as ``{"num": int, "den": int}``. Plain JSON numbers and
``"a/b"`` strings are also accepted on input and converted exactly.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from .errors import ValidationError

RATE_MODELS = ("deterministic-dof", "fading-average")


def to_fraction(value: Any) -> Fraction:
    """Exact conversion; floats go through their shortest repr so 8.5 -> 17/2."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValidationError(f"expected a number, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, dict):
        if set(value) != {"num", "den"}:
            raise ValidationError(f"rational must have exactly num/den keys, got {sorted(value)}")
        num, den = value["num"], value["den"]
        if not (isinstance(num, int) and isinstance(den, int)) or isinstance(num, bool) or den == 0:
            raise ValidationError(f"bad rational {value!r}")
        return Fraction(num, den)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError:
            raise ValidationError(f"cannot parse {value!r} as a rational") from None
    raise ValidationError(f"expected a number, got {type(value).__name__}")


def fraction_json(x: Fraction) -> dict:
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator}


def _as_int(name, value):
    if isinstance(value, bool):
        raise ValidationError(f"{name} must be an integer")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        try:
            return int(value)
        except ValueError:
            pass
    raise ValidationError(f"{name} must be an integer, got {value!r}")


def _as_float(name, value):
    if isinstance(value, bool):
        raise ValidationError(f"{name} must be a number")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, (str, dict, Fraction)):
        return float(to_fraction(value))
    raise ValidationError(f"{name} must be a number, got {value!r}")


@dataclass(frozen=True)
class NetworkConfig:
    """Network tuple.

    ``eta`` is the inverse mean time of one row-vector product (1/s).
    ``delta_c`` and ``delta_d`` weight the NCT and NDLT in the end-to-end time.
    """

    M: int
    K: int
    mu: Fraction
    N: int = 1
    n: int = 1
    m: int = 1
    B: int = 8
    eta: float = 1.0
    delta_c: Fraction = Fraction(0)
    delta_d: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("M", "K", "N", "n", "m", "B"):
            v = _as_int(name, getattr(self, name))
            if v < 1:
                raise ValidationError(f"{name} must be >= 1, got {v}")
            object.__setattr__(self, name, v)
        mu = to_fraction(self.mu)
        if not Fraction(1, self.K) <= mu <= 1:
            raise ValidationError(f"mu must lie in [1/K, 1] = [1/{self.K}, 1], got {mu}")
        object.__setattr__(self, "mu", mu)
        eta = _as_float("eta", self.eta)
        if not eta > 0:
            raise ValidationError(f"eta must be > 0, got {eta}")
        object.__setattr__(self, "eta", eta)
        for name in ("delta_c", "delta_d"):
            v = to_fraction(getattr(self, name))
            if v < 0:
                raise ValidationError(f"{name} must be >= 0, got {v}")
            object.__setattr__(self, name, v)

    @property
    def storage_units(self) -> int:
        """K*mu as an integer; non-grid storage fractions are rejected."""
        total = self.K * self.mu
        if total.denominator != 1:
            lo, hi = total.numerator // total.denominator, -(-total.numerator // total.denominator)
            raise ValidationError(
                f"K*mu = {total} is not an integer; a single scheme needs mu in "
                f"{{1/K, ..., 1}} (memory/time sharing between K*mu = {lo} and {hi} "
                f"is a region statement, not an executable scheme)"
            )
        return int(total)

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "K": self.K,
            "mu": fraction_json(self.mu),
            "N": self.N,
            "n": self.n,
            "m": self.m,
            "B": self.B,
            "eta": self.eta,
            "delta_c": fraction_json(self.delta_c),
            "delta_d": fraction_json(self.delta_d),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        missing = {"M", "K", "mu"} - set(data)
        if missing:
            raise ValidationError(f"missing required config keys: {sorted(missing)}")
        return cls(**data)


@dataclass(frozen=True)
class SimParams:
    """Monte Carlo knobs. SNRs are linear, bandwidths in Hz."""

    trials: int = 10_000
    seed: int = 0
    rate_model: str = "deterministic-dof"
    P_u: float = 100.0
    P_d: float = 100.0
    W_u: float = 1e5
    W_d: float = 1e5
    fading_samples: int = 16

    def __post_init__(self):
        trials = _as_int("trials", self.trials)
        if trials < 1:
            raise ValidationError("trials must be >= 1")
        object.__setattr__(self, "trials", trials)
        seed = _as_int("seed", self.seed)
        if not 0 <= seed < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "seed", seed)
        if self.rate_model not in RATE_MODELS:
            raise ValidationError(f"rate_model must be one of {RATE_MODELS}, got {self.rate_model!r}")
        for name in ("P_u", "P_d", "W_u", "W_d"):
            v = _as_float(name, getattr(self, name))
            if not v > 0:
                raise ValidationError(f"{name} must be > 0, got {v}")
            object.__setattr__(self, name, v)
        fs = _as_int("fading_samples", self.fading_samples)
        if fs < 1:
            raise ValidationError("fading_samples must be >= 1")
        object.__setattr__(self, "fading_samples", fs)

    def replace(self, **changes) -> "SimParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SimParams":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown sim keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class RunConfig:
    network: NetworkConfig
    sim: SimParams = field(default_factory=SimParams)

    def to_dict(self) -> dict:
        d = self.network.to_dict()
        d["sim"] = self.sim.to_dict()
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ValidationError("config document must be a JSON object")
        data = dict(data)
        sim = SimParams.from_dict(data.pop("sim", {}) or {})
        return cls(NetworkConfig.from_dict(data), sim)

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def load_config(path, overrides=()) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    return RunConfig.from_dict(apply_overrides(data, overrides))


_NETWORK_TYPES = {
    "M": "int", "K": "int", "N": "int", "n": "int", "m": "int", "B": "int",
    "mu": "rational", "delta_c": "rational", "delta_d": "rational", "eta": "float",
}
_SIM_TYPES = {
    "trials": "int", "seed": "int", "fading_samples": "int", "rate_model": "str",
    "P_u": "float", "P_d": "float", "W_u": "float", "W_d": "float",
}


def _coerce(key, kind, raw: str):
    if kind == "int":
        return _as_int(key, raw)
    if kind == "float":
        return _as_float(key, raw)
    if kind == "rational":
        return fraction_json(to_fraction(raw))
    return raw


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``key=value`` strings; ``sim.<field>`` addresses simulator knobs."""
    out = json.loads(json.dumps(data))
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        if key.startswith("sim."):
            sub = key[4:]
            if sub not in _SIM_TYPES:
                raise ValidationError(f"unknown override key {key!r}")
            out.setdefault("sim", {})[sub] = _coerce(key, _SIM_TYPES[sub], raw)
        elif key in _NETWORK_TYPES:
            out[key] = _coerce(key, _NETWORK_TYPES[key], raw)
        else:
            raise ValidationError(f"unknown override key {key!r}")
    return out
