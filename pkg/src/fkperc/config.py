"""Experiment configuration: flat ``key = value`` files with strict validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

EXPERIMENTS = ("exact", "sample", "duality-verify", "theta", "decay", "event", "renorm", "lower-bound")
EVENT_NAMES = ("Uc", "Rgc", "Ogc", "Vc", "Zc", "Kc", "bve")
NEEDS_PQ = {e for e in EXPERIMENTS if e != "duality-verify"}
NEEDS_N = {"exact", "sample", "theta", "decay", "event", "lower-bound"}
MAX_SEED = (1 << 64) - 1


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry when there is one."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key

    def record(self) -> dict:
        return {"error": "invalid-config", "key": self.key, "message": str(self)}


@dataclass
class ExperimentConfig:
    experiment: str
    p: float | None = None
    q: float | None = None
    boundary: str = "free"
    n: list = field(default_factory=list)
    N: list = field(default_factory=list)
    event: str = "Uc"
    g_family: str = "log"
    g_coef: float = 4.0
    eps: float = 0.1
    delta: float = 0.1
    theta_ref: str = "estimate"
    replicas: int = 10000
    sweeps: int | None = None
    burn_in: int | None = None
    seed: int = 0
    out: str = "results"

    def theta_value(self) -> float | None:
        return None if self.theta_ref == "estimate" else float(self.theta_ref)

    def echo(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


KEYS = tuple(f.name for f in fields(ExperimentConfig))


def _int(key, v):
    try:
        return int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {v!r}", key) from None


def _float(key, v):
    try:
        x = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {v!r}", key) from None
    if not math.isfinite(x):
        raise ConfigError(f"{key} must be finite", key)
    return x


def _int_list(key, v):
    if isinstance(v, (list, tuple)):
        items = list(v)
    else:
        items = [s for s in str(v).replace(",", " ").split() if s]
    return [_int(key, s) for s in items]


def parse_text(text: str) -> dict:
    """Raw ``key -> value`` strings; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        if k not in KEYS:
            raise ConfigError(f"unknown key {k!r}", k)
        if k in out:
            raise ConfigError(f"duplicate key {k!r}", k)
        out[k] = v
    return out


def build_config(raw: dict) -> ExperimentConfig:
    """Typed, validated configuration from raw values."""
    for k in raw:
        if k not in KEYS:
            raise ConfigError(f"unknown key {k!r}", k)
    if "experiment" not in raw:
        raise ConfigError("missing required key 'experiment'", "experiment")
    exp = str(raw["experiment"])
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {exp!r}", "experiment")
    required = (["p", "q"] if exp in NEEDS_PQ else []) + (["n"] if exp in NEEDS_N else [])
    if exp == "renorm":
        required.append("N")
    for k in required:
        if k not in raw or raw[k] in ("", None, []):
            raise ConfigError(f"missing required key {k!r}", k)

    cfg = ExperimentConfig(exp)
    if "p" in raw:
        cfg.p = _float("p", raw["p"])
        if not 0.0 <= cfg.p <= 1.0:
            raise ConfigError("p must lie in [0, 1]", "p")
    if "q" in raw:
        cfg.q = _float("q", raw["q"])
        if cfg.q < 1.0:
            raise ConfigError("q must be at least 1", "q")
    if "boundary" in raw:
        cfg.boundary = str(raw["boundary"])
        if cfg.boundary not in ("free", "wired"):
            raise ConfigError("boundary must be 'free' or 'wired'", "boundary")
    if "n" in raw:
        cfg.n = _int_list("n", raw["n"])
        if any(v < 1 for v in cfg.n):
            raise ConfigError("every n must be at least 1", "n")
    if "N" in raw:
        cfg.N = _int_list("N", raw["N"])
        if any(v < 24 for v in cfg.N):
            raise ConfigError("every N must be at least 24", "N")
    if "event" in raw:
        cfg.event = str(raw["event"])
        if cfg.event not in EVENT_NAMES:
            raise ConfigError(f"event must be one of {EVENT_NAMES}", "event")
    if "g_family" in raw:
        cfg.g_family = str(raw["g_family"])
        if cfg.g_family not in ("log", "sqrt"):
            raise ConfigError("g_family must be 'log' or 'sqrt'", "g_family")
    if "g_coef" in raw:
        cfg.g_coef = _float("g_coef", raw["g_coef"])
        if cfg.g_coef <= 0:
            raise ConfigError("g_coef must be positive", "g_coef")
    for k in ("eps", "delta"):
        if k in raw:
            v = _float(k, raw[k])
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{k} must lie in (0, 1)", k)
            setattr(cfg, k, v)
    if "theta_ref" in raw:
        t = str(raw["theta_ref"])
        if t != "estimate":
            v = _float("theta_ref", t)
            if not 0.0 <= v <= 1.0:
                raise ConfigError("theta_ref must be 'estimate' or lie in [0, 1]", "theta_ref")
            t = repr(v)
        cfg.theta_ref = t
    if "replicas" in raw:
        cfg.replicas = _int("replicas", raw["replicas"])
        if cfg.replicas < 1:
            raise ConfigError("replicas must be at least 1", "replicas")
    for k in ("sweeps", "burn_in"):
        if k in raw and raw[k] not in ("", None):
            v = _int(k, raw[k])
            if v < (1 if k == "sweeps" else 0):
                raise ConfigError(f"{k} is out of range", k)
            setattr(cfg, k, v)
    if "seed" in raw:
        cfg.seed = _int("seed", raw["seed"])
        if not 0 <= cfg.seed <= MAX_SEED:
            raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
    if "out" in raw:
        cfg.out = str(raw["out"])
    if exp == "renorm":
        for N in cfg.N:
            for n in cfg.n:
                if n < 3 * N:
                    raise ConfigError(f"B({n}) is not {N}-large", "n")
    if exp == "event" and cfg.event == "Zc":
        if len(cfg.N) != 1:
            raise ConfigError("event Zc needs exactly one block scale N", "N")
        if any(n < 3 * cfg.N[0] for n in cfg.n):
            raise ConfigError(f"every n must be at least 3N = {3 * cfg.N[0]}", "n")
    return cfg


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read())
