"""Experiment configuration, presets and the flat ``key = value`` file format."""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .pde.problems import PROBLEMS
from .scoring import METHODS

MODES = ("add", "replace")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "diffusion"
    method: str = "pinnfluence"
    mode: str = "add"
    hidden: Optional[tuple] = None          # defaults to the problem's architecture
    n_cand: int = 10_000
    n_train: int = 30
    n_new: int = 1
    alpha: float = 2.0
    c: float = 0.0
    cycles: int = 100
    pretrain_iters: int = 0
    adam_iters: int = 1000
    lbfgs_iters: int = 1000
    adam_lr: float = 1e-3
    lbfgs_history: int = 50
    lbfgs_torch_style: bool = False
    seed: int = 0
    model_seed: Optional[int] = None
    sampling_seed: Optional[int] = None
    scoring_seed: Optional[int] = None
    projection_dim: int = 64
    top_k: int = 32
    rel_tol: float = 1e-6
    rel_damping: float = 1e-3
    n_test: int = 1000
    discard_negative: bool = False
    n_eval: int = 10_000
    save_scores: bool = False
    pde: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.hidden is not None:
            object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "pde", dict(self.pde))
        self.validate()

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; expected one of "
                              f"{'|'.join(PROBLEMS)}")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {'|'.join(METHODS)}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be add or replace, got {self.mode!r}")
        if self.mode == "replace" and self.n_new != self.n_train:
            raise ConfigError(f"replace mode needs n_new == n_train ({self.n_new} != {self.n_train})")
        for name in ("n_cand", "n_train", "projection_dim", "n_test", "n_eval", "lbfgs_history"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("n_new", "cycles", "pretrain_iters", "adam_iters", "lbfgs_iters", "top_k"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.method != "static" and self.n_new > self.n_cand:
            raise ConfigError("n_new cannot exceed n_cand")
        if self.alpha < 0 or self.c < 0:
            raise ConfigError("alpha and c must be non-negative")
        if self.top_k > self.projection_dim:
            raise ConfigError("top_k cannot exceed projection_dim")
        if self.hidden is not None and (not self.hidden or min(self.hidden) < 1):
            raise ConfigError("hidden widths must be positive")
        known = {f.name for f in fields(PROBLEMS[self.problem])}
        unknown = set(self.pde) - known
        if unknown:
            raise ConfigError(f"{self.problem} has no coefficient(s) {sorted(unknown)}; "
                              f"known: {sorted(known)}")

    # derived values
    @property
    def architecture(self):
        return self.hidden if self.hidden is not None else PROBLEMS[self.problem].hidden

    def seed_for(self, stream):
        own = getattr(self, f"{stream}_seed")
        return self.seed if own is None else own

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["hidden"] = list(self.hidden) if self.hidden is not None else None
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**{**d, "hidden": tuple(d["hidden"]) if d.get("hidden") else None})

    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def derive_seed(base, purpose, *keys):
    """Independent integer seed for a named purpose (and e.g. a cycle index)."""
    tag = [ord(ch) for ch in purpose]
    ss = np.random.SeedSequence([int(base), len(tag), *tag, *(int(k) for k in keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _preset(problem, mode):
    small = problem == "diffusion"
    n_train = 30 if small else 1000
    n_new = n_train if mode == "replace" else (1 if small else 10)
    alpha, c = (2.0, 0.0) if mode == "add" else (1.0, 1.0)
    return dict(problem=problem, mode=mode, n_train=n_train, n_new=n_new, alpha=alpha, c=c,
                n_cand=10_000, cycles=100, adam_iters=1000, lbfgs_iters=1000)


PRESETS = {f"paper_{p}_{m}": _preset(p, m) for p in PROBLEMS for m in MODES}


# flat key = value parsing ------------------------------------------------------

_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_INT = {"n_cand", "n_train", "n_new", "cycles", "pretrain_iters", "adam_iters", "lbfgs_iters",
        "lbfgs_history", "seed", "projection_dim", "top_k", "n_test", "n_eval"}
_OPT_INT = {"model_seed", "sampling_seed", "scoring_seed"}
_FLOAT = {"alpha", "c", "adam_lr", "rel_tol", "rel_damping"}
_BOOL = {"lbfgs_torch_style", "discard_negative", "save_scores"}


def _parse_bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def parse_value(key, text):
    """Convert the string ``text`` for config key ``key``; raises ``ConfigError``."""
    text = text.strip()
    try:
        if key.startswith("pde."):
            return float(text)
        if key in _INT:
            return int(text)
        if key in _OPT_INT:
            return None if text.lower() in ("", "none") else int(text)
        if key in _FLOAT:
            return float(text)
        if key in _BOOL:
            return _parse_bool(text)
        if key == "hidden":
            if text.lower() in ("", "none", "default"):
                return None
            return tuple(int(v) for v in text.split(",") if v.strip())
        if key in ("problem", "method", "mode", "preset"):
            return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None
    raise ConfigError(f"unknown key {key!r}")


def _parse_lines(lines, source):
    """Yield ``(lineno, key, value_text)`` from ``key = value`` lines."""
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        yield n, key, value


def _apply(values, lineno_of, key, text, where):
    if key != "preset" and key not in _FIELDS and not key.startswith("pde."):
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        value = parse_value(key, text)
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    if key.startswith("pde."):
        values.setdefault("pde", {})[key[4:]] = value
    else:
        values[key] = value
    lineno_of[key] = where


def parse_config(file=None, overrides=(), text=None):
    """Build a validated :class:`ExperimentConfig`.

    ``file`` (or literal ``text``) holds ``key = value`` lines with ``#``
    comments; ``preset = <name>`` loads a named preset first regardless of
    its position.  ``overrides`` are ``key=value`` strings applied last.
    """
    source = str(file) if file is not None else "<config>"
    if file is not None:
        text = Path(file).read_text()
    entries = list(_parse_lines((text or "").splitlines(), source))
    for i, ov in enumerate(overrides, 1):
        if "=" not in ov:
            raise ConfigError(f"--set #{i}: expected key=value, got {ov!r}")
        key, value = (s.strip() for s in ov.split("=", 1))
        entries.append((f"--set {ov}", key, value))

    values, where = {}, {}
    preset = None
    for n, key, value in entries:
        loc = f"{source}:{n}" if isinstance(n, int) else n
        if key == "preset":
            if value not in PRESETS:
                raise ConfigError(f"{loc}: unknown preset {value!r}; expected one of "
                                  f"{'|'.join(PRESETS)}")
            preset = value
            continue
        _apply(values, where, key, value, loc)

    merged = dict(PRESETS[preset]) if preset else {}
    pde = {**merged.pop("pde", {}), **values.pop("pde", {})}
    merged.update(values)
    merged["pde"] = pde
    try:
        return ExperimentConfig(**merged)
    except ConfigError as exc:
        # point at the line that set the offending value when we can tell
        hint = next((where[k] for k in where if k in str(exc)), source)
        raise ConfigError(f"{hint}: {exc}") from None


def dump_config(cfg):
    """Serialize ``cfg`` in the flat file format (round-trips through :func:`parse_config`)."""
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if f.name == "pde":
            lines += [f"pde.{k} = {float(val)!r}" for k, val in sorted(v.items())]
            continue
        if f.name == "hidden":
            v = "none" if v is None else ",".join(map(str, v))
        elif v is None:
            v = "none"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
