"""Flat ``key=value`` experiment configuration.

One pair per line, ``#`` starts a comment.  Every error names the offending
line.  Keys left out take the experiment's own defaults, which are set to the
acceptance scale.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from .errors import ConfigurationError

EXPERIMENTS = (
    "invariance",
    "spectral-gap",
    "contraction",
    "kernel-check",
    "regularity",
    "poincare",
    "eta-dissipativity",
    "long-run",
    "sampler-oracle",
)

_DEFAULTS = {
    "invariance": {"n_outer": 2000, "t_end": 1.0, "n_chains": 500, "burn_in": 2000},
    "spectral-gap": {"n_outer": 5000, "t_end": 2.0, "n_chains": 500, "burn_in": 2000},
    "contraction": {"n_outer": 100, "t_end": 3.0},
    "kernel-check": {"n_outer": 5, "t_end": 0.5},
    "regularity": {"n_modes": 63, "n_outer": 2000, "t_end": 5.0},
    "poincare": {"n_outer": 20000, "n_chains": 500, "burn_in": 2000},
    "eta-dissipativity": {"n_modes": 31, "n_outer": 1000, "eta": 5.0, "n_chains": 200, "burn_in": 2000},
    "long-run": {"n_modes": 31, "n_outer": 20, "t_end": 100.0, "n_chains": 20, "burn_in": 3000},
    "sampler-oracle": {"n_outer": 20000, "n_chains": 200, "burn_in": 2000},
}

_SCHEMES = ("exponential-euler", "tamed-exponential-euler")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment parameters.

    ``n_outer`` is the outer Monte-Carlo size of the experiment (trajectories,
    coupled pairs, samples); ``gamma_scan`` and ``eta_scan`` are the parameter
    sweeps of the contraction and eta experiments; ``linear`` switches the
    nonlinearity off where that is meaningful.
    """

    experiment: str
    gamma: float = 1.0
    eta: float = 0.0
    n_modes: int = 15
    quad_size: int | None = None
    dt: float = 1e-3
    t_end: float = 1.0
    n_chains: int = 100
    n_outer: int = 1000
    burn_in: int = 10_000
    thinning: int = 10
    pcn_beta: float = 0.5
    seed: int = 0
    out_dir: str = "out"
    scheme: str = "exponential-euler"
    linear: bool = False
    gamma_scan: tuple = (0.5, 1.0, 2.0)
    eta_scan: tuple = (2.0, 5.0)

    @property
    def m_nodes(self) -> int:
        return 2 * self.n_modes + 2 if self.quad_size is None else self.quad_size

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gamma_scan"] = list(self.gamma_scan)
        d["eta_scan"] = list(self.eta_scan)
        return d


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    vals = tuple(float(v) for v in text.split(",") if v.strip())
    if not vals:
        raise ValueError("empty list")
    return vals


_PARSERS = {
    "experiment": str, "scheme": str, "out_dir": str,
    "gamma": float, "eta": float, "dt": float, "t_end": float, "pcn_beta": float,
    "n_modes": int, "quad_size": int, "n_chains": int, "n_outer": int, "burn_in": int,
    "thinning": int, "seed": int, "linear": _bool, "gamma_scan": _floats, "eta_scan": _floats,
}


def _check(key, value, line):
    def bad(msg):
        raise ConfigurationError(f"line {line}: {key}: {msg}")

    if key == "experiment" and value not in EXPERIMENTS:
        bad(f"unknown experiment {value!r}; expected one of {', '.join(EXPERIMENTS)}")
    if key == "scheme" and value not in _SCHEMES:
        bad(f"unknown scheme {value!r}")
    if key in ("gamma", "dt", "t_end") and not value > 0:
        bad("must be > 0")
    if key == "eta" and value < 0:
        bad("must be >= 0")
    if key in ("n_chains", "n_outer", "thinning", "quad_size") and value < 1:
        bad("must be >= 1")
    if key in ("n_modes", "burn_in") and value < 0:
        bad("must be >= 0")
    if key == "n_modes" and value > 255:
        bad("must be <= 255")
    if key == "pcn_beta" and not 0 < value <= 1:
        bad("must lie in (0, 1]")
    if key == "seed" and not 0 <= value < 2 ** 64:
        bad("must be an unsigned 64-bit integer")
    if key == "gamma_scan" and min(value) <= 0:
        bad("all entries must be > 0")
    if key == "eta_scan" and min(value) <= 0:
        bad("all entries must be > 0")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text.

    Raises
    ------
    ConfigurationError
        Unknown or duplicate key, malformed or out-of-range value, or missing
        ``experiment``; the message names the line.
    """
    values, where = {}, {}
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {i}: expected key=value, got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigurationError(f"line {i}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"line {i}: duplicate key {key!r}")
        try:
            parsed = _PARSERS[key](val)
        except ValueError as exc:
            raise ConfigurationError(f"line {i}: {key}: invalid value {val!r} ({exc})") from None
        _check(key, parsed, i)
        values[key], where[key] = parsed, i
    if "experiment" not in values:
        raise ConfigurationError(f"line {len(text.splitlines()) + 1}: missing required key 'experiment'")
    merged = dict(_DEFAULTS[values["experiment"]])
    merged.update(values)
    cfg = ExperimentConfig(**merged)
    if cfg.quad_size is not None and cfg.quad_size < 2 * cfg.n_modes + 2:
        line = where.get("quad_size")
        raise ConfigurationError(
            f"line {line}: quad_size: {cfg.quad_size} too small for n_modes={cfg.n_modes} "
            f"(needs >= {2 * cfg.n_modes + 2})"
        )
    if cfg.experiment == "eta-dissipativity" and cfg.eta <= 0:
        raise ConfigurationError(f"line {where.get('eta')}: eta: eta-dissipativity requires eta > 0")
    return cfg


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    kw = {k: v for k, v in kw.items() if v is not None}
    for k, v in kw.items():
        _check(k, v, "<cli>")
    return replace(cfg, **kw)
