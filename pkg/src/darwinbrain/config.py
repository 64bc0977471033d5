"""Run configuration: one flat dataclass, loadable from a ``key = value`` file."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class Config:
    # assessment
    k_min: int = 5
    t_steps: int = 100
    dt: float = 0.1
    max_trial_factor: int = 3
    # actor evolution
    population_size: int = 8
    rate_a: float = 0.3
    rate_m: float = 0.05
    crossover_rate: float = 0.1
    tournament_size: int = 2
    specific_sigma: float = 0.05
    max_atoms_per_molecule: int = 12
    # game evolution
    game_population_size: int = 0  # 0 = keep the scenario's initial size
    game_rate_a: float = 0.3
    # path competition
    oja_eta: float = 0.1
    baseline_rate: float = 0.1
    # long-term memory
    ltm_lambda_scale: float = 0.5
    theta_fix: float = 0.9
    g_fix: int = 10
    # atom defaults
    shc_sigma: float = 0.1
    shc_p_w: float = 0.05
    fm_hidden: int = 8
    fm_lr: float = 0.05
    mi_window: int = 256
    mi_bins: int = 8
    # body
    link1: float = 1.0
    link2: float = 1.0
    joint_min: float = -math.pi / 2
    joint_max: float = math.pi
    v_max: float = 1.0
    obstruction_lo: float = 0.45
    obstruction_hi: float = 0.60

    def __post_init__(self):
        for name in ("rate_a", "rate_m", "crossover_rate", "game_rate_a", "theta_fix"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.oja_eta <= 0:
            raise ValueError("oja_eta must be positive")
        if self.k_min < 1 or self.t_steps < 1 or self.dt <= 0:
            raise ValueError("k_min, t_steps and dt must be positive")
        if self.mi_bins < 2:
            raise ValueError("mi_bins must be at least 2")

    def updated(self, **kw) -> "Config":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return asdict(self)


class ConfigError(ValueError):
    pass


def parse_config(text: str, base: Config | None = None) -> Config:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys fail."""
    base = base or Config()
    types = {f.name: f.type for f in fields(Config)}
    kw = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        try:
            kw[key] = int(val) if types[key] in ("int", int) else float(val)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key}: {val!r}") from None
    try:
        return replace(base, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, base: Config | None = None) -> Config:
    with open(path) as fh:
        return parse_config(fh.read(), base)


def dump_config(cfg: Config) -> str:
    return "".join(f"{k} = {v!r}\n" for k, v in cfg.as_dict().items())
