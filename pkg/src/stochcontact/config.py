"""Experiment configuration.

Config files are flat ``key = value`` text, one key per line; ``#`` starts a
comment, lists are comma separated, booleans are true/false. Example::

    # damped free particle, reference data
    horizon = 20.0
    n_steps = 200
    schemes = euler_maruyama, herglotz_contact
    ladder = 0.02, 0.04, 0.06, 0.08, 0.10
"""

import configparser
import dataclasses
import hashlib
from dataclasses import dataclass, field, fields

from .core import OscillatorParams, PhaseState, constant_omega, make_oscillator
from .errors import ConfigurationError
from .hj import HJConfig
from .integrators import SchemeId, SchemeOptions
from .oracle import OracleConfig

_POLICIES = {"error": "error", "clamp": "clamp_to_zero", "clamp_to_zero": "clamp_to_zero"}


@dataclass
class ExperimentConfig:
    mass: float = 1.0
    gamma: float = 1.0
    omega: float = 0.0
    a: float = 1.0
    q0: float = 0.75
    p0: float = -0.25
    s0: float = 0.08
    x0: float = 0.65
    y0: float = 0.65
    z0: float = 0.65
    horizon: float = 20.0
    n_steps: int = 200
    ladder: tuple = (0.02, 0.04, 0.06, 0.08, 0.10)
    ladder_horizon: float = 120.0
    n_paths: int = 1
    seed: int = 42
    schemes: tuple = ("euler_maruyama", "herglotz_contact")
    hj_mode: str = "printed"
    hj_policy: str = "error"
    hj_branch: str = "plus"
    em_drift_correction: str = "paper"
    herglotz_variant: str = "printed"
    oracle_k: int = 7
    fd_eps: float = 1e-6
    checkpoint_interval: float = 2.0
    zero_noise: bool = False
    out: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.n_steps < 0:
            raise ConfigurationError("n_steps must be >= 0")
        if self.n_steps > 0 and not self.horizon > 0:
            raise ConfigurationError("horizon must be positive")
        if self.n_paths < 1:
            raise ConfigurationError("n_paths must be >= 1")
        if self.hj_policy not in _POLICIES:
            raise ConfigurationError(f"hj_policy must be error|clamp, got {self.hj_policy!r}")
        self.schemes = tuple(SchemeId.parse(s).value for s in self.schemes)
        self.scheme_options()
        self.oracle_config()
        self.system()

    @property
    def h(self):
        return self.horizon / self.n_steps if self.n_steps else 0.0

    def system(self):
        return make_oscillator(OscillatorParams(self.mass, self.gamma, constant_omega(self.omega), self.a))

    def initial(self):
        return PhaseState(self.q0, self.p0, self.s0)

    def hj_config(self):
        return HJConfig(self.x0, self.y0, self.z0, self.hj_branch, _POLICIES[self.hj_policy], self.hj_mode)

    def scheme_options(self):
        return SchemeOptions(self.em_drift_correction, self.herglotz_variant, self.hj_config())

    def oracle_config(self):
        return OracleConfig(self.oracle_k)

    def canonical_text(self):
        """One ``key = value`` line per field in declaration order; excludes
        ``out`` so the hash depends on the experiment only."""
        lines = []
        for f in fields(self):
            if f.name == "out":
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ", ".join(_render(x) for x in v)
            lines.append(f"{f.name} = {_render(v)}")
        return "\n".join(lines) + "\n"

    def digest(self):
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


def _render(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _convert(name, raw, default):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            items = [x.strip() for x in raw.split(",") if x.strip()]
            if default and isinstance(default[0], float):
                return tuple(float(x) for x in items)
            return tuple(items)
        return raw
    except ValueError:
        raise ConfigurationError(f"bad value for {name}: {raw!r}") from None


_DEFAULTS = {f.name: (f.default if f.default is not dataclasses.MISSING else f.default_factory())
             for f in fields(ExperimentConfig)}


def parse_config_text(text):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse config: {exc}") from None
    values = {}
    for key, raw in parser["experiment"].items():
        if key not in _DEFAULTS:
            raise ConfigurationError(f"unknown config key {key!r}")
        values[key] = _convert(key, raw, _DEFAULTS[key])
    return values


def load_config(path=None, **overrides):
    values = {}
    if path is not None:
        try:
            with open(path) as fh:
                values = parse_config_text(fh.read())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)
