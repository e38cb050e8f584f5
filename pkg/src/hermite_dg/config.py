"""Run configuration: YAML file, defaults for every key, environment overrides.

Environment variables ``VPFP_<SECTION>__<KEY>`` override file values, e.g.
``VPFP_TIME__DT=0.05`` or ``VPFP_SWEEP__TAU0_LIST="[10, 1000]"``. Values are
parsed as YAML scalars/sequences.
"""

import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError

__all__ = [
    "ENV_PREFIX",
    "EXPERIMENT_KINDS",
    "RunConfig",
    "load_config",
    "parse_config",
    "config_from_dict",
    "config_to_dict",
    "content_dict",
    "dump_config",
    "fingerprint",
    "apply_env_overrides",
]

ENV_PREFIX = "VPFP_"
EXPERIMENT_KINDS = ("single_run", "convergence_study", "regime_sweep", "invariant_battery")


@dataclass
class ModelSection:
    L: float = 4 * math.pi
    Nx: int = 64
    NH: int = 64
    m: int = 1
    T0: float = 1.0
    tau0: float = 10.0
    rho_inf: float = 1.0
    delta: float = 0.05
    #: relative random perturbation of interior nodes (0 gives a uniform mesh)
    mesh_jitter: float = 0.0


@dataclass
class PoissonSection:
    method: str = "ldg"
    #: LDG flux pair; ``null`` uses the transport flux choice
    ldg_flux: str = None


@dataclass
class TransportSection:
    flux: str = "minus_plus"


@dataclass
class TimeSection:
    dt: float = 0.1
    t_end: float = 1.0
    picard_tol: float = 1e-12
    picard_max_iters: int = 50
    nonlinear: bool = True


@dataclass
class FilterSection:
    enabled: bool = True
    alpha: float = 36.0
    order: int = 36
    cut: float = 2.0 / 3.0
    hard: bool = False


@dataclass
class DiagnosticsSection:
    alpha0: float = 0.0
    stride: int = 1
    #: ``[t0, t1]`` for the decay fits; ``null`` fits the whole run
    fit_window: list = None


@dataclass
class ExperimentSection:
    kind: str = "single_run"
    output_dir: str = "out"
    seed: int = 0
    snapshot_times: list = field(default_factory=list)
    snapshot_nx: int = 256
    snapshot_nv: int = 256
    #: velocity window is ``[-vmax_factor sqrt(T0), vmax_factor sqrt(T0)]``
    vmax_factor: float = 6.0


@dataclass
class ConvergenceSection:
    levels: list = field(default_factory=lambda: [[64, 64], [128, 128], [256, 256]])
    #: one step size per level
    dt: list = field(default_factory=lambda: [0.04, 0.02, 0.01])
    quadrature_points: int = 6
    tau0_list: list = field(default_factory=lambda: [10.0])


@dataclass
class SweepSection:
    tau0_list: list = field(default_factory=lambda: [10.0, 1e3, 1e5])


@dataclass
class BatterySection:
    size: int = 10
    nx_min: int = 8
    nx_max: int = 64
    degrees: list = field(default_factory=lambda: [0, 1, 2])
    NH: int = 6


SECTIONS = {
    "model": ModelSection,
    "poisson": PoissonSection,
    "transport": TransportSection,
    "time": TimeSection,
    "filter": FilterSection,
    "diagnostics": DiagnosticsSection,
    "experiment": ExperimentSection,
    "convergence": ConvergenceSection,
    "sweep": SweepSection,
    "battery": BatterySection,
}


@dataclass
class RunConfig:
    model: ModelSection = field(default_factory=ModelSection)
    poisson: PoissonSection = field(default_factory=PoissonSection)
    transport: TransportSection = field(default_factory=TransportSection)
    time: TimeSection = field(default_factory=TimeSection)
    filter: FilterSection = field(default_factory=FilterSection)
    diagnostics: DiagnosticsSection = field(default_factory=DiagnosticsSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    convergence: ConvergenceSection = field(default_factory=ConvergenceSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    battery: BatterySection = field(default_factory=BatterySection)

    def validate(self):
        m = self.model
        for name in ("L", "T0", "tau0", "rho_inf"):
            if not getattr(m, name) > 0:
                raise ConfigError(f"model.{name} must be positive")
        if m.Nx < 2 or m.NH < 1 or m.m < 0:
            raise ConfigError("model needs Nx >= 2, NH >= 1, m >= 0")
        if not 0 <= m.mesh_jitter < 0.5:
            raise ConfigError("model.mesh_jitter must lie in [0, 0.5)")
        if self.poisson.method not in ("ldg", "rt"):
            raise ConfigError("poisson.method must be 'ldg' or 'rt'")
        fluxes = ("minus_plus", "plus_minus")
        if self.transport.flux not in fluxes:
            raise ConfigError(f"transport.flux must be one of {fluxes}")
        if self.poisson.ldg_flux is not None and self.poisson.ldg_flux not in fluxes:
            raise ConfigError(f"poisson.ldg_flux must be null or one of {fluxes}")
        t = self.time
        if not t.dt > 0 or t.t_end < 0 or not t.picard_tol > 0 or t.picard_max_iters < 1:
            raise ConfigError("time needs dt > 0, t_end >= 0, picard_tol > 0, picard_max_iters >= 1")
        f = self.filter
        if f.order <= 0 or f.order % 2 or not 0 <= f.cut <= 1:
            raise ConfigError("filter.order must be even and positive, filter.cut in [0, 1]")
        if self.diagnostics.stride < 1 or self.diagnostics.alpha0 < 0:
            raise ConfigError("diagnostics.stride >= 1 and alpha0 >= 0 required")
        if self.experiment.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"experiment.kind must be one of {EXPERIMENT_KINDS}")
        c = self.convergence
        if len(c.dt) != len(c.levels) or len(c.levels) < 2:
            raise ConfigError("convergence.levels needs >= 2 entries and one dt per level")
        if self.battery.size < 0:
            raise ConfigError("battery.size must be non-negative")
        return self


def _key_lines(text):
    """Map ``section.key`` paths to 1-based line numbers of the YAML source."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    out = {}
    if not isinstance(node, yaml.MappingNode):
        return out
    for k, v in node.value:
        out[k.value] = k.start_mark.line + 1
        if isinstance(v, yaml.MappingNode):
            for kk, _ in v.value:
                out[f"{k.value}.{kk.value}"] = kk.start_mark.line + 1
    return out


def _coerce(section, name, value, where):
    ftype = {f.name: f.type for f in dataclasses.fields(section)}[name]
    default = getattr(section(), name)
    if value is None:
        if default is None:
            return None
        raise ConfigError(f"{where}: null not allowed")
    try:
        if ftype is bool or isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if ftype is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if ftype is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if ftype is str:
            if not isinstance(value, str):
                raise TypeError
            return value
        if ftype is list:
            if not isinstance(value, list):
                raise TypeError
            return value
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected {ftype.__name__}, got {value!r}") from None
    return value


def config_from_dict(data, lines=None) -> RunConfig:
    lines = lines or {}
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of sections")
    cfg = RunConfig()
    for sec_name, body in data.items():
        if sec_name not in SECTIONS:
            raise ConfigError(f"unknown section {sec_name!r}" + _at(lines, sec_name))
        if body is None:
            continue
        if not isinstance(body, dict):
            raise ConfigError(f"section {sec_name!r} must be a mapping" + _at(lines, sec_name))
        cls = SECTIONS[sec_name]
        known = {f.name for f in dataclasses.fields(cls)}
        sec = getattr(cfg, sec_name)
        for key, value in body.items():
            path = f"{sec_name}.{key}"
            if key not in known:
                raise ConfigError(f"unknown key {path!r}" + _at(lines, path))
            setattr(sec, key, _coerce(cls, key, value, path + _at(lines, path)))
    return cfg.validate()


def _at(lines, path):
    return f" (line {lines[path]})" if path in lines else ""


def parse_config(text, env=None) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"invalid YAML{where}: {getattr(exc, 'problem', exc)}") from None
    data = apply_env_overrides(data or {}, os.environ if env is None else env)
    return config_from_dict(data, _key_lines(text))


def load_config(path, env=None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, env)


def apply_env_overrides(data, env):
    data = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}
    for name, raw in sorted(env.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):]
        if "__" not in rest:
            raise ConfigError(f"environment override {name} must look like {ENV_PREFIX}SECTION__KEY")
        sec, key = rest.split("__", 1)
        sec, key = sec.lower(), key.lower()
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            raise ConfigError(f"environment override {name}: unparsable value {raw!r}") from None
        body = data.get(sec)
        if body is None:
            body = data[sec] = {}
        if not isinstance(body, dict):
            raise ConfigError(f"section {sec!r} must be a mapping")
        body[key] = value
    return data


def config_to_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=True, default_flow_style=None)


def content_dict(cfg: RunConfig) -> dict:
    """:func:`config_to_dict` without ``experiment.output_dir``, which only says where files go."""
    d = config_to_dict(cfg)
    d["experiment"].pop("output_dir")
    return d


def fingerprint(cfg: RunConfig) -> str:
    """Short SHA-256 of the canonical JSON form, output location excluded."""
    blob = json.dumps(content_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
