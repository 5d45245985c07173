"""JSON configuration, scenario presets and run manifests."""

from __future__ import annotations

import hashlib
import json
import math
import platform
from dataclasses import fields

import numpy as np

from .errors import ConfigError
from .model import DrudeHalfSpace, Emitter, LorentzianBath, SystemConfig, Tolerances, Vacuum

SCHEMA_VERSION = 1

_TOP_KEYS = {"schema_version", "emitters", "environment", "initial", "method", "rwa", "t_max", "dt",
             "omega_min", "omega_max", "n_omega", "tau_max", "tolerances", "n_pseudomodes"}
_EMITTER_KEYS = {"position", "omega", "dipole"}
_ENV_KEYS = {
    "vacuum": {"kind"},
    "drude": {"kind", "omega_p", "gamma", "reading"},
    "lorentzian": {"kind", "omega_c", "width", "coupling", "omega_lo", "omega_hi"},
}
_TOL_KEYS = {f.name for f in fields(Tolerances)}


class ConfigFormatError(ConfigError):
    """Malformed or unrecognised configuration content."""


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigFormatError(f"{where}: expected an object, got {type(d).__name__}")
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigFormatError(f"{where}: unknown key(s) {', '.join(extra)}")


def _number(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigFormatError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _vector(v, where):
    if not isinstance(v, list) or len(v) != 3:
        raise ConfigFormatError(f"{where}: expected a list of 3 numbers")
    return tuple(_number(x, f"{where}[{i}]") for i, x in enumerate(v))


def _amplitude(x, where):
    # a plain number or [re, im]
    if isinstance(x, list):
        if len(x) != 2:
            raise ConfigFormatError(f"{where}: complex amplitudes are written [re, im]")
        return complex(_number(x[0], where), _number(x[1], where))
    return complex(_number(x, where))


def _environment(d):
    if d is None:
        return Vacuum()
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigFormatError("environment: expected an object with a 'kind' field")
    kind = d["kind"]
    if kind not in _ENV_KEYS:
        raise ConfigFormatError(f"environment.kind: unknown environment {kind!r}")
    _check_keys(d, _ENV_KEYS[kind], "environment")
    if kind == "vacuum":
        return Vacuum()
    if kind == "drude":
        if "reading" in d:
            if "omega_p" in d or "gamma" in d:
                raise ConfigFormatError("environment: give either 'reading' or omega_p/gamma, not both")
            try:
                return DrudeHalfSpace.from_reading(d["reading"])
            except ValueError as exc:
                raise ConfigFormatError(f"environment.reading: {exc}") from None
        return DrudeHalfSpace(_number(d.get("omega_p", 5.0), "environment.omega_p"),
                              _number(d.get("gamma", 0.1), "environment.gamma"))
    missing = sorted(_ENV_KEYS["lorentzian"] - set(d))
    if missing:
        raise ConfigFormatError(f"environment: missing {', '.join(missing)}")
    return LorentzianBath(*(_number(d[k], f"environment.{k}")
                            for k in ("omega_c", "width", "coupling", "omega_lo", "omega_hi")))


def config_from_dict(d) -> SystemConfig:
    """Build a :class:`SystemConfig` from parsed JSON. Unknown keys are errors."""
    _check_keys(d, _TOP_KEYS, "config")
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigFormatError(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    ems = d.get("emitters")
    if not isinstance(ems, list) or not ems:
        raise ConfigFormatError("emitters: expected a non-empty list")
    emitters = []
    for i, e in enumerate(ems):
        where = f"emitters[{i}]"
        _check_keys(e, _EMITTER_KEYS, where)
        missing = sorted(_EMITTER_KEYS - set(e))
        if missing:
            raise ConfigFormatError(f"{where}: missing {', '.join(missing)}")
        emitters.append(Emitter(_vector(e["position"], where + ".position"),
                                _number(e["omega"], where + ".omega"),
                                _vector(e["dipole"], where + ".dipole")))
    kw = {"emitters": tuple(emitters), "environment": _environment(d.get("environment"))}
    if d.get("initial") is not None:
        if not isinstance(d["initial"], list):
            raise ConfigFormatError("initial: expected a list")
        kw["initial"] = tuple(_amplitude(x, f"initial[{i}]") for i, x in enumerate(d["initial"]))
    if "method" in d:
        kw["method"] = str(d["method"])
    if "rwa" in d:
        if not isinstance(d["rwa"], bool):
            raise ConfigFormatError("rwa: expected true or false")
        kw["rwa"] = d["rwa"]
    for k in ("t_max", "dt", "omega_min"):
        if k in d:
            kw[k] = _number(d[k], k)
    for k in ("omega_max", "tau_max"):
        if d.get(k) is not None:
            kw[k] = _number(d[k], k)
    for k in ("n_omega", "n_pseudomodes"):
        if d.get(k) is not None:
            if isinstance(d[k], bool) or not isinstance(d[k], int):
                raise ConfigFormatError(f"{k}: expected an integer")
            kw[k] = d[k]
    if "tolerances" in d:
        _check_keys(d["tolerances"], _TOL_KEYS, "tolerances")
        kw["tolerances"] = Tolerances(**{k: _number(v, f"tolerances.{k}") for k, v in d["tolerances"].items()})
    return SystemConfig(**kw)


def _env_dict(env):
    if isinstance(env, Vacuum):
        return {"kind": "vacuum"}
    if isinstance(env, DrudeHalfSpace):
        return {"kind": "drude", "omega_p": float(env.omega_p), "gamma": float(env.gamma)}
    return {"kind": "lorentzian", **{k: float(getattr(env, k))
                                     for k in ("omega_c", "width", "coupling", "omega_lo", "omega_hi")}}


def config_to_dict(cfg: SystemConfig, *, resolved=False):
    """JSON-ready form. ``resolved`` fills in the derived grid and memory sizes."""
    d = {
        "schema_version": SCHEMA_VERSION,
        "emitters": [{"position": [float(x) for x in e.position], "omega": float(e.omega),
                      "dipole": [float(x) for x in e.dipole]}
                     for e in cfg.emitters],
        "environment": _env_dict(cfg.environment),
        "initial": [[float(c.real), float(c.imag)] for c in cfg.initial],
        "method": cfg.method,
        "rwa": cfg.rwa,
        "t_max": float(cfg.t_max),
        "dt": float(cfg.dt),
        "omega_min": float(cfg.omega_min),
        "omega_max": None if cfg.omega_max is None else float(cfg.omega_max),
        "n_omega": cfg.n_omega,
        "tau_max": None if cfg.tau_max is None else float(cfg.tau_max),
        "tolerances": {f.name: float(getattr(cfg.tolerances, f.name)) for f in fields(Tolerances)},
        "n_pseudomodes": cfg.n_pseudomodes,
    }
    if resolved:
        d["omega_max"] = cfg.omega_cutoff
        d["n_omega"] = cfg.frequency_points
        d["tau_max"] = cfg.memory_time
    return d


def loads_config(text, source="<config>"):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigFormatError(f"{source}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None
    return config_from_dict(data)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigFormatError(f"cannot read {path}: {exc.strerror}") from None
    return loads_config(text, str(path))


def dump_config(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
        fh.write("\n")


def config_hash(cfg):
    blob = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# -- presets -----------------------------------------------------------------

def pair_over_surface(h, d, *, omega=3.525, mu=10.0, env=None, **kw):
    """Two z-oriented dipoles at height ``h`` (nm), ``d`` apart along x."""
    env = DrudeHalfSpace(5.0, 0.1) if env is None else env
    ems = (Emitter((0.0, 0.0, h), omega, (0.0, 0.0, mu)),
           Emitter((d, 0.0, h), omega, (0.0, 0.0, mu)))
    return SystemConfig(ems, env, **kw)


PRESETS = {
    # weak coupling: slow SPP-mediated exchange, needs a long window
    "fig3-weak": dict(h=10.0, d=4.0, t_max=5000.0, dt=0.5),
    "fig3-strong": dict(h=1.0, d=1.0, t_max=30.0, dt=0.01),
}


def preset(name, **overrides) -> SystemConfig:
    if name not in PRESETS:
        raise ConfigFormatError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    kw = dict(PRESETS[name])
    kw.update(overrides)
    return pair_over_surface(**kw)


# -- manifests ---------------------------------------------------------------

def code_version():
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        return "unknown"


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    return x


def manifest(cfg, outputs, timings, **extra):
    m = {
        "schema_version": SCHEMA_VERSION,
        "code_version": code_version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": config_to_dict(cfg, resolved=True),
        "config_hash": config_hash(cfg),
        "tolerances": config_to_dict(cfg)["tolerances"],
        "timings_s": timings,
        "outputs": [str(p) for p in outputs],
    }
    m.update(extra)
    return _clean(m)


def write_manifest(path, data):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
