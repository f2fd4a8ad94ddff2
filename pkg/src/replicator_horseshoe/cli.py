"""
Batch command surface: each command calls one library operation and emits a
CSV or JSON document. Documents go to stdout (or ``--out``), diagnostics and
logs to stderr.
"""

import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Sequence, TextIO

import yaml

from . import horseshoe as _horseshoe
from . import map_core as _map_core
from . import meanclass as _meanclass
from . import orbits as _orbits
from .cache import CertificateDatabase
from .conjugacy import g_critical_data, h_inv
from .errors import ConfigError, ReplicatorError
from .map_core import Params
from .type import AppConfig, OrbitRow, RunConfig, ScanRow

logger = logging.getLogger(__name__)

DEFAULTS: AppConfig = {
    "orbits": {
        "transient": _orbits.DEFAULT_TRANSIENT,
        "max_period": _orbits.DEFAULT_MAX_PERIOD,
        "grid_per_period": _orbits.DEFAULT_GRID_PER_PERIOD,
        "samples": _orbits.DEFAULT_SAMPLES,
        "lyapunov_steps": _orbits.DEFAULT_LYAPUNOV_STEPS,
    },
    "horseshoe": {
        "depth": 12,
        "margin_threshold": _horseshoe.MARGIN_THRESHOLD,
    },
    "logging": {"level": "WARNING"},
    "cache": {"enabled": False, "path": ".certificates.db"},
    "progress": False,
}


def parse_real(text: str) -> float:
    """ decimals and rationals p/q, rounded once to the nearest binary64 """
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as err:
        raise ValueError(f"not a real number or fraction: {text!r}") from err


def load_config(path: str | None) -> AppConfig:
    """ the YAML file merged over the defaults; a missing file means defaults only """
    settings: Dict[str, Any] = {key: (dict(value) if isinstance(value, dict) else value)
                                for key, value in DEFAULTS.items()}
    if path is None or not os.path.exists(path):
        logger.info("no config file at %s, using defaults", path)
        return settings
    try:
        with open(path, 'r') as f:
            loaded = yaml.safe_load(f)
    except yaml.YAMLError as err:
        raise ConfigError(f"cannot parse {path}: {err}") from err
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from err
    if loaded is None:
        return settings
    if not isinstance(loaded, dict):
        raise ConfigError(f"{path} must contain a mapping at the top level")
    for key, value in loaded.items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r} in {path}")
        if isinstance(DEFAULTS[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {key!r} in {path} must be a mapping")
            unknown = set(value) - set(DEFAULTS[key])
            if unknown:
                raise ConfigError(f"unknown config keys {sorted(unknown)} under {key!r} in {path}")
            settings[key].update(value)
        else:
            settings[key] = value
    return settings


@dataclass
class Document:
    command: str
    columns: Sequence[str]
    rows: List[Dict[str, Any]]
    provenance: Dict[str, Any] = field(default_factory=dict)
    # a single record is emitted as a bare JSON object
    single: bool = False


def _text(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, float):
        return repr(float(value))
    return value


def _write(document: Document, format: str, stream: TextIO):
    if format == "json":
        records = [{column: _json_value(row.get(column)) for column in document.columns} for row in document.rows]
        body = records[0] if document.single and len(records) == 1 else {"command": document.command, "rows": records}
        stream.write(json.dumps(body, indent=2, ensure_ascii=False) + "\n")
        return
    if format != "csv":
        raise ConfigError(f"unknown format {format!r}, expected csv or json")
    provenance = " ".join(f"{key}={_text(value)}" for key, value in document.provenance.items())
    stream.write(f"# config: {provenance}\n")
    writer = csv.DictWriter(stream, fieldnames=list(document.columns), lineterminator="\n")
    writer.writeheader()
    for row in document.rows:
        writer.writerow({column: _text(row.get(column)) for column in document.columns})


def emit(document: Document, format: str, destination: str | TextIO | None = None):
    if destination is None:
        _write(document, format, sys.stdout)
        return
    if isinstance(destination, io.TextIOBase):
        _write(document, format, destination)
        return
    try:
        with open(destination, 'w', newline='') as f:
            _write(document, format, f)
    except OSError as err:
        raise ConfigError(f"cannot write {destination}: {err.strerror}", "io-error") from err


def _require(config: RunConfig, *names: str):
    missing = [name for name in names if config.get(name) is None]
    if missing:
        raise ConfigError(f"{config['command']} needs --{', --'.join(n.replace('_', '-') for n in missing)}", "missing-flag")


def _params(config: RunConfig) -> Params:
    _require(config, "a", "b")
    return Params(config["a"], config["b"])


def _cache(config: RunConfig) -> CertificateDatabase | None:
    settings = config.get("settings", DEFAULTS)
    path = config.get("cache")
    if path is None and settings["cache"].get("enabled"):
        path = settings["cache"]["path"]
    return CertificateDatabase(path) if path else None


def _certificate(config: RunConfig) -> _horseshoe.HorseshoeCertificate:
    params = _params(config)
    threshold = config["settings"]["horseshoe"]["margin_threshold"]
    cache = _cache(config)
    certificate = cache.lookup(params, threshold) if cache else None
    if certificate is None:
        certificate = _horseshoe.certify(params, threshold)
        if cache:
            cache.store(certificate)
    return certificate


ORBIT_COLUMNS = ("orbit", "period", "x", "multiplier", "mean", "stability")


def _orbit_rows(orbits: Sequence[_orbits.PeriodicOrbit]) -> List[OrbitRow]:
    return [{"orbit": k, "period": orbit.period, "x": x, "multiplier": orbit.multiplier,
             "mean": orbit.mean, "stability": orbit.stability.value}
            for k, orbit in enumerate(orbits) for x in orbit.cycle]


def _iterate(config: RunConfig) -> Document:
    _require(config, "x0", "n")
    orbit = _map_core.iterate(_params(config), config["x0"], config["n"])
    return Document("iterate", ("step", "x"), [{"step": k, "x": x} for k, x in enumerate(orbit)])


def _fixed_points(config: RunConfig) -> Document:
    rows = [{"location": r.location, "multiplier": r.multiplier, "classification": r.classification.value}
            for r in _map_core.fixed_points(_params(config))]
    return Document("fixed-points", ("location", "multiplier", "classification"), rows)


def _critical_points(config: RunConfig) -> Document:
    p = _params(config)
    crit = _map_core.critical_points(p)
    g_crit = g_critical_data(p)
    row = {**vars(crit), **vars(g_crit)}
    return Document("critical-points", tuple(row), [row], single=True)


def _spec(config: RunConfig) -> _meanclass.MeanMapSpec:
    family = config.get("family") or "replicator"
    _require(config, "b")
    if family in ("replicator", "arctan", "probit"):
        _require(config, "a")
    return _meanclass.builtin_spec(family, config.get("a"), config["b"])


def _target(config: RunConfig):
    if (config.get("family") or "replicator") == "replicator":
        return _params(config)
    return _meanclass.make_map_from_H(_spec(config))


def _periodic_orbits(config: RunConfig) -> Document:
    _require(config, "n")
    orbits = _orbits.find_periodic_orbits(_target(config), config["n"], config.get("grid"))
    return Document("orbits", ORBIT_COLUMNS, _orbit_rows(orbits))


def _period2(config: RunConfig) -> Document:
    return Document("period2", ORBIT_COLUMNS, _orbit_rows([_orbits.period2_orbit(_params(config))]))


def _attractors(config: RunConfig) -> Document:
    found = _orbits.attractors_from_critical_orbits(
        _params(config), config["transient"], config["max_period"], config["samples"])
    rows = [{"attractor": k, "kind": attractor.kind, "sources": "+".join(attractor.sources),
             "period": attractor.detected_period, "x": x, "lyapunov": attractor.lyapunov}
            for k, attractor in enumerate(found)
            for x in (attractor.orbit.cycle if attractor.orbit else attractor.points)]
    return Document("attractors", ("attractor", "kind", "sources", "period", "x", "lyapunov"), rows)


def _bifurcation(config: RunConfig) -> Document:
    _require(config, "b", "a_lo", "a_hi", "steps")
    samples = _orbits.bifurcation_scan(config["b"], config["a_lo"], config["a_hi"], config["steps"],
                                       config["samples"], config["transient"], config["max_period"])
    rows: List[ScanRow] = [
        {"a": s.a, "branch": s.branch, "x": x, "period": s.detected_period, "lyapunov": s.lyapunov}
        for s in samples for x in s.attractor_points
    ]
    return Document("bifurcation", ("a", "branch", "x", "period", "lyapunov"), rows)


def _lyapunov(config: RunConfig) -> Document:
    _require(config, "x0")
    n = config.get("n") or config["settings"]["orbits"]["lyapunov_steps"]
    value = _orbits.lyapunov_exponent(_params(config), config["x0"], n, config["transient"])
    row = {"x0": config["x0"], "n": n, "transient": config["transient"], "lyapunov": value}
    return Document("lyapunov", tuple(row), [row], single=True)


def _certify(config: RunConfig) -> Document:
    record = _horseshoe.certificate_to_json(_certificate(config))
    return Document("certify", _horseshoe.CERTIFICATE_FIELDS, [dict(record)], single=True)


def _cylinders(config: RunConfig) -> Document:
    cylinders = _horseshoe.cylinder_intervals(_certificate(config), config["depth"])
    rows = [{"word": str(c.word), "lo": c.lo, "hi": c.hi} for c in cylinders]
    return Document("cylinders", ("word", "lo", "hi"), rows)


def _itinerary(config: RunConfig) -> Document:
    _require(config, "word")
    y = _horseshoe.point_from_itinerary(_certificate(config), config["word"])
    row = {"word": config["word"], "y": y, "x": h_inv(y)}
    return Document("itinerary", tuple(row), [row], single=True)


def _code(config: RunConfig) -> Document:
    _require(config, "y", "n")
    word = _horseshoe.code_orbit(_certificate(config), config["y"], config["n"])
    row = {"y": config["y"], "n": config["n"], "word": str(word)}
    return Document("code", tuple(row), [row], single=True)


def _mean_check(config: RunConfig) -> Document:
    _require(config, "n")
    spec = _spec(config)
    orbits = _orbits.find_periodic_orbits(_meanclass.make_map_from_H(spec), config["n"], config.get("grid"))
    rows = [{"family": spec.name, "orbit": k, "period": orbit.period, "mean": orbit.mean,
             "deviation": _meanclass.orbit_mean_check(spec, orbit)}
            for k, orbit in enumerate(orbits)]
    return Document("mean-check", ("family", "orbit", "period", "mean", "deviation"), rows)


def _cohomology(config: RunConfig) -> Document:
    spec = _spec(config)
    grid = config.get("grid") or 1000
    row = {"family": spec.name, "grid": grid, "residual": _meanclass.verify_cohomology(spec, grid)}
    return Document("cohomology", tuple(row), [row], single=True)


def _min_a(config: RunConfig) -> Document:
    _require(config, "b")
    tol = config.get("tol") or 1e-6
    a = _horseshoe.min_certified_a(config["b"], tol, config["settings"]["horseshoe"]["margin_threshold"], _cache(config))
    row = {"b": config["b"], "tol": tol, "a": a}
    return Document("min-a", tuple(row), [row], single=True)


def _census(config: RunConfig) -> Document:
    _require(config, "n")
    certificate = _certificate(config)
    rows = [{"n": k,
             "solutions": len(_horseshoe.periodic_points(certificate, k)),
             "cyclic_words": _horseshoe.count_admissible_words(k, True)}
            for k in range(1, config["n"] + 1)]
    return Document("census", ("n", "solutions", "cyclic_words"), rows)


COMMANDS: Dict[str, Callable[[RunConfig], Document]] = {
    "iterate": _iterate,
    "fixed-points": _fixed_points,
    "critical-points": _critical_points,
    "orbits": _periodic_orbits,
    "period2": _period2,
    "attractors": _attractors,
    "bifurcation": _bifurcation,
    "lyapunov": _lyapunov,
    "certify": _certify,
    "cylinders": _cylinders,
    "itinerary": _itinerary,
    "code": _code,
    "mean-check": _mean_check,
    "cohomology": _cohomology,
    "min-a": _min_a,
    "census": _census,
}


def resolve(config: RunConfig) -> RunConfig:
    """ fills unset flags from the settings: flag > config file > default """
    settings = config.get("settings") or load_config(None)
    resolved: RunConfig = {**config, "settings": settings}
    for name in ("transient", "max_period", "samples"):
        if resolved.get(name) is None:
            resolved[name] = settings["orbits"][name]
    if resolved.get("depth") is None:
        resolved["depth"] = settings["horseshoe"]["depth"]
    if resolved.get("grid") is None and resolved.get("n") and resolved["command"] in ("orbits", "mean-check"):
        resolved["grid"] = settings["orbits"]["grid_per_period"] * resolved["n"]
    return resolved


def _provenance(config: RunConfig) -> Dict[str, Any]:
    shown = {key: value for key, value in config.items()
             if key not in ("settings", "out", "format") and value is not None}
    shown["margin_threshold"] = config["settings"]["horseshoe"]["margin_threshold"]
    return shown


def run(config: RunConfig) -> int:
    """ runs one command and returns the process exit code """
    command = config.get("command")
    if command not in COMMANDS:
        print(f"error: unknown-command: {command!r}", file=sys.stderr)
        return 1
    try:
        config = resolve(config)
        document = COMMANDS[command](config)
        document.provenance = _provenance(config)
        emit(document, config.get("format") or "csv", config.get("out"))
    except ReplicatorError as err:
        print(f"error: {err.diagnostic()}", file=sys.stderr)
        return err.exit_code
    return 0
