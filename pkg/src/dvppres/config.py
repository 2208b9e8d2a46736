"""JSON configuration document -> typed inputs.

Sections: grid, limits, forecast, ibrs, solver, output.  Field names mirror
the data types; solver and output carry tool knobs with defaults.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .model import (DisturbanceForecast, GridParameters, IbrSpec,
                    SecurityLimits, validate_inputs)


class ConfigError(ValueError):
    """Bad or missing configuration content; message carries the field path."""


@dataclass
class SolverOptions:
    h_bounds: tuple = (0.0, 40.0)
    d_bounds: tuple = (0.0, 20.0)
    resolution: int = 200
    threads: int = 1
    weighting: str = "realized"          # worst-case amplitude semantics
    scenario_cap: int = 10 ** 6
    sweep_step: float = None             # default tau/600
    refine: bool = True
    refine_tol_frac: float = 1e-3
    constraint_scenario: str = "witness"  # witness | all | per_step
    k_samples: int = 600
    dt: float = None                     # oracle step, default t_sg/100


@dataclass
class OutputOptions:
    directory: str = "out"
    sample_step: float = None            # trace/trajectory export step
    sig_digits: int = 9


@dataclass
class RunConfig:
    grid: GridParameters
    limits: SecurityLimits
    forecast: DisturbanceForecast
    ibrs: list = field(default_factory=list)
    solver: SolverOptions = field(default_factory=SolverOptions)
    output: OutputOptions = field(default_factory=OutputOptions)
    raw_bytes: bytes = b""


_REQUIRED = object()


def _get(section, key, path, default=_REQUIRED):
    if key not in section:
        if default is _REQUIRED:
            raise ConfigError("missing required field: %s.%s" % (path, key))
        return default
    return section[key]


def _section(doc, name, required=True):
    if name not in doc:
        if required:
            raise ConfigError("missing required section: %s" % name)
        return {}
    if not isinstance(doc[name], (dict, list)):
        raise ConfigError("section %s must be an object" % name)
    return doc[name]


def parse_config(doc: dict, raw_bytes: bytes = b"") -> RunConfig:
    g = _section(doc, "grid")
    grid = GridParameters(
        h0=float(_get(g, "h0", "grid")),
        d0=float(_get(g, "d0", "grid")),
        r=float(_get(g, "r", "grid")),
        t_sg=float(_get(g, "t_sg", "grid")),
        h_dvpp=float(_get(g, "h_dvpp", "grid", 0.0)),
        d_dvpp=float(_get(g, "d_dvpp", "grid", 0.0)),
        f_base=float(_get(g, "f_base", "grid", 1.0)))

    li = _section(doc, "limits")
    limits = SecurityLimits(
        rocof_lim=float(_get(li, "rocof_lim", "limits")),
        nadir_lim=float(_get(li, "nadir_lim", "limits")),
        ss_lim=float(_get(li, "ss_lim", "limits")))

    fo = _section(doc, "forecast")
    forecast = DisturbanceForecast(
        n=int(_get(fo, "n", "forecast")),
        tau=float(_get(fo, "tau", "forecast")),
        magnitudes=tuple(_get(fo, "magnitudes", "forecast")),
        probabilities=tuple(_get(fo, "probabilities", "forecast")),
        candidate_offsets=fo.get("candidate_offsets"))

    ibrs = []
    for i, row in enumerate(_section(doc, "ibrs", required=False) or [], start=1):
        path = "ibrs[%d]" % i
        ibrs.append(IbrSpec(
            a=float(_get(row, "a", path)),
            b=float(_get(row, "b", path)),
            p_av=float(_get(row, "p_av", path)),
            h_bounds=tuple(_get(row, "h_bounds", path, (0.0, float("inf")))),
            d_bounds=tuple(_get(row, "d_bounds", path, (0.0, float("inf"))))))

    so = _section(doc, "solver", required=False)
    solver = SolverOptions(
        h_bounds=tuple(so.get("h_bounds", (0.0, 40.0))),
        d_bounds=tuple(so.get("d_bounds", (0.0, 20.0))),
        resolution=int(so.get("resolution", 200)),
        threads=int(so.get("threads", 1)),
        weighting=str(so.get("weighting", "realized")),
        scenario_cap=int(so.get("scenario_cap", 10 ** 6)),
        sweep_step=so.get("sweep_step"),
        refine=bool(so.get("refine", True)),
        refine_tol_frac=float(so.get("refine_tol_frac", 1e-3)),
        constraint_scenario=str(so.get("constraint_scenario", "witness")),
        k_samples=int(so.get("k_samples", 600)),
        dt=so.get("dt"))
    if solver.weighting not in ("realized", "probabilistic"):
        raise ConfigError("solver.weighting must be 'realized' or 'probabilistic'")
    if solver.constraint_scenario not in ("witness", "all", "per_step"):
        raise ConfigError(
            "solver.constraint_scenario must be 'witness', 'all' or 'per_step'")

    ou = _section(doc, "output", required=False)
    output = OutputOptions(
        directory=str(ou.get("dir", "out")),
        sample_step=ou.get("sample_step"),
        sig_digits=int(ou.get("sig_digits", 9)))

    cfg = RunConfig(grid, limits, forecast, ibrs, solver, output, raw_bytes)
    report = validate_inputs(grid, forecast, limits, ibrs)
    if not report.ok:
        raise ConfigError(str(report))
    return cfg


def load_config(path: str) -> RunConfig:
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError("config is not valid JSON: %s" % exc) from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return parse_config(doc, raw)
