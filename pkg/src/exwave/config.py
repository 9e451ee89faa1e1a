"""Experiment-plan configuration: flat key-value sections, validated on load.

Sections and keys (all optional except [experiments] run):

    [domain]      kind = whole_space | exterior_ball ; radius = <float>
    [potential]   kind = zero | bump ; center, width, amplitude,
                  c0, c1, delta0 = <float>
    [grid]        r_max, panel = <float> ; order = <int>
    [spectral]    points_per_period = <float> ; block_tol = <float>
    [experiments] run = <comma list or "all"> ; fast = true | false
    [report]      seed = <int>

The potential block is admitted against the decay-envelope constraints at
load time (0 < c0 < 1/4, c1 > 0, delta0 > 2), so an inadmissible plan never
reaches the solvers.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    AdmissibilityError,
    DomainSpec,
    PotentialSpec,
    build_grid,
)


class ConfigError(ValueError):
    """Schema violation in an experiment plan."""


_SCHEMA = {
    "domain": {"kind", "radius"},
    "potential": {"kind", "center", "width", "amplitude", "c0", "c1", "delta0"},
    "grid": {"r_max", "panel", "order"},
    "spectral": {"points_per_period", "block_tol"},
    "experiments": {"run", "fast"},
    "report": {"seed"},
}

_DEFAULTS = {
    "domain": {"kind": "exterior_ball", "radius": "1.0"},
    "potential": {"kind": "bump", "center": "2.2", "width": "0.8",
                  "amplitude": "-0.015", "c0": "0.2", "c1": "1.0",
                  "delta0": "2.5"},
    "grid": {"r_max": "16.0", "panel": "0.25", "order": "8"},
    "spectral": {"points_per_period": "40", "block_tol": "1e-7"},
    "experiments": {"run": "all", "fast": "false"},
    "report": {"seed": "20240811"},
}


@dataclass
class ExperimentPlan:
    """Validated run description for the experiment suite."""

    domain: DomainSpec
    potential_kind: str
    potential_params: dict
    grid_params: dict
    spectral_params: dict
    experiments: list[str]
    fast: bool
    seed: int
    source: str = ""

    def build_potential(self):
        """Materialize the plan's potential on the plan's grid (validated)."""
        grid = build_grid(self.domain, self.grid_params["r_max"],
                          m=max(16, int(self.grid_params["r_max"]
                                        / self.grid_params["panel"]) * 7),
                          order=self.grid_params["order"])
        if self.potential_kind == "zero":
            return PotentialSpec.zero(grid)
        p = self.potential_params
        return PotentialSpec.bump(grid, p["center"], p["width"], p["amplitude"],
                                  c0=p["c0"], c1=p["c1"], delta0=p["delta0"])

    def describe(self) -> dict:
        return {
            "domain": {"kind": self.domain.kind, "radius": self.domain.a},
            "potential": {"kind": self.potential_kind, **self.potential_params},
            "grid": dict(self.grid_params),
            "spectral": dict(self.spectral_params),
            "experiments": list(self.experiments),
            "fast": self.fast,
            "seed": self.seed,
        }


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from exc


def load_config(path) -> ExperimentPlan:
    """Read and validate a plan file; raises ConfigError with the offending
    field on any schema or admissibility violation."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    def get(section: str, key: str) -> str:
        if parser.has_option(section, key):
            return parser.get(section, key)
        return _DEFAULTS[section][key]

    kind = get("domain", "kind")
    if kind not in ("whole_space", "exterior_ball"):
        raise ConfigError(f"[domain] kind = {kind!r} is not a known domain")
    radius = _parse_float("domain", "radius", get("domain", "radius"))
    domain = (DomainSpec.exterior_ball(radius) if kind == "exterior_ball"
              else DomainSpec.whole_space())

    pot_kind = get("potential", "kind")
    if pot_kind not in ("zero", "bump"):
        raise ConfigError(f"[potential] kind = {pot_kind!r} is not supported")
    pot_params = {k: _parse_float("potential", k, get("potential", k))
                  for k in ("center", "width", "amplitude", "c0", "c1", "delta0")}
    if not 0.0 < pot_params["c0"] < 0.25:
        raise ConfigError(
            f"[potential] c0 = {pot_params['c0']} rejected: the admissible "
            "window is 0 < c0 < 1/4")
    if not pot_params["c1"] > 0.0:
        raise ConfigError("[potential] c1 must be positive")
    if not pot_params["delta0"] > 2.0:
        raise ConfigError("[potential] delta0 must exceed 2")

    grid_params = {
        "r_max": _parse_float("grid", "r_max", get("grid", "r_max")),
        "panel": _parse_float("grid", "panel", get("grid", "panel")),
        "order": int(_parse_float("grid", "order", get("grid", "order"))),
    }
    if grid_params["r_max"] <= domain.inner_radius:
        raise ConfigError("[grid] r_max must exceed the obstacle radius")

    spectral_params = {
        "points_per_period": _parse_float(
            "spectral", "points_per_period",
            get("spectral", "points_per_period")),
        "block_tol": _parse_float("spectral", "block_tol",
                                  get("spectral", "block_tol")),
    }

    from .experiments import REGISTRY_WITH_PROBES

    raw_run = get("experiments", "run").strip()
    if raw_run == "all":
        names = [n for n in REGISTRY_WITH_PROBES if n != "fail_probe"]
    elif raw_run == "":
        names = []
    else:
        names = [n.strip() for n in raw_run.split(",") if n.strip()]
        for n in names:
            if n not in REGISTRY_WITH_PROBES:
                raise ConfigError(f"[experiments] unknown experiment {n!r}")
    fast_raw = get("experiments", "fast").strip().lower()
    if fast_raw not in ("true", "false"):
        raise ConfigError("[experiments] fast must be true or false")

    # a plan with a potential block must actually admit the profile
    try:
        plan = ExperimentPlan(
            domain=domain,
            potential_kind=pot_kind,
            potential_params=pot_params,
            grid_params=grid_params,
            spectral_params=spectral_params,
            experiments=names,
            fast=fast_raw == "true",
            seed=int(_parse_float("report", "seed", get("report", "seed"))),
            source=str(path),
        )
        plan.build_potential()
    except AdmissibilityError as exc:
        raise ConfigError(f"[potential] rejected: {exc}") from exc
    return plan
