"""Run configuration: strict JSON schema, validation, and model dispatch.

A run is reproducible bit-for-bit from (config, seed, version). Unknown
keys are hard errors at every nesting level so typos cannot silently fall
back to defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import models, spinchain
from .core import Spectrum
from .models import StructureSpec


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


_REQUIRED = object()

# per-kind model parameter schemas: name -> (validator, default)
_number = (int, float)

_MODEL_SCHEMAS: dict[str, dict[str, tuple]] = {
    "harmonic": {"dim": (int, _REQUIRED), "mass": (_number, 1.0), "omega": (_number, 1.0)},
    "harmonic_power": {
        "dim": (int, _REQUIRED),
        "q": (int, _REQUIRED),
        "mass": (_number, 1.0),
        "omega": (_number, 1.0),
    },
    "uq_binomial": {"dim": (int, _REQUIRED), "q": (int, _REQUIRED)},
    "box_1d": {"dim": (int, _REQUIRED), "length": (_number, _REQUIRED), "mass": (_number, 1.0)},
    "box_2d": {
        "dims": (list, _REQUIRED),
        "lengths": (list, _REQUIRED),
        "mass": (_number, 1.0),
    },
    "anharmonic": {
        "p": (int, _REQUIRED),
        "n_states": (int, _REQUIRED),
        "grid_points": (int, 4096),
        "grid_halfwidth": (_number, None),
        "mass": (_number, 1.0),
    },
    "semiclassical": {
        "p": (int, _REQUIRED),
        "dim": (int, _REQUIRED),
        "mass": (_number, 1.0),
        "prefactor": (_number, 1.0),
    },
    "random": {
        "dim": (int, _REQUIRED),
        "bandwidth": (_number, _REQUIRED),
        "decay": (str, _REQUIRED),
        "exponent": (_number, None),
        "rate": (_number, None),
        "width": (_number, None),
    },
    "xxz": {
        "sites": (int, _REQUIRED),
        "j1": (_number, 1.0),
        "delta1": (_number, 0.0),
        "j2": (_number, 0.0),
        "delta2": (_number, 0.0),
        "sector": (int, 0),
        "keep_n": (int, None),
    },
}

_LANCZOS_SCHEMA = {
    "n_max": (int, 40),
    "precision": (str, "double"),
    "reorthogonalize": (bool, True),
    "floor_policy": (str, "zero"),
    "termination_tol": (_number, 1e-10),
}

_DYNAMICS_SCHEMA = {
    "t_max": (_number, 10.0),
    "t_points": (int, 201),
    "method": (str, "eigen"),
    "auto_extend": (bool, True),
    "boundary_tol": (_number, 1e-6),
}

_ANALYSIS_SCHEMA = {
    "window": (list, None),
    "ebar_window": (list, None),
    "bin_width": (_number, None),
    "omega_range": (list, None),
    "min_pairs": (int, 100),
}

_SWEEP_SCHEMA = {
    "parameter": (str, _REQUIRED),
    "values": (list, _REQUIRED),
}

_TOP_SCHEMA = {
    "model": (dict, _REQUIRED),
    "beta": (_number, 1.0),
    "seed": (int, 0),
    "lanczos": (dict, None),
    "dynamics": (dict, None),
    "analysis": (dict, None),
    "sweep": (dict, None),
    "output_dir": (str, None),
}


def _apply_schema(raw: dict, schema: dict, path: str) -> dict:
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} under '{path}'")
    out = {}
    for key, (typ, default) in schema.items():
        if key in raw:
            val = raw[key]
            if val is not None and not isinstance(val, typ):
                if typ is _number and isinstance(val, bool):
                    raise ConfigError(f"'{path}.{key}' must be a number")
                raise ConfigError(f"'{path}.{key}' has wrong type {type(val).__name__}")
            if isinstance(val, bool) and typ is _number:
                raise ConfigError(f"'{path}.{key}' must be a number")
            out[key] = val
        elif default is _REQUIRED:
            raise ConfigError(f"missing required key '{path}.{key}'")
        else:
            out[key] = default
    return out


@dataclass
class RunConfig:
    """Validated run configuration with defaults resolved."""

    model: dict
    beta: float
    seed: int
    lanczos: dict
    dynamics: dict
    analysis: dict
    sweep: dict | None
    output_dir: str | None

    def echo(self) -> dict:
        out = {
            "model": dict(self.model),
            "beta": self.beta,
            "seed": self.seed,
            "lanczos": dict(self.lanczos),
            "dynamics": dict(self.dynamics),
            "analysis": dict(self.analysis),
        }
        if self.sweep is not None:
            out["sweep"] = dict(self.sweep)
        if self.output_dir is not None:
            out["output_dir"] = self.output_dir
        return out


def validate_config(raw: dict) -> RunConfig:
    top = _apply_schema(raw, _TOP_SCHEMA, "")
    model = top["model"]
    kind = model.get("kind")
    if kind not in _MODEL_SCHEMAS:
        raise ConfigError(
            f"model.kind must be one of {sorted(_MODEL_SCHEMAS)}, got {kind!r}"
        )
    body = {k: v for k, v in model.items() if k != "kind"}
    model_cfg = {"kind": kind, **_apply_schema(body, _MODEL_SCHEMAS[kind], "model")}

    lanczos = _apply_schema(top["lanczos"] or {}, _LANCZOS_SCHEMA, "lanczos")
    if lanczos["precision"] not in ("double", "extended"):
        raise ConfigError("lanczos.precision must be 'double' or 'extended'")
    if lanczos["floor_policy"] not in ("zero", "keep"):
        raise ConfigError("lanczos.floor_policy must be 'zero' or 'keep'")
    dynamics = _apply_schema(top["dynamics"] or {}, _DYNAMICS_SCHEMA, "dynamics")
    analysis = _apply_schema(top["analysis"] or {}, _ANALYSIS_SCHEMA, "analysis")
    sweep = _apply_schema(top["sweep"], _SWEEP_SCHEMA, "sweep") if top["sweep"] else None
    return RunConfig(
        model=model_cfg,
        beta=float(top["beta"]),
        seed=int(top["seed"]),
        lanczos=lanczos,
        dynamics=dynamics,
        analysis=analysis,
        sweep=sweep,
        output_dir=top["output_dir"],
    )


def load_config(path: str | Path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return validate_config(raw)


def _structure_spec_from(model_cfg: dict) -> StructureSpec:
    decay = model_cfg["decay"]
    if decay == "flat":
        return StructureSpec.flat()
    if decay == "power":
        if model_cfg["exponent"] is None:
            raise ConfigError("power decay requires model.exponent")
        return StructureSpec.power(model_cfg["exponent"])
    if decay == "exponential":
        if model_cfg["rate"] is None:
            raise ConfigError("exponential decay requires model.rate")
        return StructureSpec.exponential(model_cfg["rate"])
    if decay == "gaussian":
        if model_cfg["width"] is None:
            raise ConfigError("gaussian decay requires model.width")
        return StructureSpec.gaussian(model_cfg["width"])
    raise ConfigError(f"unknown decay class {decay!r}")


def build_model(model_cfg: dict, seed: int):
    """Instantiate (Spectrum, EigenbasisOperator, declared decay or None)."""
    kind = model_cfg["kind"]
    if kind == "harmonic":
        spec, op = models.harmonic_position(model_cfg["dim"], model_cfg["mass"], model_cfg["omega"])
        return spec, op, None
    if kind == "harmonic_power":
        spec, _ = models.harmonic_position(model_cfg["dim"], model_cfg["mass"], model_cfg["omega"])
        op = models.harmonic_power(
            model_cfg["dim"], model_cfg["q"], model_cfg["mass"], model_cfg["omega"]
        )
        return spec, op, None
    if kind == "uq_binomial":
        spec = Spectrum(np.arange(model_cfg["dim"]) + 0.5)
        return spec, models.uq_binomial(model_cfg["dim"], model_cfg["q"]), None
    if kind == "box_1d":
        spec, op = models.box_position_1d(model_cfg["dim"], model_cfg["length"], model_cfg["mass"])
        return spec, op, None
    if kind == "box_2d":
        dims = tuple(model_cfg["dims"])
        lengths = tuple(model_cfg["lengths"])
        if len(dims) != 2 or len(lengths) != 2:
            raise ConfigError("box_2d needs dims = [dx, dy] and lengths = [Lx, Ly]")
        spec, op = models.box_position_2d(dims, lengths, model_cfg["mass"])
        return spec, op, None
    if kind == "anharmonic":
        cfg = models.AnharmonicConfig(
            p=model_cfg["p"],
            n_states=model_cfg["n_states"],
            grid_points=model_cfg["grid_points"],
            grid_halfwidth=model_cfg["grid_halfwidth"],
            mass=model_cfg["mass"],
        )
        spec, op = models.anharmonic_solve(cfg)
        return spec, op, None
    if kind == "semiclassical":
        spec, op = models.semiclassical_operator(
            model_cfg["p"], model_cfg["dim"], model_cfg["mass"], model_cfg["prefactor"]
        )
        return spec, op, None
    if kind == "random":
        sspec = _structure_spec_from(model_cfg)
        spec, op = models.random_ensemble(model_cfg["dim"], sspec, model_cfg["bandwidth"], seed)
        return spec, op, sspec
    if kind == "xxz":
        chain = spinchain.ChainConfig(
            sites=model_cfg["sites"],
            j1=model_cfg["j1"],
            delta1=model_cfg["delta1"],
            j2=model_cfg["j2"],
            delta2=model_cfg["delta2"],
            sector=model_cfg["sector"],
        )
        ham = spinchain.build_hamiltonian(chain)
        obs = spinchain.flip_flop_operator(chain)
        spec, op = spinchain.diagonalize_to_eigenbasis(ham, obs)
        if model_cfg["keep_n"] is not None:
            spec, op = spinchain.truncate_operator(op, spec, model_cfg["keep_n"])
        return spec, op, None
    raise ConfigError(f"unknown model kind {kind!r}")
