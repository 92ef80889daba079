"""Strict JSON experiment configuration.

Unknown keys are fatal so that a config document pins an experiment exactly.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .chain import birkhoff
from .errors import ConfigError
from .geometry import (
    AffineEmbedding,
    DiscreteFamily,
    angle_family,
    build_polytope,
    canonical_family,
    equilateral_triangle,
    uniform_sphere_family,
    unit_cube,
    unit_square,
)


def _require_keys(obj, allowed, required, where):
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError(f"missing keys in {where}: {sorted(missing)}")


_DENSITIES = {
    "uniform": lambda d: None,  # handled by uniform_sphere_family
}


def load_polytope_and_family(doc):
    """Build (polytope, family) from the 'polytope' / 'family' sections."""
    pspec = doc.get("polytope")
    if not isinstance(pspec, dict):
        raise ConfigError("missing 'polytope' section")
    birkhoff_pair = None
    if "builtin" in pspec:
        _require_keys(pspec, {"builtin", "n", "d"}, {"builtin"}, "polytope")
        name = pspec["builtin"]
        if name == "square":
            polytope = unit_square()
        elif name == "triangle":
            polytope = equilateral_triangle()
        elif name == "cube":
            polytope = unit_cube(int(pspec.get("d", 3)))
        elif name == "birkhoff":
            birkhoff_pair = birkhoff(int(pspec.get("n", 3)))
            polytope = birkhoff_pair[0]
        else:
            raise ConfigError(f"unknown builtin polytope {name!r}")
    else:
        _require_keys(pspec, {"forms", "offsets", "embedding"},
                      {"forms", "offsets"}, "polytope")
        embedding = None
        if "embedding" in pspec:
            espec = pspec["embedding"]
            _require_keys(espec, {"matrix", "offset"}, {"matrix", "offset"},
                          "polytope.embedding")
            embedding = AffineEmbedding(np.array(espec["matrix"], dtype=float),
                                        np.array(espec["offset"], dtype=float))
        polytope = build_polytope(pspec["forms"], pspec["offsets"],
                                  embedding=embedding)

    fspec = doc.get("family")
    if not isinstance(fspec, dict):
        raise ConfigError("missing 'family' section")
    _require_keys(fspec, {"kind", "vectors", "angles", "density",
                          "quadrature", "witnesses"}, {"kind"}, "family")
    kind = fspec["kind"]
    if kind == "canonical":
        family = canonical_family(polytope.intrinsic_dim)
    elif kind == "vectors":
        family = DiscreteFamily(np.array(fspec["vectors"], dtype=float))
    elif kind == "angles":
        family = angle_family(fspec["angles"])
    elif kind == "birkhoff":
        if birkhoff_pair is None:
            raise ConfigError("family 'birkhoff' requires the birkhoff polytope")
        family = birkhoff_pair[1]
    elif kind == "sphere":
        density = fspec.get("density", "uniform")
        if density != "uniform":
            raise ConfigError(f"unknown sphere density {density!r}")
        witnesses = fspec.get("witnesses")
        family = uniform_sphere_family(
            polytope.intrinsic_dim,
            quadrature_count=int(fspec.get("quadrature", 64)),
            witnesses=None if witnesses is None else np.array(witnesses, float),
        )
    else:
        raise ConfigError(f"unknown family kind {kind!r}")
    return polytope, family


@dataclass
class ExperimentConfig:
    doc: dict
    polytope: object
    family: object

    @property
    def seed(self):
        return int(self.doc.get("seed", 0))

    def chain_params(self):
        spec = self.doc.get("chain", {})
        _require_keys(spec, {"h", "seed", "steps", "burn_in", "thinning",
                             "start"}, {"h", "steps"}, "chain")
        return spec

    def spectral_params(self):
        spec = self.doc.get("spectral", {})
        _require_keys(spec, {"h", "h_list", "resolution", "eigen_count"},
                      set(), "spectral")
        return spec

    def diagnostics_params(self):
        spec = self.doc.get("diagnostics", {})
        _require_keys(spec, {"n_max", "checkpoints", "replicas", "start_cell",
                             "window"}, set(), "diagnostics")
        return spec


_TOP_KEYS = {"polytope", "family", "chain", "spectral", "diagnostics",
             "output", "seed"}


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(str(exc)) from exc
    if not isinstance(doc, dict):
        raise ConfigError("top-level config must be an object")
    _require_keys(doc, _TOP_KEYS, set(), "config")
    polytope, family = load_polytope_and_family(doc)
    return ExperimentConfig(doc=doc, polytope=polytope, family=family)


def resolution_rule(name):
    """Parse a resolution rule like 'h/8' into a callable."""
    name = name or "h/8"
    if not name.startswith("h/"):
        raise ConfigError(f"unsupported resolution rule {name!r}")
    try:
        denom = float(name[2:])
    except ValueError as exc:
        raise ConfigError(f"unsupported resolution rule {name!r}") from exc
    if not math.isfinite(denom) or denom < 4:
        raise ConfigError("resolution denominator must be >= 4")
    return lambda h: h / denom
