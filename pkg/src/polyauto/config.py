"""JSON experiment configs.

Example::

    {
      "map": {"family": "henon", "c": -6, "a": 0.1},
      "radius": 4.5,
      "seed": 1,
      "census": {"grid": 200, "complex_seeds": 0}
    }

Complex numbers are written as a number or as ``[re, im]``.  Henon maps take
either ``c``/``a`` (one quadratic stage) or ``stages``, a list of
``{"p": [c0, c1, ...], "a": a}`` with ascending coefficients.  Fornaess-Wu
maps take ``variant`` (H1/H2), ``P`` as a list of ``[i, j, coeff]`` for
``coeff * x^i y^j``, ``Q`` as ascending coefficients, ``a`` and ``b``.
Shift-like maps take ``n``, ``p`` and ``a``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .maps import MapError, MapSpec, build_fornaess_wu, build_henon_composition, build_shift_like, henon


class ConfigError(ValueError):
    pass


TOP_KEYS = {"map", "radius", "seed", "census", "notes"}
CENSUS_KEYS = {"grid", "complex_seeds"}
MAP_KEYS = {
    "henon": {"family", "c", "a", "stages"},
    "fornaess_wu": {"family", "variant", "P", "Q", "a", "b"},
    "shift_like": {"family", "n", "p", "a"},
}


@dataclass
class ExperimentConfig:
    map: MapSpec
    raw: dict
    sha256: str
    path: str
    radius: float | None = None
    seed: int = 0
    census: dict = field(default_factory=dict)


def _line_of(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


class _Ctx:
    def __init__(self, text, path):
        self.text = text
        self.path = path

    def fail(self, field_path: str, msg: str):
        key = field_path.rsplit(".", 1)[-1].split("[")[0]
        line = _line_of(self.text, key)
        where = f"{self.path}:{line}" if line else self.path
        raise ConfigError(f"{where}: field '{field_path}': {msg}")


def _complex(ctx, v, fp) -> complex:
    if isinstance(v, bool):
        ctx.fail(fp, "expected a number or [re, im]")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(v[0], v[1])
    ctx.fail(fp, "expected a number or [re, im]")


def _coeffs(ctx, v, fp) -> tuple[complex, ...]:
    if not isinstance(v, list) or len(v) < 2:
        ctx.fail(fp, "expected a list of at least two coefficients")
    return tuple(_complex(ctx, x, f"{fp}[{i}]") for i, x in enumerate(v))


def _check_keys(ctx, obj, allowed, fp):
    if not isinstance(obj, dict):
        ctx.fail(fp, "expected an object")
    for k in obj:
        if k not in allowed:
            ctx.fail(f"{fp}.{k}" if fp else k, f"unknown field (allowed: {', '.join(sorted(allowed))})")


def _build_map(ctx, spec) -> MapSpec:
    if not isinstance(spec, dict):
        ctx.fail("map", "expected an object")
    fam = spec.get("family")
    if fam not in MAP_KEYS:
        ctx.fail("map.family", f"expected one of {sorted(MAP_KEYS)}")
    _check_keys(ctx, spec, MAP_KEYS[fam], "map")
    try:
        if fam == "henon":
            if "stages" in spec:
                if "c" in spec:
                    ctx.fail("map.c", "give either c or stages, not both")
                st = spec["stages"]
                if not isinstance(st, list) or not st:
                    ctx.fail("map.stages", "expected a nonempty list")
                stages = []
                for i, s in enumerate(st):
                    _check_keys(ctx, s, {"p", "a"}, f"map.stages[{i}]")
                    stages.append((_coeffs(ctx, s.get("p"), f"map.stages[{i}].p"),
                                   _complex(ctx, s.get("a", 1.0), f"map.stages[{i}].a")))
                return build_henon_composition(stages)
            if "c" not in spec:
                ctx.fail("map.c", "missing (or give stages)")
            return henon(_complex(ctx, spec["c"], "map.c"), _complex(ctx, spec.get("a", 1.0), "map.a"))
        if fam == "fornaess_wu":
            P = spec.get("P")
            if not isinstance(P, list) or not P:
                ctx.fail("map.P", "expected a list of [i, j, coeff]")
            terms = []
            for i, t in enumerate(P):
                if not (isinstance(t, list) and len(t) == 3 and all(isinstance(e, int) for e in t[:2])):
                    ctx.fail(f"map.P[{i}]", "expected [i, j, coeff]")
                terms.append((t[0], t[1], _complex(ctx, t[2], f"map.P[{i}]")))
            return build_fornaess_wu(str(spec.get("variant", "")), terms,
                                     _coeffs(ctx, spec.get("Q"), "map.Q"),
                                     _complex(ctx, spec.get("a"), "map.a"),
                                     _complex(ctx, spec.get("b", 1.0), "map.b"))
        n = spec.get("n")
        if not isinstance(n, int) or isinstance(n, bool):
            ctx.fail("map.n", "expected an integer")
        return build_shift_like(n, _coeffs(ctx, spec.get("p"), "map.p"),
                                _complex(ctx, spec.get("a"), "map.a"))
    except MapError as e:
        ctx.fail("map", str(e))


def parse_config(text: str, path: str = "<config>") -> ExperimentConfig:
    ctx = _Ctx(text, path)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from None
    _check_keys(ctx, raw, TOP_KEYS, "")
    if "map" not in raw:
        ctx.fail("map", "missing")
    m = _build_map(ctx, raw["map"])
    radius = raw.get("radius")
    if radius is not None and (isinstance(radius, bool) or not isinstance(radius, (int, float))
                               or radius <= 0):
        ctx.fail("radius", "expected a positive number")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        ctx.fail("seed", "expected an integer in [0, 2^64)")
    census = raw.get("census", {})
    _check_keys(ctx, census, CENSUS_KEYS, "census")
    for k, v in census.items():
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            ctx.fail(f"census.{k}", "expected a nonnegative integer")
    digest = hashlib.sha256(text.encode()).hexdigest()
    return ExperimentConfig(m, raw, digest, path, None if radius is None else float(radius),
                            seed, dict(census))


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config: {e.strerror}") from None
    return parse_config(text, str(path))
