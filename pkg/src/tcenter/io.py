"""Field/map spec files, bundled examples and 17-digit text output."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

import numpy as np

from .expr import parse_poly
from .field import FieldError, FieldSpec, IntegralSpec, factors_from_json, reduced_hamiltonian, strong_integral
from .shift import MapSpec


@dataclass(frozen=True)
class LoadedField:
    fs: FieldSpec
    intspec: IntegralSpec | None
    data: dict


def _bundled(kind: str, name: str):
    ref = resources.files("tcenter") / "data" / kind / f"{name}.json"
    return ref if ref.is_file() else None


def bundled_names(kind: str) -> list[str]:
    d = resources.files("tcenter") / "data" / kind
    return sorted(p.name[:-5] for p in d.iterdir() if p.name.endswith(".json"))


def _read(kind: str, ref) -> dict:
    if isinstance(ref, dict):
        return ref
    ref = str(ref)
    if not os.path.exists(ref):
        b = _bundled(kind, ref)
        if b is None:
            raise FileNotFoundError(f"no {kind[:-1]} spec file or bundled example named {ref!r}")
        return json.loads(b.read_text())
    with open(ref) as fh:
        return json.load(fh)


def field_from_json(data: dict) -> LoadedField:
    name = data.get("name", "field")
    if "factors" in data:
        hp = factors_from_json(data["factors"])
        eps = Fraction(str(data.get("epsilon", "1")))
        return LoadedField(reduced_hamiltonian(hp, name), strong_integral(hp, eps), data)
    if "F1" in data and "F2" in data:
        fs = FieldSpec.from_components(parse_poly(str(data["F1"])), parse_poly(str(data["F2"])), name)
        integ = None
        if "integral" in data:
            integ = IntegralSpec(parse_poly(str(data["integral"])), Fraction(str(data.get("epsilon", "1"))))
        return LoadedField(fs, integ, data)
    raise FieldError("field spec needs either 'factors' or 'F1'/'F2'")


def load_field(ref) -> LoadedField:
    return field_from_json(_read("fields", ref))


def load_map(ref) -> MapSpec:
    return MapSpec.from_json(_read("maps", ref))


# -- output ----------------------------------------------------------------------

def fmt(v) -> str:
    return "%.17g" % v


def _enc(obj) -> str:
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return fmt(v) if math.isfinite(v) else json.dumps(str(v))
    if isinstance(obj, Fraction):
        return json.dumps(str(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_enc(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_enc(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON text with every float at 17 significant digits; non-finite floats become strings."""
    return _enc(obj) + "\n"


def csv_text(header: str, rows) -> str:
    out = [header]
    for r in rows:
        out.append(",".join(fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in r))
    return "\n".join(out) + "\n"
