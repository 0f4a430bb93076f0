"""System description files and report bundles.

A system file is JSON::

    {
      "schema_version": 1,
      "alphabet_size": 2,
      "transitions": [[1, 1], [1, 0]],
      "potential": {"range": 1, "values": {"1": 0.0, "2": 0.0}},
      "observables": {"g": {"range": 1, "values": {"1": 1, "2": 0}}},
      "options": {"t_max": 8.0, "grid": 129, "seed": 42}
    }

Word keys are 1-based symbol strings, joined with ``-`` when the alphabet has
ten or more symbols. Unknown keys are rejected unless ``allow_unknown`` is set,
in which case they are carried through untouched.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

from .errors import UnknownObservable, ValidationError
from .observables import LocallyConstantFn
from .sft import Sft, format_word, new_sft, parse_word

SCHEMA_VERSION = 1
TOP_KEYS = {"schema_version", "alphabet_size", "transitions", "potential", "observables", "options"}
FN_KEYS = {"range", "values"}
OPTION_KEYS = {"t_max", "grid", "seed", "chains", "n", "nmax", "a", "eps", "word_cap", "memory_cap"}


@dataclass
class SystemDescription:
    sft: Sft
    potential: LocallyConstantFn
    observables: dict
    options: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def observable(self, name: str | None) -> tuple[str, LocallyConstantFn]:
        if name is None:
            if len(self.observables) != 1:
                raise UnknownObservable(
                    f"choose one of {sorted(self.observables)} with --observable")
            name = next(iter(self.observables))
        if name not in self.observables:
            raise UnknownObservable(f"no observable named {name!r}; have {sorted(self.observables)}")
        return name, self.observables[name]

    def to_json(self) -> dict:
        n = self.sft.alphabet_size
        out = {
            "schema_version": SCHEMA_VERSION,
            "alphabet_size": n,
            "transitions": self.sft.transitions.astype(int).tolist(),
            "potential": fn_to_json(self.potential),
            "observables": {k: fn_to_json(v) for k, v in self.observables.items()},
            "options": dict(self.options),
        }
        out.update(self.extra)
        return out


def fn_to_json(f: LocallyConstantFn) -> dict:
    n = f.sft.alphabet_size
    return {"range": f.range, "values": {format_word(w, n): v for w, v in f.values.items()}}


def _check_keys(obj: dict, allowed: set, where: str, strict: bool):
    unknown = sorted(set(obj) - allowed)
    if unknown and strict:
        raise ValidationError(f"{where}: unknown field {unknown[0]!r}")


def _parse_fn(sft: Sft, obj: Any, where: str, strict: bool) -> LocallyConstantFn:
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected an object with 'range' and 'values'")
    _check_keys(obj, FN_KEYS, where, strict)
    r = obj.get("range")
    if not isinstance(r, int) or isinstance(r, bool) or r < 1:
        raise ValidationError(f"{where}.range: expected a positive integer")
    vals = obj.get("values")
    if not isinstance(vals, dict):
        raise ValidationError(f"{where}.values: expected an object keyed by words")
    table = {}
    for key, v in vals.items():
        try:
            w = parse_word(key, sft.alphabet_size)
        except ValidationError as e:
            raise ValidationError(f"{where}.values[{key!r}]: {e}") from None
        if len(w) != r:
            raise ValidationError(f"{where}.values[{key!r}]: word length {len(w)} != range {r}")
        if not sft.is_admissible(w):
            raise ValidationError(f"{where}.values[{key!r}]: word is not admissible")
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ValidationError(f"{where}.values[{key!r}]: expected a finite number")
        table[w] = float(v)
    try:
        return LocallyConstantFn(sft, r, table)
    except ValidationError as e:
        raise ValidationError(f"{where}: {e}") from None


def parse_system(obj: Any, strict: bool = True) -> SystemDescription:
    if not isinstance(obj, dict):
        raise ValidationError("system description must be a JSON object")
    _check_keys(obj, TOP_KEYS, "system", strict)
    version = obj.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValidationError(f"schema_version: unsupported version {version!r}")
    n = obj.get("alphabet_size")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValidationError("alphabet_size: expected a positive integer")
    rows = obj.get("transitions")
    if not isinstance(rows, list) or len(rows) != n:
        raise ValidationError(f"transitions: expected {n} rows")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise ValidationError(f"transitions[{i}]: expected a row of {n} entries")
        for j, v in enumerate(row):
            if v not in (0, 1) or isinstance(v, bool):
                raise ValidationError(f"transitions[{i}][{j}]: expected 0 or 1, got {v!r}")
    try:
        sft = new_sft(n, rows)
    except ValidationError as e:
        raise ValidationError(f"transitions: {e}") from None
    if "potential" in obj:
        potential = _parse_fn(sft, obj["potential"], "potential", strict)
    else:
        potential = LocallyConstantFn.constant(sft, 0.0)
    obs_obj = obj.get("observables", {})
    if not isinstance(obs_obj, dict):
        raise ValidationError("observables: expected an object keyed by name")
    observables = {name: _parse_fn(sft, o, f"observables.{name}", strict)
                   for name, o in obs_obj.items()}
    options = obj.get("options", {})
    if not isinstance(options, dict):
        raise ValidationError("options: expected an object")
    _check_keys(options, OPTION_KEYS, "options", strict)
    extra = {k: v for k, v in obj.items() if k not in TOP_KEYS}
    return SystemDescription(sft, potential, observables, dict(options), extra)


def load_system(path, strict: bool = True) -> SystemDescription:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return loads_system(text, strict)


def loads_system(text: str, strict: bool = True) -> SystemDescription:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"line {e.lineno} column {e.colno}: {e.msg}") from None
    return parse_system(obj, strict)


def golden_mean_system() -> SystemDescription:
    sft = new_sft(2, [[1, 1], [1, 0]])
    return SystemDescription(sft, LocallyConstantFn.constant(sft, 0.0),
                             {"g": LocallyConstantFn.indicator(sft, 0)})


def full_shift_system(n: int = 2) -> SystemDescription:
    sft = new_sft(n, [[1] * n for _ in range(n)])
    return SystemDescription(sft, LocallyConstantFn.constant(sft, 0.0),
                             {"g": LocallyConstantFn.indicator(sft, 0)})


# -- report formatting -------------------------------------------------------

def fmt_real(x: float) -> str:
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else fmt_real(v) for v in row) + "\n")
    return buf.getvalue()


def json_safe(obj):
    """Replace non-finite floats by string sentinels so output stays strict JSON."""
    if isinstance(obj, float):
        if math.isfinite(obj):
            return obj
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return json_safe(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(json_safe(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


@dataclass
class ReportBundle:
    """Named payloads of one command; ``.json`` names hold dicts, ``.csv`` names text."""

    command: str
    payloads: dict
    metadata: dict

    def files(self) -> dict:
        out = {}
        for name, body in self.payloads.items():
            out[name] = body if isinstance(body, str) else dumps(body)
        out[f"{self.command}.meta.json"] = dumps(self.metadata)
        return out

    def to_stdio(self) -> str:
        return dumps({"command": self.command, "metadata": self.metadata,
                      "payloads": self.payloads})
