"""Versioned TOML run documents: parsing, validation and cascade export.

Schema (version 1); every section is optional unless a command needs it::

    version = 1

    [geometry]
    wavelength = 1.0                 # tube positions use the same unit
    tube_positions = [0.0, 0.5]
    probe = "standing"               # or "traveling"
    detection = "traveling"          # or "standing"

    [ensemble]
    tube_count = 2
    [[ensemble.species]]
    name = "dimer 1-1"
    composition = [1, 1]
    mean_count = 4

    [weights]
    sets = ["geometry", "minimum", [1, -0.5], ["1", "-0.5j"]]

    [cascade]                        # built-in ...
    kind = "1-3"                     # 1-1, 1-2, 1-3, 2-2
    N = 9
    # ... or inline stages (mutually exclusive with kind)
    # [[cascade.stages]]
    # label = "bound"
    # [[cascade.stages.species]] ...

    [scan]
    points_per_stage = 2
    reverse = false

    [pattern]
    angles = [-0.5, 0.0, 0.5]        # radians, or start/stop/count
    start = -1.0
    stop = 1.0
    count = 21

    [montecarlo]
    samples = 100000
    seed = 1
    workers = 1

    [output]
    path = "-"                       # "-" is standard output
    precision = 12

    [coupling]                       # used with --absolute
    dipole_moment = 1.0
    probe_field = 1.0
    hbar = 1.0
    coupling = 1.0
    detuning = 1.0
    cavity_decay = 1.0

Integer mean counts are kept as exact fractions, so plateau values built from
them are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .optics import CouplingParams, ModeKind, OpticalGeometry
from .scenarios import Cascade, build_cascade
from .statistics import Ensemble, Species

__all__ = ["DOCUMENT_VERSION", "DocumentError", "RunDocument", "load_document",
           "parse_document", "cascade_to_toml", "ensemble_to_toml"]

DOCUMENT_VERSION = 1


class DocumentError(ValueError):
    """Malformed run document; the message starts with the offending key path."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


_SECTIONS = {
    "geometry": {"wavelength", "tube_positions", "probe", "detection"},
    "ensemble": {"tube_count", "species"},
    "weights": {"sets"},
    "cascade": {"kind", "N", "name", "stages"},
    "scan": {"points_per_stage", "reverse"},
    "pattern": {"angles", "start", "stop", "count"},
    "montecarlo": {"samples", "seed", "workers"},
    "output": {"path", "precision"},
    "coupling": {"dipole_moment", "probe_field", "hbar", "coupling", "detuning", "cavity_decay"},
}
_SPECIES_KEYS = {"name", "composition", "mean_count"}
_STAGE_KEYS = {"label", "species"}


@dataclass
class RunDocument:
    version: int
    geometry: OpticalGeometry | None = None
    ensemble: Ensemble | None = None
    weight_sets: list | None = None
    cascade: Cascade | None = None
    points_per_stage: int | None = None
    reverse: bool = False
    angles: list[float] | None = None
    samples: int | None = None
    seed: int | None = None
    workers: int = 1
    output_path: str | None = None
    precision: int | None = None
    coupling: CouplingParams | None = None


def _check_keys(table: dict, allowed: set, where: str):
    if not isinstance(table, dict):
        raise DocumentError(where, "expected a table")
    for key in table:
        if key not in allowed:
            raise DocumentError(f"{where}.{key}" if where else key,
                                f"unknown key (allowed: {', '.join(sorted(allowed))})")


def _number(value, where, *, exact=True):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DocumentError(where, f"expected a number, got {value!r}")
    if isinstance(value, float) and not math.isfinite(value):
        raise DocumentError(where, "must be finite")
    return Fraction(value) if exact and isinstance(value, int) else value


def _integer(value, where, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise DocumentError(where, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise DocumentError(where, f"must be >= {minimum}")
    return value


def _require(table, key, where):
    if key not in table:
        raise DocumentError(f"{where}.{key}" if where != "document" else key, "missing required key")
    return table[key]


def _species_list(items, where, tube_count=None) -> list[Species]:
    if not isinstance(items, list):
        raise DocumentError(where, "expected an array of tables")
    out = []
    for k, item in enumerate(items):
        loc = f"{where}[{k}]"
        _check_keys(item, _SPECIES_KEYS, loc)
        comp = _require(item, "composition", loc)
        if not isinstance(comp, list):
            raise DocumentError(f"{loc}.composition", "expected an array of integers")
        comp = [_integer(c, f"{loc}.composition[{j}]", 0) for j, c in enumerate(comp)]
        if tube_count is not None and len(comp) != tube_count:
            raise DocumentError(f"{loc}.composition",
                                f"has {len(comp)} entries, expected {tube_count}")
        lam = _number(_require(item, "mean_count", loc), f"{loc}.mean_count")
        name = str(item.get("name", f"species{k}"))
        try:
            out.append(Species(name, tuple(comp), lam))
        except ValueError as exc:
            raise DocumentError(loc, str(exc)) from None
    return out


def _parse_weight(entry, where):
    if isinstance(entry, str):
        if entry in ("geometry", "minimum"):
            return entry
        raise DocumentError(where, f"expected 'geometry', 'minimum' or an array, got {entry!r}")
    if not isinstance(entry, list) or not entry:
        raise DocumentError(where, "expected a non-empty array of weights")
    weights = []
    for j, g in enumerate(entry):
        if isinstance(g, str):
            try:
                weights.append(complex(g.replace(" ", "")))
            except ValueError:
                raise DocumentError(f"{where}[{j}]", f"cannot parse complex weight {g!r}") from None
        else:
            weights.append(_number(g, f"{where}[{j}]"))
    return weights


def parse_document(data: dict[str, Any]) -> RunDocument:
    _check_keys(data, set(_SECTIONS) | {"version"}, "")
    version = _integer(_require(data, "version", "document"), "version")
    if version != DOCUMENT_VERSION:
        raise DocumentError("version", f"unsupported version {version}, expected {DOCUMENT_VERSION}")
    doc = RunDocument(version=version)
    for section, allowed in _SECTIONS.items():
        if section in data:
            _check_keys(data[section], allowed, section)

    if "geometry" in data:
        g = data["geometry"]
        positions = _require(g, "tube_positions", "geometry")
        if not isinstance(positions, list):
            raise DocumentError("geometry.tube_positions", "expected an array of numbers")
        positions = [_number(y, f"geometry.tube_positions[{i}]", exact=False)
                     for i, y in enumerate(positions)]
        try:
            doc.geometry = OpticalGeometry(
                tube_positions=tuple(positions),
                wavelength=float(_number(g.get("wavelength", 1.0), "geometry.wavelength", exact=False)),
                probe_kind=ModeKind.parse(g.get("probe", "standing")),
                detection_kind=ModeKind.parse(g.get("detection", "traveling")),
            )
        except ValueError as exc:
            raise DocumentError("geometry", str(exc)) from None

    if "ensemble" in data:
        e = data["ensemble"]
        tubes = _integer(_require(e, "tube_count", "ensemble"), "ensemble.tube_count", 1)
        species = _species_list(e.get("species", []), "ensemble.species", tubes)
        doc.ensemble = Ensemble(tubes, tuple(species))

    if "weights" in data:
        sets = _require(data["weights"], "sets", "weights")
        if not isinstance(sets, list) or not sets:
            raise DocumentError("weights.sets", "expected a non-empty array")
        doc.weight_sets = [_parse_weight(s, f"weights.sets[{i}]") for i, s in enumerate(sets)]

    if "cascade" in data:
        doc.cascade = _parse_cascade(data["cascade"])

    if "scan" in data:
        s = data["scan"]
        if "points_per_stage" in s:
            doc.points_per_stage = _integer(s["points_per_stage"], "scan.points_per_stage", 2)
        if "reverse" in s:
            if not isinstance(s["reverse"], bool):
                raise DocumentError("scan.reverse", "expected true or false")
            doc.reverse = s["reverse"]

    if "pattern" in data:
        doc.angles = _parse_angles(data["pattern"])

    if "montecarlo" in data:
        m = data["montecarlo"]
        if "samples" in m:
            doc.samples = _integer(m["samples"], "montecarlo.samples", 1)
        if "seed" in m:
            doc.seed = _integer(m["seed"], "montecarlo.seed", 0)
        if "workers" in m:
            doc.workers = _integer(m["workers"], "montecarlo.workers", 1)

    if "output" in data:
        o = data["output"]
        if "path" in o:
            if not isinstance(o["path"], str):
                raise DocumentError("output.path", "expected a string")
            doc.output_path = o["path"]
        if "precision" in o:
            doc.precision = _integer(o["precision"], "output.precision", 1)

    if "coupling" in data:
        c = data["coupling"]
        kwargs = {k: float(_number(v, f"coupling.{k}", exact=False)) for k, v in c.items()}
        for key in ("dipole_moment", "probe_field"):
            _require(c, key, "coupling")
        doc.coupling = CouplingParams(**kwargs)
    return doc


def _parse_cascade(c: dict) -> Cascade:
    has_kind, has_stages = "kind" in c, "stages" in c
    if has_kind == has_stages:
        raise DocumentError("cascade", "give exactly one of 'kind' or 'stages'")
    if has_kind:
        N = _number(c.get("N", 1), "cascade.N")
        if not N > 0:
            raise DocumentError("cascade.N", "must be positive")
        try:
            return build_cascade(c["kind"], N)
        except ValueError as exc:
            raise DocumentError("cascade.kind", str(exc)) from None
    stages_raw = c["stages"]
    if not isinstance(stages_raw, list) or not stages_raw:
        raise DocumentError("cascade.stages", "expected a non-empty array of tables")
    stages = []
    tubes = None
    for k, st in enumerate(stages_raw):
        loc = f"cascade.stages[{k}]"
        _check_keys(st, _STAGE_KEYS, loc)
        species = _species_list(_require(st, "species", loc), f"{loc}.species", tubes)
        if not species:
            raise DocumentError(f"{loc}.species", "stage has no species")
        tubes = len(species[0].composition)
        stages.append((str(st.get("label", f"stage{k}")), Ensemble(tubes, tuple(species))))
    # mean-conservation violations surface as CascadeError, not DocumentError
    return Cascade(str(c.get("name", "inline")), tuple(stages), 1)


def _parse_angles(p: dict) -> list[float]:
    if "angles" in p:
        if any(k in p for k in ("start", "stop", "count")):
            raise DocumentError("pattern", "give either 'angles' or start/stop/count, not both")
        if not isinstance(p["angles"], list) or not p["angles"]:
            raise DocumentError("pattern.angles", "expected a non-empty array")
        return [float(_number(a, f"pattern.angles[{i}]", exact=False)) for i, a in enumerate(p["angles"])]
    start = float(_number(_require(p, "start", "pattern"), "pattern.start", exact=False))
    stop = float(_number(_require(p, "stop", "pattern"), "pattern.stop", exact=False))
    count = _integer(_require(p, "count", "pattern"), "pattern.count", 1)
    if count == 1:
        return [start]
    return [start + (stop - start) * i / (count - 1) for i in range(count)]


def load_document(path: str | Path) -> RunDocument:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise DocumentError(str(path), exc.strerror or str(exc)) from None
    except tomllib.TOMLDecodeError as exc:
        raise DocumentError(str(path), f"invalid TOML: {exc}") from None
    return parse_document(data)


def _toml_value(v) -> str:
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else repr(float(v))
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return repr(v)


def _species_toml(species, header) -> list[str]:
    lines = []
    for s in species:
        lines += ["", f"[[{header}]]",
                  f"name = {_toml_value(s.name)}",
                  f"composition = {_toml_value(list(s.composition))}",
                  f"mean_count = {_toml_value(s.mean_count)}"]
    return lines


def ensemble_to_toml(ensemble: Ensemble) -> str:
    lines = [f"version = {DOCUMENT_VERSION}", "", "[ensemble]",
             f"tube_count = {ensemble.tube_count}"]
    lines += _species_toml(ensemble.species, "ensemble.species")
    return "\n".join(lines) + "\n"


def cascade_to_toml(cascade: Cascade, points_per_stage: int = 11) -> str:
    """Inline-stage document for a cascade, ready to edit and feed back to ``scan``."""
    lines = [f"version = {DOCUMENT_VERSION}", "",
             "[scan]", f"points_per_stage = {points_per_stage}", "",
             "[cascade]", f"name = {_toml_value(cascade.name)}"]
    for label, ens in cascade.stages:
        lines += ["", "[[cascade.stages]]", f"label = {_toml_value(label)}"]
        lines += _species_toml(ens.species, "cascade.stages.species")
    return "\n".join(lines) + "\n"
