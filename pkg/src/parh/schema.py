"""Input file schema: bundle specs and intersection data as structured text.

JSON documents with an explicit ``schema_version``; exact rationals are
encoded as "p/q" strings so parse/serialize round trips preserve them;
complex numbers are [re, im] pairs.  Every record invariant is enforced at
parse time with the violated field named in the error.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .errors import SchemaError
from .filtered import (
    ComponentData,
    ComponentPairing,
    CurvePairing,
    FilteredSpec,
    IntersectionData,
    ModelBlock,
)
from .weights import ResidueDatum, WeightSet

SCHEMA_VERSION = 1


def parse_rational(value, field: str) -> Fraction:
    try:
        if isinstance(value, str):
            return Fraction(value)
        if isinstance(value, int):
            return Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"bad rational {value!r}: {exc}", field)
    raise SchemaError(f"rational must be an integer or 'p/q' string, got {value!r}", field)


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


def format_float(x: float) -> str:
    return f"{float(x):.17g}"


def parse_complex(value, field: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if (
        isinstance(value, (list, tuple))
        and len(value) == 2
        and all(isinstance(v, (int, float)) for v in value)
    ):
        return complex(value[0], value[1])
    raise SchemaError(f"complex must be a number or [re, im], got {value!r}", field)


def format_complex(z: complex) -> list[float]:
    return [z.real, z.imag]


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise SchemaError(f"missing key {key!r}", where)
    return obj[key]


def spec_from_dict(doc: dict) -> FilteredSpec:
    version = _require(doc, "schema_version", "document")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"schema_version {version} != {SCHEMA_VERSION}", "schema_version")
    rank = _require(doc, "rank", "spec")
    lam = parse_complex(doc.get("lambda", 0.0), "lambda")
    comps = []
    for idx, c in enumerate(_require(doc, "components", "spec")):
        where = f"components[{idx}]"
        cid = _require(c, "id", where)
        anchor = parse_rational(c.get("window_anchor", 0), f"{where}.window_anchor")
        entries = []
        for widx, w in enumerate(_require(c, "weights", where)):
            entries.append((
                parse_rational(_require(w, "weight", f"{where}.weights[{widx}]"), f"{where}.weights[{widx}].weight"),
                int(_require(w, "multiplicity", f"{where}.weights[{widx}]")),
            ))
        weights = WeightSet.from_pairs(cid, entries, anchor)
        residues = []
        for ridx, r in enumerate(c.get("residues", [])):
            where_r = f"{where}.residues[{ridx}]"
            residues.append(ResidueDatum(
                parse_rational(_require(r, "weight", where_r), f"{where_r}.weight"),
                parse_complex(r.get("alpha", 0.0), f"{where_r}.alpha"),
                tuple(int(s) for s in _require(r, "jordan", where_r)),
            ))
        comps.append(ComponentData(cid, weights, tuple(residues)))
    blocks = []
    for bidx, b in enumerate(doc.get("blocks", [])):
        where_b = f"blocks[{bidx}]"
        blocks.append(ModelBlock(
            tuple(parse_complex(a, f"{where_b}.irregular") for a in b.get("irregular", [])),
            parse_rational(_require(b, "weight", where_b), f"{where_b}.weight"),
            parse_complex(b.get("alpha", 0.0), f"{where_b}.alpha"),
            tuple(int(s) for s in _require(b, "jordan", where_b)),
            char=int(b.get("char", 0)),
        ))
    return FilteredSpec(int(rank), lam, tuple(comps), tuple(blocks), str(doc.get("label", "")))


def spec_to_dict(spec: FilteredSpec) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "label": spec.label,
        "rank": spec.rank,
        "lambda": format_complex(spec.lam),
        "components": [],
    }
    for c in spec.components:
        cd = {
            "id": c.component_id,
            "window_anchor": format_rational(c.weights.window_anchor),
            "weights": [
                {"weight": format_rational(w), "multiplicity": m}
                for w, m in c.weights.entries
            ],
        }
        if c.residues:
            cd["residues"] = [
                {
                    "weight": format_rational(r.weight),
                    "alpha": format_complex(r.alpha),
                    "jordan": list(r.jordan_type),
                }
                for r in c.residues
            ]
        doc["components"].append(cd)
    if spec.blocks:
        doc["blocks"] = [
            {
                "irregular": [format_complex(a) for a in b.irregular_coeffs],
                "weight": format_rational(b.weight),
                "alpha": format_complex(b.alpha),
                "jordan": list(b.jordan_type),
                "char": b.char,
            }
            for b in spec.blocks
        ]
    return doc


def intersection_from_dict(doc: dict) -> IntersectionData:
    comps = []
    for idx, c in enumerate(doc.get("components", [])):
        where = f"intersection.components[{idx}]"
        gysin = tuple(
            (parse_rational(g["weight"], f"{where}.gysin.weight"),
             parse_rational(g["value"], f"{where}.gysin.value"))
            for g in c.get("gysin", [])
        )
        comps.append(ComponentPairing(
            _require(c, "id", where),
            parse_rational(_require(c, "HiL", where), f"{where}.HiL"),
            parse_rational(c["HiHiL"], f"{where}.HiHiL") if "HiHiL" in c else None,
            parse_rational(c["c1HiL"], f"{where}.c1HiL") if "c1HiL" in c else None,
            gysin,
        ))
    curves = []
    for idx, c in enumerate(doc.get("curves", [])):
        where = f"intersection.curves[{idx}]"
        bigraded = tuple(
            ((parse_rational(b["ci"], f"{where}.ci"), parse_rational(b["cj"], f"{where}.cj")),
             int(b["rank"]))
            for b in c.get("bigraded", [])
        )
        curves.append(CurvePairing(
            _require(c, "i", where),
            _require(c, "j", where),
            parse_rational(_require(c, "CL", where), f"{where}.CL"),
            bigraded,
        ))
    return IntersectionData(
        dim_x=int(_require(doc, "dim_x", "intersection")),
        deg_L_lattice=parse_rational(_require(doc, "deg_L_lattice", "intersection"), "deg_L_lattice"),
        ch2_lattice=parse_rational(doc["ch2_lattice"], "ch2_lattice") if "ch2_lattice" in doc else None,
        components=tuple(comps),
        curves=tuple(curves),
        c1c1_lattice=parse_rational(doc["c1c1_lattice"], "c1c1_lattice") if "c1c1_lattice" in doc else None,
    )


def intersection_to_dict(ix: IntersectionData) -> dict:
    doc: dict = {"dim_x": ix.dim_x, "deg_L_lattice": format_rational(ix.deg_L_lattice)}
    if ix.ch2_lattice is not None:
        doc["ch2_lattice"] = format_rational(ix.ch2_lattice)
    if ix.c1c1_lattice is not None:
        doc["c1c1_lattice"] = format_rational(ix.c1c1_lattice)
    if ix.components:
        doc["components"] = []
        for p in ix.components:
            cd: dict = {"id": p.component_id, "HiL": format_rational(p.HiL)}
            if p.HiHiL is not None:
                cd["HiHiL"] = format_rational(p.HiHiL)
            if p.c1HiL is not None:
                cd["c1HiL"] = format_rational(p.c1HiL)
            if p.gysin_c1GrL:
                cd["gysin"] = [
                    {"weight": format_rational(w), "value": format_rational(v)}
                    for w, v in p.gysin_c1GrL
                ]
            doc["components"].append(cd)
    if ix.curves:
        doc["curves"] = [
            {
                "i": c.comp_i,
                "j": c.comp_j,
                "CL": format_rational(c.CL),
                "bigraded": [
                    {"ci": format_rational(ci), "cj": format_rational(cj), "rank": r}
                    for (ci, cj), r in c.bigraded_ranks
                ],
            }
            for c in ix.curves
        ]
    return doc


def parse_spec(path: str | Path) -> tuple[FilteredSpec, IntersectionData | None]:
    """Load a spec file; returns the spec and its optional intersection data."""
    p = Path(path)
    if not p.exists():
        raise SchemaError(f"no such file: {p}", "path")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON at line {exc.lineno}: {exc.msg}", str(p))
    spec = spec_from_dict(doc)
    ix = intersection_from_dict(doc["intersection"]) if "intersection" in doc else None
    return spec, ix


def serialize_spec(spec: FilteredSpec, ix: IntersectionData | None = None) -> str:
    doc = spec_to_dict(spec)
    if ix is not None:
        doc["intersection"] = intersection_to_dict(ix)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
