"""Versioned JSON/CSV schemas for spaces, families, witnesses and verdicts.

JSON carries structured records (families, witnesses, certificates,
verdicts); CSV carries curves and trend tables.  Every document gets a
``schema_version`` so stored certificates stay replayable, and every writer
is deterministic: sorted keys, fixed indentation, shortest round-trip float
rendering, LF newlines, UTF-8 bytes.  Ingestion errors always name the
offending line, field or member.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math

import numpy as np

from .convergence import (
    BuoCertificate,
    ConvergenceVerdict,
    FamilyMetadata,
    MonotoneCertificate,
    OrderCertificate,
    PairedVerdict,
    SequenceFamily,
    StuckCoordinate,
    SubsequenceWitness,
    UniformCauchyCertificate,
    truncation_family,
)
from .core import Carrier, LatticeElement, SpaceTag, Tail
from .counterexamples import EscapeReport
from .errors import InputError, InternalInvariantError
from .metric import FiniteMetricSpace
from .witnesses import BlockWitness, JumpWitness, RefutationCertificate

__all__ = [
    "SCHEMA_VERSION",
    "canonical_json",
    "write_json",
    "write_csv",
    "sha256_of",
    "space_to_json",
    "space_from_json",
    "family_to_json",
    "family_from_json",
    "read_distance_csv",
    "read_coords_csv",
    "load_space",
    "load_family",
    "verdict_to_json",
    "certificate_from_json",
    "witness_to_json",
    "witness_from_json",
    "escape_report_to_json",
    "refutation_to_json",
]

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# deterministic writers


def _py(x):
    """Recursively convert numpy scalars/arrays so json can render them."""
    if isinstance(x, np.ndarray):
        return [_py(v) for v in x.tolist()]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, dict):
        return {k: _py(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_py(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        raise InputError(f"cannot serialize non-finite number {x!r}")
    return x


def canonical_json(obj) -> str:
    return json.dumps(_py(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path, obj) -> None:
    with open(path, "wb") as fh:
        fh.write(canonical_json(obj).encode("utf-8"))


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    buf.write(",".join(str(h) for h in header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    with open(path, "wb") as fh:
        fh.write(buf.getvalue().encode("utf-8"))


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise InputError(f"{where}: missing required field {key!r}")
    return obj[key]


def _check_version(obj: dict, where: str) -> None:
    v = _require(obj, "schema_version", where)
    if v != SCHEMA_VERSION:
        raise InputError(f"{where}: schema_version {v} unsupported (tool writes {SCHEMA_VERSION})")


# ---------------------------------------------------------------------------
# spaces


def space_to_json(space: FiniteMetricSpace) -> dict:
    doc = {"schema_version": SCHEMA_VERSION, "labels": list(space.labels)}
    if space.coords is not None:
        doc["coords"] = space.coords
    else:
        doc["matrix"] = space.matrix
    return doc


def space_from_json(obj: dict, where: str = "space json") -> FiniteMetricSpace:
    _check_version(obj, where)
    labels = _require(obj, "labels", where)
    if "coords" in obj:
        coords = np.asarray(obj["coords"], dtype=np.float64)
        if coords.ndim == 1:
            coords = coords.reshape(-1, 1)
        return FiniteMetricSpace.from_coords(coords, labels)
    if "matrix" in obj:
        return FiniteMetricSpace.from_matrix(np.asarray(obj["matrix"], dtype=np.float64), labels)
    raise InputError(f"{where}: needs either coords or matrix")


def _parse_float(text: str, line: int, field: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise InputError(
            f"line {line}, field {field}: could not parse {text!r} as a number"
        ) from None


def read_distance_csv(path) -> FiniteMetricSpace:
    """Header row of labels, then a symmetric numeric body (an optional
    leading label column is accepted and checked against the header)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(f.strip() for f in row)]
    if len(rows) < 2:
        raise InputError(f"{path}: a distance csv needs a header and at least one row")
    header = [f.strip() for f in rows[0]]
    labeled = len(rows[1]) == len(header) + 1
    labels = header
    body = np.empty((len(rows) - 1, len(labels)))
    if len(rows) - 1 != len(labels):
        raise InputError(
            f"{path}: {len(labels)} labels in the header but {len(rows) - 1} body rows"
        )
    for r, row in enumerate(rows[1:], start=2):
        row = [f.strip() for f in row]
        if labeled:
            if row[0] != labels[r - 2]:
                raise InputError(
                    f"line {r}, field 1: row label {row[0]!r} does not match "
                    f"header label {labels[r - 2]!r}"
                )
            row = row[1:]
        if len(row) != len(labels):
            raise InputError(
                f"line {r}: expected {len(labels)} numeric fields, got {len(row)}"
            )
        for c, cell in enumerate(row):
            body[r - 2, c] = _parse_float(cell, r, c + (2 if labeled else 1))
    return FiniteMetricSpace.from_matrix(body, labels)


def read_coords_csv(path) -> FiniteMetricSpace:
    """Header ``label,x1,...``, then one labeled coordinate row per point."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(f.strip() for f in row)]
    if len(rows) < 2:
        raise InputError(f"{path}: a coords csv needs a header and at least one row")
    width = len(rows[0]) - 1
    if width < 1:
        raise InputError(f"{path}: header must name a label column and >= 1 coordinate")
    labels, coords = [], []
    for r, row in enumerate(rows[1:], start=2):
        row = [f.strip() for f in row]
        if len(row) != width + 1:
            raise InputError(f"line {r}: expected {width + 1} fields, got {len(row)}")
        labels.append(row[0])
        coords.append([_parse_float(cell, r, c + 2) for c, cell in enumerate(row[1:])])
    return FiniteMetricSpace.from_coords(np.asarray(coords), labels)


def load_space(path, fmt: str) -> FiniteMetricSpace:
    if fmt == "distance-csv":
        return read_distance_csv(path)
    if fmt == "coords-csv":
        return read_coords_csv(path)
    if fmt == "space-json":
        with open(path, encoding="utf-8") as fh:
            return space_from_json(json.load(fh), where=str(path))
    raise InputError(f"unknown space format {fmt!r}; "
                     "expected distance-csv, coords-csv or space-json")


# ---------------------------------------------------------------------------
# tails, elements, tags


def tail_to_json(tail: Tail | None):
    if tail is None:
        return None
    doc = {"kind": tail.kind}
    if tail.kind == "constant":
        doc["value"] = tail.value
    elif tail.kind == "power":
        doc["exponent"] = tail.exponent
        doc["scale"] = tail.scale
    return doc


def tail_from_json(obj, where: str) -> Tail | None:
    if obj is None:
        return None
    kind = _require(obj, "kind", where)
    if kind == "zero":
        return Tail.zero()
    if kind == "none":
        return Tail.none()
    if kind == "constant":
        return Tail.constant(float(_require(obj, "value", where)))
    if kind == "power":
        return Tail.power(float(_require(obj, "exponent", where)),
                          float(_require(obj, "scale", where)))
    raise InputError(f"{where}: unknown tail kind {kind!r}")


def element_to_json(x: LatticeElement | None):
    if x is None:
        return None
    return {"values": x.values, "tail": tail_to_json(x.tail)}


def element_from_json(obj, carrier: Carrier, where: str) -> LatticeElement | None:
    if obj is None:
        return None
    values = np.asarray(_require(obj, "values", where), dtype=np.float64)
    if values.shape[0] != carrier.size:
        raise InputError(
            f"{where}: {values.shape[0]} values for a carrier of size {carrier.size}"
        )
    return LatticeElement(carrier, values, tail_from_json(obj.get("tail"), where))


def tag_to_json(tag: SpaceTag | None):
    if tag is None:
        return None
    return {"kind": tag.kind, "p": tag.p}


def tag_from_json(obj, where: str) -> SpaceTag | None:
    if obj is None:
        return None
    kind = _require(obj, "kind", where)
    p = obj.get("p")
    return SpaceTag(kind, None if p is None else float(p))


# ---------------------------------------------------------------------------
# families


def family_to_json(family: SequenceFamily) -> dict:
    doc: dict = {"schema_version": SCHEMA_VERSION}
    car = family.carrier
    if car.is_index_set:
        doc["carrier"] = {"kind": "index_set", "size": car.size}
    else:
        doc["carrier"] = {"kind": "points"}
        doc["space"] = space_to_json(car.space)
    if family.model is not None:
        tag = family.metadata.space_tag
        doc["generator"] = {
            "kind": "truncation",
            "exponent": family.model.exponent,
            "coeff": family.model.coeff,
            "size": car.size,
            "horizon": family.horizon,
            "p": None if tag is None else tag.p,
        }
        return doc
    members = [family.member(n) for n in range(1, family.horizon + 1)]
    doc["members"] = [m.values for m in members]
    if car.is_index_set:
        doc["tails"] = [tail_to_json(m.tail) for m in members]
    doc["metadata"] = _metadata_to_json(family.metadata)
    return doc


def _metadata_to_json(meta: FamilyMetadata) -> dict:
    return {
        "monotone_decreasing": meta.monotone_decreasing,
        "common_bound": element_to_json(meta.common_bound),
        "uniformly_cauchy_norms": (None if meta.uniformly_cauchy_norms is None
                                   else list(meta.uniformly_cauchy_norms)),
        "space_tag": tag_to_json(meta.space_tag),
        "limit": element_to_json(meta.limit),
        "growth": meta.growth,
        "notes": list(meta.notes),
    }


def _metadata_from_json(obj, carrier: Carrier, where: str) -> FamilyMetadata:
    if obj is None:
        return FamilyMetadata()
    ucn = obj.get("uniformly_cauchy_norms")
    return FamilyMetadata(
        monotone_decreasing=bool(obj.get("monotone_decreasing", False)),
        common_bound=element_from_json(obj.get("common_bound"), carrier,
                                       f"{where}.common_bound"),
        uniformly_cauchy_norms=None if ucn is None else tuple(float(e) for e in ucn),
        space_tag=tag_from_json(obj.get("space_tag"), f"{where}.space_tag"),
        limit=element_from_json(obj.get("limit"), carrier, f"{where}.limit"),
        growth=obj.get("growth"),
        notes=tuple(str(n) for n in obj.get("notes", ())),
    )


def family_from_json(obj: dict, where: str = "family json") -> SequenceFamily:
    _check_version(obj, where)
    car_doc = _require(obj, "carrier", where)
    kind = _require(car_doc, "kind", f"{where}.carrier")
    if kind == "index_set":
        carrier = Carrier.index_set(int(_require(car_doc, "size", f"{where}.carrier")))
    elif kind == "points":
        space = space_from_json(_require(obj, "space", where), f"{where}.space")
        carrier = Carrier.points(space)
    else:
        raise InputError(f"{where}.carrier: unknown kind {kind!r}")

    gen = obj.get("generator")
    if gen is not None:
        if _require(gen, "kind", f"{where}.generator") != "truncation":
            raise InputError(f"{where}.generator: unknown kind {gen.get('kind')!r}")
        p = gen.get("p")
        return truncation_family(
            float(_require(gen, "exponent", f"{where}.generator")),
            float(gen.get("coeff", 1.0)),
            size=int(_require(gen, "size", f"{where}.generator")),
            horizon=int(_require(gen, "horizon", f"{where}.generator")),
            p=None if p is None else float(p),
        )

    rows = _require(obj, "members", where)
    if not rows:
        raise InputError(f"{where}: members is empty")
    tails = obj.get("tails")
    if tails is None and "tail" in obj:
        tails = [obj["tail"]] * len(rows)
    if tails is not None and len(tails) != len(rows):
        raise InputError(
            f"{where}: {len(tails)} tails for {len(rows)} members"
        )
    members = []
    for i, row in enumerate(rows, start=1):
        values = np.asarray(row, dtype=np.float64)
        if values.ndim != 1 or values.shape[0] != carrier.size:
            raise InputError(
                f"{where}: member {i} has {values.shape[0] if values.ndim == 1 else '?'} "
                f"values for a carrier of size {carrier.size}"
            )
        tail = tail_from_json(tails[i - 1], f"{where}.tails[{i}]") if tails else None
        members.append(LatticeElement(carrier, values, tail))
    meta = _metadata_from_json(obj.get("metadata"), carrier, f"{where}.metadata")
    return SequenceFamily(members=members, metadata=meta)


def load_family(path) -> SequenceFamily:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return family_from_json(doc, where=str(path))


# ---------------------------------------------------------------------------
# verdicts and certificates


def _certificate_to_json(cert):
    if cert is None:
        return None
    if isinstance(cert, OrderCertificate):
        return {
            "type": "order",
            "regulator_values": cert.regulator_values,
            "regulator_tails": (None if cert.regulator_tails is None
                                else [tail_to_json(t) for t in cert.regulator_tails]),
            "thresholds": list(cert.thresholds),
            "final_sup": cert.final_sup,
        }
    if isinstance(cert, MonotoneCertificate):
        return {"type": "monotone", "bound": element_to_json(cert.bound), "note": cert.note}
    if isinstance(cert, UniformCauchyCertificate):
        return {"type": "uniform_cauchy", "eps": list(cert.eps)}
    if isinstance(cert, BuoCertificate):
        return {
            "type": "buo",
            "dominator": element_to_json(cert.dominator),
            "membership_reason": cert.membership_reason,
            "probe_sups": [list(pair) for pair in cert.probe_sups],
        }
    return {"type": type(cert).__name__, "repr": repr(cert)}


def certificate_from_json(obj, carrier: Carrier, where: str = "certificate"):
    if obj is None:
        return None
    kind = _require(obj, "type", where)
    if kind == "order":
        tails = obj.get("regulator_tails")
        return OrderCertificate(
            regulator_values=np.asarray(_require(obj, "regulator_values", where),
                                        dtype=np.float64),
            regulator_tails=(None if tails is None else
                             tuple(tail_from_json(t, where) for t in tails)),
            thresholds=tuple(int(t) for t in _require(obj, "thresholds", where)),
            final_sup=float(_require(obj, "final_sup", where)),
        )
    if kind == "monotone":
        return MonotoneCertificate(
            bound=element_from_json(_require(obj, "bound", where), carrier, where),
            note=obj.get("note", ""),
        )
    if kind == "uniform_cauchy":
        return UniformCauchyCertificate(
            eps=tuple(float(e) for e in _require(obj, "eps", where))
        )
    raise InputError(f"{where}: cannot replay certificate type {kind!r}")


def _witness_obj_to_json(w):
    if w is None:
        return None
    if isinstance(w, SubsequenceWitness):
        return {
            "type": "subsequence",
            "indices": list(w.indices),
            "stuck": {
                "coordinate": w.stuck.coordinate,
                "final_regulator": w.stuck.final_regulator,
                "trace_start": w.stuck.trace_start,
                "trace": list(w.stuck.trace),
            },
        }
    if isinstance(w, StuckCoordinate):
        return {
            "type": "stuck_coordinate",
            "coordinate": w.coordinate,
            "final_regulator": w.final_regulator,
            "trace_start": w.trace_start,
            "trace": list(w.trace),
        }
    if isinstance(w, (JumpWitness, BlockWitness)):
        return witness_to_json(w)
    return {"type": type(w).__name__, "repr": repr(w)}


def verdict_to_json(verdict) -> dict:
    if isinstance(verdict, PairedVerdict):
        return {
            "schema_version": SCHEMA_VERSION,
            "type": "paired",
            "order": verdict_to_json(verdict.order),
            "buo": verdict_to_json(verdict.buo),
            "equal": verdict.equal,
            "note": verdict.note,
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "type": "verdict",
        "mode": verdict.mode,
        "outcome": verdict.outcome,
        "tolerance": verdict.tolerance,
        "horizon": verdict.horizon,
        "certificate": _certificate_to_json(verdict.certificate),
        "witness": _witness_obj_to_json(verdict.witness),
        "limit": element_to_json(verdict.limit),
        "bound": verdict.bound,
        "policy": verdict.policy,
        "seed": verdict.seed,
        "notes": list(verdict.notes),
    }


# ---------------------------------------------------------------------------
# extraction witnesses


def witness_to_json(w) -> dict:
    if isinstance(w, JumpWitness):
        return {
            "schema_version": SCHEMA_VERSION,
            "type": "jump",
            "eps": w.eps,
            "factor": w.factor,
            "indices": list(w.indices),
            "coordinates": list(w.coordinates),
            "jumps": list(w.jumps),
            "values_before": list(w.values_before),
            "values_after": list(w.values_after),
            "horizon": w.horizon,
            "index_shift": w.index_shift,
            "caveat": w.caveat,
        }
    if isinstance(w, BlockWitness):
        return {
            "schema_version": SCHEMA_VERSION,
            "type": "blocks",
            "p": w.p,
            "indices": list(w.indices),
            "blocks": [list(b) for b in w.blocks],
            "norms": list(w.norms),
            "tail_norms": list(w.tail_norms),
            "limit_norms": list(w.limit_norms),
            "approx_norms": list(w.approx_norms),
            "tail_budget": w.tail_budget,
            "block_mass": w.block_mass,
            "horizon": w.horizon,
            "caveat": w.caveat,
        }
    raise InputError(f"cannot serialize witness of type {type(w).__name__}")


def witness_from_json(obj: dict, where: str = "witness json", strict_replay: bool = False):
    """Rebuild a stored witness; construction re-runs every recorded
    inequality.  With ``strict_replay`` a record that fails its own
    arithmetic is an invariant breach (a tampered or stale file), not a
    schema problem."""
    _check_version(obj, where)
    kind = _require(obj, "type", where)
    try:
        if kind == "jump":
            fields = dict(
                eps=float(_require(obj, "eps", where)),
                factor=float(_require(obj, "factor", where)),
                indices=tuple(int(v) for v in _require(obj, "indices", where)),
                coordinates=tuple(int(v) for v in _require(obj, "coordinates", where)),
                jumps=tuple(float(v) for v in _require(obj, "jumps", where)),
                values_before=tuple(float(v) for v in _require(obj, "values_before", where)),
                values_after=tuple(float(v) for v in _require(obj, "values_after", where)),
                horizon=int(_require(obj, "horizon", where)),
                index_shift=int(obj.get("index_shift", 0)),
                caveat=str(obj.get("caveat", "")),
            )
            cls = JumpWitness
        elif kind == "blocks":
            fields = dict(
                p=float(_require(obj, "p", where)),
                indices=tuple(int(v) for v in _require(obj, "indices", where)),
                blocks=tuple((int(a), int(b)) for a, b in _require(obj, "blocks", where)),
                norms=tuple(float(v) for v in _require(obj, "norms", where)),
                tail_norms=tuple(float(v) for v in _require(obj, "tail_norms", where)),
                limit_norms=tuple(float(v) for v in _require(obj, "limit_norms", where)),
                approx_norms=tuple(float(v) for v in _require(obj, "approx_norms", where)),
                tail_budget=float(_require(obj, "tail_budget", where)),
                block_mass=float(_require(obj, "block_mass", where)),
                horizon=int(_require(obj, "horizon", where)),
                caveat=str(obj.get("caveat", "")),
            )
            cls = BlockWitness
        else:
            raise InputError(f"{where}: unknown witness type {kind!r}")
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: malformed field ({exc})") from None
    try:
        return cls(**fields)
    except InputError as exc:
        if strict_replay:
            raise InternalInvariantError(
                f"{where}: stored record fails its own inequalities: {exc}"
            ) from None
        raise


# ---------------------------------------------------------------------------
# reports


def escape_report_to_json(report: EscapeReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "type": "escape",
        "kind": report.kind,
        "tag": tag_to_json(report.tag),
        "quantity": report.quantity,
        "rows": [
            {"level": r.level, "scale": r.scale, "delta": r.delta, "value": r.value}
            for r in report.rows
        ],
        "scale_fit": None if report.scale_fit is None else list(report.scale_fit),
        "delta_fit": None if report.delta_fit is None else list(report.delta_fit),
        "statement": report.statement,
    }


def refutation_to_json(cert: RefutationCertificate) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "type": "refutation",
        "kind": cert.kind,
        "tag": tag_to_json(cert.tag),
        "count": cert.count,
        "lower_bounds": list(cert.lower_bounds),
        "coordinates": None if cert.coordinates is None else list(cert.coordinates),
        "blocks": None if cert.blocks is None else [list(b) for b in cert.blocks],
        "eps": cert.eps,
        "p": cert.p,
        "norm_lower_bound": cert.norm_lower_bound,
        "statement": cert.statement,
    }
