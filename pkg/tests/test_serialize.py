"""Round trips, byte determinism and ingestion diagnostics for stored records."""

import json

import numpy as np
import pytest

from latticelab.config import CheckConfig
from latticelab.convergence import (
    FamilyMetadata,
    SequenceFamily,
    buo_equals_order,
    check_buo_convergence,
    check_order_convergence,
    truncation_family,
    verify_order_certificate,
)
from latticelab.core import Carrier, LatticeElement, SpaceTag, Tail
from latticelab.counterexamples import build_refinement, hat_scenario, verify_escape
from latticelab.errors import InputError, InternalInvariantError
from latticelab.metric import FiniteMetricSpace
from latticelab.serialize import (
    SCHEMA_VERSION,
    canonical_json,
    certificate_from_json,
    escape_report_to_json,
    family_from_json,
    family_to_json,
    load_family,
    load_space,
    read_coords_csv,
    read_distance_csv,
    refutation_to_json,
    sha256_of,
    space_from_json,
    space_to_json,
    verdict_to_json,
    witness_from_json,
    witness_to_json,
    write_csv,
    write_json,
)
from latticelab.witnesses import (
    extract_big_jump_witness,
    extract_lp_block_witness,
    refute_order_boundedness,
    verify_block_witness,
    verify_jump_witness,
)


def index_element(carrier, vals, tail=None):
    return LatticeElement(carrier, np.asarray(vals, dtype=np.float64),
                          tail or Tail.zero())


def halving_family():
    carrier = Carrier.index_set(3)
    members = [index_element(carrier, [2.0 ** -n, 0.0, 1.0]) for n in range(1, 25)]
    meta = FamilyMetadata(
        common_bound=index_element(carrier, [1.0, 1.0, 1.0], Tail.constant(1.0)),
        space_tag=SpaceTag.linf(), growth="bounded", notes=("demo",))
    return SequenceFamily(members=members, metadata=meta)


def step_family(size=64):
    carrier = Carrier.index_set(size)
    members = []
    for n in range(1, size + 1):
        vals = np.zeros(size)
        vals[:n] = 1.0
        members.append(LatticeElement(carrier, vals, Tail.zero()))
    return SequenceFamily(members=members)


# ---------------------------------------------------------------------------
# deterministic writers


def test_canonical_json_sorts_keys_and_ends_with_newline():
    a = canonical_json({"b": 1, "a": [1.5, 2]})
    b = canonical_json({"a": [1.5, 2], "b": 1})
    assert a == b
    assert a.endswith("\n")
    assert a.index('"a"') < a.index('"b"')


def test_canonical_json_rejects_non_finite_numbers():
    with pytest.raises(InputError, match="non-finite"):
        canonical_json({"x": float("inf")})
    with pytest.raises(InputError, match="non-finite"):
        canonical_json({"x": [float("nan")]})


def test_write_json_bytes_are_reproducible(tmp_path):
    doc = {"z": [0.1, 0.2, 0.30000000000000004], "a": "text"}
    p1, p2 = tmp_path / "one.json", tmp_path / "two.json"
    write_json(p1, doc)
    write_json(p2, doc)
    assert sha256_of(p1) == sha256_of(p2)
    raw = p1.read_bytes()
    assert raw.endswith(b"\n") and b"\r" not in raw


def test_write_csv_renders_floats_round_trip_exactly(tmp_path):
    path = tmp_path / "curve.csv"
    write_csv(path, ["n", "value"], [(1, 0.1), (2, 1.0 / 3.0)])
    lines = path.read_text().splitlines()
    assert lines[0] == "n,value"
    assert lines[1] == "1,0.1"
    assert float(lines[2].split(",")[1]) == 1.0 / 3.0


# ---------------------------------------------------------------------------
# spaces


def test_space_round_trip_keeps_coords():
    space = FiniteMetricSpace.from_coords(
        np.array([[0.0], [0.5], [2.0]]), ["x0", "a", "b"])
    doc = space_to_json(space)
    assert "coords" in doc and "matrix" not in doc
    back = space_from_json(json.loads(canonical_json(doc)))
    assert back.labels == space.labels
    assert np.array_equal(back.matrix, space.matrix)


def test_space_round_trip_keeps_matrix():
    m = np.array([[0.0, 1.0], [1.0, 0.0]])
    space = FiniteMetricSpace.from_matrix(m, ["a", "b"])
    doc = space_to_json(space)
    assert "matrix" in doc
    back = space_from_json(doc)
    assert np.array_equal(back.matrix, m)


def test_space_json_accepts_flat_coordinate_lists():
    doc = {"schema_version": SCHEMA_VERSION, "labels": ["a", "b"],
           "coords": [0.0, 1.0]}
    assert space_from_json(doc).distance(0, 1) == 1.0


def test_space_json_diagnostics():
    with pytest.raises(InputError, match="missing required field 'schema_version'"):
        space_from_json({"labels": ["a"]})
    with pytest.raises(InputError, match=r"schema_version 99 unsupported \(tool writes 1\)"):
        space_from_json({"schema_version": 99, "labels": ["a"]})
    with pytest.raises(InputError, match="needs either coords or matrix"):
        space_from_json({"schema_version": SCHEMA_VERSION, "labels": ["a"]})


# ---------------------------------------------------------------------------
# families


def test_family_round_trip_preserves_tails_and_metadata():
    fam = halving_family()
    doc = family_to_json(fam)
    text = canonical_json(doc)
    back = family_from_json(json.loads(text))
    assert canonical_json(family_to_json(back)) == text
    assert back.horizon == fam.horizon
    for n in (1, 10, 24):
        assert np.array_equal(back.member(n).values, fam.member(n).values)
    assert back.member(2).tail == Tail.zero()
    meta = back.metadata
    assert meta.space_tag == SpaceTag.linf()
    assert meta.common_bound.tail == Tail.constant(1.0)
    assert meta.growth == "bounded"
    assert meta.notes == ("demo",)


def test_family_round_trip_on_a_points_carrier():
    space = FiniteMetricSpace.from_coords(np.array([[0.0], [1.0]]), ["x0", "p1"])
    carrier = Carrier.points(space)
    members = [LatticeElement(carrier, np.array([1.0, 1.0 / n])) for n in (1, 2, 3)]
    fam = SequenceFamily(members=members, metadata=FamilyMetadata())
    doc = family_to_json(fam)
    assert doc["carrier"] == {"kind": "points"}
    assert "tails" not in doc
    back = family_from_json(json.loads(canonical_json(doc)))
    assert back.carrier.space.labels == ("x0", "p1")
    assert np.array_equal(back.member(3).values, members[2].values)


def test_generator_families_serialize_as_their_model():
    fam = truncation_family(1.0, size=8, horizon=10 ** 9, p=1.0)
    doc = family_to_json(fam)
    assert "members" not in doc
    assert doc["generator"] == {"kind": "truncation", "exponent": 1.0,
                                "coeff": 1.0, "size": 8, "horizon": 10 ** 9,
                                "p": 1.0}
    back = family_from_json(doc)
    assert back.horizon == 10 ** 9
    for n in (1, 5, 8, 1000):
        assert np.array_equal(back.member(n).values, fam.member(n).values)


def test_family_json_diagnostics():
    base = {"schema_version": SCHEMA_VERSION,
            "carrier": {"kind": "index_set", "size": 2}}
    with pytest.raises(InputError, match="missing required field 'members'"):
        family_from_json(dict(base))
    with pytest.raises(InputError, match="members is empty"):
        family_from_json(dict(base, members=[]))
    with pytest.raises(InputError, match="member 2 has 3 values for a carrier of size 2"):
        family_from_json(dict(base, members=[[0.0, 0.0], [0.0, 0.0, 0.0]]))
    with pytest.raises(InputError, match="1 tails for 2 members"):
        family_from_json(dict(base, members=[[0.0, 0.0], [0.0, 0.0]],
                              tails=[{"kind": "zero"}]))
    with pytest.raises(InputError, match=r"unknown tail kind 'weird'"):
        family_from_json(dict(base, members=[[0.0, 0.0]],
                              tails=[{"kind": "weird"}]))
    with pytest.raises(InputError, match=r"carrier: unknown kind 'bag'"):
        family_from_json({"schema_version": SCHEMA_VERSION,
                          "carrier": {"kind": "bag"}})
    with pytest.raises(InputError, match=r"generator: unknown kind 'taylor'"):
        family_from_json(dict(base, generator={"kind": "taylor"}))


def test_load_family_names_the_parse_location(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"schema_version": 1,,}\n')
    with pytest.raises(InputError, match="line 1, column"):
        load_family(path)


# ---------------------------------------------------------------------------
# csv ingestion


def test_distance_csv_accepts_labeled_and_bare_bodies(tmp_path):
    labeled = tmp_path / "labeled.csv"
    labeled.write_text("a,b\na,0,1\nb,1,0\n")
    bare = tmp_path / "bare.csv"
    bare.write_text("a,b\n0,1\n1,0\n")
    s1, s2 = read_distance_csv(labeled), read_distance_csv(bare)
    assert s1.labels == s2.labels == ("a", "b")
    assert np.array_equal(s1.matrix, s2.matrix)


def test_distance_csv_diagnostics(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\na,0,1\nc,1,0\n")
    with pytest.raises(InputError, match="line 3, field 1: row label 'c'"):
        read_distance_csv(path)
    path.write_text("a,b\n0,x\n1,0\n")
    with pytest.raises(InputError, match="line 2, field 2: could not parse 'x'"):
        read_distance_csv(path)
    path.write_text("a,b\n0,1\n")
    with pytest.raises(InputError, match="2 labels in the header but 1 body rows"):
        read_distance_csv(path)
    path.write_text("a,b\n0,1\n1,0,4\n")
    with pytest.raises(InputError, match="line 3: expected 2 numeric fields, got 3"):
        read_distance_csv(path)
    path.write_text("a,b\n")
    with pytest.raises(InputError, match="needs a header and at least one row"):
        read_distance_csv(path)


def test_coords_csv_reads_labeled_points(tmp_path):
    path = tmp_path / "pts.csv"
    path.write_text("label,x,y\np0,0,0\np1,3,4\n")
    space = read_coords_csv(path)
    assert space.labels == ("p0", "p1")
    assert space.distance(0, 1) == 5.0


def test_coords_csv_diagnostics(tmp_path):
    path = tmp_path / "pts.csv"
    path.write_text("label,x,y\np0,0,0\np1,3\n")
    with pytest.raises(InputError, match="line 3: expected 3 fields, got 2"):
        read_coords_csv(path)
    path.write_text("label,x\np0,zero\n")
    with pytest.raises(InputError, match="line 2, field 2: could not parse 'zero'"):
        read_coords_csv(path)
    path.write_text("label\np0\n")
    with pytest.raises(InputError, match=">= 1 coordinate"):
        read_coords_csv(path)


def test_load_space_dispatch(tmp_path):
    path = tmp_path / "s.json"
    write_json(path, space_to_json(FiniteMetricSpace.from_coords(
        np.array([[0.0], [1.0]]), ["a", "b"])))
    assert load_space(path, "space-json").labels == ("a", "b")
    with pytest.raises(InputError, match="unknown space format 'tsv'"):
        load_space(path, "tsv")


# ---------------------------------------------------------------------------
# verdicts and certificates


def test_order_verdict_serializes_and_its_certificate_replays():
    fam = halving_family()
    cand = index_element(fam.carrier, [0.0, 0.0, 1.0])
    cfg = CheckConfig(tolerance=1e-6)
    verdict = check_order_convergence(fam, cand, cfg)
    assert verdict.outcome == "holds"
    doc = verdict_to_json(verdict)
    assert doc["type"] == "verdict" and doc["mode"] == "order"
    cert = certificate_from_json(doc["certificate"], fam.carrier)
    assert cert.final_sup == verdict.certificate.final_sup
    assert cert.thresholds == verdict.certificate.thresholds
    assert verify_order_certificate(fam, cand, cert, 1e-6)


def test_verdict_documents_are_byte_deterministic():
    fam = halving_family()
    cand = index_element(fam.carrier, [0.0, 0.0, 1.0])
    cfg = CheckConfig(tolerance=1e-6)
    one = canonical_json(verdict_to_json(buo_equals_order(fam, cand, cfg)))
    two = canonical_json(verdict_to_json(buo_equals_order(fam, cand, cfg)))
    assert one == two


def test_paired_verdict_document_nests_both_modes():
    fam = halving_family()
    cand = index_element(fam.carrier, [0.0, 0.0, 1.0])
    doc = verdict_to_json(buo_equals_order(fam, cand, CheckConfig(tolerance=1e-6)))
    assert doc["type"] == "paired"
    assert doc["equal"] is True
    assert doc["order"]["mode"] == "order"
    assert doc["buo"]["mode"] == "buo"


def test_failed_verdicts_carry_their_stuck_witness():
    carrier = Carrier.index_set(2)
    members = [index_element(carrier, [1.0, 0.0]) for _ in range(12)]
    fam = SequenceFamily(members=members)
    verdict = check_order_convergence(fam, index_element(carrier, [0.0, 0.0]),
                                      CheckConfig(tolerance=1e-3))
    doc = verdict_to_json(verdict)
    assert doc["outcome"] == "fails"
    assert doc["witness"]["type"] == "stuck_coordinate"
    assert doc["witness"]["trace"][-1] == 1.0


def test_buo_certificates_are_recorded_but_not_replayed():
    fam = halving_family()
    cand = index_element(fam.carrier, [0.0, 0.0, 1.0])
    verdict = check_buo_convergence(fam, cand, CheckConfig(tolerance=1e-6))
    doc = verdict_to_json(verdict)
    assert doc["certificate"]["type"] == "buo"
    assert len(doc["certificate"]["probe_sups"]) >= 1
    # probe verdicts are recomputed fresh, never trusted from a file
    with pytest.raises(InputError, match="cannot replay certificate type 'buo'"):
        certificate_from_json(doc["certificate"], fam.carrier)


def test_unknown_certificate_types_are_rejected():
    with pytest.raises(InputError, match="cannot replay certificate type 'weird'"):
        certificate_from_json({"type": "weird"}, Carrier.index_set(1))


# ---------------------------------------------------------------------------
# witnesses


def test_jump_witness_round_trip_and_replay():
    fam = step_family()
    w = extract_big_jump_witness(fam, range(1, 65), eps=0.25, count=5)
    doc = witness_to_json(w)
    assert doc["type"] == "jump" and doc["schema_version"] == SCHEMA_VERSION
    back = witness_from_json(json.loads(canonical_json(doc)))
    assert back == w
    assert verify_jump_witness(back, fam)


def test_block_witness_round_trip_and_replay():
    fam = truncation_family(1.0, size=64, horizon=10 ** 9, p=1.0)
    w = extract_lp_block_witness(fam, p=1.0, count=2)
    doc = witness_to_json(w)
    assert doc["type"] == "blocks"
    back = witness_from_json(json.loads(canonical_json(doc)))
    assert back == w
    assert verify_block_witness(back, fam)


def test_tampered_witness_records_fail_reconstruction():
    fam = step_family()
    doc = witness_to_json(extract_big_jump_witness(fam, range(1, 65),
                                                   eps=0.25, count=5))
    doc["jumps"] = [j * 0.5 for j in doc["jumps"]]
    with pytest.raises(InputError):
        witness_from_json(doc)
    # on replay of a previously-verified file the same failure is a breach
    with pytest.raises(InternalInvariantError, match="fails its own inequalities"):
        witness_from_json(doc, strict_replay=True)


def test_witness_schema_diagnostics():
    fam = step_family()
    doc = witness_to_json(extract_big_jump_witness(fam, range(1, 65),
                                                   eps=0.25, count=3))
    stale = dict(doc, schema_version=0)
    # a version mismatch is a schema problem even in strict mode
    with pytest.raises(InputError, match="schema_version 0 unsupported"):
        witness_from_json(stale, strict_replay=True)
    with pytest.raises(InputError, match="unknown witness type 'hunch'"):
        witness_from_json(dict(doc, type="hunch"))
    with pytest.raises(InputError, match="malformed field"):
        witness_from_json(dict(doc, indices=["two", 3]))
    with pytest.raises(InputError, match="missing required field 'eps'"):
        witness_from_json({k: v for k, v in doc.items() if k != "eps"})


# ---------------------------------------------------------------------------
# reports


def test_escape_report_document():
    rep = verify_escape(hat_scenario(build_refinement("accumulation", [3, 5, 9]), 3))
    doc = escape_report_to_json(rep)
    assert doc["type"] == "escape" and doc["kind"] == "hats"
    assert [r["level"] for r in doc["rows"]] == [3, 5, 9]
    assert doc["scale_fit"] is None
    assert "oscillates" in doc["statement"]
    assert canonical_json(doc) == canonical_json(escape_report_to_json(rep))


def test_refutation_document():
    fam = step_family()
    w = extract_big_jump_witness(fam, range(1, 65), eps=0.25, count=5)
    cert = refute_order_boundedness(w, SpaceTag.c0())
    doc = refutation_to_json(cert)
    assert doc["type"] == "refutation"
    assert doc["count"] == cert.count
    assert doc["tag"] == {"kind": "c0", "p": None}
    assert len(doc["lower_bounds"]) == cert.count
