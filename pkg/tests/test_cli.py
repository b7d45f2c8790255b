"""End-to-end runs of the command line front end, all in-process.

Exit code contract: 0 holds / success, 1 legitimate failure or refusal,
2 malformed input, 3 a stored record that no longer replays.
"""

import json

import numpy as np
import pytest

from latticelab.cli import main
from latticelab.convergence import (
    FamilyMetadata,
    SequenceFamily,
    check_order_convergence,
)
from latticelab.config import CheckConfig
from latticelab.core import Carrier, LatticeElement, SpaceTag, Tail
from latticelab.counterexamples import build_refinement
from latticelab.serialize import (
    canonical_json,
    family_to_json,
    load_family,
    sha256_of,
    space_to_json,
    verdict_to_json,
    write_json,
)

CAR3 = Carrier.index_set(3)


def el(vals, tail=None):
    return LatticeElement(CAR3, np.asarray(vals, dtype=np.float64),
                          tail or Tail.zero())


def halving_family(limit=True):
    members = [el([2.0 ** -n, 0.0, 1.0]) for n in range(1, 25)]
    meta = FamilyMetadata(
        common_bound=el([1.0, 1.0, 1.0], Tail.constant(1.0)),
        space_tag=SpaceTag.linf(), growth="bounded",
        limit=el([0.0, 0.0, 1.0]) if limit else None)
    return SequenceFamily(members=members, metadata=meta)


@pytest.fixture
def family_file(tmp_path):
    path = tmp_path / "fam.json"
    write_json(path, family_to_json(halving_family()))
    return path


# ---------------------------------------------------------------------------
# check


def test_check_order_holds(family_file, tmp_path, capsys):
    out = tmp_path / "report"
    code = main(["check", "--family", str(family_file), "--mode", "order",
                 "--tolerance", "1e-6", "--out", str(out)])
    assert code == 0
    assert "order: holds" in capsys.readouterr().out
    doc = json.loads((out / "check_report.json").read_text())
    assert doc["outcome"] == "holds"
    assert doc["provenance"]["args"]["mode"] == "order"
    assert "timestamp" not in json.dumps(doc)


def test_check_report_matches_the_in_memory_verdict(family_file, tmp_path):
    out = tmp_path / "report"
    main(["check", "--family", str(family_file), "--mode", "order",
          "--tolerance", "1e-6", "--out", str(out)])
    doc = json.loads((out / "check_report.json").read_text())
    doc.pop("provenance")
    fam = load_family(family_file)
    verdict = check_order_convergence(fam, fam.metadata.limit,
                                      CheckConfig(tolerance=1e-6))
    assert doc == json.loads(canonical_json(verdict_to_json(verdict)))


def test_check_reports_are_byte_identical_across_reruns(family_file, tmp_path):
    outs = [tmp_path / "r1", tmp_path / "r2"]
    for out in outs:
        code = main(["check", "--family", str(family_file), "--mode",
                     "buo-equals-order", "--tolerance", "1e-6", "--out", str(out)])
        assert code == 0
    assert sha256_of(outs[0] / "check_report.json") == \
        sha256_of(outs[1] / "check_report.json")


def test_check_paired_mode_prints_both_verdicts(family_file, tmp_path, capsys):
    code = main(["check", "--family", str(family_file), "--mode",
                 "buo-equals-order", "--tolerance", "1e-6",
                 "--out", str(tmp_path / "o")])
    assert code == 0
    assert "order=holds buo=holds equal=True" in capsys.readouterr().out


def test_check_failure_exits_one(tmp_path):
    alt = SequenceFamily(
        members=[el([1.0, 0, 0]) if n % 2 else el([-1.0, 0, 0])
                 for n in range(12)],
        metadata=FamilyMetadata(common_bound=el([1, 1, 1], Tail.constant(1.0))))
    path = tmp_path / "alt.json"
    write_json(path, family_to_json(alt))
    code = main(["check", "--family", str(path), "--mode", "buo-cauchy",
                 "--policy", "sampled", "--out", str(tmp_path / "o")])
    assert code == 1
    doc = json.loads((tmp_path / "o" / "check_report.json").read_text())
    assert doc["outcome"] == "fails"


def test_check_inconclusive_also_exits_one(family_file, tmp_path, capsys):
    # the halving family declares no cauchy norms and is not monotone, so
    # no certificate route applies; inconclusive is not a pass
    code = main(["check", "--family", str(family_file), "--mode", "buo-cauchy",
                 "--policy", "certificate", "--out", str(tmp_path / "o")])
    assert code == 1
    assert "buo_cauchy: inconclusive" in capsys.readouterr().out


def test_check_missing_family_file_exits_two(tmp_path, capsys):
    code = main(["check", "--family", str(tmp_path / "ghost.json"),
                 "--mode", "order", "--out", str(tmp_path / "o")])
    assert code == 2
    assert "input error" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# generate, then feed the outputs back in


def test_generate_hats_is_deterministic_and_checkable(tmp_path, capsys):
    dirs = [tmp_path / "g1", tmp_path / "g2"]
    for d in dirs:
        code = main(["generate", "hats", "--levels", "3,5,9", "--depth", "6",
                     "--out", str(d)])
        assert code == 0
    for name in ("hat_family.json", "hat_escape.json"):
        assert sha256_of(dirs[0] / name) == sha256_of(dirs[1] / name)
    code = main(["check", "--family", str(dirs[0] / "hat_family.json"),
                 "--mode", "buo-cauchy", "--out", str(tmp_path / "c")])
    assert code == 0
    assert "buo_cauchy: holds" in capsys.readouterr().out


def test_generate_ladder_writes_trend_tables(tmp_path):
    out = tmp_path / "ladder"
    code = main(["generate", "ladder", "--levels", "4,8,16", "--n-max", "3",
                 "--out", str(out)])
    assert code == 0
    esc = json.loads((out / "ladder_escape.json").read_text())
    assert esc["scale_fit"][0] == pytest.approx(-0.5, abs=1e-9)
    trend = (out / "level_trend.csv").read_text().splitlines()
    assert trend[0] == "level,scale,delta,lipschitz"
    assert len(trend) == 4
    blowups = (out / "blowups.csv").read_text().splitlines()
    assert blowups[0] == "b_label,a_label,t,ratio,lower_bound"


def test_generate_steps_guards(tmp_path, capsys):
    assert main(["generate", "steps", "--size", "5", "--depth", "9",
                 "--out", str(tmp_path)]) == 2
    assert "freeze the plateau" in capsys.readouterr().err
    assert main(["generate", "steps", "--eps", "-1",
                 "--out", str(tmp_path)]) == 2


def test_generated_truncation_keeps_its_model(tmp_path):
    out = tmp_path / "t"
    assert main(["generate", "truncation", "--exponent", "1.0", "--p", "1.0",
                 "--out", str(out)]) == 0
    doc = json.loads((out / "truncation_family.json").read_text())
    assert doc["generator"]["horizon"] == 10 ** 9


# ---------------------------------------------------------------------------
# witness extraction and replay


def test_witness_jumps_round_trip(tmp_path, capsys):
    out = tmp_path / "w"
    main(["generate", "steps", "--out", str(out)])
    fam = str(out / "step_family.json")
    code = main(["witness", "jumps", "--family", fam, "--eps", "0.25",
                 "--count", "5", "--out", str(out)])
    assert code == 0
    assert "extracted and re-verified 5 jumps above 0.25" in capsys.readouterr().out
    assert (out / "witness.json").exists() and (out / "refutation.json").exists()
    code = main(["verify", "--family", fam, "--witness", str(out / "witness.json")])
    assert code == 0
    assert "witness re-verified" in capsys.readouterr().out


def test_tampered_witness_replay_exits_three(tmp_path, capsys):
    out = tmp_path / "w"
    main(["generate", "steps", "--out", str(out)])
    fam = str(out / "step_family.json")
    main(["witness", "jumps", "--family", fam, "--eps", "0.25",
          "--count", "5", "--out", str(out)])
    doc = json.loads((out / "witness.json").read_text())
    doc["jumps"] = [j * 0.5 for j in doc["jumps"]]
    write_json(out / "tampered.json", doc)
    code = main(["verify", "--family", fam, "--witness", str(out / "tampered.json")])
    assert code == 3
    assert "invariant breach" in capsys.readouterr().err


def test_witness_blocks_and_the_convergent_refusal(tmp_path, capsys):
    t1 = tmp_path / "div"
    main(["generate", "truncation", "--exponent", "1.0", "--p", "1.0",
          "--out", str(t1)])
    code = main(["witness", "blocks", "--family",
                 str(t1 / "truncation_family.json"), "--p", "1.0",
                 "--count", "2", "--out", str(t1)])
    assert code == 0
    assert "2 disjoint blocks" in capsys.readouterr().out
    t2 = tmp_path / "conv"
    main(["generate", "truncation", "--exponent", "2.0", "--p", "1.0",
          "--out", str(t2)])
    code = main(["witness", "blocks", "--family",
                 str(t2 / "truncation_family.json"), "--p", "1.0",
                 "--count", "2", "--out", str(t2)])
    assert code == 1
    assert "refused: the pointwise limit lies in lp(p=1)" in capsys.readouterr().err


def test_witness_jumps_refusal_and_constants_guard(tmp_path, capsys):
    out = tmp_path / "w"
    main(["generate", "steps", "--out", str(out)])
    fam = str(out / "step_family.json")
    code = main(["witness", "jumps", "--family", fam, "--eps", "10.0",
                 "--count", "5", "--out", str(out)])
    assert code == 1
    assert "large-value hypothesis" in capsys.readouterr().err
    code = main(["witness", "jumps", "--family", fam, "--eps", "0.25",
                 "--constants", "nope", "--out", str(out)])
    assert code == 2
    assert "not name=value" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# certificate replay


def test_verify_replays_an_order_report(family_file, tmp_path, capsys):
    out = tmp_path / "r"
    main(["check", "--family", str(family_file), "--mode", "order",
          "--tolerance", "1e-6", "--out", str(out)])
    code = main(["verify", "--family", str(family_file),
                 "--report", str(out / "check_report.json")])
    assert code == 0
    assert "certificate re-verified" in capsys.readouterr().out


def test_verify_rejects_a_tampered_report(family_file, tmp_path):
    out = tmp_path / "r"
    main(["check", "--family", str(family_file), "--mode", "order",
          "--tolerance", "1e-6", "--out", str(out)])
    doc = json.loads((out / "check_report.json").read_text())
    doc["certificate"]["final_sup"] = 999.0
    write_json(out / "tampered.json", doc)
    assert main(["verify", "--family", str(family_file),
                 "--report", str(out / "tampered.json")]) == 3


def test_verify_refuses_buo_probe_replay(family_file, tmp_path, capsys):
    out = tmp_path / "r"
    main(["check", "--family", str(family_file), "--mode", "buo",
          "--tolerance", "1e-6", "--out", str(out)])
    code = main(["verify", "--family", str(family_file),
                 "--report", str(out / "check_report.json")])
    assert code == 2
    assert "cannot replay certificate type 'buo'" in capsys.readouterr().err


def test_verify_input_guards(family_file, capsys):
    assert main(["verify", "--family", str(family_file)]) == 2
    assert "exactly one of" in capsys.readouterr().err
    assert main(["verify", "--family", str(family_file),
                 "--report", str(family_file)]) == 2
    assert "not a check report" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# metric and envelope


@pytest.fixture
def space_file(tmp_path):
    space = build_refinement("accumulation", [5]).spaces[0]
    path = tmp_path / "space.json"
    write_json(path, space_to_json(space))
    return path


def test_metric_report(space_file, tmp_path, capsys):
    out = tmp_path / "m"
    code = main(["metric", "--space", str(space_file), "--format", "space-json",
                 "--out", str(out)])
    assert code == 0
    assert "n=6 delta=" in capsys.readouterr().out
    doc = json.loads((out / "metric_report.json").read_text())
    assert doc["discreteness_constant"] == pytest.approx(1.0 / 20.0, rel=1e-12)
    assert doc["closest_pair"] == ["p04", "p05"]
    profile = (out / "isolation_profile.csv").read_text().splitlines()
    assert profile[0] == "label,isolation_radius"
    assert len(profile) == 7
    assert (out / "delta_trend.csv").exists()


def test_envelope_report(space_file, tmp_path):
    out = tmp_path / "e"
    code = main(["envelope", "--space", str(space_file), "--format",
                 "space-json", "--set", "x0", "--ns", "1,2,4", "--out", str(out)])
    assert code == 0
    doc = json.loads((out / "envelope_report.json").read_text())
    assert [r["n"] for r in doc["rows"]] == [1, 2, 4]
    assert doc["rows"][0]["alpha"] == 0.25
    # max slope of sqrt on the level-5 space is sqrt(5) < 4: already Lipschitz
    assert doc["rows"][2]["alpha"] == 0.0
    for row in doc["rows"]:
        assert row["achieved_error"] <= row["alpha"] + 1e-9


def test_envelope_rejects_unknown_labels(space_file, tmp_path, capsys):
    code = main(["envelope", "--space", str(space_file), "--format",
                 "space-json", "--set", "ghost", "--out", str(tmp_path / "e")])
    assert code == 2
    assert "unknown label 'ghost'" in capsys.readouterr().err


def test_csv_space_ingestion(tmp_path):
    csv_path = tmp_path / "pts.csv"
    csv_path.write_text("label,x\na,0\nb,1\nc,3\n")
    out = tmp_path / "m"
    code = main(["metric", "--space", str(csv_path), "--format", "coords-csv",
                 "--out", str(out)])
    assert code == 0
    doc = json.loads((out / "metric_report.json").read_text())
    assert doc["discreteness_constant"] == 1.0


def test_malformed_csv_exits_two(tmp_path, capsys):
    csv_path = tmp_path / "pts.csv"
    csv_path.write_text("label,x\na,zero\n")
    code = main(["metric", "--space", str(csv_path), "--format", "coords-csv",
                 "--out", str(tmp_path / "m")])
    assert code == 2
    assert "could not parse 'zero'" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# parser plumbing


def test_version_flag_exits_cleanly(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "latticelab" in capsys.readouterr().out


def test_missing_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2
