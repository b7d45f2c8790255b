import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latticelab.config import CheckConfig
from latticelab.convergence import (
    CertificatePolicy,
    FamilyMetadata,
    MonotoneCertificate,
    SampledPolicy,
    SequenceFamily,
    SubsequenceWitness,
    TruncationModel,
    UniformCauchyCertificate,
    buo_equals_order,
    check_buo_cauchy,
    check_buo_convergence,
    check_order_convergence,
    dominating_element,
    norm_bound,
    pointwise_limit,
    truncation_family,
    verify_order_certificate,
    verify_uniform_certificate,
)
from latticelab.core import Carrier, LatticeElement, SpaceTag, Tail, sup_norm
from latticelab.counterexamples import build_refinement, hat_family
from latticelab.errors import (
    InputError,
    InternalInvariantError,
    MetadataError,
    PointwiseDivergenceError,
)

CAR3 = Carrier.index_set(3)


def seq(values, tail=None):
    return LatticeElement(CAR3, np.asarray(values, dtype=float), tail or Tail.zero())


def const_family(x, count=8):
    return SequenceFamily(members=[x] * count)


def alternating_family(count=32):
    """x_n = (-1)^n * ones: the classic family with no Cauchy subsequence
    structure along consecutive differences."""
    members = [
        seq([(-1.0) ** n] * 3, Tail.constant((-1.0) ** n)) for n in range(1, count + 1)
    ]
    return SequenceFamily(members=members)


def hats(levels=10, depth=20):
    ref = build_refinement("accumulation", [levels])
    return hat_family(ref.space_at(levels), "x0", depth)


# ---------------------------------------------------------------------------
# metadata verification at construction


def test_declared_decrease_is_checked():
    with pytest.raises(MetadataError, match="decreasing"):
        SequenceFamily(
            members=[seq([0.0, 0.0, 0.0]), seq([1.0, 0.0, 0.0])],
            metadata=FamilyMetadata(monotone_decreasing=True),
        )


def test_declared_bound_is_checked():
    with pytest.raises(MetadataError, match="common bound"):
        SequenceFamily(
            members=[seq([2.0, 0.0, 0.0])],
            metadata=FamilyMetadata(common_bound=seq([1.0, 1.0, 1.0], Tail.constant(1.0))),
        )


def test_declared_cauchy_norms_are_checked():
    with pytest.raises(MetadataError, match="exceeds the declared eps"):
        SequenceFamily(
            members=[seq([0.0, 0.0, 0.0]), seq([1.0, 0.0, 0.0])],
            metadata=FamilyMetadata(uniformly_cauchy_norms=(0.5, 0.5)),
        )


def test_cauchy_norms_must_cover_the_horizon():
    with pytest.raises(MetadataError, match="declared for horizon"):
        SequenceFamily(
            members=[seq([0.0] * 3)] * 3,
            metadata=FamilyMetadata(uniformly_cauchy_norms=(0.0,)),
        )


def test_growth_and_bound_conflict():
    with pytest.raises(MetadataError):
        FamilyMetadata(growth="unbounded", common_bound=seq([1.0] * 3))
    with pytest.raises(MetadataError):
        FamilyMetadata(growth="wild")


def test_family_needs_members_or_generator():
    with pytest.raises(InputError):
        SequenceFamily()
    with pytest.raises(InputError):
        SequenceFamily(members=[])
    with pytest.raises(InputError):
        SequenceFamily(make=lambda n: seq([0.0] * 3))


# ---------------------------------------------------------------------------
# pointwise limits


def test_declared_monotone_limit_is_returned_exactly():
    fam = hats(levels=10, depth=20)
    lim = pointwise_limit(fam)
    assert lim is fam.metadata.limit
    # the limit is the indicator of the anchor
    assert lim.values[0] == 1.0 and np.all(lim.values[1:] == 0.0)


def test_oscillation_route_limit():
    members = [seq([1.0 + 1.0 / n, 0.0, -1.0]) for n in range(1, 200 + 1)]
    fam = SequenceFamily(members=members)
    lim = pointwise_limit(fam, CheckConfig(tolerance=1e-2))
    assert np.array_equal(lim.values, members[-1].values)


def test_divergent_coordinate_is_named():
    members = [seq([(-1.0) ** n, 0.0, 0.0]) for n in range(1, 33)]
    fam = SequenceFamily(members=members)
    with pytest.raises(PointwiseDivergenceError) as exc:
        pointwise_limit(fam)
    assert exc.value.coordinate == "1"
    assert exc.value.oscillation == 2.0


def test_model_route_rejects_a_wrong_declared_limit():
    model = TruncationModel(exponent=1.0)
    carrier = Carrier.index_set(4)

    def make(n):
        return LatticeElement(carrier, model.member_values(n, 4), Tail.zero())

    fam = SequenceFamily(
        make=make, horizon=100, model=model,
        metadata=FamilyMetadata(limit=LatticeElement(carrier, np.ones(4), Tail.zero())),
    )
    with pytest.raises(MetadataError, match="disagrees with the truncation model"):
        pointwise_limit(fam)


def test_declared_limit_must_match_the_data():
    fam = SequenceFamily(
        members=[seq([0.0] * 3)] * 8,
        metadata=FamilyMetadata(limit=seq([1.0, 0.0, 0.0])),
    )
    with pytest.raises(MetadataError, match="declared limit is off"):
        pointwise_limit(fam)


def test_single_member_without_metadata_cannot_decide():
    with pytest.raises(InputError):
        pointwise_limit(SequenceFamily(members=[seq([0.0] * 3)]))


# ---------------------------------------------------------------------------
# dominating element


def test_dominator_of_the_alternating_family_is_one():
    y = dominating_element(alternating_family())
    assert np.all(y.values == 1.0)
    assert y.tail == Tail.constant(1.0)


def test_dominator_of_hats_is_the_first_hat():
    fam = hats()
    y = dominating_element(fam)
    assert np.array_equal(y.values, fam.member(1).values)


def test_dominator_norm_is_the_member_sup():
    members = [seq([1.0, -2.0, 0.5]), seq([-3.0, 1.0, 0.0]), seq([0.0, 0.0, 4.0])]
    fam = SequenceFamily(members=members)
    y = dominating_element(fam)
    assert np.array_equal(y.values, [3.0, 2.0, 4.0])
    assert sup_norm(y) == max(sup_norm(m) for m in members)


def test_model_dominator_is_the_full_limit():
    fam = truncation_family(1.0, size=16, horizon=10**6)
    y = dominating_element(fam)
    assert y.values[0] == 1.0
    assert y.tail == Tail.power(1.0, 1.0)


# ---------------------------------------------------------------------------
# order convergence


def test_constant_family_order_converges_with_zero_regulator():
    x = seq([1.0, 2.0, 3.0])
    v = check_order_convergence(const_family(x), x)
    assert v.outcome == "holds"
    assert v.certificate.final_sup == 0.0
    assert verify_order_certificate(const_family(x), x, v.certificate, v.tolerance)


def test_harmonic_scaling_family_holds_at_loose_tolerance():
    fam = SequenceFamily(
        make=lambda n: seq([1.0 / n] * 3, Tail.zero()), horizon=10_000
    )
    zero = seq([0.0] * 3)
    v = check_order_convergence(fam, zero, CheckConfig(tolerance=1e-3))
    assert v.outcome == "holds"
    # the canonical regulator is z_m = (1/m) * ones
    reg = v.certificate.regulator_values
    for m in (1, 10, 100):
        assert reg[m - 1].max() == 1.0 / m


def test_hats_order_converge_to_the_indicator():
    fam = hats(levels=10, depth=20)
    v = check_order_convergence(fam, pointwise_limit(fam))
    assert v.outcome == "holds"
    assert v.certificate.final_sup == 0.0
    assert any("limit lies in bounded_fns" in n for n in v.notes)


def test_order_failure_names_the_stuck_coordinate():
    x = seq([1.0, 0.0, 0.0])
    v = check_order_convergence(const_family(x), seq([0.0] * 3))
    assert v.outcome == "fails"
    assert v.witness.coordinate == "1"
    assert v.witness.final_regulator == 1.0


def test_order_failure_on_the_tail_alone():
    members = [seq([0.0] * 3, Tail.constant(1.0))] * 4
    fam = SequenceFamily(members=members)
    v = check_order_convergence(fam, seq([0.0] * 3))
    assert v.outcome == "fails"
    assert v.witness.coordinate == "tail(j>=4)"


def test_order_inconclusive_on_undeclared_tails():
    members = [seq([0.0] * 3, Tail.none())] * 4
    fam = SequenceFamily(members=members)
    v = check_order_convergence(fam, seq([0.0] * 3))
    assert v.outcome == "inconclusive"
    assert any("undeclared" in n for n in v.notes)


def test_order_membership_note_for_sequence_tags():
    members = [seq([1.0 / n] * 3) for n in range(1, 64)]
    fam = SequenceFamily(members=members, metadata=FamilyMetadata(space_tag=SpaceTag.c0()))
    v = check_order_convergence(fam, seq([0.0] * 3), CheckConfig(tolerance=0.1))
    assert v.outcome == "holds"
    assert any("limit lies in c0" in n for n in v.notes)


def test_order_candidate_carrier_mismatch():
    with pytest.raises(InputError):
        check_order_convergence(
            const_family(seq([0.0] * 3)),
            LatticeElement(Carrier.index_set(2), np.zeros(2), Tail.zero()),
        )


def test_certificate_replay_rejects_tampering():
    x = seq([1.0, 2.0, 3.0])
    fam = const_family(x)
    v = check_order_convergence(fam, x)
    cert = v.certificate
    hacked = type(cert)(
        regulator_values=cert.regulator_values + 1e-3,
        regulator_tails=cert.regulator_tails,
        thresholds=cert.thresholds,
        final_sup=cert.final_sup,
    )
    assert not verify_order_certificate(fam, x, hacked, v.tolerance)
    # a certificate replayed against the wrong family also fails
    other = const_family(seq([9.0, 9.0, 9.0]))
    assert not verify_order_certificate(other, x, cert, v.tolerance)


# ---------------------------------------------------------------------------
# Buo convergence


def test_constant_family_buo_holds_with_dominator_certificate():
    x = seq([1.0, -1.0, 0.5])
    v = check_buo_convergence(const_family(x), x)
    assert v.outcome == "holds"
    assert v.bound == 1.0
    assert all(s <= v.tolerance for _, s in v.certificate.probe_sups)


def test_declared_unbounded_growth_fails_buo():
    members = [seq([float(n), 0.0, 0.0], Tail.zero()) for n in range(1, 9)]
    fam = SequenceFamily(members=members, metadata=FamilyMetadata(growth="unbounded"))
    v = check_buo_convergence(fam, seq([0.0] * 3))
    assert v.outcome == "fails"
    assert v.witness.declared == "unbounded"
    assert v.witness.norm_trace[-1] == 8.0


def test_buo_failure_when_differences_stay_up():
    fam = alternating_family()
    v = check_buo_convergence(fam, seq([0.0] * 3))
    assert v.outcome == "fails"
    assert v.witness.final_regulator == 1.0
    assert any("probe ones" in n for n in v.notes)


def test_buo_domination_failure_in_a_declared_space():
    members = [seq([1.0] * 3, Tail.constant(1.0))] * 4
    fam = SequenceFamily(
        members=members,
        metadata=FamilyMetadata(space_tag=SpaceTag.lp(1.0), limit=members[0]),
    )
    v = check_buo_convergence(fam, members[0])
    assert v.outcome == "fails"
    assert v.witness.tag == "lp(p=1)"
    assert "divergent" in v.witness.reason


def test_buo_inconclusive_on_undeclared_dominator_tail():
    members = [seq([0.0] * 3, Tail.none())] * 4
    fam = SequenceFamily(members=members)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        v = check_buo_convergence(fam, seq([0.0] * 3))
    assert v.outcome == "inconclusive"
    assert any("boundedness undecidable" in n for n in v.notes)


# ---------------------------------------------------------------------------
# the equivalence harness


def test_paired_verdicts_agree_on_holds():
    x = seq([0.5, 0.25, 0.0])
    pv = buo_equals_order(const_family(x), x)
    assert pv.equal is True
    assert pv.order.outcome == "holds" and pv.buo.outcome == "holds"


def test_paired_verdicts_agree_on_fails():
    fam = const_family(seq([0.0] * 3))
    pv = buo_equals_order(fam, seq([2.0] * 3))
    assert pv.equal is True
    assert pv.order.outcome == "fails" and pv.buo.outcome == "fails"


def test_paired_verdict_reports_inconclusive_sides():
    members = [seq([0.0] * 3, Tail.none())] * 4
    fam = SequenceFamily(members=members)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pv = buo_equals_order(fam, seq([0.0] * 3))
    assert pv.equal is None
    assert "inconclusive" in pv.note


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_random_bounded_families_never_split_the_verdicts(entropy):
    rng = np.random.default_rng(entropy)
    size = int(rng.integers(2, 8))
    carrier = Carrier.index_set(size)
    limit_vals = rng.uniform(-2.0, 2.0, size=size)
    horizon = int(rng.integers(8, 40))
    members = [
        LatticeElement(
            carrier,
            limit_vals + rng.uniform(-1.0, 1.0, size=size) / (n * n),
            Tail.zero(),
        )
        for n in range(1, horizon + 1)
    ]
    fam = SequenceFamily(members=members)
    candidate = LatticeElement(carrier, limit_vals, Tail.zero())
    pv = buo_equals_order(fam, candidate, CheckConfig(tolerance=1e-2))
    assert pv.equal is True
    assert pv.order.outcome == pv.buo.outcome


# ---------------------------------------------------------------------------
# Buo-Cauchy


def test_monotone_certificate_route_on_hats():
    v = check_buo_cauchy(hats(), CertificatePolicy())
    assert v.outcome == "holds"
    assert isinstance(v.certificate, MonotoneCertificate)
    assert v.bound == 1.0
    assert v.policy == "certificate"


def test_uniform_certificate_route():
    # x_n = (1 - 2^(1-n)) * ones settles geometrically: eps_m = 2^(1-m)
    count = 32
    members = [seq([1.0 - 2.0 ** (1 - n)] * 3, Tail.zero()) for n in range(1, count + 1)]
    eps = tuple(2.0 ** (1 - m) for m in range(1, count + 1))
    fam = SequenceFamily(
        members=members, metadata=FamilyMetadata(uniformly_cauchy_norms=eps)
    )
    v = check_buo_cauchy(fam, CertificatePolicy())
    assert v.outcome == "holds"
    assert isinstance(v.certificate, UniformCauchyCertificate)
    assert v.certificate.eps[-1] <= 1e-9


def test_uniform_route_stays_inconclusive_above_tolerance():
    members = [seq([1.0 - 2.0 ** (1 - n)] * 3, Tail.zero()) for n in range(1, 9)]
    eps = tuple(2.0 ** (1 - m) for m in range(1, 9))
    fam = SequenceFamily(
        members=members, metadata=FamilyMetadata(uniformly_cauchy_norms=eps)
    )
    v = check_buo_cauchy(fam, CertificatePolicy())
    assert v.outcome == "inconclusive"
    assert any("above tolerance" in n for n in v.notes)


def test_certificate_policy_without_metadata_is_inconclusive():
    v = check_buo_cauchy(const_family(seq([1.0] * 3)), CertificatePolicy())
    assert v.outcome == "inconclusive"
    assert any("no certificate-grade metadata" in n for n in v.notes)


def test_sampled_policy_finds_the_alternating_witness():
    v = check_buo_cauchy(alternating_family(), SampledPolicy(count=8, seed=0))
    assert v.outcome == "fails"
    assert isinstance(v.witness, SubsequenceWitness)
    assert v.witness.stuck.final_regulator == 2.0
    assert len(v.witness.indices) >= 2


def test_sampled_policy_never_claims_the_property():
    v = check_buo_cauchy(const_family(seq([1.0] * 3)), SampledPolicy(count=8, seed=0))
    assert v.outcome == "inconclusive"
    assert any("no counterexample" in n for n in v.notes)
    assert any("search device" in n for n in v.notes)


def test_included_subsequence_replays_verbatim():
    fam = alternating_family()
    first = check_buo_cauchy(fam, SampledPolicy(count=8, seed=0))
    replay = check_buo_cauchy(
        fam, SampledPolicy(count=1, seed=999, include=(first.witness.indices,))
    )
    assert replay.outcome == "fails"
    assert replay.witness.indices == first.witness.indices


def test_included_subsequence_beyond_horizon_is_rejected():
    fam = const_family(seq([0.0] * 3), count=8)
    with pytest.raises(InputError, match="beyond the checked horizon"):
        check_buo_cauchy(fam, SampledPolicy(include=((1, 99),)))


def test_sampled_policy_validation():
    with pytest.raises(InputError):
        SampledPolicy(count=0)
    with pytest.raises(InputError):
        SampledPolicy(max_len=1)
    with pytest.raises(InputError):
        SampledPolicy(include=((3, 2),))
    with pytest.raises(InputError):
        check_buo_cauchy(const_family(seq([0.0] * 3)), policy="sampled")


@given(st.integers(min_value=3, max_value=12), st.integers(min_value=0, max_value=1000))
def test_certificate_soundness_on_settled_windows(levels, seed):
    # Sampled draws are anchored at the horizon, so each verdict hinges on
    # the final step ||x_H - x_j||.  Scope: hats settle (repeat the
    # indicator) from depth `levels` on, geometric draws land above H/5 and
    # uniform draws above max_len - 1, so depth >= 5*levels + 5 puts every
    # landing point in the settled zone and the two routes must agree.
    fam = hats(levels=levels, depth=5 * levels + 5)
    cert = check_buo_cauchy(fam, CertificatePolicy())
    assert cert.outcome == "holds"
    sampled = check_buo_cauchy(fam, SampledPolicy(count=12, max_len=16, seed=seed))
    assert sampled.outcome != "fails"


# ---------------------------------------------------------------------------
# norm bounds


def test_norm_bound_is_window_exact():
    members = [seq([1.0 - 1.0 / n] * 3, Tail.constant(1.0 - 1.0 / n)) for n in range(1, 101)]
    fam = SequenceFamily(members=members)
    nb = norm_bound(fam, SpaceTag.linf())
    assert nb.value == 1.0 - 1.0 / 100
    assert nb.norm == "linf"
    assert nb.trace == tuple(1.0 - 1.0 / n for n in range(1, 101))
    assert not nb.unbounded


def test_norm_bound_flags_declared_unbounded_growth():
    members = [seq([float(n)] * 3, Tail.zero()) for n in range(1, 9)]
    fam = SequenceFamily(members=members, metadata=FamilyMetadata(growth="unbounded"))
    nb = norm_bound(fam, SpaceTag.linf())
    assert nb.unbounded
    assert nb.value == 8.0


def test_norm_bound_on_hats_is_one():
    nb = norm_bound(hats(), SpaceTag.bounded_fns())
    assert nb.value == 1.0


def test_model_norm_bound_matches_partial_sums():
    fam = truncation_family(1.0, size=8, horizon=16, p=2.0)
    nb = norm_bound(fam, SpaceTag.lp(2.0))
    assert nb.trace_indices == (1, 2, 4, 8, 16)
    for k, got in zip(nb.trace_indices, nb.trace):
        oracle = math.sqrt(sum(j ** -2.0 for j in range(1, k + 1)))
        assert got == pytest.approx(oracle, rel=1e-12)
    assert nb.value == nb.trace[-1]


def test_model_norm_bound_sup_route():
    fam = truncation_family(0.5, coeff=2.0, size=8, horizon=64)
    nb = norm_bound(fam, SpaceTag.linf())
    assert nb.value == 2.0
    assert all(v == 2.0 for v in nb.trace)


# ---------------------------------------------------------------------------
# uniform certificate replay


def test_uniform_certificate_replay_detects_violations():
    members = [seq([0.0] * 3), seq([1.0] * 3)]
    fam = SequenceFamily(members=members)
    cert = UniformCauchyCertificate(eps=(0.5, 0.5))
    assert not verify_uniform_certificate(fam, cert)
    with pytest.raises(MetadataError, match=r"\|\|x_1 - x_2\|\| = 1"):
        verify_uniform_certificate(fam, cert, strict=True)
    good = UniformCauchyCertificate(eps=(1.0, 1.0))
    assert verify_uniform_certificate(fam, good)
