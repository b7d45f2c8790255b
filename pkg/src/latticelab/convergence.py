"""Convergence verdicts and certificates for sequences over finite carriers.

Order convergence is decided by constructing the canonical regulator
z_m = sup over n >= m of |x_n - x| and checking that it falls below the
declared tolerance by the horizon.  uo-convergence runs the same check on
truncated differences |x_n - x| ∧ u for a fixed probe set of positive u;
on function carriers the probe u = 1 already decides, the rest guard
implementation bugs.  Buo adds order-boundedness of the whole family via
its coordinatewise dominating element.

Buo-Cauchy quantifies over all strictly increasing subsequences, which no
finite search settles.  The certificate policy therefore accepts only
metadata-backed proofs (a decreasing dominated family, or declared uniform
difference norms), while the sampled policy draws a budgeted batch of
subsequences and can only ever report a counterexample or an explicitly
inconclusive "none found".  Every verdict records the tolerance and horizon
it was decided under.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import CheckConfig, thread_count
from .core import (
    Carrier,
    LatticeElement,
    SpaceTag,
    Tail,
    abs_,
    difference,
    le,
    member_of,
    pos_part,
    sup_norm,
    tail_abs,
    tail_max,
    tail_min,
    tail_sub,
)
from .errors import (
    InputError,
    InternalInvariantError,
    MetadataError,
    PointwiseDivergenceError,
    UndecidableTailError,
)
from .numerics import power_sum

__all__ = [
    "TruncationModel",
    "FamilyMetadata",
    "SequenceFamily",
    "truncation_family",
    "OrderCertificate",
    "MonotoneCertificate",
    "UniformCauchyCertificate",
    "BuoCertificate",
    "StuckCoordinate",
    "SubsequenceWitness",
    "ConvergenceVerdict",
    "PairedVerdict",
    "NormBound",
    "CertificatePolicy",
    "SampledPolicy",
    "pointwise_limit",
    "dominating_element",
    "check_order_convergence",
    "check_buo_convergence",
    "buo_equals_order",
    "check_buo_cauchy",
    "norm_bound",
    "verify_order_certificate",
    "verify_uniform_certificate",
]

# most members a generator family will materialize for a single check
MEMBER_MATERIALIZE_LIMIT = 100_000

# how many trailing per-member values a failure witness keeps
TRACE_KEEP = 64


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class TruncationModel:
    """Closed form for the family x_n = x * 1_{j<=n} with x(j) = coeff*j^-exponent.

    Lets witness extraction reason about coordinates far beyond the stored
    prefix: suffix and block masses come from the power-sum closed forms
    instead of materialized members.
    """

    exponent: float
    coeff: float = 1.0

    def __post_init__(self):
        if not self.exponent > 0:
            raise InputError(f"truncation model needs exponent > 0, got {self.exponent}")
        if not self.coeff > 0:
            raise InputError(f"truncation model needs coeff > 0, got {self.coeff}")

    def limit_value(self, j: int) -> float:
        return self.coeff * float(j) ** (-self.exponent)

    def limit_tail(self) -> Tail:
        return Tail.power(self.exponent, self.coeff)

    def member_values(self, n: int, size: int) -> np.ndarray:
        j = np.arange(1, size + 1, dtype=np.float64)
        vals = self.coeff * j ** (-self.exponent)
        vals[j > n] = 0.0
        return vals

    def mass(self, q: float, start: int, stop) -> float:
        """Sum of |x(j)|**q for start <= j < stop (stop may be inf)."""
        return self.coeff**q * power_sum(self.exponent * q, start, stop)


@dataclass(frozen=True)
class FamilyMetadata:
    """Declared structure of a family; every claim is verified on construction
    over the materialized prefix."""

    monotone_decreasing: bool = False
    common_bound: LatticeElement | None = None
    uniformly_cauchy_norms: tuple[float, ...] | None = None
    space_tag: SpaceTag | None = None
    limit: LatticeElement | None = None
    growth: str | None = None  # "bounded" | "unbounded" | None (undeclared)
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.growth not in (None, "bounded", "unbounded"):
            raise MetadataError(f"growth must be bounded/unbounded/None, got {self.growth!r}")
        if self.growth == "unbounded" and self.common_bound is not None:
            raise MetadataError("a family cannot be both commonly bounded and unbounded")
        if self.uniformly_cauchy_norms is not None:
            eps = tuple(float(e) for e in self.uniformly_cauchy_norms)
            if any(e < 0 or not math.isfinite(e) for e in eps):
                raise MetadataError("uniform Cauchy norms must be finite and non-negative")
            object.__setattr__(self, "uniformly_cauchy_norms", eps)


class SequenceFamily:
    """A sequence of lattice elements on one carrier, indexed from n = 1.

    Extensional families store every member; generator families hold a
    closed form ``make(n)`` plus a horizon, and may attach a TruncationModel
    so downstream analysis can reach coordinates the prefix never stores.
    """

    def __init__(self, *, members=None, make=None, horizon=None, metadata=None,
                 verification_horizon=None, model=None, carrier=None):
        if (members is None) == (make is None):
            raise InputError("supply exactly one of members= or make=")
        self.metadata = metadata if metadata is not None else FamilyMetadata()
        self.model = model
        self._cache: dict = {}
        if members is not None:
            members = tuple(members)
            if not members:
                raise InputError("a family needs at least one member")
            self.members = members
            self.make = None
            self.horizon = len(members)
            self.carrier = members[0].carrier
            for m in members[1:]:
                if not self.carrier.compatible(m.carrier):
                    raise InputError("family members live on different carriers")
            self.verification_horizon = self.horizon
        else:
            if horizon is None or horizon < 1:
                raise InputError("generator families need a horizon >= 1")
            self.members = None
            self.make = make
            self.horizon = int(horizon)
            first = make(1)
            self.carrier = first.carrier if carrier is None else carrier
            self._cache[1] = first
            vh = verification_horizon if verification_horizon is not None else min(horizon, 64)
            self.verification_horizon = min(int(vh), self.horizon)
        self._verify_metadata()

    def member(self, n: int) -> LatticeElement:
        if not 1 <= n <= self.horizon:
            raise InputError(f"member index {n} outside 1..{self.horizon}")
        if self.members is not None:
            return self.members[n - 1]
        got = self._cache.get(n)
        if got is None:
            got = self.make(n)
            if not self.carrier.compatible(got.carrier):
                raise InternalInvariantError(f"generator changed carriers at n={n}")
            self._cache[n] = got
        return got

    def prefix_count(self, upto: int) -> int:
        return min(upto, self.horizon)

    def stacked(self, upto: int) -> np.ndarray:
        """Member values for n = 1..upto as an (upto, size) matrix."""
        upto = self.prefix_count(upto)
        cached = self._cache.get("stack")
        if cached is None or cached.shape[0] < upto:
            if self.members is None and upto > MEMBER_MATERIALIZE_LIMIT:
                raise InputError(
                    f"materializing {upto} generated members exceeds the limit "
                    f"{MEMBER_MATERIALIZE_LIMIT}; lower the horizon or use the model"
                )
            cached = np.stack([self.member(n).values for n in range(1, upto + 1)])
            self._cache["stack"] = cached
        return cached[:upto]

    def tails(self, upto: int):
        """Member tails for n = 1..upto, or None on metric-points carriers."""
        if not self.carrier.is_index_set:
            return None
        return [self.member(n).tail for n in range(1, self.prefix_count(upto) + 1)]

    def _verify_metadata(self) -> None:
        meta = self.metadata
        vh = self.verification_horizon
        prefix = [self.member(n) for n in range(1, vh + 1)]
        if meta.common_bound is not None:
            if not self.carrier.compatible(meta.common_bound.carrier):
                raise MetadataError("common bound lives on a different carrier")
            for n, x in enumerate(prefix, start=1):
                if not _le_or_metadata_error(abs_(x), meta.common_bound,
                                             f"member {n} vs the common bound"):
                    raise MetadataError(f"member {n} exceeds the declared common bound")
        if meta.monotone_decreasing:
            for n, (a, b) in enumerate(zip(prefix, prefix[1:]), start=1):
                if not _le_or_metadata_error(b, a, f"members {n + 1} > {n}"):
                    raise MetadataError(
                        f"family declared decreasing but member {n + 1} exceeds member {n}"
                    )
        if meta.limit is not None and not self.carrier.compatible(meta.limit.carrier):
            raise MetadataError("declared limit lives on a different carrier")
        if meta.uniformly_cauchy_norms is not None:
            eps = meta.uniformly_cauchy_norms
            if len(eps) < self.horizon:
                raise MetadataError(
                    f"{len(eps)} uniform Cauchy norms declared for horizon {self.horizon}"
                )
            for j in range(len(prefix)):
                for l in range(j + 1, len(prefix)):
                    gap = _sup_gap(prefix[j], prefix[l])
                    if gap > eps[j]:
                        raise MetadataError(
                            f"||x_{j + 1} - x_{l + 1}|| = {gap:.6g} exceeds the "
                            f"declared eps_{j + 1} = {eps[j]:.6g}"
                        )


def _le_or_metadata_error(a, b, what: str) -> bool:
    try:
        return le(a, b)
    except UndecidableTailError as exc:
        raise MetadataError(f"cannot verify claim ({what}) through undeclared tails") from exc


def _sup_gap(a: LatticeElement, b: LatticeElement) -> float:
    gap = float(np.abs(a.values - b.values).max())
    if a.carrier.is_index_set:
        t = tail_abs(tail_sub(a.tail, b.tail))
        if not t.decidable:
            raise MetadataError("cannot bound a gap through undeclared tails")
        gap = max(gap, t.sup_abs(a.first_tail_index))
    return gap


def truncation_family(exponent: float, coeff: float = 1.0, *, size: int = 64,
                      horizon: int = 10**9, p: float | None = None) -> SequenceFamily:
    """Family of truncations x_n = x * 1_{j<=n} for x(j) = coeff * j**-exponent.

    Only the first ``size`` coordinates are ever materialized; block and norm
    analysis past them goes through the attached model.  Member tails are
    exact (zero) while n <= size and undeclared beyond, so checks that
    materialize members should stay within the stored prefix.
    """
    model = TruncationModel(exponent=exponent, coeff=coeff)
    carrier = Carrier.index_set(size)
    limit = LatticeElement(carrier, model.member_values(size, size), model.limit_tail())

    def make(n: int) -> LatticeElement:
        tail = Tail.zero() if n <= size else Tail.none()
        return LatticeElement(carrier, model.member_values(n, size), tail)

    meta = FamilyMetadata(
        common_bound=limit,
        space_tag=SpaceTag.lp(p) if p is not None else None,
        limit=limit,
        growth="bounded",
        notes=(f"truncations of coeff*j**-a with a={exponent:g}, coeff={coeff:g}",),
    )
    return SequenceFamily(make=make, horizon=horizon, metadata=meta,
                          verification_horizon=min(size, 64), model=model)


# ---------------------------------------------------------------------------
# certificates, witnesses, verdicts


@dataclass(frozen=True)
class OrderCertificate:
    """The canonical regulator: z_m dominates |x_n - x| for every n >= N_m,
    decreases in m, and its last level sits below the tolerance."""

    regulator_values: np.ndarray  # (M, size); row m-1 is z_m on the prefix
    regulator_tails: tuple[Tail, ...] | None
    thresholds: tuple[int, ...]
    final_sup: float

    def regulator(self, m: int, carrier: Carrier) -> LatticeElement:
        t = self.regulator_tails[m - 1] if self.regulator_tails is not None else None
        return LatticeElement(carrier, self.regulator_values[m - 1], t)


@dataclass(frozen=True)
class MonotoneCertificate:
    """Decreasing and dominated: each coordinate sequence converges, and the
    declared bound dominates every member and every tail difference."""

    bound: LatticeElement
    note: str = "decreasing and dominated; coordinate sequences converge"


@dataclass(frozen=True)
class UniformCauchyCertificate:
    """eps_m bounds every later pairwise sup-gap, so consecutive differences
    of any strictly increasing subsequence from index m stay under eps_m."""

    eps: tuple[float, ...]


@dataclass(frozen=True)
class BuoCertificate:
    dominator: LatticeElement
    membership_reason: str
    probe_sups: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class StuckCoordinate:
    """A coordinate whose regulator never reaches the tolerance."""

    coordinate: str
    final_regulator: float
    trace_start: int
    trace: tuple[float, ...]


@dataclass(frozen=True)
class SubsequenceWitness:
    indices: tuple[int, ...]
    stuck: StuckCoordinate


@dataclass(frozen=True)
class UnboundedGrowth:
    declared: str
    norm_trace: tuple[float, ...]


@dataclass(frozen=True)
class DominationFailure:
    tag: str
    reason: str


@dataclass(frozen=True)
class ConvergenceVerdict:
    mode: str  # order | uo | buo | buo_cauchy
    outcome: str  # holds | fails | inconclusive
    tolerance: float
    horizon: int
    certificate: object | None = None
    witness: object | None = None
    limit: LatticeElement | None = None
    bound: float | None = None
    policy: str | None = None
    seed: int | None = None
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.outcome not in ("holds", "fails", "inconclusive"):
            raise InputError(f"unknown outcome {self.outcome!r}")


@dataclass(frozen=True)
class PairedVerdict:
    order: ConvergenceVerdict
    buo: ConvergenceVerdict
    equal: bool | None
    note: str = ""


@dataclass(frozen=True)
class NormBound:
    value: float
    unbounded: bool
    norm: str
    trace: tuple[float, ...]
    trace_indices: tuple[int, ...] | None = None  # set when the trace is sampled


# ---------------------------------------------------------------------------
# pointwise limits and dominating elements


def pointwise_limit(family: SequenceFamily, config: CheckConfig | None = None) -> LatticeElement:
    """Per-coordinate limit of the family, or a divergence error naming the
    offending coordinate.

    A declared limit under a declared decrease is accepted after verifying
    the members stay above it: monotone bounded coordinate sequences
    converge, so the limit identity is the metadata's claim and the check
    confirms its consistency.  Otherwise the last-half oscillation of every
    coordinate must sit below the tolerance.
    """
    cfg = config or CheckConfig()
    meta = family.metadata
    upto = family.prefix_count(cfg.horizon)

    if family.model is not None and meta.limit is not None:
        # truncations settle coordinate j at n = j; the declared limit just
        # has to agree with the model on the prefix and on the tail
        size = family.carrier.size
        if not np.array_equal(meta.limit.values, family.model.member_values(size, size)):
            raise MetadataError("declared limit disagrees with the truncation model")
        if meta.limit.tail != family.model.limit_tail():
            raise MetadataError("declared limit tail disagrees with the truncation model")
        return meta.limit

    if meta.limit is not None and meta.monotone_decreasing:
        for n in range(1, family.verification_horizon + 1):
            if not _le_or_metadata_error(meta.limit, family.member(n),
                                         "declared limit exceeds a member"):
                raise MetadataError(
                    f"declared limit exceeds member {n}; a decreasing family "
                    "cannot pass below its limit"
                )
        return meta.limit

    if upto < 2:
        raise InputError("need at least two members to estimate a limit")
    x = family.stacked(upto)
    window = x[upto - max(2, upto // 2):]
    osc = window.max(axis=0) - window.min(axis=0)
    worst = int(np.argmax(osc))
    if osc[worst] > cfg.tolerance:
        raise PointwiseDivergenceError(
            coordinate=family.carrier.coordinate_name(worst),
            oscillation=float(osc[worst]),
            tolerance=cfg.tolerance,
        )
    if meta.limit is not None:
        gap = np.abs(x[-1] - meta.limit.values)
        bad = int(np.argmax(gap))
        if gap[bad] > cfg.tolerance + osc[bad]:
            raise MetadataError(
                f"declared limit is off by {gap[bad]:.6g} at coordinate "
                f"{family.carrier.coordinate_name(bad)}"
            )
        return meta.limit
    tail = family.member(upto).tail if family.carrier.is_index_set else None
    return LatticeElement(family.carrier, x[-1], tail)


def dominating_element(family: SequenceFamily) -> LatticeElement:
    """Coordinatewise sup of |x_n| over the family: y(k) = sup_n |x_n(k)|."""
    if family.model is not None:
        # every truncation is dominated by the full limit sequence
        size = family.carrier.size
        return LatticeElement(
            family.carrier,
            family.model.member_values(size, size),
            family.model.limit_tail(),
        )
    x = family.stacked(family.horizon)
    vals = np.abs(x).max(axis=0)
    tail = None
    if family.carrier.is_index_set:
        tail = Tail.zero()
        for t in family.tails(family.horizon):
            tail = tail_max(tail, tail_abs(t), family.carrier.size + 1)
        if not tail.decidable:
            warnings.warn(
                "dominating element tail is undeclared; norm queries on it will refuse",
                stacklevel=2,
            )
    return LatticeElement(family.carrier, vals, tail)


# ---------------------------------------------------------------------------
# order / uo / buo checks


def _suffix_sup(diffs: np.ndarray) -> np.ndarray:
    """Row m-1 holds sup over n >= m of diffs[n-1] (suffix running max)."""
    return np.maximum.accumulate(diffs[::-1], axis=0)[::-1]


def _diff_tails(family, candidate, upto):
    if not family.carrier.is_index_set:
        return None
    c_tail = candidate.tail
    return [tail_abs(tail_sub(t, c_tail)) for t in family.tails(upto)]


def _fold_suffix_tails(dtails, first):
    """Suffix tail_max fold; entry m-1 covers members m..M."""
    if dtails is None:
        return None
    out = [None] * len(dtails)
    acc = Tail.zero()
    for i in range(len(dtails) - 1, -1, -1):
        acc = tail_max(acc, dtails[i], first)
        out[i] = acc
    return out


def _stuck(family, per_member, upto, worst_idx, final) -> StuckCoordinate:
    trace = per_member[:, worst_idx]
    start = max(0, upto - TRACE_KEEP)
    return StuckCoordinate(
        coordinate=family.carrier.coordinate_name(worst_idx),
        final_regulator=final,
        trace_start=start + 1,
        trace=tuple(float(v) for v in trace[start:]),
    )


def check_order_convergence(family: SequenceFamily, candidate: LatticeElement,
                            config: CheckConfig | None = None) -> ConvergenceVerdict:
    """Order convergence of x_n to the candidate, with the canonical regulator.

    On a finite carrier (plus decidable tails) this is exact: the family
    order-converges iff every coordinate regulator falls below the tolerance
    by the horizon.
    """
    cfg = config or CheckConfig()
    if not family.carrier.compatible(candidate.carrier):
        raise InputError("candidate lives on a different carrier")
    upto = family.prefix_count(cfg.horizon)
    diffs = np.abs(family.stacked(upto) - candidate.values[None, :])
    reg = _suffix_sup(diffs)
    final = float(reg[-1].max())
    notes = []
    if upto < family.horizon:
        notes.append(f"checked {upto} of {family.horizon} members (horizon cap)")

    if final > cfg.tolerance:
        worst = int(np.argmax(reg[-1]))
        return ConvergenceVerdict(
            mode="order", outcome="fails", tolerance=cfg.tolerance, horizon=upto,
            witness=_stuck(family, diffs, upto, worst, final),
            limit=candidate, notes=tuple(notes),
        )

    dtails = _diff_tails(family, candidate, upto)
    ztails = _fold_suffix_tails(dtails, family.carrier.size + 1)
    if ztails is not None:
        last = ztails[-1]
        if not last.decidable:
            notes.append("tail behavior undeclared; the prefix alone cannot certify")
            return ConvergenceVerdict(
                mode="order", outcome="inconclusive", tolerance=cfg.tolerance,
                horizon=upto, limit=candidate, notes=tuple(notes),
            )
        tail_sup = last.sup_abs(family.carrier.size + 1)
        if tail_sup > cfg.tolerance:
            return ConvergenceVerdict(
                mode="order", outcome="fails", tolerance=cfg.tolerance, horizon=upto,
                witness=StuckCoordinate(
                    coordinate=f"tail(j>={family.carrier.size + 1})",
                    final_regulator=tail_sup, trace_start=upto, trace=(),
                ),
                limit=candidate, notes=tuple(notes),
            )
        final = max(final, tail_sup)

    cert = OrderCertificate(
        regulator_values=reg,
        regulator_tails=tuple(ztails) if ztails is not None else None,
        thresholds=tuple(range(1, upto + 1)),
        final_sup=final,
    )
    tag = family.metadata.space_tag
    if tag is not None:
        # carry the limit's membership status so callers can track, e.g.,
        # a Lipschitz constant blowing up across refinements
        try:
            verdict = member_of(candidate, tag)
        except UndecidableTailError:
            notes.append(f"limit membership in {tag.describe()} undecidable (tail undeclared)")
        else:
            word = "lies in" if verdict else "leaves"
            notes.append(f"limit {word} {tag.describe()}: {verdict.reason}")
    return ConvergenceVerdict(
        mode="order", outcome="holds", tolerance=cfg.tolerance, horizon=upto,
        certificate=cert, limit=candidate, notes=tuple(notes),
    )


def verify_order_certificate(family: SequenceFamily, candidate: LatticeElement,
                             cert: OrderCertificate, tolerance: float) -> bool:
    """Replay: recompute the regulator and require exact agreement."""
    upto = len(cert.thresholds)
    diffs = np.abs(family.stacked(upto) - candidate.values[None, :])
    reg = _suffix_sup(diffs)
    if reg.shape != cert.regulator_values.shape or not np.array_equal(reg, cert.regulator_values):
        return False
    if np.any(np.diff(cert.regulator_values, axis=0) > 0):
        return False
    return cert.final_sup <= tolerance


def _uo_probes(family: SequenceFamily, dominator: LatticeElement | None, seed: int):
    """The fixed truncation probe set: 1, the dominator, five random u > 0."""
    carrier = family.carrier
    probes = [("ones", np.ones(carrier.size), Tail.constant(1.0))]
    if dominator is not None and float(np.max(dominator.values)) > 0:
        probes.append(("dominating", dominator.values,
                       dominator.tail if carrier.is_index_set else None))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, 0xB005)))
    for i in range(5):
        vals = rng.uniform(0.5, 1.5, size=carrier.size)
        probes.append((f"random-{i + 1}", vals, Tail.constant(0.5 + 0.25 * i)))
    return probes


def check_buo_convergence(family: SequenceFamily, candidate: LatticeElement,
                          config: CheckConfig | None = None) -> ConvergenceVerdict:
    """Buo: uo-convergence (truncated differences order-null against the
    probe set) plus order-boundedness of the family in its declared space."""
    cfg = config or CheckConfig()
    if not family.carrier.compatible(candidate.carrier):
        raise InputError("candidate lives on a different carrier")
    meta = family.metadata
    upto = family.prefix_count(cfg.horizon)
    notes = []
    if upto < family.horizon:
        notes.append(f"checked {upto} of {family.horizon} members (horizon cap)")

    if meta.growth == "unbounded":
        x = family.stacked(upto)
        trace = np.abs(x).max(axis=1)
        return ConvergenceVerdict(
            mode="buo", outcome="fails", tolerance=cfg.tolerance, horizon=upto,
            witness=UnboundedGrowth(declared="unbounded",
                                    norm_trace=tuple(float(v) for v in trace)),
            limit=candidate,
            notes=tuple(notes + ["declared unbounded growth rules out a common dominator"]),
        )

    y = dominating_element(family)
    tag = meta.space_tag or (SpaceTag.linf() if family.carrier.is_index_set
                             else SpaceTag.bounded_fns())
    try:
        membership = member_of(y, tag)
    except UndecidableTailError:
        notes.append("dominating element tail undeclared; boundedness undecidable")
        return ConvergenceVerdict(
            mode="buo", outcome="inconclusive", tolerance=cfg.tolerance, horizon=upto,
            limit=candidate, notes=tuple(notes),
        )
    if not membership:
        return ConvergenceVerdict(
            mode="buo", outcome="fails", tolerance=cfg.tolerance, horizon=upto,
            witness=DominationFailure(tag=tag.describe(), reason=membership.reason),
            limit=candidate, notes=tuple(notes),
        )
    bound = sup_norm(y) if family.carrier.is_index_set else y.max_abs_prefix()

    diffs = np.abs(family.stacked(upto) - candidate.values[None, :])
    dtails = _diff_tails(family, candidate, upto)
    first = family.carrier.size + 1
    probe_sups = []
    tail_blocked = None
    for name, uvals, utail in _uo_probes(family, y, cfg.seed):
        cut = np.minimum(diffs, uvals[None, :])
        # the regulator's final level is the last truncated difference itself
        final = float(cut[-1].max())
        if final > cfg.tolerance:
            worst = int(np.argmax(cut[-1]))
            return ConvergenceVerdict(
                mode="buo", outcome="fails", tolerance=cfg.tolerance, horizon=upto,
                witness=_stuck(family, cut, upto, worst, final),
                limit=candidate, bound=bound,
                notes=tuple(notes + [f"probe {name} stays above tolerance at the horizon"]),
            )
        if dtails is not None:
            cut_tail = tail_min(dtails[-1], utail, first)
            if not cut_tail.decidable:
                tail_blocked = name
            else:
                tsup = cut_tail.sup_abs(first)
                if tsup > cfg.tolerance:
                    return ConvergenceVerdict(
                        mode="buo", outcome="fails", tolerance=cfg.tolerance,
                        horizon=upto,
                        witness=StuckCoordinate(
                            coordinate=f"tail(j>={first})", final_regulator=tsup,
                            trace_start=upto, trace=(),
                        ),
                        limit=candidate, bound=bound,
                        notes=tuple(notes + [f"probe {name} stuck on the tail"]),
                    )
                final = max(final, tsup)
        probe_sups.append((name, final))
    if tail_blocked is not None:
        notes.append(f"probe {tail_blocked}: tail undeclared, prefix alone cannot certify")
        return ConvergenceVerdict(
            mode="buo", outcome="inconclusive", tolerance=cfg.tolerance, horizon=upto,
            limit=candidate, bound=bound, notes=tuple(notes),
        )

    cert = BuoCertificate(dominator=y, membership_reason=membership.reason,
                          probe_sups=tuple(probe_sups))
    return ConvergenceVerdict(
        mode="buo", outcome="holds", tolerance=cfg.tolerance, horizon=upto,
        certificate=cert, limit=candidate, bound=bound, notes=tuple(notes),
    )


def buo_equals_order(family: SequenceFamily, candidate: LatticeElement,
                     config: CheckConfig | None = None) -> PairedVerdict:
    """Run the order and Buo checks independently; decisive disagreement is a
    bug, reported with the (|x| - y)+ diagnostic, never swallowed."""
    order = check_order_convergence(family, candidate, config)
    buo = check_buo_convergence(family, candidate, config)
    if "inconclusive" in (order.outcome, buo.outcome):
        return PairedVerdict(order, buo, equal=None,
                             note="one side inconclusive; equivalence not decided")
    if order.outcome != buo.outcome:
        y = dominating_element(family)
        w = pos_part(difference(abs_(candidate), y))
        peak = int(np.argmax(w.values))
        raise InternalInvariantError(
            "order and Buo verdicts disagree "
            f"(order={order.outcome}, buo={buo.outcome}); diagnostic w=(|x|-y)+ "
            f"peaks at coordinate {family.carrier.coordinate_name(peak)} "
            f"with value {float(w.values[peak]):.6g}"
        )
    return PairedVerdict(order, buo, equal=True)


# ---------------------------------------------------------------------------
# Buo-Cauchy


@dataclass(frozen=True)
class CertificatePolicy:
    kind: str = "certificate"


@dataclass(frozen=True)
class SampledPolicy:
    count: int = 32
    max_len: int = 16
    seed: int = 0
    include: tuple = ()
    kind: str = "sampled"

    def __post_init__(self):
        if self.count < 1 or self.max_len < 2:
            raise InputError("sampled policy needs count >= 1 and max_len >= 2")
        seqs = []
        for seq in self.include:
            seq = tuple(int(v) for v in seq)
            if len(seq) < 2 or seq[0] < 1 or any(b <= a for a, b in zip(seq, seq[1:])):
                raise InputError(
                    "included subsequences must be strictly increasing with >= 2 entries"
                )
            seqs.append(seq)
        object.__setattr__(self, "include", tuple(seqs))


def _anchor(seq: list, horizon: int, max_len: int) -> tuple:
    """End the draw at the horizon so the final difference probes the zone
    the verdict's budget actually covers; trim the front to respect max_len."""
    if seq[-1] != horizon:
        seq = seq + [horizon]
    if len(seq) > max_len:
        seq = seq[len(seq) - max_len:]
    return tuple(seq)


def _subsequences(count: int, max_len: int, seed: int, horizon: int):
    """The deterministic probe batch: consecutive indices first, then seeded
    geometric-gap and uniform strictly increasing draws, alternating."""
    subs = [tuple(range(1, min(max_len, horizon) + 1))]
    children = np.random.SeedSequence(entropy=(seed, 0xCAFE)).spawn(max(0, count - 1))
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        if i % 2 == 0:
            ratio = int(rng.choice([1, 2, 4]))
            gap = int(rng.integers(1, 4))
            n = int(rng.integers(1, 4))
            seq = [n]
            while len(seq) < max_len:
                n += gap
                if n > horizon:
                    break
                seq.append(n)
                gap = max(1, gap * ratio)
        else:
            k = min(max_len, horizon)
            seq = sorted(int(v) for v in
                         rng.choice(np.arange(1, horizon + 1), size=k, replace=False))
        seq = _anchor([v for v in seq if v <= horizon], horizon, max_len)
        if len(seq) >= 2:
            subs.append(seq)
    return subs


def _check_subsequence(family, indices, tolerance):
    """Order-check the consecutive differences along one subsequence; None
    when they vanish, else the stuck-coordinate witness."""
    rows = family.stacked(max(indices))[np.asarray(indices) - 1]
    diffs = np.abs(rows[1:] - rows[:-1])
    reg = _suffix_sup(diffs)
    final = float(reg[-1].max())
    if final <= tolerance:
        if family.carrier.is_index_set:
            # the last difference is the regulator's final level on the tail too
            first = family.carrier.size + 1
            tails = family.tails(max(indices))
            t = tail_abs(tail_sub(tails[indices[-1] - 1], tails[indices[-2] - 1]))
            if t.decidable and t.sup_abs(first) > tolerance:
                return SubsequenceWitness(
                    indices=tuple(indices),
                    stuck=StuckCoordinate(coordinate=f"tail(j>={first})",
                                          final_regulator=t.sup_abs(first),
                                          trace_start=len(indices), trace=()),
                )
        return None
    worst = int(np.argmax(reg[-1]))
    return SubsequenceWitness(
        indices=tuple(indices),
        stuck=_stuck(family, diffs, len(diffs), worst, final),
    )


def check_buo_cauchy(family: SequenceFamily, policy, config: CheckConfig | None = None
                     ) -> ConvergenceVerdict:
    """Buo-Cauchy: consecutive differences of every strictly increasing
    subsequence are order-null.

    Certificate policy accepts only metadata-backed proofs.  Sampled policy
    is this tool's budgeted search device: it can find a counterexample or
    report, explicitly, that none was found; it never claims the property.
    """
    cfg = config or CheckConfig()
    meta = family.metadata
    upto = family.prefix_count(cfg.horizon)

    if isinstance(policy, CertificatePolicy):
        if meta.monotone_decreasing and meta.common_bound is not None:
            # construction verified the declared prefix; re-verify the full
            # checked range so the certificate covers what the verdict claims
            prev = family.member(1)
            for n in range(2, upto + 1):
                cur = family.member(n)
                if not _le_or_metadata_error(cur, prev, f"members {n} vs {n - 1}"):
                    raise MetadataError(f"declared decrease breaks at member {n}")
                prev = cur
            for n in range(1, upto + 1):
                if not _le_or_metadata_error(abs_(family.member(n)), meta.common_bound,
                                             f"member {n} vs the common bound"):
                    raise MetadataError(f"common bound fails at member {n}")
            cert = MonotoneCertificate(bound=meta.common_bound)
            return ConvergenceVerdict(
                mode="buo_cauchy", outcome="holds", tolerance=cfg.tolerance,
                horizon=upto, certificate=cert, bound=_bound_norm(meta.common_bound),
                policy="certificate",
                notes=("route: decreasing family under a common bound",),
            )
        if meta.uniformly_cauchy_norms is not None:
            eps = meta.uniformly_cauchy_norms[:upto]
            if any(b > a for a, b in zip(eps, eps[1:])):
                raise MetadataError("uniform Cauchy norms must be non-increasing")
            if eps[-1] > cfg.tolerance:
                return ConvergenceVerdict(
                    mode="buo_cauchy", outcome="inconclusive", tolerance=cfg.tolerance,
                    horizon=upto, policy="certificate",
                    notes=(f"declared norms stop at {eps[-1]:.6g}, above tolerance",),
                )
            verify_uniform_certificate(family, UniformCauchyCertificate(eps), strict=True)
            y = dominating_element(family)
            return ConvergenceVerdict(
                mode="buo_cauchy", outcome="holds", tolerance=cfg.tolerance,
                horizon=upto, certificate=UniformCauchyCertificate(eps),
                bound=_bound_norm(y), policy="certificate",
                notes=("route: uniform difference norms dominate every subsequence",),
            )
        return ConvergenceVerdict(
            mode="buo_cauchy", outcome="inconclusive", tolerance=cfg.tolerance,
            horizon=upto, policy="certificate",
            notes=("no certificate-grade metadata declared",),
        )

    if not isinstance(policy, SampledPolicy):
        raise InputError(f"unknown Buo-Cauchy policy {policy!r}")

    # caller-supplied subsequences (e.g. extracted witness indices) run
    # verbatim and first, so a replayed counterexample wins deterministically
    for seq in policy.include:
        if seq[-1] > upto:
            raise InputError(
                f"included subsequence reaches {seq[-1]} beyond the checked horizon {upto}"
            )
    subs = list(policy.include) + _subsequences(policy.count, policy.max_len,
                                                policy.seed, upto)
    pol_desc = f"sampled(count={policy.count},max_len={policy.max_len})"
    if policy.include:
        pol_desc += f"+{len(policy.include)} included"
    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda s: _check_subsequence(family, s, cfg.tolerance), subs))
    else:
        results = [_check_subsequence(family, s, cfg.tolerance) for s in subs]
    for witness in results:  # first failure in draw order wins: deterministic
        if witness is not None:
            return ConvergenceVerdict(
                mode="buo_cauchy", outcome="fails", tolerance=cfg.tolerance,
                horizon=upto, witness=witness,
                policy=pol_desc,
                seed=policy.seed,
                notes=(
                    "budget-relative: differences along the attached window never "
                    "reached tolerance; certificate policies are authoritative "
                    "when metadata exists",
                ),
            )
    return ConvergenceVerdict(
        mode="buo_cauchy", outcome="inconclusive", tolerance=cfg.tolerance,
        horizon=upto,
        policy=pol_desc,
        seed=policy.seed,
        notes=(
            f"no counterexample among {len(subs)} sampled subsequences; "
            "sampling cannot prove the property (search device, not a theorem)",
        ),
    )


def _bound_norm(y: LatticeElement) -> float:
    return sup_norm(y) if y.carrier.is_index_set else y.max_abs_prefix()


def verify_uniform_certificate(family: SequenceFamily, cert: UniformCauchyCertificate,
                               strict: bool = False) -> bool:
    """Replay: every pairwise sup-gap with both indices >= m fits under eps_m."""
    upto = min(len(cert.eps), family.horizon)
    members = [family.member(n) for n in range(1, upto + 1)]
    for j in range(upto):
        for l in range(j + 1, upto):
            gap = _sup_gap(members[j], members[l])
            if gap > cert.eps[j]:
                if strict:
                    raise MetadataError(
                        f"certificate violated: ||x_{j + 1} - x_{l + 1}|| = {gap:.6g} "
                        f"> eps_{j + 1} = {cert.eps[j]:.6g}"
                    )
                return False
    return True


# ---------------------------------------------------------------------------
# norms


def norm_bound(family: SequenceFamily, tag: SpaceTag) -> NormBound:
    """sup of member norms over the horizon, with the declared growth flag."""
    if family.model is not None:
        return _model_norm_bound(family, tag)
    upto = family.prefix_count(family.horizon)
    x = family.stacked(upto)
    tails = family.tails(upto)
    values = []
    if tag.kind == "lp":
        body = np.sum(np.abs(x) ** tag.p, axis=1)
        for i in range(upto):
            total = float(body[i])
            if tails is not None:
                total += tails[i].p_power_sum(tag.p, family.carrier.size + 1)
            values.append(total ** (1.0 / tag.p) if total < math.inf else math.inf)
    else:
        body = np.abs(x).max(axis=1)
        for i in range(upto):
            v = float(body[i])
            if tails is not None:
                v = max(v, tails[i].sup_abs(family.carrier.size + 1))
            values.append(v)
    return NormBound(
        value=max(values),
        unbounded=family.metadata.growth == "unbounded",
        norm=tag.describe(),
        trace=tuple(values),
    )


def _model_norm_bound(family: SequenceFamily, tag: SpaceTag) -> NormBound:
    """Closed-form member norms: no materialization past the stored prefix."""
    model = family.model
    points = []
    n = 1
    while n < family.horizon:
        points.append(n)
        n *= 2
    points.append(family.horizon)
    if tag.kind == "lp":
        trace = [model.mass(tag.p, 1, k + 1) ** (1.0 / tag.p) for k in points]
    else:
        # truncations peak at the first coordinate
        trace = [model.limit_value(1)] * len(points)
    return NormBound(
        value=max(trace),
        unbounded=family.metadata.growth == "unbounded",
        norm=tag.describe(),
        trace=tuple(trace),
        trace_indices=tuple(points),
    )
