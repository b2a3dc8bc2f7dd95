"""Fixed-point search, period bounds and existence tests for relay loops.

A periodic solution of the closed loop is a waveform u over one period
whose relay image, pushed through the delayed plant and negated,
reproduces u. Because the relay output determines the waveform, the
search space is finite: candidate sign patterns over one period. The
analyzer enumerates the single-peaked candidates (one positive run, one
negative run, optionally separated by single zeros), verifies each as a fixed
point, and annotates the findings against the provable period bounds.
An exhaustive oracle over all 3^P patterns provides the independent
cross-check and also surfaces oscillations outside the single-peaked
class.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lti import (
    ImpulseResponse,
    PlantSpec,
    TruncationError,
    check_monotone_decay,
    circulant,
    cyclic_shift,
    is_convex_on_support,
    loop_gain,
    periodic_summation,
)
from .variation import (
    cyclic_diff,
    cyclic_sign_changes,
    is_sign_symmetric,
    max_cyclic_sign_changes,
    relay_vec,
    sign_counts,
)

__all__ = [
    "InternalCheckError",
    "OscillationRecord",
    "PeriodBounds",
    "AbsenceVerdict",
    "OracleEntry",
    "OscillationReport",
    "dominance_index",
    "period_bounds",
    "canonical_rotation",
    "enumerate_unimodal_patterns",
    "verify_fixed_point",
    "exists_base_oscillation",
    "dead_zone_threshold",
    "subharmonic_periods",
    "check_absence",
    "brute_force_fixed_points",
    "find_oscillations",
    "default_pmax",
    "report_from_dict",
]

#: refuse the exhaustive 3^P oracle beyond this period by default
ORACLE_CAP = 16

#: chunk size (patterns per block) for the vectorized oracle
_ORACLE_CHUNK = 3**10


class InternalCheckError(AssertionError):
    """A cross-assertion that must hold for decaying plants failed."""


# -- records and reports ------------------------------------------------


@dataclass(frozen=True)
class OscillationRecord:
    """A verified periodic solution, reported once per rotation family.

    ``pattern`` is the lexicographically smallest rotation of the relay
    output; ``waveform`` is the matching loop response (its relay image
    equals ``pattern`` exactly). Every cyclic shift of the pattern is a
    fixed pattern of the same loop, so the family is reported once and
    ``phases`` lists the valid shifts.
    """

    period: int
    pattern: tuple[int, ...]
    waveform: tuple[float, ...]
    unimodal: bool
    pattern_unimodal: bool
    sign_symmetric: bool
    is_self_oscillation: bool
    phases: tuple[int, ...]

    @property
    def admissible(self) -> bool:
        """Single-peaked waveform with a single-peaked relay pattern."""
        return self.unimodal and self.pattern_unimodal

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "pattern": list(self.pattern),
            "waveform": list(self.waveform),
            "flags": {
                "unimodal": self.unimodal,
                "pattern_unimodal": self.pattern_unimodal,
                "admissible": self.admissible,
                "sign_symmetric": self.sign_symmetric,
                "is_self_oscillation": self.is_self_oscillation,
            },
            "phases": list(self.phases),
        }


@dataclass(frozen=True)
class PeriodBounds:
    """Provable period window for single-peaked oscillations with P >= delay.

    ``lower`` is twice the delay and no admissible oscillation has a
    period strictly between the delay and that value. ``upper`` adds
    twice the dominance index of the core response. ``upper_convex`` is
    the tighter 4 * delay + 2 available when the core response is convex
    on its support (meaningful for delay >= 2).
    """

    delay: int
    dominance_index: int
    lower: int
    upper: int
    upper_convex: Optional[int]

    def to_dict(self) -> dict:
        return {
            "delay": self.delay,
            "dominance_index": self.dominance_index,
            "lower": self.lower,
            "upper": self.upper,
            "upper_convex": self.upper_convex,
        }


@dataclass(frozen=True)
class AbsenceVerdict:
    applicable: bool
    reason: str

    def to_dict(self) -> dict:
        return {"applicable": self.applicable, "reason": self.reason}


@dataclass(frozen=True)
class OracleEntry:
    """An oracle-found fixed pattern family missing from the records."""

    period: int
    pattern: tuple[int, ...]
    pattern_unimodal: bool
    in_analyzer: bool

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "pattern": list(self.pattern),
            "pattern_unimodal": self.pattern_unimodal,
            "in_analyzer": self.in_analyzer,
        }


@dataclass
class OscillationReport:
    """Everything one analysis run produced, JSON-serializable."""

    plant: PlantSpec
    pmax: int
    bounds: Optional[PeriodBounds]
    absence: Optional[AbsenceVerdict]
    records: list[OscillationRecord]
    oracle_pmax: int = 0
    oracle_diff: list[OracleEntry] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = self.plant.to_dict()
        return {
            "plant": d["plant"],
            "Pd": d["delay"],
            "chi0": d["dead_zone"],
            "pmax": self.pmax,
            "bounds": self.bounds.to_dict() if self.bounds else None,
            "absence": self.absence.to_dict() if self.absence else None,
            "records": [r.to_dict() for r in self.records],
            "oracle_pmax": self.oracle_pmax,
            "oracle_diff": [e.to_dict() for e in self.oracle_diff],
            "violations": list(self.violations),
        }


def report_from_dict(d: dict) -> OscillationReport:
    """Rebuild a report from its JSON form (records are re-verified upstream)."""
    plant = PlantSpec.from_dict(
        {"plant": d["plant"], "delay": d["Pd"], "dead_zone": d["chi0"]}
    )
    bounds = None
    if d.get("bounds"):
        b = d["bounds"]
        bounds = PeriodBounds(
            b["delay"], b["dominance_index"], b["lower"], b["upper"], b["upper_convex"]
        )
    absence = None
    if d.get("absence"):
        absence = AbsenceVerdict(d["absence"]["applicable"], d["absence"]["reason"])
    records = [
        OscillationRecord(
            period=r["period"],
            pattern=tuple(r["pattern"]),
            waveform=tuple(r["waveform"]),
            unimodal=r["flags"]["unimodal"],
            pattern_unimodal=r["flags"]["pattern_unimodal"],
            sign_symmetric=r["flags"]["sign_symmetric"],
            is_self_oscillation=r["flags"]["is_self_oscillation"],
            phases=tuple(r["phases"]),
        )
        for r in d.get("records", [])
    ]
    oracle = [
        OracleEntry(e["period"], tuple(e["pattern"]), e["pattern_unimodal"], e["in_analyzer"])
        for e in d.get("oracle_diff", [])
    ]
    return OscillationReport(
        plant=plant,
        pmax=d["pmax"],
        bounds=bounds,
        absence=absence,
        records=records,
        oracle_pmax=d.get("oracle_pmax", 0),
        oracle_diff=oracle,
        violations=list(d.get("violations", [])),
    )


# -- bounds ---------------------------------------------------------------


def dominance_index(g0: ImpulseResponse, tol: float = 1e-12) -> int:
    """Smallest t >= 1 whose leading partial sum strictly outweighs the tail.

    That is, the first t with sum_{k<t} g0(k) - sum_{k>=t} g0(k) > 0,
    the tail evaluated through the certified bound. The gap must clear
    ``tol`` to count as positive; if it hovers inside the tolerance band
    past the horizon the call fails rather than guess.
    """
    t = 1
    acc = 0.0
    while True:
        acc += g0.sample(t - 1)
        # certified lower enclosure of the gap: partial sum minus tail bound
        if acc - g0.tail_bound(t) > tol:
            return t
        t += 1
        if t > 1_000_000:
            raise TruncationError("partial-sum dominance undecidable within the horizon")


def period_bounds(plant: PlantSpec, tol: float = 1e-12) -> PeriodBounds:
    """Period window for single-peaked oscillations with P >= delay.

    Requires delay >= 1. The convex tightening is attached whenever the
    core response is convex on its support; it is provable for delay >= 2
    and reported (and empirically valid) at delay 1 as well.
    """
    if plant.delay < 1:
        raise ValueError("period bounds require a positive delay")
    ps = dominance_index(plant.g0, tol)
    convex = is_convex_on_support(plant.g0, tol)
    return PeriodBounds(
        delay=plant.delay,
        dominance_index=ps,
        lower=2 * plant.delay,
        upper=2 * (plant.delay + ps),
        upper_convex=4 * plant.delay + 2 if convex else None,
    )


def default_pmax(plant: PlantSpec, tol: float = 1e-12) -> int:
    """Default sweep ceiling: the provable upper bound plus two slack steps.

    Nothing single-peaked exists beyond the bound, so the slack exists
    to detect bound violations as loud failures instead of silence.
    """
    if plant.delay < 1:
        return 2 * (1 + dominance_index(plant.g0, tol)) + 2
    return period_bounds(plant, tol).upper + 2


# -- pattern enumeration --------------------------------------------------


def canonical_rotation(pattern) -> tuple[int, ...]:
    """Lexicographically smallest cyclic rotation (entries ordered -1 < 0 < 1)."""
    s = [int(x) for x in pattern]
    n = len(s)
    return min(tuple(s[k:] + s[:k]) for k in range(n))


def enumerate_unimodal_patterns(period: int) -> list[tuple[int, ...]]:
    """All single-peaked relay patterns of a given length, one per rotation family.

    The four run shapes are [+^a 0 -^b 0], [+^a -^b 0], [+^a 0 -^b] and
    [+^a -^b] with a, b >= 1, closed under rotation and deduplicated to
    the canonical rotation. Every returned pattern has zero-resolved
    cyclic variation exactly 2, and these are the only fixed-point
    candidates with that property (one-signed patterns can never match
    the sign-flipped loop output).
    """
    if period < 2:
        raise ValueError("patterns need at least two entries")
    found = set()
    for a in range(1, period):
        b = period - a
        if b >= 1:
            found.add(canonical_rotation([1] * a + [-1] * b))
    for a in range(1, period - 1):
        b = period - 1 - a
        if b >= 1:
            found.add(canonical_rotation([1] * a + [-1] * b + [0]))
            found.add(canonical_rotation([1] * a + [0] + [-1] * b))
    for a in range(1, period - 2):
        b = period - 2 - a
        if b >= 1:
            found.add(canonical_rotation([1] * a + [0] + [-1] * b + [0]))
    return sorted(found)


# -- fixed-point verification ----------------------------------------------


def _verify_pattern(folded: np.ndarray, delay: int, dead_zone: float, pattern: np.ndarray):
    """Loop response for a pattern given the already-folded kernel; None if not fixed."""
    period = folded.size
    y = circulant(folded) @ pattern
    u = -np.roll(y, delay % period)
    image = np.where(u > dead_zone, 1, np.where(u < -dead_zone, -1, 0))
    if not np.array_equal(image, pattern.astype(np.int64)):
        return None
    return u


def _record_from(u: np.ndarray, pattern: np.ndarray) -> OscillationRecord:
    period = int(u.size)
    canon = canonical_rotation(pattern)
    # align the stored waveform with the canonical rotation
    for k in range(period):
        if tuple(int(x) for x in np.roll(pattern, k)) == canon:
            u = np.roll(u, k)
            break
    diff_var = cyclic_sign_changes(cyclic_diff(u))
    return OscillationRecord(
        period=period,
        pattern=canon,
        waveform=tuple(float(x) for x in u),
        unimodal=diff_var == 2,
        pattern_unimodal=max_cyclic_sign_changes(np.asarray(canon, float)) == 2,
        sign_symmetric=is_sign_symmetric(np.asarray(canon, float)),
        is_self_oscillation=diff_var >= 2,
        phases=tuple(range(period)),
    )


def verify_fixed_point(plant: PlantSpec, pattern, tol: float = 1e-12) -> Optional[OscillationRecord]:
    """Check one relay pattern as a fixed point of the loop.

    Returns a record when the relay image of the loop response equals
    the pattern exactly (strict inequalities, no tolerance: an entry on
    the dead-zone boundary quantizes to 0 and fails a +-1 slot). Absence
    is the None return, not an error.
    """
    s = np.asarray(pattern, dtype=float)
    if s.ndim != 1 or s.size < 2:
        raise ValueError("pattern must have at least two entries")
    if not np.all(np.isin(s, (-1.0, 0.0, 1.0))):
        raise ValueError("pattern entries must lie in {-1, 0, +1}")
    folded = periodic_summation(plant.g0, s.size, tol).values
    u = _verify_pattern(folded, plant.delay, plant.dead_zone, s)
    if u is None:
        return None
    return _record_from(u, s)


def base_pattern(delay: int) -> tuple[int, ...]:
    """The half-and-half pattern of length twice the delay."""
    if delay < 1:
        raise ValueError("delay must be at least 1")
    return tuple([1] * delay + [-1] * delay)


def exists_base_oscillation(plant: PlantSpec, tol: float = 1e-12) -> bool:
    """Existence of the oscillation with period exactly twice the delay.

    Decided by a single scalar: the first entry of the folded-kernel
    circulant applied to the half-and-half pattern, compared against the
    dead zone. The full fixed-point verification must agree; a mismatch
    would falsify the scalar criterion and raises InternalCheckError.
    """
    if plant.delay < 1:
        raise ValueError("the base oscillation needs a positive delay")
    s = np.asarray(base_pattern(plant.delay), dtype=float)
    period = s.size
    folded = periodic_summation(plant.g0, period, tol).values
    scalar = float(circulant(folded)[0] @ s)
    exists = scalar > plant.dead_zone
    verified = verify_fixed_point(plant, s, tol) is not None
    if exists != verified:
        raise InternalCheckError(
            f"scalar existence test ({scalar:.12g} vs dead zone {plant.dead_zone:.12g}) "
            f"disagrees with direct verification at period {period}"
        )
    return exists


def dead_zone_threshold(plant: PlantSpec, tol: float = 1e-12) -> float:
    """Largest dead zone below which the base-period family persists.

    Equals the delay-th largest entry of the delay-folded kernel's
    circulant applied to the half-and-half pattern, which is also the
    smallest positive entry of the base-period waveform.
    """
    if plant.delay < 1:
        raise ValueError("the threshold needs a positive delay")
    period = 2 * plant.delay
    folded = cyclic_shift(periodic_summation(plant.g0, period, tol).values, plant.delay % period)
    prod = circulant(folded) @ np.asarray(base_pattern(plant.delay), dtype=float)
    return float(np.sort(prod)[::-1][plant.delay - 1])


def subharmonic_periods(delay: int) -> list[int]:
    """All even periods of the form 2*delay / odd divisor, descending.

    These are the periods at which the half-and-half family persists
    once the base-period oscillation exists and the dead zone stays
    below the threshold; includes 2*delay itself.
    """
    if delay < 1:
        raise ValueError("delay must be at least 1")
    periods = []
    for d in range(1, delay + 1):
        if delay % d == 0 and d % 2 == 1:
            periods.append(2 * delay // d)
    return sorted(periods, reverse=True)


def check_absence(plant: PlantSpec, tol: float = 1e-12) -> AbsenceVerdict:
    """Zero-delay loops with monotone decay admit no single-peaked oscillation.

    Applicable when the loop has no pure delay (the response starts at a
    positive sample) and the decay check passes; then no waveform in the
    single-peaked class solves the loop equation, for any dead zone.
    """
    if plant.delay != 0:
        return AbsenceVerdict(False, f"loop carries a pure delay of {plant.delay}")
    decay = check_monotone_decay(plant.g0, tol=tol)
    if not decay.passed:
        return AbsenceVerdict(
            False, "absence test inapplicable: " + "; ".join(decay.notes or ("decay check failed",))
        )
    return AbsenceVerdict(
        True,
        "no single-peaked oscillation exists: zero relative degree with "
        "monotonically decaying response",
    )


# -- exhaustive oracle -----------------------------------------------------


def brute_force_fixed_points(
    plant: PlantSpec,
    period: int,
    cap: int = ORACLE_CAP,
    tol: float = 1e-12,
) -> list[tuple[int, ...]]:
    """Every fixed sign pattern at one period, by exhausting all 3^P of them.

    Enumerates each candidate individually (no rotation pruning, no
    shape assumptions), so the result is an independent oracle for the
    analyzer. The all-zero pattern, a trivial fixed point of every loop,
    is excluded. Patterns are returned sorted; rotations of a family
    appear individually.
    """
    if period < 1:
        raise ValueError("period must be positive")
    if period > cap:
        raise ValueError(f"period {period} exceeds the oracle cap {cap} (3^P candidates)")
    folded = cyclic_shift(periodic_summation(plant.g0, period, tol).values, plant.delay % period)
    kernel = circulant(folded).T  # row s -> row u through s @ kernel
    powers = 3 ** np.arange(period, dtype=np.int64)
    total = 3**period
    found: list[tuple[int, ...]] = []
    for start in range(0, total, _ORACLE_CHUNK):
        codes = np.arange(start, min(start + _ORACLE_CHUNK, total), dtype=np.int64)
        digits = ((codes[:, None] // powers[None, :]) % 3 - 1).astype(np.int8)
        u = -(digits.astype(np.float64) @ kernel)
        image = np.where(u > plant.dead_zone, 1, np.where(u < -plant.dead_zone, -1, 0)).astype(np.int8)
        hits = np.all(image == digits, axis=1) & np.any(digits != 0, axis=1)
        found.extend(tuple(int(x) for x in row) for row in digits[hits])
    return sorted(found)


# -- orchestration ----------------------------------------------------------


def _thm_necessity_violations(rec: OscillationRecord) -> list[str]:
    out = []
    pos, neg, zero = sign_counts(np.asarray(rec.pattern, float))
    if rec.admissible and pos != neg:
        out.append(
            f"admissible record at period {rec.period} is not sign-symmetric "
            f"(pattern {rec.pattern})"
        )
    if zero == 0 and rec.period != 2 * pos:
        out.append(
            f"zero-free record at period {rec.period} violates period = 2 * positive count"
        )
    return out


def _bound_violations(rec: OscillationRecord, bounds: PeriodBounds) -> list[str]:
    if not rec.admissible or rec.period < bounds.delay:
        return []
    out = []
    if rec.period < bounds.lower:
        out.append(
            f"record period {rec.period} under the lower bound {bounds.lower} "
            f"(delay {bounds.delay})"
        )
    if rec.period > bounds.upper:
        out.append(f"record period {rec.period} over the upper bound {bounds.upper}")
    if bounds.upper_convex is not None and bounds.delay >= 2 and rec.period > bounds.upper_convex:
        out.append(f"record period {rec.period} over the convex bound {bounds.upper_convex}")
    return out


def find_oscillations(
    plant: PlantSpec,
    pmax: Optional[int] = None,
    prune_sign_symmetric: bool = False,
    oracle_pmax: int = 0,
    tol: float = 1e-12,
) -> OscillationReport:
    """Sweep all single-peaked patterns up to ``pmax`` and verify fixed points.

    ``prune_sign_symmetric`` skips zero-free candidates with unequal run
    lengths (provably never fixed); the default sweep keeps them so the
    necessity claim is demonstrated rather than assumed, and both modes
    must return identical records. With ``oracle_pmax`` > 0 the
    exhaustive oracle runs for every period up to the smaller of the two
    ceilings; unmatched families are listed in ``oracle_diff`` and any
    disagreement inside the single-peaked class is flagged as a
    violation (the exit-code-2 condition upstream).
    """
    if pmax is None:
        pmax = default_pmax(plant, tol)
    if pmax < 2:
        raise ValueError("pmax must be at least 2")
    records: list[OscillationRecord] = []
    for period in range(2, pmax + 1):
        folded = periodic_summation(plant.g0, period, tol).values
        for pattern in enumerate_unimodal_patterns(period):
            arr = np.asarray(pattern, dtype=float)
            if prune_sign_symmetric:
                pos, neg, zero = sign_counts(arr)
                if zero == 0 and pos != neg:
                    continue
            u = _verify_pattern(folded, plant.delay, plant.dead_zone, arr)
            if u is not None:
                records.append(_record_from(u, arr))
    records.sort(key=lambda r: (r.period, r.pattern))

    bounds = period_bounds(plant, tol) if plant.delay >= 1 else None
    absence = check_absence(plant, tol) if plant.delay == 0 else None

    violations: list[str] = []
    for rec in records:
        violations.extend(_thm_necessity_violations(rec))
        if bounds:
            violations.extend(_bound_violations(rec, bounds))
            if bounds.delay < rec.period < bounds.lower:
                violations.append(
                    f"record period {rec.period} falls in the excluded window "
                    f"({bounds.delay}, {bounds.lower})"
                )

    oracle_entries: list[OracleEntry] = []
    effective_oracle = min(oracle_pmax, pmax)
    for period in range(2, effective_oracle + 1):
        families: dict[tuple[int, ...], bool] = {}
        for pat in brute_force_fixed_points(plant, period, cap=max(ORACLE_CAP, period), tol=tol):
            canon = canonical_rotation(pat)
            if canon not in families:
                families[canon] = max_cyclic_sign_changes(np.asarray(canon, float)) == 2
        analyzer_here = {r.pattern for r in records if r.period == period}
        for canon, unimodal_pat in sorted(families.items()):
            matched = canon in analyzer_here
            if unimodal_pat and not matched:
                violations.append(
                    f"oracle found an unmatched single-peaked fixed pattern {canon} "
                    f"at period {period}"
                )
            if not matched:
                oracle_entries.append(OracleEntry(period, canon, unimodal_pat, False))
        for canon in sorted(analyzer_here - set(families)):
            violations.append(
                f"analyzer record {canon} at period {period} is missing from the oracle"
            )

    return OscillationReport(
        plant=plant,
        pmax=pmax,
        bounds=bounds,
        absence=absence,
        records=records,
        oracle_pmax=effective_oracle,
        oracle_diff=oracle_entries,
        violations=violations,
    )
