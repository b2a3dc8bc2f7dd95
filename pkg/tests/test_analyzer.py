import json

import numpy as np
import pytest

from relayosc.analyzer import (
    brute_force_fixed_points,
    canonical_rotation,
    check_absence,
    dead_zone_threshold,
    default_pmax,
    dominance_index,
    enumerate_unimodal_patterns,
    exists_base_oscillation,
    find_oscillations,
    period_bounds,
    report_from_dict,
    subharmonic_periods,
    verify_fixed_point,
)
from relayosc.lti import ImpulseResponse, PlantSpec
from relayosc.variation import max_cyclic_sign_changes, sign_counts


def geometric_plant(ratio, delay, dead_zone=0.0):
    return PlantSpec(ImpulseResponse.geometric(ratio), delay, dead_zone)


def direct_dominance_index(ratio: float) -> int:
    """Independent partial-sum scan with the exact geometric tail."""
    t = 1
    while True:
        partial = (1 - ratio**t) / (1 - ratio)
        tail = ratio**t / (1 - ratio)
        if partial - tail > 0:
            return t
        t += 1


class TestDominanceIndex:
    def test_fast_decay(self):
        assert dominance_index(ImpulseResponse.geometric(0.1)) == 1
        assert dominance_index(ImpulseResponse.geometric(0.1)) == direct_dominance_index(0.1)

    def test_slow_decay(self):
        assert dominance_index(ImpulseResponse.geometric(0.9)) == 7
        assert dominance_index(ImpulseResponse.geometric(0.9)) == direct_dominance_index(0.9)

    def test_unit_pulse(self):
        assert dominance_index(ImpulseResponse.from_samples([1.0])) == 1

    def test_matches_direct_scan_on_grid(self):
        for ratio in (0.05, 0.3, 0.5, 0.7, 0.8, 0.95):
            got = dominance_index(ImpulseResponse.geometric(ratio))
            assert got == direct_dominance_index(ratio)


class TestPeriodBounds:
    def test_fast_decay_window(self):
        b = period_bounds(geometric_plant(0.1, 9))
        assert (b.lower, b.upper) == (18, 20)
        assert b.dominance_index == 1
        assert b.upper_convex == 38

    def test_slow_decay_window(self):
        b = period_bounds(geometric_plant(0.9, 8))
        assert (b.lower, b.upper) == (16, 30)
        assert b.upper_convex == 34

    def test_unit_pulse(self):
        plant = PlantSpec(ImpulseResponse.from_samples([1.0]), 1)
        b = period_bounds(plant)
        assert (b.lower, b.upper) == (2, 4)
        assert b.upper_convex == 6

    def test_needs_delay(self):
        with pytest.raises(ValueError):
            period_bounds(geometric_plant(0.1, 0))

    def test_default_pmax_adds_slack(self):
        assert default_pmax(geometric_plant(0.1, 9)) == 22


class TestPatternEnumeration:
    def test_smallest_period(self):
        assert enumerate_unimodal_patterns(2) == [(-1, 1)]

    def test_period_four_count(self):
        pats = enumerate_unimodal_patterns(4)
        assert len(pats) == 8  # 3 zero-free + 2 + 2 one-zero + 1 two-zero

    def test_all_single_peaked(self):
        for period in (2, 3, 5, 8, 13):
            for pat in enumerate_unimodal_patterns(period):
                assert max_cyclic_sign_changes(np.asarray(pat, float)) == 2

    def test_canonical_and_distinct(self):
        for period in (4, 6, 9):
            pats = enumerate_unimodal_patterns(period)
            assert len(set(pats)) == len(pats)
            for pat in pats:
                assert pat == canonical_rotation(pat)
                # full rotation family is distinct: fundamental period is P
                assert len({tuple(np.roll(pat, k)) for k in range(period)}) == period

    def test_counts_follow_run_splits(self):
        for period in range(4, 12):
            expected = (period - 1) + 2 * (period - 2) + (period - 3)
            assert len(enumerate_unimodal_patterns(period)) == expected


class TestVerifyFixedPoint:
    def test_example_family(self):
        plant = geometric_plant(0.1, 9)
        for period in (18, 6, 2):
            pat = [1] * (period // 2) + [-1] * (period // 2)
            rec = verify_fixed_point(plant, pat)
            assert rec is not None and rec.period == period
            assert rec.admissible and rec.sign_symmetric and rec.is_self_oscillation

    def test_rotations_all_verify(self):
        plant = geometric_plant(0.1, 9)
        base = [1, 1, 1, -1, -1, -1]
        recs = [verify_fixed_point(plant, np.roll(base, k)) for k in range(6)]
        assert all(r is not None for r in recs)
        assert len({r.pattern for r in recs}) == 1  # one canonical family

    def test_zero_delay_never_fixes(self):
        plant = geometric_plant(0.1, 0)
        for period in range(2, 13):
            for pat in enumerate_unimodal_patterns(period):
                assert verify_fixed_point(plant, pat) is None

    def test_dead_zone_family(self):
        plant = geometric_plant(0.1, 3, 0.8)
        rec = verify_fixed_point(plant, [1, 1, 0, -1, -1, 0])
        assert rec is not None and rec.admissible
        # boundary entries quantize to zero, so a strictly larger zone kills it
        assert verify_fixed_point(geometric_plant(0.1, 3, 1.2), [1, 1, 0, -1, -1, 0]) is None

    def test_waveform_alignment(self):
        plant = geometric_plant(0.1, 9)
        rec = verify_fixed_point(plant, [1, -1])
        from relayosc.variation import relay_vec

        assert tuple(relay_vec(rec.waveform, 0.0)) == rec.pattern

    def test_invalid_patterns(self):
        plant = geometric_plant(0.1, 1)
        with pytest.raises(ValueError):
            verify_fixed_point(plant, [2, 0])
        with pytest.raises(ValueError):
            verify_fixed_point(plant, [1])


class TestBaseOscillation:
    def test_dead_zone_flip(self):
        assert exists_base_oscillation(geometric_plant(0.1, 3, 0.8))
        assert not exists_base_oscillation(geometric_plant(0.1, 3, 0.9))

    def test_fast_decay_all_delays(self):
        for delay in range(1, 13):
            assert exists_base_oscillation(geometric_plant(0.1, delay))

    def test_slow_decay_can_lack_the_base_period(self):
        # the head of a slow kernel does not dominate its tail, so the
        # half-and-half pattern fails at twice the delay
        assert exists_base_oscillation(geometric_plant(0.9, 2))
        assert not exists_base_oscillation(geometric_plant(0.9, 3))
        assert not exists_base_oscillation(geometric_plant(0.9, 8))

    def test_scalar_agrees_with_verification_on_grid(self):
        # the iff holds on both sides across ratios, delays and zones
        for ratio in (0.1, 0.5, 0.9):
            for delay in (1, 2, 3, 5):
                for dz in (0.0, 0.3, 0.9):
                    exists_base_oscillation(geometric_plant(ratio, delay, dz))


class TestDeadZoneThreshold:
    def test_example_value(self):
        th = dead_zone_threshold(geometric_plant(0.1, 3))
        assert th == pytest.approx(0.8891, abs=1e-3)
        assert th == pytest.approx(0.889110889110889, rel=1e-12)

    def test_independent_direct_product(self):
        # plain-loop circulant against a directly folded kernel
        ratio, delay = 0.1, 3
        period = 2 * delay
        gbar = np.zeros(period)
        for i in range(period):
            for k in range(200):
                t = i + k * period - delay
                if t >= 0:
                    gbar[i] += ratio**t
        s = np.array([1.0] * delay + [-1.0] * delay)
        prod = np.array(
            [sum(gbar[(i - j) % period] * s[j] for j in range(period)) for i in range(period)]
        )
        expected = np.sort(prod)[::-1][delay - 1]
        assert dead_zone_threshold(geometric_plant(ratio, delay)) == pytest.approx(
            expected, rel=1e-10
        )

    def test_shifted_pulse(self):
        plant = PlantSpec(ImpulseResponse.from_samples([1.0]), 1)
        assert dead_zone_threshold(plant) == pytest.approx(1.0)

    def test_slow_plant_small_window(self):
        # 4x4 product evaluated by hand: entries +-{0.019, 0.361}/0.3439
        th = dead_zone_threshold(geometric_plant(0.9, 2))
        assert th == pytest.approx(0.019 / 0.3439, rel=1e-9)

    def test_threshold_is_smallest_positive_waveform_entry(self):
        for ratio, delay in ((0.1, 3), (0.5, 2), (0.9, 2)):
            plant = geometric_plant(ratio, delay)
            rec = verify_fixed_point(
                plant, [1] * delay + [-1] * delay
            )
            assert rec is not None
            smallest_pos = min(x for x in rec.waveform if x > 0)
            assert dead_zone_threshold(plant) == pytest.approx(smallest_pos, rel=1e-12)


class TestSubharmonics:
    def test_examples(self):
        assert subharmonic_periods(9) == [18, 6, 2]
        assert subharmonic_periods(12) == [24, 8]
        assert subharmonic_periods(4) == [8]
        assert subharmonic_periods(1) == [2]

    def test_all_even_and_divide(self):
        for delay in range(1, 30):
            for p in subharmonic_periods(delay):
                assert p % 2 == 0
                assert (2 * delay) % p == 0
                assert ((2 * delay) // p) % 2 == 1

    def test_closure_under_threshold(self):
        # once the base period exists and the zone is under threshold,
        # every subharmonic period carries a verified oscillation
        for ratio, delay in ((0.1, 9), (0.1, 6), (0.5, 3)):
            plant = geometric_plant(ratio, delay)
            th = dead_zone_threshold(plant)
            for dz in (0.0, 0.5 * th, 0.95 * th):
                p = PlantSpec(plant.g0, delay, dz)
                if not exists_base_oscillation(p):
                    continue
                for period in subharmonic_periods(delay):
                    pat = [1] * (period // 2) + [-1] * (period // 2)
                    assert verify_fixed_point(p, pat) is not None, (ratio, delay, dz, period)


class TestAbsence:
    def test_zero_delay_geometric(self):
        verdict = check_absence(geometric_plant(0.1, 0))
        assert verdict.applicable

    def test_parallel_lags(self):
        num = [1.5, -0.45, 0.0]
        den = [1.0, -0.7, 0.1]
        plant = PlantSpec.from_response(ImpulseResponse.from_rational(num, den))
        assert plant.delay == 0
        assert check_absence(plant).applicable
        for period in range(1, 11):
            assert brute_force_fixed_points(plant, period) == []

    def test_inapplicable_with_delay(self):
        assert not check_absence(geometric_plant(0.1, 2)).applicable

    def test_inapplicable_off_class(self):
        plant = PlantSpec(ImpulseResponse.from_samples([1.0, 0.0, 0.5]), 0)
        verdict = check_absence(plant)
        assert not verdict.applicable and "inapplicable" in verdict.reason


class TestBruteForce:
    def test_two_by_two_hand_enumeration(self):
        plant = geometric_plant(0.1, 1)
        assert brute_force_fixed_points(plant, 2) == [(-1, 1), (1, -1)]

    def test_trivial_zero_excluded(self):
        plant = geometric_plant(0.1, 1)
        assert (0, 0) not in brute_force_fixed_points(plant, 2)

    def test_cap(self):
        with pytest.raises(ValueError):
            brute_force_fixed_points(geometric_plant(0.1, 1), 17)

    def test_dead_zone_families(self):
        plant = geometric_plant(0.1, 3, 0.8)
        fams = sorted({canonical_rotation(p) for p in brute_force_fixed_points(plant, 6)})
        assert fams == [
            (-1, -1, -1, 1, 1, 1),
            (-1, -1, 0, 1, 1, 0),
            (-1, 0, -1, 1, 0, 1),
            (-1, 0, 0, 1, 0, 0),
            (-1, 1, -1, 1, -1, 1),
        ]

    def test_matches_pattern_level_verification(self, rng):
        # every oracle hit re-verifies individually, rotations included
        plant = geometric_plant(0.5, 2, 0.1)
        for period in (2, 3, 4, 6):
            for pat in brute_force_fixed_points(plant, period):
                assert verify_fixed_point(plant, pat) is not None


class TestFindOscillations:
    def test_example_one(self):
        report = find_oscillations(geometric_plant(0.1, 9), pmax=20, oracle_pmax=12)
        assert sorted({r.period for r in report.records}) == [2, 6, 18]
        assert report.violations == []
        assert report.bounds.upper == 20

    def test_pruned_matches_unpruned(self):
        for plant in (geometric_plant(0.1, 5), geometric_plant(0.9, 3), geometric_plant(0.1, 3, 0.8)):
            a = find_oscillations(plant, pmax=12)
            b = find_oscillations(plant, pmax=12, prune_sign_symmetric=True)
            assert [r.pattern for r in a.records] == [r.pattern for r in b.records]

    def test_dead_zone_case_and_oracle_diff(self):
        report = find_oscillations(geometric_plant(0.1, 3, 0.8), pmax=8, oracle_pmax=8)
        assert report.violations == []
        by_period = {}
        for r in report.records:
            by_period.setdefault(r.period, []).append(r.pattern)
        assert by_period[2] == [(-1, 1)]
        assert by_period[6] == [(-1, -1, -1, 1, 1, 1), (-1, -1, 0, 1, 1, 0)]
        extras = {(e.period, e.pattern) for e in report.oracle_diff}
        assert (6, (-1, 0, -1, 1, 0, 1)) in extras
        assert (6, (-1, 0, 0, 1, 0, 0)) in extras
        assert all(not e.pattern_unimodal for e in report.oracle_diff)

    def test_records_sign_symmetric(self):
        for plant in (geometric_plant(0.1, 9), geometric_plant(0.9, 4), geometric_plant(0.1, 3, 0.8)):
            report = find_oscillations(plant, pmax=14)
            for rec in report.records:
                assert rec.sign_symmetric
                pos, neg, zero = sign_counts(np.asarray(rec.pattern, float))
                if zero == 0:
                    assert rec.period == 2 * pos

    def test_odd_symmetry_of_fixed_points(self):
        plant = geometric_plant(0.1, 3, 0.8)
        for pat in ([1, 1, 0, -1, -1, 0], [1, 1, 1, -1, -1, -1]):
            rec = verify_fixed_point(plant, pat)
            neg = verify_fixed_point(plant, [-x for x in pat])
            assert rec is not None and neg is not None
            assert rec.pattern == neg.pattern  # same canonical family

    def test_slow_plant_max_periods_regression(self):
        # exact enumeration results for the slow kernel, cross-checked by
        # closed-loop simulation during development; pins the sweep path
        maxima = []
        for delay in range(1, 9):
            report = find_oscillations(geometric_plant(0.9, delay))
            assert report.violations == []
            maxima.append(max((r.period for r in report.records if r.period >= delay), default=None))
        assert maxima == [2, 6, 10, 12, 16, 18, 20, 24]

    def test_zero_delay_report(self):
        report = find_oscillations(geometric_plant(0.1, 0), pmax=10, oracle_pmax=10)
        assert report.records == [] and report.bounds is None
        assert report.absence is not None and report.absence.applicable
        assert report.violations == []

    def test_report_json_round_trip_and_reverify(self):
        report = find_oscillations(geometric_plant(0.1, 3, 0.8), pmax=8, oracle_pmax=6)
        blob = json.dumps(report.to_dict())
        again = report_from_dict(json.loads(blob))
        assert [r.pattern for r in again.records] == [r.pattern for r in report.records]
        for rec in again.records:
            fresh = verify_fixed_point(again.plant, rec.pattern)
            assert fresh == rec
