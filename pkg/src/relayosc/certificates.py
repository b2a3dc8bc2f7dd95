"""Executable variation-bounding certificates.

Three checks with the same theme: a circulant transform generated by a
suitable vector cannot increase the cyclic variation of an input's
cyclic difference beyond 2, i.e. it maps single-peaked periodic signals
to single-peaked periodic signals.

``variation_bounding_conditions`` decides the property for an arbitrary
generator through two testable conditions on its cyclic differences.
``check_unimodal_preservation`` probes the property empirically with
randomly generated single-peaked inputs. ``open_loop_variation_check``
specializes to the relay feedback loop: the response of a monotonically
decaying plant to a unimodal relay pattern has low cyclic variation,
which is the invariance property behind the fixed-point search.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .lti import PlantSpec, check_monotone_decay, circulant_apply, loop_gain
from .variation import (
    cyclic_diff,
    cyclic_sign_changes,
    is_sign_symmetric,
    max_cyclic_sign_changes,
    relay_vec,
)

__all__ = [
    "VariationBoundVerdict",
    "variation_bounding_conditions",
    "PreservationCheck",
    "random_unimodal_vector",
    "check_unimodal_preservation",
    "LoopInvarianceReport",
    "open_loop_variation_check",
]


@dataclass(frozen=True)
class VariationBoundVerdict:
    """Outcome of the two generator conditions.

    ``unconditional`` marks lengths n <= 3 where every vector passes (a
    cyclic vector of length <= 3 cannot alternate more than twice).
    ``witness`` is the first index violating the modular inequality of
    condition 2, when there is one.
    """

    condition1: bool
    condition2: bool
    witness: Optional[int]
    unconditional: bool = False

    @property
    def passed(self) -> bool:
        return self.unconditional or (self.condition1 and self.condition2)


def variation_bounding_conditions(v, slack: float = 1e-12) -> VariationBoundVerdict:
    """Decide whether the circulant of v preserves low-variation inputs.

    The circulant generated by v maps every w with cyclic difference
    variation <= 2 to an output with the same property if and only if

    1. the second cyclic difference of v has cyclic variation <= 2, and
    2. (d_t)^2 >= d_{t-1} * d_{t+1} for every t, indices modulo n,
       where d is the cyclic difference of v.

    Condition 2 is checked with ``slack`` of negative headroom so that
    exact equality cases (zero 2x2 minors) survive rounding. For n <= 3
    the property holds unconditionally.
    """
    x = np.asarray(v, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("generator must be a nonempty vector")
    if x.size <= 3:
        return VariationBoundVerdict(True, True, None, unconditional=True)
    d = cyclic_diff(x)
    condition1 = cyclic_sign_changes(cyclic_diff(d)) <= 2
    gaps = d**2 - np.roll(d, 1) * np.roll(d, -1)
    bad = np.flatnonzero(gaps < -slack)
    condition2 = bad.size == 0
    witness = int(bad[0]) if bad.size else None
    return VariationBoundVerdict(condition1, condition2, witness)


def random_unimodal_vector(rng: np.random.Generator, n: int, integer: bool = False) -> np.ndarray:
    """Random vector whose cyclic difference variation is at most 2.

    Built constructively: a rise to a peak followed by a fall, with
    random breakpoints and levels, then a random rotation. Covers
    plateaus and repeated values; with ``integer`` the levels are small
    integers so exact ties are frequent.
    """
    if n < 1:
        raise ValueError("n must be positive")
    peak = int(rng.integers(1, n + 1))
    if integer:
        levels = rng.integers(0, 4, size=n).astype(float)
    else:
        levels = rng.uniform(-1.0, 1.0, size=n)
    head = np.sort(levels[:peak])
    tail = np.sort(levels[peak:])[::-1]
    return np.roll(np.concatenate([head, tail]), int(rng.integers(0, n)))


@dataclass(frozen=True, eq=False)
class PreservationCheck:
    """Result of the randomized preservation probe."""

    ok: bool
    counterexample: Optional[np.ndarray]
    trials: int


def check_unimodal_preservation(
    v,
    trials: int = 200,
    seed: int = 0,
    dead_zone: float = 0.0,
) -> PreservationCheck:
    """Probe whether the relay image of v generates a variation-safe circulant.

    Draws ``trials`` random low-variation inputs w and checks that the
    circulant generated by relay(v) keeps the cyclic difference
    variation of the output at most 2. Returns the first violating w if
    one is found. When the relay image has zero-resolved cyclic
    variation <= 2 no counterexample can exist; the probe is most useful
    for falsifying generators outside that class.
    """
    x = np.asarray(v, dtype=float)
    pattern = relay_vec(x, dead_zone).astype(float)
    rng = np.random.default_rng(seed)
    n = x.size
    for _ in range(trials):
        w = random_unimodal_vector(rng, n, integer=bool(rng.integers(0, 2)))
        out = circulant_apply(pattern, w)
        if cyclic_sign_changes(cyclic_diff(out)) > 2:
            return PreservationCheck(False, w, trials)
    return PreservationCheck(True, None, trials)


@dataclass(frozen=True, eq=False)
class LoopInvarianceReport:
    """Variation of the loop response to a candidate waveform's relay image.

    ``preconditions_ok`` states whether the candidate sits in the class
    the invariance statement covers: plant with monotone decay, waveform
    difference variation exactly 2, relay pattern zero-resolved cyclic
    variation exactly 2. The variation numbers of the response are
    reported regardless so that out-of-class probes remain informative.
    """

    preconditions_ok: bool
    notes: tuple[str, ...]
    diff_variation: int
    level_variation: int
    sign_symmetric: bool
    resolved_variation: Optional[int]
    response: np.ndarray

    @property
    def ok(self) -> bool:
        if self.diff_variation > 2 or self.level_variation > 2:
            return False
        if self.sign_symmetric and self.resolved_variation is not None:
            return self.resolved_variation <= 2
        return True


def open_loop_variation_check(plant: PlantSpec, u, tol: float = 1e-12) -> LoopInvarianceReport:
    """Check the loop response of a candidate periodic waveform.

    Computes one period of the loop gain driven by relay(u) and reports
    the cyclic variation of its cyclic difference and of the response
    itself; for sign-symmetric relay patterns additionally the
    zero-resolved cyclic variation. All three stay at most 2 whenever
    the preconditions hold, which downstream code treats as an internal
    consistency requirement rather than a runtime branch.
    """
    x = np.asarray(u, dtype=float)
    notes: list[str] = []
    pattern = relay_vec(x, plant.dead_zone)
    decay = check_monotone_decay(plant.g0, tol=tol)
    if not decay.passed:
        notes.append("plant response is not certified monotonically decaying")
    if not np.any(x != 0.0):
        notes.append("waveform is identically zero")
    elif cyclic_sign_changes(cyclic_diff(x)) != 2:
        notes.append("waveform is not single-peaked (difference variation != 2)")
    if max_cyclic_sign_changes(pattern) != 2:
        notes.append("relay pattern is not single-peaked (zero-resolved variation != 2)")
    response = loop_gain(plant, pattern, tol=tol)
    symmetric = is_sign_symmetric(pattern)
    return LoopInvarianceReport(
        preconditions_ok=not notes,
        notes=tuple(notes),
        diff_variation=cyclic_sign_changes(cyclic_diff(response)),
        level_variation=cyclic_sign_changes(response),
        sign_symmetric=symmetric,
        resolved_variation=max_cyclic_sign_changes(response) if symmetric else None,
        response=response,
    )
