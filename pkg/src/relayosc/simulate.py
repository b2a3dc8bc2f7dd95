"""Forward simulation of the closed relay loop and steady-state detection.

The loop only ever sees relay outputs, so a trajectory is seeded with a
finite history of relay values for negative time (zero before that) and
then iterated causally: the plant output at time t depends on relay
values up to t - delay, the waveform is its negation, and the relay
quantizes the waveform. Rational and geometric plants run through their
exact linear recurrence (the seed initializes the recurrence exactly,
because the pre-seed history is identically zero); finite-sample plants
convolve directly. Both paths are exact, so identical seeds give
bit-identical relay sequences.

With zero delay the loop is algebraic: the relay output at t feeds the
waveform at t instantaneously. At most one relay value is consistent
(the instantaneous gain is positive), and when none is the loop has no
solution at that step and the simulation aborts with a diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .analyzer import canonical_rotation
from .lti import GEOMETRIC, SAMPLES, PlantSpec, loop_gain
from .variation import (
    cyclic_diff,
    cyclic_sign_changes,
    is_sign_symmetric,
    max_cyclic_sign_changes,
    relay,
    relay_vec,
)

__all__ = [
    "SimulationError",
    "Trajectory",
    "simulate",
    "simulate_by_convolution",
    "detect_period",
    "ClassificationFlags",
    "classify",
]


class SimulationError(RuntimeError):
    """The loop diverged or admitted no consistent relay output."""


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Simulated horizon: waveform u, relay sequence r = relay(u), seed."""

    u: np.ndarray
    relay_out: np.ndarray
    seed_history: tuple[int, ...]
    plant: PlantSpec

    def __len__(self) -> int:
        return self.u.size


def _check_seed(seed_history) -> list[int]:
    seed = [int(v) for v in seed_history]
    if any(v not in (-1, 0, 1) for v in seed):
        raise ValueError("seed history entries must lie in {-1, 0, +1}")
    return seed


def _num_den_taps(plant: PlantSpec) -> tuple[np.ndarray, np.ndarray]:
    """(b, a) with y(t) = sum_i b[i] r(t-i) - sum_{j>=1} a[j] y(t-j)."""
    g0 = plant.g0
    if g0.kind == GEOMETRIC:
        return np.array([g0.gain]), np.array([1.0, -g0.ratio])
    # proper rational with relative degree zero: num and den share a degree
    order = g0.den.size - 1
    b = np.zeros(order + 1)
    b[: g0.num.size] = g0.num
    return b, g0.den.copy()


def simulate(
    plant: PlantSpec,
    seed_history,
    steps: int,
    divergence_factor: float = 1e3,
) -> Trajectory:
    """Iterate the loop for ``steps`` samples from a relay-output seed.

    ``seed_history`` lists relay outputs for times -len(seed) .. -1;
    earlier history is zero. The waveform magnitude can never exceed the
    response's absolute sum, so crossing ``divergence_factor`` times
    that bound aborts with :class:`SimulationError` (it would mean a
    defect, not dynamics).
    """
    if steps <= 0:
        raise ValueError("steps must be positive")
    seed = _check_seed(seed_history)
    cap = divergence_factor * plant.g0.l1_bound()
    delay = plant.delay
    dz = plant.dead_zone

    lead = len(seed)
    # relay history indexed by shifted time: r_all[i] holds r(i - lead)
    r_all = np.zeros(lead + steps, dtype=np.int8)
    r_all[:lead] = seed

    use_fir = plant.g0.kind == SAMPLES
    if use_fir:
        taps = plant.g0.values

        def fir_output(tau: int) -> float:
            acc = 0.0
            for k in range(min(taps.size, tau + lead + 1)):
                acc += taps[k] * r_all[tau - k + lead]
            return acc

    else:
        b, a = _num_den_taps(plant)
        order = a.size - 1
        # y history reaches back far enough for both the recurrence taps
        # and the delayed reads; seeded values are exact finite sums
        # because the pre-seed relay history is identically zero
        back = max(order, delay, 1)
        y_all = np.zeros(back + steps)  # y_all[i] holds y(i - back)
        g_head = plant.g0.samples(max(lead, 1))
        for tau in range(-min(back, lead), 0):
            acc = 0.0
            for k in range(tau + lead + 1):
                acc += g_head[k] * r_all[tau - k + lead]
            y_all[tau + back] = acc

        def recurrence(tau: int, r_now: int) -> float:
            """y(tau) given relay history and y(tau-1..tau-order)."""
            acc = b[0] * r_now
            for i in range(1, b.size):
                if tau - i + lead >= 0:
                    acc += b[i] * r_all[tau - i + lead]
            for j in range(1, order + 1):
                acc -= a[j] * y_all[tau - j + back]
            return acc

    g00 = plant.g0.sample(0)
    u = np.zeros(steps)
    for t in range(steps):
        tau = t - delay
        if delay >= 1:
            if use_fir:
                yt = fir_output(tau)
            elif tau < 0:
                yt = y_all[tau + back]
            else:
                yt = recurrence(tau, int(r_all[tau + lead]))
                y_all[tau + back] = yt
            u[t] = -yt
            r_all[t + lead] = relay(u[t], dz)
        else:
            # algebraic loop: y(t) = c + g0(0) * r(t); the instantaneous
            # gain is positive so at most one relay output is consistent
            if use_fir:
                c = fir_output(t) - g00 * r_all[t + lead]
            else:
                c = recurrence(t, 0)
            chosen = None
            for cand in (1, 0, -1):
                if relay(-(c + g00 * cand), dz) == cand:
                    chosen = cand
                    break
            if chosen is None:
                raise SimulationError(
                    f"no consistent relay output at step {t}: the zero-delay loop "
                    f"chatters (offset {-c:.6g}, instantaneous gain {g00:.6g})"
                )
            r_all[t + lead] = chosen
            u[t] = -(c + g00 * chosen)
            if not use_fir:
                y_all[t + back] = c + g00 * chosen
        if abs(u[t]) > cap:
            raise SimulationError(
                f"waveform magnitude {abs(u[t]):.6g} exceeded the divergence cap "
                f"{cap:.6g} at step {t}; the loop output is bounded by the response's "
                f"absolute sum, so this indicates a defect"
            )

    return Trajectory(u=u, relay_out=r_all[lead:].copy(), seed_history=tuple(seed), plant=plant)


def simulate_by_convolution(
    plant: PlantSpec,
    seed_history,
    steps: int,
    tol: float = 1e-14,
) -> Trajectory:
    """Reference path: truncated direct convolution with a certified tail.

    Exists to cross-check the recurrence path; the two agree to the
    truncation tolerance on every overlap. Quadratic in the horizon, so
    only used for validation.
    """
    if steps <= 0:
        raise ValueError("steps must be positive")
    if plant.delay < 1 and plant.g0.kind != SAMPLES:
        raise ValueError("the convolution reference needs a positive delay")
    seed = _check_seed(seed_history)
    lead = len(seed)
    depth = plant.g0.horizon(tol) if plant.g0.kind != SAMPLES else plant.g0.values.size
    taps = plant.g0.samples(depth)
    r_all = np.zeros(lead + steps, dtype=np.int8)
    r_all[:lead] = seed
    u = np.zeros(steps)
    for t in range(steps):
        tau = t - plant.delay
        acc = 0.0
        for k in range(min(depth, tau + lead + 1)):
            acc += taps[k] * r_all[tau - k + lead]
        u[t] = -acc
        r_all[t + lead] = relay(u[t], plant.dead_zone)
    return Trajectory(u=u, relay_out=r_all[lead:].copy(), seed_history=tuple(seed), plant=plant)


def detect_period(traj: Trajectory, tol: float = 1e-9, window: int = 4) -> Optional[tuple[int, int]]:
    """Smallest exact steady-state period of the trailing trajectory.

    A candidate period P is accepted when the relay sequence repeats
    exactly over the trailing ``window * P`` samples (relay outputs are
    discrete, so no tolerance there) and the waveform repeats within
    ``tol``. Returns (period, phase) where rotating the trailing period
    of the relay sequence down by ``phase`` gives its canonical
    rotation; None when nothing repeats inside the window.
    """
    if window < 2:
        raise ValueError("window must span at least two periods")
    r = traj.relay_out
    u = traj.u
    total = u.size
    for period in range(1, total // window + 1):
        span = window * period
        rs = r[total - span :]
        us = u[total - span :]
        if not np.array_equal(rs[period:], rs[:-period]):
            continue
        if np.max(np.abs(us[period:] - us[:-period])) > tol:
            continue
        tail = [int(x) for x in r[total - period :]]
        canon = canonical_rotation(tail)
        phase = next(
            k for k in range(period) if tuple(int(x) for x in np.roll(tail, k)) == canon
        )
        return period, phase
    return None


@dataclass(frozen=True)
class ClassificationFlags:
    """Waveform classification against the loop's analytical structure."""

    pattern: tuple[int, ...]
    residual: float
    is_self_oscillation: bool
    unimodal: bool
    pattern_unimodal: bool
    sign_symmetric: bool

    @property
    def admissible(self) -> bool:
        return self.unimodal and self.pattern_unimodal

    def to_dict(self) -> dict:
        return {
            "pattern": list(self.pattern),
            "residual": self.residual,
            "is_self_oscillation": self.is_self_oscillation,
            "unimodal": self.unimodal,
            "pattern_unimodal": self.pattern_unimodal,
            "admissible": self.admissible,
            "sign_symmetric": self.sign_symmetric,
        }


def classify(u_period, plant: PlantSpec, tol: float = 1e-9) -> ClassificationFlags:
    """Classify one period of a waveform as an oscillation of the plant's loop.

    The waveform's relay image is pushed through the loop; ``residual``
    is the worst-entry mismatch against the waveform itself. A
    self-oscillation must satisfy the loop equation (residual within
    ``tol``) and be non-constant (difference variation >= 2).
    """
    u = np.asarray(u_period, dtype=float)
    pattern = relay_vec(u, plant.dead_zone)
    response = loop_gain(plant, pattern)
    residual = float(np.max(np.abs(response - u)))
    nonzero = bool(np.any(u != 0.0))
    diff_var = cyclic_sign_changes(cyclic_diff(u)) if nonzero else -1
    return ClassificationFlags(
        pattern=tuple(int(x) for x in pattern),
        residual=residual,
        is_self_oscillation=residual <= tol and diff_var >= 2,
        unimodal=nonzero and diff_var == 2,
        pattern_unimodal=max_cyclic_sign_changes(pattern.astype(float)) == 2,
        sign_symmetric=is_sign_symmetric(pattern.astype(float)),
    )
