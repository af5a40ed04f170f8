"""Monte Carlo oracle: event-driven simulation of a Markov reward model.

Every trajectory starts in the initial state and races the exponential
clocks of all outgoing transitions, self-loops included (they fire, count
as events and leave the state unchanged). Trajectories are simulated in
blocks of ``BLOCK`` whose random streams come from
``SeedSequence([master_seed, block])``, so asking for more trajectories
never changes the earlier ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numba
import numpy as np
from scipy.stats import norm

from .engine import as_mask
from .model import MarkovRewardModel

BLOCK = 1024

_CLASS_TIME, _INVARIANCE, _TRANSIENT, _REACH, _SOJOURNS = 0, 1, 2, 3, 4


class SimError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    horizon_days: float
    trajectories: int
    master_seed: int = 0
    confidence: float = 0.99

    def __post_init__(self):
        if self.trajectories < 1:
            raise SimError("trajectories must be >= 1")
        if not self.horizon_days >= 0:
            raise SimError("horizon must be >= 0")
        if not 0 < self.confidence < 1:
            raise SimError("confidence must lie in (0, 1)")


@dataclass(frozen=True)
class Estimate:
    mean: float
    half_width: float
    n: int

    @property
    def low(self) -> float:
        return self.mean - self.half_width

    @property
    def high(self) -> float:
        return self.mean + self.half_width

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high


@dataclass(frozen=True, eq=False)
class ClassTime:
    """Time spent in ``states`` during ``[0, T]``."""

    states: object
    T: float


@dataclass(frozen=True, eq=False)
class Invariance:
    """Indicator that every state visited during ``[0, T]`` is in ``good``."""

    good: object
    T: float


@dataclass(frozen=True, eq=False)
class TransientIndicator:
    """Indicator that the state at time ``t`` is in ``states``."""

    states: object
    t: float


@dataclass(frozen=True, eq=False)
class ReachTime:
    """Time of first entry into ``target``; not bounded by the horizon."""

    target: object


@dataclass(frozen=True, eq=False)
class Sojourns:
    """Number of sojourns in ``states`` that start before ``T``.

    A self-loop ends one sojourn and starts the next, so time in ``states``
    divided by this count estimates the mean holding time between events.
    """

    states: object
    T: float


Measure = Union[ClassTime, Invariance, TransientIndicator, ReachTime, Sojourns]


@numba.njit(cache=True)
def _run_block(rng, count, indptr, indices, cum, exit_rate, initial, kinds, masks, times, horizon, reach_cap, out):
    n_meas = kinds.shape[0]
    # measure indices grouped by kind, so the event loop does no dispatch
    ct = np.array([k for k in range(n_meas) if kinds[k] == _CLASS_TIME], dtype=np.int64)
    inv = np.array([k for k in range(n_meas) if kinds[k] == _INVARIANCE], dtype=np.int64)
    tr = np.array([k for k in range(n_meas) if kinds[k] == _TRANSIENT], dtype=np.int64)
    rc = np.array([k for k in range(n_meas) if kinds[k] == _REACH], dtype=np.int64)
    sj = np.array([k for k in range(n_meas) if kinds[k] == _SOJOURNS], dtype=np.int64)
    for j in range(count):
        s = initial
        t = 0.0
        pending = 0
        for k in ct:
            out[j, k] = 0.0
        for k in inv:
            out[j, k] = 1.0 if masks[k, s] else 0.0
        for k in tr:
            out[j, k] = 1.0 if masks[k, s] else 0.0
        for k in sj:
            out[j, k] = 1.0 if (times[k] > 0.0 and masks[k, s]) else 0.0
        for k in rc:
            if masks[k, s]:
                out[j, k] = 0.0
            else:
                out[j, k] = np.nan
                pending += 1
        while t < horizon or pending > 0:
            rate = exit_rate[s]
            if rate > 0.0:
                t_next = t + rng.standard_exponential() / rate
            else:
                t_next = np.inf
            if t_next > reach_cap and pending > 0 and t >= horizon:
                break
            for k in ct:
                if masks[k, s] and t < times[k]:
                    out[j, k] += min(t_next, times[k]) - t
            for k in tr:
                # the state holding at times[k] is the one occupied over [t, t_next)
                if t <= times[k] < t_next:
                    out[j, k] = 1.0 if masks[k, s] else 0.0
            if t_next == np.inf:
                break
            # pick the transition that fired
            u = rng.random() * rate
            i = indptr[s]
            last = indptr[s + 1] - 1
            while i < last and cum[i] <= u:
                i += 1
            s = indices[i]
            t = t_next
            for k in inv:
                if t <= times[k] and not masks[k, s]:
                    out[j, k] = 0.0
            for k in sj:
                if t < times[k] and masks[k, s]:
                    out[j, k] += 1.0
            for k in rc:
                if masks[k, s] and np.isnan(out[j, k]):
                    out[j, k] = t
                    pending -= 1


def _mask(mrm: MarkovRewardModel, pred) -> np.ndarray:
    # a label name, a boolean mask or an index list
    if isinstance(pred, str):
        return mrm.label_mask(pred)
    return as_mask(mrm, pred)


def _encode(mrm: MarkovRewardModel, measures: Sequence[Measure]):
    n = mrm.n_states
    kinds = np.empty(len(measures), dtype=np.int64)
    masks = np.zeros((len(measures), n), dtype=np.bool_)
    times = np.zeros(len(measures))
    for k, m in enumerate(measures):
        if isinstance(m, ClassTime):
            kinds[k], masks[k], times[k] = _CLASS_TIME, _mask(mrm, m.states), m.T
        elif isinstance(m, Invariance):
            kinds[k], masks[k], times[k] = _INVARIANCE, _mask(mrm, m.good), m.T
        elif isinstance(m, TransientIndicator):
            kinds[k], masks[k], times[k] = _TRANSIENT, _mask(mrm, m.states), m.t
        elif isinstance(m, Sojourns):
            kinds[k], masks[k], times[k] = _SOJOURNS, _mask(mrm, m.states), m.T
        elif isinstance(m, ReachTime):
            kinds[k], masks[k], times[k] = _REACH, _mask(mrm, m.target), 0.0
        else:
            raise SimError(f"unknown measure {m!r}")
        if times[k] < 0 or not math.isfinite(times[k]):
            raise SimError(f"invalid time in measure {m!r}")
    return kinds, masks, times


def sample(mrm: MarkovRewardModel, sim: SimConfig, measures: Sequence[Measure], *, reach_cap: float = 1e7) -> np.ndarray:
    """Per-trajectory samples, shape ``(trajectories, len(measures))``."""
    kinds, masks, times = _encode(mrm, measures)
    horizon = max([sim.horizon_days] + [float(t) for k, t in zip(kinds, times) if k != _REACH])
    rates = mrm.rates.tocsr()
    rates.sort_indices()
    indptr = rates.indptr.astype(np.int64)
    indices = rates.indices.astype(np.int64)
    data = rates.data.astype(float)
    cum = np.empty_like(data)
    exit_rate = np.zeros(mrm.n_states)
    for s in range(mrm.n_states):
        row = data[indptr[s]:indptr[s + 1]]
        cum[indptr[s]:indptr[s + 1]] = np.cumsum(row)
        exit_rate[s] = cum[indptr[s + 1] - 1] if row.size else 0.0

    n_blocks = -(-sim.trajectories // BLOCK)
    out = np.empty((n_blocks * BLOCK, len(measures)))
    for b in range(n_blocks):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([sim.master_seed, b])))
        _run_block(rng, BLOCK, indptr, indices, cum, exit_rate, mrm.initial, kinds, masks, times,
                   horizon, reach_cap, out[b * BLOCK:(b + 1) * BLOCK])
    out = out[:sim.trajectories]
    if np.isnan(out).any():
        raise SimError(f"target not reached within {reach_cap:g} days on some trajectories")
    return out


def estimate(samples: np.ndarray, confidence: float) -> Estimate:
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    mean = float(samples.mean())
    if n < 2:
        return Estimate(mean, math.inf, n)
    z = norm.ppf(0.5 + confidence / 2)
    half = float(z * samples.std(ddof=1) / math.sqrt(n))
    return Estimate(mean, half, n)


def simulate_measures(mrm: MarkovRewardModel, sim: SimConfig, measures: Sequence[Measure]) -> dict[Measure, Estimate]:
    """Estimate each measure with a normal-approximation confidence interval."""
    data = sample(mrm, sim, measures)
    return {m: estimate(data[:, k], sim.confidence) for k, m in enumerate(measures)}
