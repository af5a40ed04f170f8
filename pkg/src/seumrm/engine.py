"""Numerical analysis of Markov reward models.

Predicates are boolean masks (or index collections) over the state space;
rewards are either a reward name of the model or a per-state vector. All
analyses work on the generator, which ignores self-loops, except
``next_prob`` which counts them, since a self-loop is a genuine next step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, connected_components
from scipy.sparse.linalg import spsolve

from .model import MarkovRewardModel
from .poisson import poisson_weights

log = logging.getLogger(__name__)


class EngineError(ValueError):
    pass


@dataclass(frozen=True)
class EngineOptions:
    transient_eps: float = 1e-10
    cumulative_eps: float = 1e-12
    uniformization_slack: float = 1.02
    steady_tol: float = 1e-12
    direct_limit: int = 5000
    max_iterations: int = 1_000_000


DEFAULT_OPTIONS = EngineOptions()


# -- helpers -----------------------------------------------------------------


def as_mask(mrm: MarkovRewardModel, pred) -> np.ndarray:
    n = mrm.n_states
    arr = np.asarray(pred)
    if arr.dtype == bool:
        if arr.shape != (n,):
            raise EngineError(f"predicate mask has shape {arr.shape}, expected ({n},)")
        return arr
    mask = np.zeros(n, dtype=bool)
    mask[arr.astype(int).ravel()] = True
    return mask


def _reward_vector(mrm: MarkovRewardModel, reward) -> np.ndarray:
    if isinstance(reward, str):
        if reward not in mrm.rewards:
            raise EngineError(f"unknown reward {reward!r}")
        return np.asarray(mrm.rewards[reward], dtype=float)
    r = np.asarray(reward, dtype=float)
    if r.shape != (mrm.n_states,):
        raise EngineError(f"reward vector has shape {r.shape}, expected ({mrm.n_states},)")
    return r


def _off_diagonal(rates: sp.spmatrix) -> sp.csr_matrix:
    off = sp.csr_matrix(rates, copy=True)
    off.setdiag(0)
    off.eliminate_zeros()
    return off


def generator(mrm: MarkovRewardModel) -> sp.csr_matrix:
    """Infinitesimal generator; self-loops of the rate matrix are dropped."""
    off = _off_diagonal(mrm.rates)
    exit_rates = np.asarray(off.sum(axis=1)).ravel()
    return (off - sp.diags(exit_rates)).tocsr()


def _absorbing(Q: sp.csr_matrix, mask: np.ndarray) -> sp.csr_matrix:
    keep = sp.diags((~mask).astype(float))
    return (keep @ Q).tocsr()


def _uniformize(Q: sp.csr_matrix, opts: EngineOptions) -> tuple[sp.csr_matrix, float]:
    q = float(np.max(-Q.diagonal(), initial=0.0))
    lam = opts.uniformization_slack * q if q > 0 else 1.0
    P = sp.identity(Q.shape[0], format="csr") + Q / lam
    return P.tocsr(), lam


def _check_distribution(p: np.ndarray, what: str) -> np.ndarray:
    low = p.min(initial=0.0)
    if low < -1e-12:
        raise EngineError(f"{what}: negative probability {low:.3e}")
    if low < 0:
        log.info("%s: clamped negative entries down to %.3e", what, low)
        p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise EngineError(f"{what}: probabilities sum to {total!r}")
    return p


def _initial_vector(mrm: MarkovRewardModel) -> np.ndarray:
    pi0 = np.zeros(mrm.n_states)
    pi0[mrm.initial] = 1.0
    return pi0


def reachable(mrm: MarkovRewardModel) -> np.ndarray:
    order = breadth_first_order(_off_diagonal(mrm.rates), mrm.initial, directed=True, return_predecessors=False)
    mask = np.zeros(mrm.n_states, dtype=bool)
    mask[order] = True
    return mask


def _backward_closure(off: sp.csr_matrix, target: np.ndarray, through: np.ndarray) -> np.ndarray:
    """States that reach ``target`` along paths whose other states are in ``through``."""
    pred = off.T.tocsr()
    found = target.copy()
    frontier = list(np.flatnonzero(target))
    while frontier:
        v = frontier.pop()
        for u in pred.indices[pred.indptr[v]:pred.indptr[v + 1]]:
            if not found[u] and through[u]:
                found[u] = True
                frontier.append(u)
    return found


# -- steady state ------------------------------------------------------------


def steady_state(mrm: MarkovRewardModel, opts: EngineOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Long-run distribution, supported on the states reachable from the initial state."""
    reach = reachable(mrm)
    idx = np.flatnonzero(reach)
    Q = generator(mrm)[idx][:, idx].tocsr()
    n_comp, _ = connected_components(_off_diagonal(Q), directed=True, connection="strong")
    if n_comp != 1:
        raise EngineError(f"not ergodic: reachable states split into {n_comp} strongly connected classes")
    m = len(idx)
    if m == 1:
        pi_r = np.ones(1)
    elif m <= opts.direct_limit:
        A = Q.T.tolil()
        A[m - 1, :] = np.ones(m)
        b = np.zeros(m)
        b[-1] = 1.0
        pi_r = spsolve(A.tocsc(), b)
        if np.abs(pi_r @ Q).max() > opts.steady_tol:
            pi_r = _steady_iterative(Q, pi_r, opts)
    else:
        pi_r = _steady_iterative(Q, np.full(m, 1.0 / m), opts)
    pi = np.zeros(mrm.n_states)
    pi[idx] = pi_r
    return _check_distribution(pi, "steady state")


def _steady_iterative(Q: sp.csr_matrix, x: np.ndarray, opts: EngineOptions) -> np.ndarray:
    P, _ = _uniformize(Q, opts)
    PT = P.T.tocsr()
    x = np.clip(x, 0, None)
    x /= x.sum()
    for _ in range(opts.max_iterations):
        x = PT @ x
        x /= x.sum()
        if np.abs(x @ Q).max() <= opts.steady_tol:
            return x
    raise EngineError("steady-state iteration did not converge")


def expected_steady_reward(mrm: MarkovRewardModel, reward, opts: EngineOptions = DEFAULT_OPTIONS) -> float:
    r = _reward_vector(mrm, reward)
    return float(steady_state(mrm, opts) @ r)


# -- transient ---------------------------------------------------------------


def _propagate(Q: sp.csr_matrix, v: np.ndarray, t: float, opts: EngineOptions, forward: bool) -> np.ndarray:
    """``v e^{Qt}`` (forward) or ``e^{Qt} v`` (backward) by uniformization."""
    P, lam = _uniformize(Q, opts)
    M = P.T.tocsr() if forward else P
    left, w = poisson_weights(lam * t, opts.transient_eps)
    out = np.zeros_like(v, dtype=float)
    for k in range(left + len(w)):
        if k >= left:
            out += w[k - left] * v
        v = M @ v
    return out


def _integrate(Q: sp.csr_matrix, v: np.ndarray, T: float, opts: EngineOptions, forward: bool) -> np.ndarray:
    """``v \\int_0^T e^{Qu} du`` (forward) or the backward analogue."""
    P, lam = _uniformize(Q, opts)
    M = P.T.tocsr() if forward else P
    left, w = poisson_weights(lam * T, opts.cumulative_eps)
    # P(N > k) for k in [0, left + len(w))
    tail = np.ones(left + len(w))
    tail[left:] = np.clip(1.0 - np.cumsum(w), 0.0, None)
    out = np.zeros_like(v, dtype=float)
    for k in range(len(tail)):
        out += tail[k] * v
        v = M @ v
    return out / lam


def transient(mrm: MarkovRewardModel, pi0, t: float, opts: EngineOptions = DEFAULT_OPTIONS) -> np.ndarray:
    if t < 0:
        raise EngineError(f"negative time {t}")
    pi0 = _check_distribution(np.asarray(pi0, dtype=float), "initial distribution")
    if t == 0:
        return pi0.copy()
    return _check_distribution(_propagate(generator(mrm), pi0, t, opts, forward=True), "transient distribution")


def expected_transient_reward(mrm: MarkovRewardModel, reward, t: float, opts: EngineOptions = DEFAULT_OPTIONS) -> float:
    r = _reward_vector(mrm, reward)
    return float(transient(mrm, _initial_vector(mrm), t, opts) @ r)


def cumulative_reward(mrm: MarkovRewardModel, reward, T: float, opts: EngineOptions = DEFAULT_OPTIONS) -> float:
    """Expected reward accumulated over ``[0, T]`` from the initial state."""
    r = _reward_vector(mrm, reward)
    if T < 0:
        raise EngineError(f"negative time {T}")
    if T == 0:
        return 0.0
    occupancy = _integrate(generator(mrm), _initial_vector(mrm), T, opts, forward=True)
    return float(occupancy @ r)


def cumulative_reward_states(mrm: MarkovRewardModel, reward, T: float, opts: EngineOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Per-state version of :func:`cumulative_reward` (backward pass)."""
    r = _reward_vector(mrm, reward)
    if T < 0:
        raise EngineError(f"negative time {T}")
    if T == 0:
        return np.zeros(mrm.n_states)
    return _integrate(generator(mrm), r.copy(), T, opts, forward=False)


# -- time-bounded path probabilities ----------------------------------------


def invariance_prob(mrm: MarkovRewardModel, good, T: float, opts: EngineOptions = DEFAULT_OPTIONS) -> float:
    """P(every state visited during [0, T] satisfies ``good``), from the initial state."""
    good = as_mask(mrm, good)
    if T < 0:
        raise EngineError(f"negative time {T}")
    if not good[mrm.initial]:
        return 0.0
    if T == 0:
        return 1.0
    Q = _absorbing(generator(mrm), ~good)
    p = _propagate(Q, _initial_vector(mrm), T, opts, forward=True)
    return float(np.clip(p[good].sum(), 0.0, 1.0))


def bounded_until_states(mrm: MarkovRewardModel, phi1, phi2, t: float, opts: EngineOptions = DEFAULT_OPTIONS) -> np.ndarray:
    phi1 = as_mask(mrm, phi1)
    phi2 = as_mask(mrm, phi2)
    if t < 0:
        raise EngineError(f"negative time {t}")
    target = phi2.astype(float)
    if t == 0:
        return target
    Q = _absorbing(generator(mrm), phi2 | ~phi1)
    return np.clip(_propagate(Q, target, t, opts, forward=False), 0.0, 1.0)


def bounded_until(mrm: MarkovRewardModel, phi1, phi2, t: float, opts: EngineOptions = DEFAULT_OPTIONS) -> float:
    return float(bounded_until_states(mrm, phi1, phi2, t, opts)[mrm.initial])


# -- untimed ----------------------------------------------------------------


def next_prob(mrm: MarkovRewardModel, phi) -> np.ndarray:
    """Per-state probability that the next jump (self-loops included) lands in ``phi``."""
    phi = as_mask(mrm, phi)
    total = np.asarray(mrm.rates.sum(axis=1)).ravel()
    if np.any(total <= 0):
        s = int(np.flatnonzero(total <= 0)[0])
        raise EngineError(f"state {s} has no outgoing transitions")
    return (mrm.rates @ phi.astype(float)) / total


def _embedded(mrm: MarkovRewardModel) -> tuple[sp.csr_matrix, np.ndarray, sp.csr_matrix]:
    off = _off_diagonal(mrm.rates)
    exit_rates = np.asarray(off.sum(axis=1)).ravel()
    inv = np.divide(1.0, exit_rates, out=np.zeros_like(exit_rates), where=exit_rates > 0)
    return (sp.diags(inv) @ off).tocsr(), exit_rates, off


def unbounded_until(mrm: MarkovRewardModel, phi1, phi2) -> np.ndarray:
    """Per-state probability of ``phi1 U phi2`` on the embedded jump chain."""
    phi1 = as_mask(mrm, phi1)
    phi2 = as_mask(mrm, phi2)
    P, _, off = _embedded(mrm)
    can = _backward_closure(off, phi2, phi1)
    maybe = can & ~phi2
    x = phi2.astype(float)
    idx = np.flatnonzero(maybe)
    if idx.size:
        A = sp.identity(idx.size, format="csc") - P[idx][:, idx].tocsc()
        b = np.asarray(P[idx][:, phi2].sum(axis=1)).ravel()
        sol = np.atleast_1d(spsolve(A, b))
        x[idx] = np.clip(sol, 0.0, 1.0)
    return x


def _prob1(mrm: MarkovRewardModel, target: np.ndarray) -> np.ndarray:
    off = _off_diagonal(mrm.rates)
    everywhere = np.ones(mrm.n_states, dtype=bool)
    can = _backward_closure(off, target, everywhere)
    doomed = _backward_closure(off, ~can, ~target)
    return ~doomed


def reach_reward_states(mrm: MarkovRewardModel, reward, target) -> np.ndarray:
    """Expected reward accumulated before first entering ``target``; ``inf``
    where the target is missed with positive probability."""
    r = _reward_vector(mrm, reward)
    target = as_mask(mrm, target)
    P, exit_rates, _ = _embedded(mrm)
    sure = _prob1(mrm, target)
    out = np.full(mrm.n_states, np.inf)
    out[target] = 0.0
    idx = np.flatnonzero(sure & ~target)
    if idx.size:
        A = sp.identity(idx.size, format="csc") - P[idx][:, idx].tocsc()
        b = r[idx] / exit_rates[idx]
        out[idx] = np.atleast_1d(spsolve(A, b))
    return out


def reach_reward(mrm: MarkovRewardModel, reward, target) -> float:
    value = reach_reward_states(mrm, reward, target)[mrm.initial]
    if not np.isfinite(value):
        raise EngineError("infinite expected reward possible: target not reached with probability 1")
    return float(value)
