"""Explicit-state analysis of a :class:`~pepcheck.generator.ComposedMdp`.

Reachability probabilities are computed by value iteration after the usual
graph-based precomputation of the states with probability 0 and 1, so the
qualitative answers (in particular "reached with probability 1") are exact.
Expected rewards are infinite wherever some scheduler misses the target
with positive probability; elsewhere they are found by value iteration as
well.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import NonConvergence
from .generator import DONE_LABEL, ComposedMdp

__all__ = ["AnalysisResult", "count_state_space", "check_deadlock_free", "deadlock_states",
           "reach_probability", "reach_probabilities", "expected_reward", "expected_rewards",
           "prob0_max", "prob0_min", "prob1_max", "prob1_min", "analyze",
           "DEFAULT_EPSILON", "DEFAULT_MAX_ITERATIONS"]

DEFAULT_EPSILON = 1e-8
DEFAULT_MAX_ITERATIONS = 10**6


@dataclass
class AnalysisResult:
    states: int
    transitions: int
    build_time: float
    deadlock_free: bool
    values: dict[str, float] = field(default_factory=dict)


def count_state_space(mdp: ComposedMdp) -> tuple[int, int, float]:
    """``(states, transitions, build_time)``; a transition is one branch of one choice."""
    return mdp.num_states, mdp.num_transitions, mdp.build_time


def deadlock_states(mdp: ComposedMdp) -> list[int]:
    terminal = mdp.labels[DONE_LABEL]
    return [s for s, cs in enumerate(mdp.choices) if not cs and s not in terminal]


def check_deadlock_free(mdp: ComposedMdp) -> bool:
    """True iff every reachable state other than ``done_all`` has an enabled action."""
    return not deadlock_states(mdp)


def _target(mdp: ComposedMdp, target_label: str) -> np.ndarray:
    try:
        members = mdp.labels[target_label]
    except KeyError:
        raise KeyError(f"unknown label {target_label!r}; known: {sorted(mdp.labels)}") from None
    mask = np.zeros(mdp.num_states, dtype=bool)
    mask[list(members)] = True
    return mask


def _predecessors(mdp: ComposedMdp):
    pred = [[] for _ in range(mdp.num_states)]
    for s, cs in enumerate(mdp.choices):
        for c in cs:
            for _, t in c.branches:
                pred[t].append(s)
    return pred


def prob0_max(mdp: ComposedMdp, target: np.ndarray) -> np.ndarray:
    """States from which no scheduler reaches ``target`` (backward graph search)."""
    seen = target.copy()
    pred = _predecessors(mdp)
    queue = deque(np.flatnonzero(target))
    while queue:
        t = queue.popleft()
        for s in pred[t]:
            if not seen[s]:
                seen[s] = True
                queue.append(s)
    return ~seen


def _choice_predecessors(mdp: ComposedMdp):
    """For each state, the ``(state, choice index)`` pairs that can lead to it."""
    pred = [[] for _ in range(mdp.num_states)]
    for s, cs in enumerate(mdp.choices):
        for k, c in enumerate(cs):
            for _, t in c.branches:
                pred[t].append((s, k))
    return pred


def prob0_min(mdp: ComposedMdp, target: np.ndarray) -> np.ndarray:
    """States from which some scheduler avoids ``target`` forever."""
    # least fixpoint: a state is positive once each of its choices hits a positive state
    positive = target.copy()
    pending = [len(cs) for cs in mdp.choices]
    hit = [[False] * len(cs) for cs in mdp.choices]
    pred = _choice_predecessors(mdp)
    queue = deque(np.flatnonzero(target))
    while queue:
        t = queue.popleft()
        for s, k in pred[t]:
            if positive[s] or hit[s][k]:
                continue
            hit[s][k] = True
            pending[s] -= 1
            if pending[s] == 0:
                positive[s] = True
                queue.append(s)
    return ~positive


def prob1_max(mdp: ComposedMdp, target: np.ndarray) -> np.ndarray:
    """States from which some scheduler reaches ``target`` almost surely."""
    pred = _choice_predecessors(mdp)
    u = np.ones(mdp.num_states, dtype=bool)
    while True:
        # choices that stay inside u
        inside = [[all(u[t] for _, t in c.branches) for c in cs] for cs in mdp.choices]
        r = target & u
        queue = deque(np.flatnonzero(r))
        while queue:
            t = queue.popleft()
            for s, k in pred[t]:
                if not r[s] and u[s] and inside[s][k]:
                    r[s] = True
                    queue.append(s)
        if np.array_equal(r, u):
            return u
        u = r


def prob1_min(mdp: ComposedMdp, target: np.ndarray, no: np.ndarray | None = None) -> np.ndarray:
    """States from which every scheduler reaches ``target`` almost surely.

    These are the states that cannot reach a :func:`prob0_min` state.
    """
    if no is None:
        no = prob0_min(mdp, target)
    bad = no.copy()
    pred = _predecessors(mdp)
    queue = deque(np.flatnonzero(no))
    while queue:
        t = queue.popleft()
        for s in pred[t]:
            if not bad[s] and not target[s]:
                bad[s] = True
                queue.append(s)
    return ~bad


class _Matrix:
    """Choices of a subset of states as a sparse row-per-choice matrix."""

    def __init__(self, mdp: ComposedMdp, states: np.ndarray, reward_index: int | None = None):
        rows, cols, vals, starts, rew = [], [], [], [], []
        r = 0
        for s in states:
            starts.append(r)
            for c in mdp.choices[s]:
                for p, t in c.branches:
                    rows.append(r)
                    cols.append(t)
                    vals.append(p)
                rew.append(c.rewards[reward_index] if reward_index is not None else 0.0)
                r += 1
        self.P = sp.csr_matrix((vals, (rows, cols)), shape=(r, mdp.num_states))
        self.starts = np.asarray(starts, dtype=np.intp)
        self.rewards = np.asarray(rew, dtype=float)


def _iterate(matrix: _Matrix, x: np.ndarray, states: np.ndarray, mode: str,
             epsilon: float, max_iterations: int, with_rewards: bool) -> np.ndarray:
    reduce = np.minimum.reduceat if mode == "min" else np.maximum.reduceat
    if len(states) == 0:
        return x
    residual = math.inf
    for _ in range(max_iterations):
        values = matrix.P @ x
        if with_rewards:
            values = values + matrix.rewards
        new = reduce(values, matrix.starts)
        residual = float(np.max(np.abs(new - x[states])))
        x[states] = new
        if residual < epsilon:
            return x
    raise NonConvergence(max_iterations, residual)


def _check_mode(mode: str) -> None:
    if mode not in ("min", "max"):
        raise ValueError(f"mode must be 'min' or 'max', got {mode!r}")


def reach_probabilities(mdp: ComposedMdp, target_label: str, mode: str = "min", *,
                        epsilon: float = DEFAULT_EPSILON,
                        max_iterations: int = DEFAULT_MAX_ITERATIONS) -> np.ndarray:
    """Pmin or Pmax of eventually reaching ``target_label``, for every state."""
    _check_mode(mode)
    target = _target(mdp, target_label)
    if mode == "min":
        no = prob0_min(mdp, target)
        yes = prob1_min(mdp, target, no)
    else:
        no = prob0_max(mdp, target)
        yes = prob1_max(mdp, target)
    x = np.zeros(mdp.num_states)
    x[yes] = 1.0
    maybe = np.flatnonzero(~(yes | no))
    return _iterate(_Matrix(mdp, maybe), x, maybe, mode, epsilon, max_iterations, False)


def reach_probability(mdp: ComposedMdp, target_label: str, mode: str = "min", **kwargs) -> float:
    """Pmin/Pmax of eventually reaching ``target_label`` from the initial state."""
    return float(reach_probabilities(mdp, target_label, mode, **kwargs)[mdp.initial])


def expected_rewards(mdp: ComposedMdp, reward_name: str, target_label: str, mode: str = "min", *,
                     epsilon: float = DEFAULT_EPSILON,
                     max_iterations: int = DEFAULT_MAX_ITERATIONS) -> np.ndarray:
    """Min/max expected reward accumulated until ``target_label``, for every state.

    States from which some scheduler misses the target with positive
    probability get ``inf`` in both modes.
    """
    _check_mode(mode)
    try:
        k = mdp.reward_names.index(reward_name)
    except ValueError:
        raise KeyError(f"no reward structure {reward_name!r}") from None
    target = _target(mdp, target_label)
    sure = prob1_min(mdp, target)
    x = np.full(mdp.num_states, math.inf)
    x[sure] = 0.0
    maybe = np.flatnonzero(sure & ~target)
    # every successor of a sure state is sure, so the system stays finite
    return _iterate(_Matrix(mdp, maybe, k), x, maybe, mode, epsilon, max_iterations, True)


def expected_reward(mdp: ComposedMdp, reward_name: str, target_label: str = DONE_LABEL,
                    mode: str = "min", **kwargs) -> float:
    return float(expected_rewards(mdp, reward_name, target_label, mode, **kwargs)[mdp.initial])


def analyze(mdp: ComposedMdp, *, epsilon: float = DEFAULT_EPSILON) -> AnalysisResult:
    """Counts, deadlock freedom and the standard completion/reward values."""
    states, transitions, build_time = count_state_space(mdp)
    values = {
        "Pmin_done": reach_probability(mdp, DONE_LABEL, "min", epsilon=epsilon),
        "Pmax_done": reach_probability(mdp, DONE_LABEL, "max", epsilon=epsilon),
    }
    if "days" in mdp.reward_names:
        values["Rmin_days"] = expected_reward(mdp, "days", DONE_LABEL, "min", epsilon=epsilon)
    if "wd" in mdp.reward_names:
        values["Rmax_wd"] = expected_reward(mdp, "wd", DONE_LABEL, "max", epsilon=epsilon)
    return AnalysisResult(states, transitions, build_time, check_deadlock_free(mdp), values)
