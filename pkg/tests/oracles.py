"""Reference computations used to check the library.

None of these share code with ``pepcheck.engine`` or the composition in
``pepcheck.generator``: probabilities and rewards come from linear programs
(scipy/HiGHS) or from enumerating memoryless schedulers and solving the
induced Markov chain with numpy; the product state space is recomputed by a
set-based fixpoint straight from the guarded commands.
"""

from __future__ import annotations

import itertools
from collections import Counter

import numpy as np
from scipy.optimize import linprog


def target_mask(mdp, label):
    mask = np.zeros(mdp.num_states, dtype=bool)
    mask[list(mdp.labels[label])] = True
    return mask


def can_avoid_forever(mdp, target):
    """Greatest fixpoint: states where some scheduler stays outside ``target`` forever.

    A state with no choices (a deadlock) trivially stays put.
    """
    z = ~target
    while True:
        nz = z.copy()
        for s in np.flatnonzero(z):
            cs = mdp.choices[s]
            if cs and not any(all(z[t] for _, t in c.branches) for c in cs):
                nz[s] = False
        if np.array_equal(nz, z):
            return z
        z = nz


def can_reach(mdp, target):
    r = target.copy()
    while True:
        nr = r.copy()
        for s, cs in enumerate(mdp.choices):
            if not nr[s] and any(r[t] for c in cs for _, t in c.branches):
                nr[s] = True
        if np.array_equal(nr, r):
            return r
        r = nr


def _solve(c, rows, rhs, bounds):
    res = linprog(c, A_ub=np.array(rows) if rows else None, b_ub=np.array(rhs) if rhs else None,
                  bounds=bounds, method="highs", options={"primal_feasibility_tolerance": 1e-10,
                                                          "dual_feasibility_tolerance": 1e-10})
    assert res.status == 0, res.message
    return res.x


def lp_reach(mdp, label, mode):
    """Pmin/Pmax of reaching ``label`` for every state, as the solution of an LP.

    max: least x with x_s >= sum_t P(s,a,t) x_t for every choice a.
    min: greatest x with x_s <= sum_t P(s,a,t) x_t, after fixing x = 0 on
    the states that can avoid the target forever.
    """
    n = mdp.num_states
    target = target_mask(mdp, label)
    zero = can_avoid_forever(mdp, target) if mode == "min" else ~can_reach(mdp, target)
    bounds = [(1, 1) if target[s] else (0, 0) if zero[s] else (0, 1) for s in range(n)]
    rows, rhs = [], []
    sign = 1.0 if mode == "max" else -1.0
    for s, cs in enumerate(mdp.choices):
        if target[s] or zero[s]:
            continue
        for c in cs:
            row = np.zeros(n)
            row[s] -= 1.0
            for p, t in c.branches:
                row[t] += p
            rows.append(sign * row)  # max: P x - x_s <= 0 ; min: x_s - P x <= 0
            rhs.append(0.0)
    return _solve(np.full(n, sign), rows, rhs, bounds)


def lp_reward(mdp, reward_name, label, mode):
    """Min/max expected reward until ``label``; inf where Pmin(F label) < 1."""
    n = mdp.num_states
    k = mdp.reward_names.index(reward_name)
    target = target_mask(mdp, label)
    sure = lp_reach(mdp, label, "min") > 1 - 1e-9
    out = np.full(n, np.inf)
    out[target] = 0.0
    idx = [s for s in range(n) if sure[s] and not target[s]]
    if not idx:
        return out
    col = {s: i for i, s in enumerate(idx)}
    rows, rhs = [], []
    sign = 1.0 if mode == "max" else -1.0
    for s in idx:
        for c in mdp.choices[s]:
            row = np.zeros(len(idx))
            row[col[s]] -= 1.0
            for p, t in c.branches:
                if t in col:
                    row[col[t]] += p
            # max: r + P x - x_s <= 0 ; min: x_s - P x - r <= 0
            rows.append(sign * row)
            rhs.append(-sign * c.rewards[k])
    x = _solve(np.full(len(idx), sign), rows, rhs, [(0, None)] * len(idx))
    out[idx] = x
    return out


def scheduler_count(mdp, label=None):
    """Number of memoryless deterministic schedulers (choices at target states ignored)."""
    target = target_mask(mdp, label) if label else np.zeros(mdp.num_states, dtype=bool)
    return int(np.prod([len(cs) for s, cs in enumerate(mdp.choices) if cs and not target[s]], dtype=float))


def schedulers_reach(mdp, label, mode, limit=20000):
    """Optimise over every memoryless deterministic scheduler by brute force.

    Each scheduler induces a Markov chain whose reachability probabilities
    are found by a direct linear solve.
    """
    n = mdp.num_states
    target = target_mask(mdp, label)
    reach = can_reach(mdp, target)
    options = [range(len(cs)) if cs and not target[s] else [None] for s, cs in enumerate(mdp.choices)]
    count = scheduler_count(mdp, label)
    if count > limit:
        raise ValueError(f"{count} schedulers is too many")
    best = None
    for pick in itertools.product(*options):
        A = np.eye(n)
        b = np.zeros(n)
        # states that cannot reach the target under this scheduler are solved as 0
        succ = {s: [t for _, t in mdp.choices[s][a].branches] if a is not None else []
                for s, a in enumerate(pick)}
        good = target.copy()
        changed = True
        while changed:
            changed = False
            for s in range(n):
                if not good[s] and any(good[t] for t in succ[s]):
                    good[s] = changed = True
        for s, a in enumerate(pick):
            if target[s]:
                b[s] = 1.0
            elif good[s] and reach[s]:
                for p, t in mdp.choices[s][a].branches:
                    A[s, t] -= p
        x = np.linalg.solve(A, b)
        best = x if best is None else (np.minimum(best, x) if mode == "min" else np.maximum(best, x))
    return best


def brute_product(modules):
    """Reachable states and transition count of the synchronised product.

    Works directly on the modules' guarded commands: a labelled action fires
    when every module whose alphabet contains it has a command with that
    label enabled; unlabelled commands interleave.  Branches of one choice
    that lead to the same state count once.
    """
    alphabet = {}
    for i, m in enumerate(modules):
        for c in m.commands:
            if c.action is not None:
                alphabet.setdefault(c.action, set()).add(i)

    def choices(state):
        out = []
        for i, m in enumerate(modules):
            for c in m.commands:
                if c.action is None and c.guard == state[i]:
                    out.append({state[:i] + (t,) + state[i + 1:] for _, t in c.branches})
        for action, parts in alphabet.items():
            per = [[c for c in modules[i].commands if c.action == action and c.guard == state[i]]
                   for i in sorted(parts)]
            for combo in itertools.product(*per):
                succ = set()
                for outcome in itertools.product(*(c.branches for c in combo)):
                    nxt = list(state)
                    for i, (_, t) in zip(sorted(parts), outcome):
                        nxt[i] = t
                    succ.add(tuple(nxt))
                out.append(succ)
        return out

    init = tuple(m.initial for m in modules)
    seen = {init}
    frontier = {init}
    while frontier:
        new = set()
        for s in frontier:
            for succ in choices(s):
                new |= succ
        frontier = new - seen
        seen |= frontier
    transitions = sum(len(succ) for s in seen for succ in choices(s))
    return seen, transitions


def simple_paths(diagram, source, target):
    """All node-id paths from ``source`` to ``target`` without repeated nodes."""
    paths = []

    def walk(node, path):
        if node == target:
            paths.append(path)
            return
        for f in diagram.outgoing(node):
            if f.target not in path:
                walk(f.target, path + [f.target])

    walk(source, [source])
    return paths


def choice_signature(mdp):
    """For each global state, the multiset of its choices as (distribution, rewards).

    Successors are given as location tuples, so the result does not depend
    on the order in which states were numbered; action labels are ignored.
    """
    return {
        mdp.states[s]: Counter((tuple(sorted((mdp.states[t], p) for p, t in c.branches)), c.rewards)
                               for c in cs)
        for s, cs in enumerate(mdp.choices)
    }
