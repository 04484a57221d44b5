"""Model zoo: filtration generators and random-time constructions mirroring
the worked examples (Bernoulli-walk analogues of the Poisson models), stock
models, the anticipating correlated-death construction, and seeded random
instances for the verification batteries.

Random times that need randomness beyond the base filtration are realized by
extending the path space with a death coordinate: each base path splits into
one copy per reachable death value, weighted by its conditional probability,
and the filtration ignores the new coordinate.  Structural times (stopping
times, arrival combinations) need no extension.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _numeric as nm
from .enlargement import EnlargementBundle, enlarge
from .errors import BudgetExceeded, DegenerateModel, DomainError
from .space import (
    ADAPTED,
    INF,
    FiniteFilteredSpace,
    ProcessPath,
    RandomTime,
    build_space,
    cond_expect_atoms,
    random_time,
)


@dataclass(frozen=True)
class ModelSpec:
    market: dict
    tau: dict
    seed: int | None = None
    path_budget: int = 4096
    exact: bool = True
    tol: float = 1e-10


# -- canonical small spaces ---------------------------------------------------

def w4() -> tuple[FiniteFilteredSpace, RandomTime]:
    """The canonical two-flip space with tau = (1, 2, 2, INF)."""
    space = build_space(
        ["1/4"] * 4,
        [[[0, 1, 2, 3]], [[0, 1], [2, 3]], [[0], [1], [2], [3]]],
    )
    return space, random_time(space, [1, 2, 2, None])


def three_flip(exact: bool = True) -> FiniteFilteredSpace:
    """Uniform three-coin-flip space (8 paths, horizon 3)."""
    parts = [
        [list(range(8))],
        [[0, 1, 2, 3], [4, 5, 6, 7]],
        [[0, 1], [2, 3], [4, 5], [6, 7]],
        [[i] for i in range(8)],
    ]
    return build_space([Fraction(1, 8)] * 8, parts, exact=exact)


# -- Bernoulli walk market ----------------------------------------------------

def bernoulli_walk(n_steps: int, p="1/2", exact: bool = True, path_budget: int = 4096):
    """I.i.d. arrival indicators; the discrete Poisson stand-in.  Returns the
    space, the compensated count martingale, and the arrival matrix."""
    if 2 ** n_steps > path_budget:
        raise BudgetExceeded(f"2^{n_steps} paths exceed budget {path_budget}")
    pnum = nm.to_number(p, exact)
    n = 2 ** n_steps
    flips = [[(i >> s) & 1 for s in range(n_steps)] for i in range(n)]
    weights = []
    one = nm.one(exact)
    for f in flips:
        w = one
        for x in f:
            w = w * (pnum if x else (one - pnum))
        weights.append(w)
    partitions = []
    for t in range(n_steps + 1):
        groups: dict = {}
        for i, f in enumerate(flips):
            groups.setdefault(tuple(f[:t]), []).append(i)
        partitions.append(list(groups.values()))
    space = build_space(weights, partitions, exact=exact)
    svals = nm.zeros((n, n_steps + 1), exact)
    for i, f in enumerate(flips):
        acc = nm.zero(exact)
        for t in range(1, n_steps + 1):
            acc = acc + (one if f[t - 1] else nm.zero(exact)) - pnum
            svals[i, t] = acc
    S = ProcessPath(values=svals, klass=ADAPTED)
    counts = np.array([[sum(f[:t]) for t in range(n_steps + 1)] for f in flips])
    return space, S, counts


def arrival_times(counts: np.ndarray, k: int):
    """T_k = first time the arrival count reaches k (INF if never)."""
    out = []
    for row in counts:
        hit = next((t for t in range(len(row)) if row[t] >= k), None)
        out.append(INF if hit is None else hit)
    return out


def trinomial_walk(n_steps: int, exact: bool = True, path_budget: int = 4096):
    """Uniform three-branch walk with steps in {+1, 0, -1}: an F-martingale
    whose branching is rich enough for anticipating death profiles."""
    if 3 ** n_steps > path_budget:
        raise BudgetExceeded(f"3^{n_steps} paths exceed budget {path_budget}")
    n = 3 ** n_steps
    digits = []
    for i in range(n):
        row = []
        x = i
        for _ in range(n_steps):
            row.append(x % 3)
            x //= 3
        digits.append(row)
    weights = [Fraction(1, n)] * n
    partitions = []
    for t in range(n_steps + 1):
        groups: dict = {}
        for i, row in enumerate(digits):
            groups.setdefault(tuple(row[:t]), []).append(i)
        partitions.append(list(groups.values()))
    space = build_space(weights, partitions, exact=exact)
    step_of = {0: Fraction(1), 1: Fraction(0), 2: Fraction(-1)}
    svals = nm.zeros((n, n_steps + 1), exact)
    for i, row in enumerate(digits):
        acc = nm.zero(exact)
        for t in range(1, n_steps + 1):
            acc = acc + nm.to_number(step_of[row[t - 1]], exact)
            svals[i, t] = acc
    return space, ProcessPath(values=svals, klass=ADAPTED)


def binomial_stock(n_steps: int, u="2", d="1/2", s0="1", exact: bool = True, path_budget: int = 4096):
    """Recombinable binomial stock under its risk-neutral weights
    p = (1-d)/(u-d); returns (space, S)."""
    un, dn, s0n = (nm.to_number(x, exact) for x in (u, d, s0))
    if not dn < 1 < un:
        raise DomainError("need d < 1 < u for a risk-neutral binomial stock")
    p = (1 - dn) / (un - dn)
    space, _, counts = bernoulli_walk(n_steps, p, exact=exact, path_budget=path_budget)
    n = space.n_paths
    svals = nm.zeros((n, n_steps + 1), exact)
    for i in range(n):
        for t in range(n_steps + 1):
            ups = counts[i][t]
            svals[i, t] = s0n * un**ups * dn ** (t - ups)
    return space, ProcessPath(values=svals, klass=ADAPTED)


# -- random-time constructions ------------------------------------------------

def extend_with_random_time(
    space: FiniteFilteredSpace,
    per_path_probs: list[dict],
    processes: list[ProcessPath] = (),
    path_budget: int = 4096,
):
    """Split each path into one copy per reachable death value.

    ``per_path_probs[i]`` maps tau values (ints or INF) to probabilities
    summing to 1.  The filtration ignores the death coordinate, so the
    returned tau has exactly these conditional laws given F_horizon.  Lifted
    copies of the given processes are returned alongside.
    """
    n = space.n_paths
    new_weights = []
    new_tau = []
    origin = []
    for i in range(n):
        probs = per_path_probs[i]
        total = sum(probs.values())
        if total != space.one() and abs(total - 1) > space.tol:
            raise DomainError(f"tau distribution on path {i} sums to {total}")
        for value, prob in sorted(probs.items(), key=lambda kv: (kv[0] == INF, kv[0])):
            if prob == 0:
                continue
            new_weights.append(space.weights[i] * prob)
            new_tau.append(value)
            origin.append(i)
    if len(new_weights) > path_budget:
        raise BudgetExceeded(f"{len(new_weights)} paths exceed budget {path_budget}")
    back = {}
    for j, i in enumerate(origin):
        back.setdefault(i, []).append(j)
    partitions = []
    for t in range(space.horizon + 1):
        partitions.append([[j for i in atom for j in back[i]] for atom in space.partitions[t]])
    new_space = build_space(new_weights, partitions, exact=space.exact, tol=max(space.tol, 1e-10))
    tau = random_time(new_space, [None if v == INF else int(v) for v in new_tau])
    lifted = []
    for P in processes:
        vals = nm.zeros((len(new_weights), space.horizon + 1), space.exact)
        for j, i in enumerate(origin):
            vals[j, :] = P.values[i, :]
        lifted.append(ProcessPath(values=vals, klass=P.klass))
    return new_space, tau, lifted, origin


def independent_tau(space: FiniteFilteredSpace, dist: dict, processes=(), path_budget: int = 4096):
    """tau independent of F_infinity with the given one-dimensional law."""
    probs = {}
    for key, val in dist.items():
        k = INF if key in ("inf", "INF", None, INF) else int(key)
        probs[k] = nm.to_number(val, space.exact)
    per_path = [dict(probs) for _ in range(space.n_paths)]
    return extend_with_random_time(space, per_path, processes, path_budget)


def cox_tau(
    space: FiniteFilteredSpace,
    hazard: ProcessPath,
    levels: int = 4,
    processes=(),
    path_budget: int = 4096,
):
    """Cox construction: tau = first t with the adapted increasing hazard
    above an independent uniform threshold (an immersion time, m = 1)."""
    n = space.n_paths
    one = space.one()
    per_path = []
    for i in range(n):
        probs: dict = {}
        for lvl in range(1, levels + 1):
            threshold = nm.to_number(Fraction(lvl, levels + 1), space.exact)
            t_hit = next(
                (t for t in range(space.horizon + 1) if hazard.values[i, t] >= threshold),
                INF,
            )
            probs[t_hit] = probs.get(t_hit, space.zero()) + one / levels
        per_path.append(probs)
    return extend_with_random_time(space, per_path, processes, path_budget)


def floor_time(x) -> float:
    return INF if x == INF else float(int(x))


def convex_combo_tau(space, counts, alpha, horizon):
    """tau = floor(alpha T_1 + (1 - alpha) T_2), INF when T_2 is not reached."""
    a = Fraction(alpha) if not isinstance(alpha, Fraction) else alpha
    t1 = arrival_times(counts, 1)
    t2 = arrival_times(counts, 2)
    vals = []
    for x, y in zip(t1, t2):
        if y == INF:
            vals.append(None)
            continue
        v = int(a * Fraction(int(x)) + (1 - a) * Fraction(int(y)))
        vals.append(min(v, horizon))
    return random_time(space, vals)


def min_scaled_tau(space, counts, a, horizon):
    """tau = floor(a T_2) ^ T_1 (the Example-2.8 analogue: correlated with
    the first arrival, never avoiding it)."""
    af = Fraction(a) if not isinstance(a, Fraction) else a
    t1 = arrival_times(counts, 1)
    t2 = arrival_times(counts, 2)
    vals = []
    for x, y in zip(t1, t2):
        cand = INF if y == INF else int(af * Fraction(int(y)))
        v = min(x, cand)
        vals.append(None if v == INF else min(int(v), horizon))
    return random_time(space, vals)


def last_passage_tau(space, counts, a: int, mu: int, horizon: int):
    """tau = last grid time the drift-minus-arrivals walk Y = mu t - N_t sits
    at or below the level a; INF when the walk is still at or below the level
    at the horizon (the passage may continue beyond the window)."""
    vals = []
    for row in counts:
        y = [mu * t - row[t] for t in range(horizon + 1)]
        if y[horizon] <= a:
            vals.append(None)
        else:
            vals.append(max(t for t in range(horizon + 1) if y[t] <= a))
    return random_time(space, vals)


def first_arrival_stopping(space, counts, horizon: int) -> RandomTime:
    t1 = arrival_times(counts, 1)
    return random_time(space, [None if v == INF else int(v) for v in t1])


def min_with_stopping_tau(space, sigma: RandomTime, tau1: RandomTime) -> RandomTime:
    vals = []
    for s, t in zip(sigma.times, tau1.times):
        v = min(s, t)
        vals.append(None if v == INF else int(v))
    return random_time(space, vals)


def anticipating_death_probs(
    space: FiniteFilteredSpace,
    S: ProcessPath,
    t_star: int,
    base="1/2",
    scale="1/10",
    rng: random.Random | None = None,
):
    """Death-at-(t_star - 1) probabilities anticipating the time-t_star move
    of S while keeping <S, m> = 0: within each F_{t_star-1}-atom the profile
    x over the t_star-branches solves E[x] = E[x dS] = 0, and
    P(tau = t_star - 1 | branch) = base - x.  Needs at least one atom with
    three or more distinct branches to be nontrivial."""
    rng = rng or random.Random(0)
    n = space.n_paths
    base_n = nm.to_number(base, space.exact)
    scale_n = nm.to_number(scale, space.exact)
    x = nm.zeros(n, space.exact)
    prev = space.partitions[t_star - 1] if t_star >= 1 else space.partitions[0]
    nontrivial = False
    for atom in prev:
        branches: dict = {}
        for i in atom:
            key = None
            for batom in space.partitions[t_star]:
                if i in batom:
                    key = space.partitions[t_star].index(batom)
                    break
            branches.setdefault(key, []).append(i)
        keys = list(branches.keys())
        if len(keys) < 3:
            continue
        w = [sum(space.weights[i] for i in branches[k]) for k in keys]
        ds = []
        for k in keys:
            i0 = branches[k][0]
            ds.append(S.values[i0, t_star] - S.values[i0, t_star - 1])
        # random vector in the kernel of (w, w*ds): deflate a random seed
        seed = [nm.to_number(rng.randint(-3, 3), space.exact) for _ in keys]
        tot_w = sum(w)
        m1 = sum(wi * si for wi, si in zip(w, seed)) / tot_w
        seed = [s - m1 for s in seed]
        num = sum(wi * di * si for wi, di, si in zip(w, ds, seed))
        den = sum(wi * di * di for wi, di in zip(w, ds))
        if den != 0:
            lam = num / den
            seed = [s - lam * d for s, d in zip(seed, ds)]
        mx = max((abs(s) for s in seed), default=space.zero())
        if mx == 0:
            continue
        nontrivial = True
        for k, s in zip(keys, seed):
            for i in branches[k]:
                x[i] = scale_n * s / mx
    if not nontrivial:
        raise DegenerateModel("no atom with >= 3 branches at t_star")
    per_path = []
    for i in range(n):
        p_death = base_n - x[i]
        if p_death <= 0 or p_death >= 1:
            raise DomainError("anticipating profile left [0,1]; lower the scale")
        per_path.append({t_star - 1: p_death, INF: 1 - p_death})
    return per_path


def correlated_trinomial(exact: bool = True):
    """The hand-sized correlated market: a trinomial move then a binary move,
    death at time 0 anticipating the trinomial branch, <S, m> = 0 but
    phi_m != 0 (the mortality drift is hedgeable)."""
    branches = [Fraction(3), Fraction(-1), Fraction(-2)]
    n = 6
    parts = [
        [list(range(6))],
        [[0, 1], [2, 3], [4, 5]],
        [[i] for i in range(6)],
    ]
    weights = [Fraction(1, 6)] * 6
    space = build_space(weights, parts, exact=exact)
    svals = nm.zeros((6, 3), exact)
    for b in range(3):
        for j, step2 in enumerate((Fraction(1), Fraction(-1))):
            i = 2 * b + j
            svals[i, 1] = branches[b]
            svals[i, 2] = branches[b] + step2
    S = ProcessPath(values=svals, klass=ADAPTED)
    # death at 0 with branch-anticipating probabilities p = 1/2 - x/20,
    # x = (1, -5, 4): E[x] = 0 and E[x dS] = 0 on the uniform branches
    profile = {0: Fraction(1, 20), 1: Fraction(-5, 20), 2: Fraction(4, 20)}
    per_path = []
    for i in range(6):
        p = Fraction(1, 2) - profile[i // 2]
        per_path.append({0: p, INF: 1 - p})
    new_space, tau, (S2,), _ = extend_with_random_time(space, per_path, [S])
    return new_space, S2, tau


# -- scanners and checks ------------------------------------------------------

def is_stopping_time(space: FiniteFilteredSpace, tau: RandomTime) -> bool:
    for t in range(space.horizon + 1):
        hit = {i for i, v in enumerate(tau.times) if v == t}
        for atom in space.partitions[t]:
            inter = hit.intersection(atom)
            if inter and inter != set(atom):
                return False
    return True


@dataclass(frozen=True)
class AvoidanceReport:
    avoids: bool
    witnesses: tuple  # (t, atom, P(tau = t on atom)) cells, each a stopping rule
    checked: tuple = field(default=())  # results for caller-specified times


def avoidance_scanner(
    space: FiniteFilteredSpace,
    tau: RandomTime,
    stopping_times: dict | None = None,
) -> AvoidanceReport:
    """Exhaustive avoidance check.

    Any stopping rule that hits tau with positive probability restricts to a
    cell {tau = t} within an F_t-atom, so listing those cells IS the
    exhaustive scan over all stopping rules; on a grid, tau avoids every
    stopping time only if it is never finite.  Named stopping times (e.g.
    arrival times) can be passed for individual P(tau = sigma < inf) checks.
    """
    witnesses = []
    for t in range(space.horizon + 1):
        for atom in space.partitions[t]:
            mass = sum(space.weights[i] for i in atom if tau.times[i] == t)
            if mass > 0:
                witnesses.append((t, tuple(atom), mass))
    checked = []
    for name, sigma in (stopping_times or {}).items():
        mass = space.zero()
        for i in range(space.n_paths):
            if sigma.times[i] != INF and sigma.times[i] == tau.times[i]:
                mass = mass + space.weights[i]
        checked.append((name, mass, bool(mass == 0)))
    return AvoidanceReport(avoids=not witnesses, witnesses=tuple(witnesses), checked=tuple(checked))


def pseudo_stopping_check(bundle: EnlargementBundle) -> bool:
    """tau is a pseudo-stopping time iff m = 1; cross-checked against
    E[M_{tau ^ T}] = M_0 over the closed atom-indicator martingale basis."""
    space = bundle.space
    flat = nm.max_abs(bundle.m.values - space.one()) <= space.tol
    worst = space.zero()
    for atom in space.partitions[space.horizon]:
        ind = nm.zeros(space.n_paths, space.exact)
        for i in atom:
            ind[i] = space.one()
        closed = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
        for t in range(space.horizon + 1):
            closed[:, t] = cond_expect_atoms(space, ind, space.partitions[t])
        total = space.zero()
        for i, t in enumerate(bundle.tau.times):
            tt = space.horizon if t == INF else int(t)
            total = total + space.weights[i] * closed[i, tt]
        worst = max(worst, abs(total - closed[0, 0]))
    sampled = worst <= space.tol
    return bool(flat and sampled)


# -- seeded random instances ---------------------------------------------------

def random_tree_space(
    rng: random.Random,
    max_paths: int = 64,
    max_periods: int = 6,
    exact: bool = True,
) -> FiniteFilteredSpace:
    n = rng.choice([k for k in (4, 6, 8, 12, 16, 24, 32, 48, 64) if k <= max_paths])
    T = rng.randint(2, max_periods)
    labels = [[0] * n]
    counter = 0
    for _ in range(T):
        prev = labels[-1]
        groups: dict = {}
        for i, a in enumerate(prev):
            groups.setdefault(a, []).append(i)
        newlab = [0] * n
        seen: dict = {}
        for a, idx in groups.items():
            blocks = rng.randint(1, min(3, len(idx)))
            for i in idx:
                g = rng.randrange(blocks)
                key = (a, g)
                if key not in seen:
                    seen[key] = counter
                    counter += 1
                newlab[i] = seen[key]
        labels.append(newlab)
    partitions = []
    for lab in labels:
        groups = {}
        for i, a in enumerate(lab):
            groups.setdefault(a, []).append(i)
        partitions.append(list(groups.values()))
    weights = [Fraction(rng.randint(1, 9)) for _ in range(n)]
    total = sum(weights)
    weights = [w / total for w in weights]
    if not exact:
        weights = [float(w) for w in weights]
    return build_space(weights, partitions, exact=exact)


def random_tau(rng: random.Random, space: FiniteFilteredSpace, allow_zero: bool = True) -> RandomTime:
    lo = 0 if allow_zero else 1
    values = []
    for _ in range(space.n_paths):
        if rng.random() < 0.2:
            values.append(None)
        else:
            values.append(rng.randint(lo, space.horizon))
    if all(v is None for v in values):
        values[0] = space.horizon
    return random_time(space, values)


def random_adapted(rng: random.Random, space: FiniteFilteredSpace, lo=-3, hi=3) -> ProcessPath:
    vals = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
    for t in range(space.horizon + 1):
        for atom in space.partitions[t]:
            v = nm.to_number(rng.randint(lo, hi), space.exact)
            for i in atom:
                vals[i, t] = v
    return ProcessPath(values=vals, klass=ADAPTED)


def random_f_martingale(rng: random.Random, space: FiniteFilteredSpace, lo=-4, hi=4) -> ProcessPath:
    terminal = space.vector([rng.randint(lo, hi) for _ in range(space.n_paths)])
    vals = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
    for t in range(space.horizon + 1):
        vals[:, t] = cond_expect_atoms(space, terminal, space.partitions[t])
    return ProcessPath(values=vals, klass=ADAPTED)


def random_instance(seed: int, max_paths: int = 64, max_periods: int = 6, exact: bool = True) -> dict:
    """A seeded (space, tau, bundle) triple plus a random payoff pair."""
    rng = random.Random(seed)
    space = random_tree_space(rng, max_paths=max_paths, max_periods=max_periods, exact=exact)
    tau = random_tau(rng, space)
    bundle = enlarge(space, tau)
    h = random_adapted(rng, space)
    h_inf = cond_expect_atoms(
        space,
        space.vector([rng.randint(-2, 2) for _ in range(space.n_paths)]),
        space.partitions[space.horizon],
    )
    return {"space": space, "tau": tau, "bundle": bundle, "h": h, "h_inf": h_inf, "rng": rng}


def random_market_instance(seed: int, kind: str | None = None, exact: bool = True) -> dict:
    """A seeded hedging market satisfying the (S, tau) assumptions.

    kinds: "independent" (hidden death coordinate, pseudo), "cox"
    (immersion hazard, pseudo), "anticipating" (correlated, phi_m != 0)."""
    rng = random.Random(seed)
    kind = kind or rng.choice(["independent", "cox", "anticipating"])
    n_steps = rng.choice([2, 3])
    space, S, counts = bernoulli_walk(n_steps, Fraction(1, 2), exact=exact)
    T = space.horizon
    if kind == "independent":
        probs: dict = {}
        weightings = [Fraction(rng.randint(0, 3)) for _ in range(T + 2)]
        if sum(weightings) == 0:
            weightings[-1] = Fraction(1)
        total = sum(weightings)
        for t in range(T + 1):
            probs[t] = weightings[t] / total
        probs[INF] = weightings[T + 1] / total
        new_space, tau, (S2,), _ = independent_tau(space, probs, [S])
    elif kind == "cox":
        hvals = nm.zeros((space.n_paths, T + 1), exact)
        for i in range(space.n_paths):
            acc = Fraction(0)
            for t in range(T + 1):
                acc += Fraction(1 + counts[i][t], 4 * (T + 1))
                hvals[i, t] = acc
        new_space, tau, (S2,), _ = cox_tau(
            space, ProcessPath(values=hvals, klass=ADAPTED), levels=3, processes=[S]
        )
    elif kind == "anticipating":
        steps = rng.choice([2, 3])
        t_star = rng.randint(1, steps)
        base_space, S = trinomial_walk(steps, exact=exact)
        per_path = anticipating_death_probs(base_space, S, t_star, rng=rng)
        # optional extra independent death layer: tau = min of the two
        new_space, tau_a, (S2,), origin = extend_with_random_time(base_space, per_path, [S])
        if rng.random() < 0.5:
            q = Fraction(rng.randint(1, 3), 8)
            later = rng.randint(t_star, base_space.horizon)
            probs = {later: q, INF: 1 - q}
            new_space, tau_i, (S2,), origin2 = independent_tau(new_space, probs, [S2])
            lifted_a = [tau_a.times[j] for j in origin2]
            tau = RandomTime(
                times=tuple(min(a, b) for a, b in zip(lifted_a, tau_i.times))
            )
        else:
            tau = tau_a
    else:
        raise DomainError(f"unknown market kind {kind!r}")
    bundle = enlarge(new_space, tau)
    return {"space": new_space, "S": S2, "tau": tau, "bundle": bundle, "kind": kind, "rng": rng}


# -- spec-driven construction ---------------------------------------------------

def build_model(spec: ModelSpec):
    """Construct (space, S, tau) from a declarative model spec.

    market kinds: bernoulli_walk {n_steps, p}, binomial_stock {n_steps, u, d,
    s0}, w4 {}, correlated_trinomial {}.
    tau kinds: independent {probs}, cox {levels}, stopping_time {},
    convex_combo {alpha}, min_scaled {a}, last_passage {a, mu},
    min_with_stopping {inner}, grid_supported {per_path}, given {times},
    built_in (for markets that carry their own tau).
    """
    mk = dict(spec.market)
    kind = mk.pop("kind", "bernoulli_walk")
    counts = None
    if kind == "bernoulli_walk":
        space, S, counts = bernoulli_walk(
            int(mk.get("n_steps", 3)), mk.get("p", "1/2"), exact=spec.exact, path_budget=spec.path_budget
        )
    elif kind == "binomial_stock":
        space, S = binomial_stock(
            int(mk.get("n_steps", 3)), mk.get("u", "2"), mk.get("d", "1/2"), mk.get("s0", "1"),
            exact=spec.exact, path_budget=spec.path_budget,
        )
    elif kind == "w4":
        space, tau = w4()
        svals = nm.zeros((4, 3), spec.exact)
        for i, row in enumerate([[0, 1, 2], [0, 1, 0], [0, -1, 0], [0, -1, -2]]):
            for t, v in enumerate(row):
                svals[i, t] = nm.to_number(v, spec.exact)
        return space, ProcessPath(values=svals, klass=ADAPTED), tau
    elif kind == "correlated_trinomial":
        return correlated_trinomial(exact=spec.exact)
    else:
        raise DomainError(f"unknown market kind {kind!r}")

    tk = dict(spec.tau)
    tkind = tk.pop("kind", "independent")
    horizon = space.horizon
    rng = random.Random(spec.seed or 0)
    if counts is None and tkind in ("stopping_time", "convex_combo", "min_scaled", "last_passage", "min_with_stopping"):
        counts = np.array(
            [[0 for _ in range(horizon + 1)] for _ in range(space.n_paths)]
        )
        raise DomainError(f"tau kind {tkind!r} needs an arrival market")
    if tkind == "independent":
        space, tau, (S,), _ = independent_tau(space, tk.get("probs", {0: "1/4", 1: "1/4", "inf": "1/2"}), [S], spec.path_budget)
    elif tkind == "cox":
        hvals = nm.zeros((space.n_paths, horizon + 1), spec.exact)
        for i in range(space.n_paths):
            acc = nm.zero(spec.exact)
            for t in range(horizon + 1):
                base = counts[i][t] if counts is not None else t
                acc = acc + nm.to_number(Fraction(1 + int(base), 4 * (horizon + 1)), spec.exact)
                hvals[i, t] = acc
        space, tau, (S,), _ = cox_tau(space, ProcessPath(values=hvals, klass=ADAPTED), int(tk.get("levels", 3)), [S], spec.path_budget)
    elif tkind == "stopping_time":
        tau = first_arrival_stopping(space, counts, horizon)
    elif tkind == "convex_combo":
        tau = convex_combo_tau(space, counts, Fraction(tk.get("alpha", "1/3")), horizon)
    elif tkind == "min_scaled":
        tau = min_scaled_tau(space, counts, Fraction(tk.get("a", "1/2")), horizon)
    elif tkind == "last_passage":
        tau = last_passage_tau(space, counts, int(tk.get("a", 0)), int(tk.get("mu", 1)), horizon)
    elif tkind == "min_with_stopping":
        sigma = first_arrival_stopping(space, counts, horizon)
        inner = tk.get("inner", {"probs": {1: "1/2", "inf": "1/2"}})
        space2, tau1, (S,), origin = independent_tau(space, inner.get("probs"), [S], spec.path_budget)
        sigma2 = random_time(space2, [None if sigma.times[i] == INF else int(sigma.times[i]) for i in origin])
        tau = min_with_stopping_tau(space2, sigma2, tau1)
        space = space2
    elif tkind == "grid_supported":
        per_path = []
        for row in tk["per_path"]:
            per_path.append({(INF if k in ("inf", "INF") else int(k)): nm.to_number(v, spec.exact) for k, v in row.items()})
        space, tau, (S,), _ = extend_with_random_time(space, per_path, [S], spec.path_budget)
    elif tkind == "given":
        tau = random_time(space, tk["times"])
    else:
        raise DomainError(f"unknown tau kind {tkind!r}")
    if all(v == INF for v in tau.times):
        raise DegenerateModel("tau is never finite")
    return space, S, tau
