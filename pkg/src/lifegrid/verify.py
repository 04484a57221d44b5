"""Named theorem-check batteries: every structural identity the engine rests
on, runnable over seeded random instances and reported as JSON-friendly
dicts.  The CLI's ``verify`` subcommand and the acceptance tests both drive
these functions.
"""
from __future__ import annotations

import dataclasses
import random

import numpy as np

from . import _numeric as nm
from .enlargement import (
    EnlargementBundle,
    bar_transform,
    enlarge,
    enlarged_partitions,
    g_compensator,
    hat_transform,
    rtilde_jump_compensation,
)
from .errors import DomainError
from .hedging import (
    MarketModel,
    market_model,
    mortality_drift_gkw,
    risk_minimize,
    risk_process,
    securitized_hedge,
)
from .models import random_instance, random_market_instance, random_tau
from .projections import OPTIONAL, PREDICTABLE_KLASS, dual_projection, dual_rn_derivative, gkw
from .representation import (
    basis_f_martingales,
    closed_g_martingale,
    g_increment_martingale_check,
    nbar_report,
    represent_g_martingale,
    represent_optional_payoff,
)
from .space import (
    ADAPTED,
    INF,
    PREDICTABLE,
    RAW,
    FiniteFilteredSpace,
    ProcessPath,
    RandomTime,
    cond_expect_atoms,
    cumulate,
    increments,
    increments_from_zero,
    is_martingale,
    process,
    stop,
)

CHECK_NAMES = (
    "bundle_invariants",
    "ng_martingale",
    "representation",
    "general_decomposition",
    "prop23_equivalence",
    "appendix_identities",
    "pricing",
    "hedging_optimality",
)


def _flip_ng(bundle: EnlargementBundle) -> EnlargementBundle:
    """Test hook: flip the compensator sign inside N^G (mutation control)."""
    flipped = ProcessPath(
        values=2 * bundle.D.values - bundle.NG.values, klass=bundle.NG.klass
    )
    return dataclasses.replace(bundle, NG=flipped)


def _wrap(max_val, tol) -> dict:
    return {"pass": bool(max_val <= tol), "max_residual": nm.number_to_str(max_val)}


def check_bundle_invariants(bundle: EnlargementBundle) -> dict:
    """m martingale, dm = G~ - G_-, dD^o = G~ - G, [0,tau] in {G_->0, G~>0},
    G~_tau > 0, D = I_{G~>0} . D."""
    space = bundle.space
    worst = space.zero()
    worst = max(worst, is_martingale(space, bundle.m).max_violation)
    dm = increments(bundle.m)
    dDo = increments_from_zero(bundle.Do)
    for t in range(1, space.horizon + 1):
        worst = max(worst, nm.max_abs(dm[:, t] - (bundle.Gtilde.values[:, t] - bundle.G.values[:, t - 1])))
    for t in range(space.horizon + 1):
        worst = max(worst, nm.max_abs(dDo[:, t] - (bundle.Gtilde.values[:, t] - bundle.G.values[:, t])))
    ok_support = True
    for i, tv in enumerate(bundle.tau.times):
        if tv == INF:
            continue
        tv = int(tv)
        if bundle.Gtilde.values[i, tv] <= 0:
            ok_support = False
        for t in range(tv + 1):
            if bundle.Gtilde.values[i, t] <= 0 or (t >= 1 and bundle.G.values[i, t - 1] <= 0):
                ok_support = False
    out = _wrap(worst, space.tol)
    out["pass"] = bool(out["pass"] and ok_support)
    out["support_ok"] = ok_support
    return out


def check_ng_martingale(bundle: EnlargementBundle) -> dict:
    space = bundle.space
    rep = is_martingale(space, bundle.NG, partitions=bundle.g_partitions)
    rep2 = is_martingale(space, bundle.NGbar, partitions=bundle.g_partitions)
    worst = max(rep.max_violation, rep2.max_violation)
    return _wrap(worst, space.tol)


def check_representation(bundle: EnlargementBundle, h, h_inf, n_orth: int = 8, rng=None) -> dict:
    """Residual = 0 plus pairwise orthogonality of {hat part, pure1, pure2}."""
    space = bundle.space
    rep = represent_optional_payoff(bundle, h, h_inf)
    worst = rep.max_residual()
    hat_part = ProcessPath(values=rep.financial.values + rep.correlation.values, klass=RAW)
    pairs = [(hat_part, rep.pure1), (hat_part, rep.pure2), (rep.pure1, rep.pure2)]
    for X, Y in pairs:
        prod = increments(X) * increments(Y)
        for t in range(1, space.horizon + 1):
            step = cond_expect_atoms(space, prod[:, t], bundle.g_partitions[t - 1])
            worst = max(worst, nm.max_abs(step))
    # every K . N^G is a G-martingale and orthogonal to F-martingales
    if rng is not None:
        for _ in range(2):
            K = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
            for t in range(space.horizon + 1):
                for atom in space.partitions[t]:
                    v = space.num(rng.randint(-2, 2))
                    for i in atom:
                        K[i, t] = v
            kng = cumulate(space, K * increments(bundle.NG), start=nm.zeros(space.n_paths, space.exact))
            worst = max(worst, is_martingale(space, ProcessPath(values=kng, klass=RAW), partitions=bundle.g_partitions).max_violation)
    return _wrap(worst, space.tol)


def random_mark(rng, bundle: EnlargementBundle) -> np.ndarray:
    """A raw value-at-death mark with zero F_tau-cell averages (mass only on
    deaths at t >= 1)."""
    from .enlargement import graph_cells, F_TAU

    space = bundle.space
    k = nm.zeros(space.n_paths, space.exact)
    for t, cell in graph_cells(space, bundle.tau, F_TAU):
        if t == 0 or len(cell) < 2:
            continue
        vals = [space.num(rng.randint(-3, 3)) for _ in cell]
        mass = sum(space.weights[i] for i in cell)
        mean = sum(space.weights[i] * v for i, v in zip(cell, vals)) / mass
        for i, v in zip(cell, vals):
            k[i] = v - mean
    return k


def random_g_martingale(rng, bundle: EnlargementBundle, with_mark: bool = True):
    """A (possibly mark-augmented) G-martingale stopped at tau."""
    space = bundle.space
    zeta = space.vector([rng.randint(-4, 4) for _ in range(space.n_paths)])
    base = closed_g_martingale(bundle, zeta)
    base = stop(space, base, bundle.tau)
    if not with_mark:
        return base
    k = random_mark(rng, bundle)
    vals = base.values.copy()
    for i, t in enumerate(bundle.tau.times):
        if t != INF and t >= 1:
            for s in range(int(t), space.horizon + 1):
                vals[i, s] = vals[i, s] + k[i]
    return ProcessPath(values=vals, klass=RAW)


def check_general_decomposition(bundle: EnlargementBundle, rng) -> dict:
    """Thm-2.24/2.26 battery: increment property, residual, uniqueness of
    (phi_o, phi_pr) under representative perturbation."""
    space = bundle.space
    MG = random_g_martingale(rng, bundle)
    worst = g_increment_martingale_check(bundle, MG).max_violation
    rep = represent_g_martingale(bundle, MG, check=False)
    worst = max(worst, rep.max_residual())
    # perturb by a G-martingale vanishing on [0, tau]
    W = closed_g_martingale(bundle, space.vector([rng.randint(-3, 3) for _ in range(space.n_paths)]))
    kill = ProcessPath(values=W.values - stop(space, W, bundle.tau).values, klass=RAW)
    MG2 = ProcessPath(values=MG.values + kill.values, klass=RAW)
    rep2 = represent_g_martingale(bundle, MG2, check=False)
    for i, t in enumerate(bundle.tau.times):
        if t == INF:
            continue
        t = int(t)
        worst = max(worst, abs(rep.phi_o.values[i, t] - rep2.phi_o.values[i, t]))
        worst = max(worst, abs(rep.k[i] - rep2.k[i]))
    return _wrap(worst, space.tol)


def check_prop23(bundle: EnlargementBundle) -> dict:
    rep = nbar_report(bundle)
    return {
        "pass": bool(rep.consistent),
        "nbar_is_pure": rep.nbar_is_pure,
        "nbar_equals_ng": rep.nbar_equals_ng,
        "condition_c": rep.condition_c,
        "grid_condition": list(rep.grid_condition),
    }


def check_appendix(bundle: EnlargementBundle, rng) -> dict:
    """Lemma A.1 (dual RN), Lemma D.1 (G-compensators), Lemma F.1 (hat
    linearity), Thm E.1 (null class has vanishing hat)."""
    space = bundle.space
    n, T = space.n_paths, space.horizon
    worst = space.zero()

    # Lemma A.1 on phi in [0,1] adapted and V nondecreasing
    phi_vals = nm.zeros((n, T + 1), space.exact)
    v_vals = nm.zeros((n, T + 1), space.exact)
    for t in range(T + 1):
        for atom in space.partitions[t]:
            pv = space.num(rng.randint(0, 4)) / 4
            for i in atom:
                phi_vals[i, t] = pv
        if t >= 1:
            for i in range(n):
                v_vals[i, t] = v_vals[i, t - 1] + space.num(rng.randint(0, 2))
    phi = ProcessPath(values=phi_vals, klass=ADAPTED)
    V = ProcessPath(values=v_vals, klass=ADAPTED)
    psi = dual_rn_derivative(space, phi, V)
    phiV = _fv_from_increments(space, phi_vals * increments_from_zero(V))
    lhs = dual_projection(space, phiV, PREDICTABLE_KLASS)
    rhs_vp = dual_projection(space, V, PREDICTABLE_KLASS)
    rhs = cumulate(space, psi.values * increments_from_zero(rhs_vp), start=None)
    worst = max(worst, nm.max_abs(lhs.values - rhs))
    for t in range(T + 1):
        for i in range(n):
            if psi.values[i, t] < 0 or psi.values[i, t] > 1:
                worst = max(worst, space.one())

    # Lemma D.1(a): g_compensator vs direct G-compensation
    u_vals = nm.zeros((n, T + 1), space.exact)
    for t in range(1, T + 1):
        for atom in space.partitions[t]:
            uv = space.num(rng.randint(-2, 2))
            for i in atom:
                u_vals[i, t] = u_vals[i, t - 1] + uv
    U = ProcessPath(values=u_vals, klass=ADAPTED)
    lhs_comp = g_compensator(bundle, U)
    stopped = stop(space, U, bundle.tau)
    direct = dual_projection(space, stopped, PREDICTABLE_KLASS, partitions=bundle.g_partitions)
    worst = max(worst, nm.max_abs(increments(lhs_comp)[:, 1:] - increments(direct)[:, 1:]))

    # Lemma D.1(b) identities on (0, tau]
    Km = _random_f_mart(space, rng)
    dK = increments(Km)
    for t in range(1, T + 1):
        ratio = nm.div0(dK[:, t], bundle.Gtilde.values[:, t])
        guard = np.array([bundle.Gtilde.values[i, t] > 0 for i in range(n)])
        lhs_g = cond_expect_atoms(space, np.where(guard, ratio, space.zero()), bundle.g_partitions[t - 1])
        rhs_f = nm.div0(
            cond_expect_atoms(space, np.where(guard, dK[:, t], space.zero()), space.partitions[t - 1]),
            bundle.G.values[:, t - 1],
        )
        for i in range(n):
            if t <= bundle.tau.times[i]:
                worst = max(worst, abs(lhs_g[i] - rhs_f[i]))
        lhs_g2 = cond_expect_atoms(space, dK[:, t], bundle.g_partitions[t - 1])
        rhs_f2 = nm.div0(
            cond_expect_atoms(space, bundle.Gtilde.values[:, t] * dK[:, t], space.partitions[t - 1]),
            bundle.G.values[:, t - 1],
        )
        for i in range(n):
            if t <= bundle.tau.times[i]:
                worst = max(worst, abs(lhs_g2[i] - rhs_f2[i]))

    # Lemma F.1: hat(A . M1 + M2) = A . hat(M1) + hat(M2) for predictable A
    M1 = _random_f_mart(space, rng)
    M2 = _random_f_mart(space, rng)
    a_vals = nm.zeros((n, T + 1), space.exact)
    for t in range(T + 1):
        for atom in space.partitions[max(t - 1, 0)]:
            av = space.num(rng.randint(-2, 2))
            for i in atom:
                a_vals[i, t] = av
    combo = cumulate(space, a_vals * increments(M1), start=nm.zeros(n, space.exact)) + M2.values
    hat_combo = hat_transform(bundle, ProcessPath(values=combo, klass=ADAPTED), check=False)
    hat1 = hat_transform(bundle, M1, check=False)
    hat2 = hat_transform(bundle, M2, check=False)
    assembled = (
        cumulate(space, a_vals * increments(hat1), start=nm.zeros(n, space.exact)) + hat2.values
    )
    worst = max(worst, nm.max_abs((hat_combo.values - hat_combo.values[:, [0]]) - (assembled - assembled[:, [0]])))

    # Thm E.1: the null-class construction has vanishing hat
    h_vals = nm.zeros((n, T + 1), space.exact)
    for t in range(T + 1):
        for atom in space.partitions[t]:
            hv = space.num(rng.randint(-3, 3))
            for i in atom:
                h_vals[i, t] = hv
    rt = bundle.Rtilde.array()
    null_inc = nm.zeros((n, T + 1), space.exact)
    dm = increments(bundle.m)
    for t in range(1, T + 1):
        hit = np.array([rt[i] == t for i in range(n)])
        jump = np.where(hit, h_vals[:, t] * bundle.G.values[:, t - 1], space.zero())
        comp = cond_expect_atoms(space, jump, space.partitions[t - 1])
        pred_h = cond_expect_atoms(space, np.where(hit, h_vals[:, t], space.zero()), space.partitions[t - 1])
        guard = np.array([bundle.G.values[i, t - 1] > 0 for i in range(n)])
        raw = jump - comp - np.where(guard, pred_h, space.zero()) * dm[:, t]
        null_inc[:, t] = nm.div0(raw, bundle.G.values[:, t - 1])
    Mnull = ProcessPath(values=cumulate(space, null_inc), klass=ADAPTED)
    worst = max(worst, is_martingale(space, Mnull).max_violation)
    hat_null = hat_transform(bundle, Mnull, check=False)
    worst = max(worst, nm.max_abs(hat_null.values - hat_null.values[:, [0]]))
    return _wrap(worst, space.tol)


def _fv_from_increments(space, deltas) -> ProcessPath:
    return ProcessPath(values=cumulate(space, deltas), klass=RAW)


def _random_f_mart(space: FiniteFilteredSpace, rng) -> ProcessPath:
    terminal = space.vector([rng.randint(-4, 4) for _ in range(space.n_paths)])
    vals = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
    for t in range(space.horizon + 1):
        vals[:, t] = cond_expect_atoms(space, terminal, space.partitions[t])
    return ProcessPath(values=vals, klass=ADAPTED)


def check_pricing(bundle: EnlargementBundle, rng) -> dict:
    from .contracts import (
        ContractSpec,
        ENDOWMENT,
        LONGEVITY_BOND,
        PURE_ENDOWMENT,
        TERM_INSURANCE,
        price,
        xi_g_duality_gap,
    )

    space = bundle.space
    T = rng.randint(1, space.horizon)
    g = cond_expect_atoms(space, space.vector([rng.randint(0, 4) for _ in range(space.n_paths)]), space.partitions[T])
    K_vals = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
    for t in range(space.horizon + 1):
        for atom in space.partitions[t]:
            v = space.num(rng.randint(0, 3))
            for i in atom:
                K_vals[i, t] = v
    K = ProcessPath(values=K_vals, klass=ADAPTED)
    worst = space.zero()
    decomp_pe = price(bundle, ContractSpec(kind=PURE_ENDOWMENT, T=T, g=g))
    decomp_ti = price(bundle, ContractSpec(kind=TERM_INSURANCE, T=T, K=K))
    decomp_en = price(bundle, ContractSpec(kind=ENDOWMENT, T=T, g=g, K=K))
    decomp_lb = price(bundle, ContractSpec(kind=LONGEVITY_BOND, T=T))
    for d in (decomp_pe, decomp_ti, decomp_en, decomp_lb):
        worst = max(worst, d.max_residual())
        worst = max(
            worst,
            is_martingale(space, d.price, partitions=bundle.g_partitions).max_violation,
        )
    worst = max(worst, nm.max_abs(decomp_en.price.values - decomp_pe.price.values - decomp_ti.price.values))
    O_vals = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
    for t in range(space.horizon + 1):
        for atom in space.partitions[t]:
            v = space.num(rng.randint(0, 1))
            for i in atom:
                O_vals[i, t] = v
    worst = max(worst, abs(xi_g_duality_gap(bundle, T, ProcessPath(values=O_vals, klass=ADAPTED))))
    return _wrap(worst, space.tol)


def check_hedging(seed: int, competitors: int = 10) -> dict:
    """Optimality of the risk-minimizing strategy against randomized
    0-admissible competitors, plus the transfer-formula consistency gaps."""
    inst = random_market_instance(seed)
    space, bundle = inst["space"], inst["bundle"]
    mkt = market_model(bundle, inst["S"])
    if not mkt.ok:
        raise DomainError("random market failed assumptions")
    rng = inst["rng"]
    h_vals = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
    for t in range(space.horizon + 1):
        for atom in space.partitions[t]:
            v = space.num(rng.randint(-2, 3))
            for i in atom:
                h_vals[i, t] = v
    h = ProcessPath(values=h_vals, klass=ADAPTED)
    res = risk_minimize(mkt, h)
    worst = max(res.extras["eq35_gap"], res.extras["direct_gkw_gap"])
    S_tau = stop(space, mkt.S, bundle.tau)
    violations = 0
    for _ in range(competitors):
        eps = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
        for t in range(1, space.horizon + 1):
            for atom in bundle.g_partitions[t - 1]:
                v = space.num(rng.randint(-2, 2))
                for i in atom:
                    eps[i, t] = v
        xi2 = ProcessPath(values=res.xi.values + eps, klass=PREDICTABLE)
        eta2 = ProcessPath(values=res.value.values - xi2.values * S_tau.values, klass=RAW)
        _, R2 = risk_process(mkt, xi2, eta2, res.payment)
        diff = R2.values - res.risk.values
        for i in range(space.n_paths):
            for t in range(space.horizon + 1):
                if diff[i, t] < -space.tol:
                    violations += 1
    sec = securitized_hedge(mkt, h)
    e = sec.energies
    full = e[tuple(sec.instruments)]
    mono = all(
        e[()] - e[(k,)] >= -space.tol and e[(k,)] - full >= -space.tol
        for k in sec.instruments
    )
    out = _wrap(worst, space.tol)
    out["pass"] = bool(out["pass"] and violations == 0 and mono)
    out["competitor_violations"] = violations
    out["securitization_monotone"] = bool(mono)
    out["kind"] = inst["kind"]
    return out


def verify_all(
    space: FiniteFilteredSpace,
    tau: RandomTime,
    seed: int = 0,
    count: int = 20,
    checks=None,
    inject_bug: str | None = None,
) -> dict:
    """Run the named theorem batteries on (space, tau) and on ``count``
    seeded random instances; deterministic given (space, tau, seed, count)."""
    rng = random.Random(seed)
    selected = tuple(checks) if checks else CHECK_NAMES
    for name in selected:
        if name not in CHECK_NAMES:
            raise DomainError(f"unknown check {name!r}")
    bundle = enlarge(space, tau)
    if inject_bug == "ng_sign_flip":
        bundle = _flip_ng(bundle)
    elif inject_bug:
        raise DomainError(f"unknown bug injection {inject_bug!r}")

    report: dict = {"seed": seed, "count": count, "checks": {}}

    def run(name, fn):
        if name in selected:
            report["checks"][name] = fn()

    run("bundle_invariants", lambda: check_bundle_invariants(bundle))
    run("ng_martingale", lambda: _battery_ng(bundle, seed, count))
    run("representation", lambda: _battery_repr(bundle, seed, count, inject_bug))
    run("general_decomposition", lambda: _battery_general(bundle, seed, count))
    run("prop23_equivalence", lambda: check_prop23(bundle))
    run("appendix_identities", lambda: _battery_appendix(bundle, seed, count))
    run("pricing", lambda: _battery_pricing(bundle, seed, count))
    run("hedging_optimality", lambda: _battery_hedging(seed, count))
    report["all_pass"] = all(c.get("pass") for c in report["checks"].values())
    return report


def _battery_ng(bundle, seed, count):
    out = check_ng_martingale(bundle)
    worst = nm.to_number(out["max_residual"], bundle.space.exact)
    for j in range(count):
        inst = random_instance(seed * 1000 + j)
        sub = check_ng_martingale(inst["bundle"])
        worst = max(worst, nm.to_number(sub["max_residual"], True))
    return {"pass": bool(out["pass"]) and worst <= bundle.space.tol, "max_residual": nm.number_to_str(worst)}


def _battery_repr(bundle, seed, count, inject_bug=None):
    rng = random.Random(seed + 1)
    from .models import random_adapted

    h = random_adapted(rng, bundle.space)
    out = check_representation(bundle, h, None, rng=rng)
    worst = nm.to_number(out["max_residual"], bundle.space.exact)
    for j in range(count):
        inst = random_instance(seed * 1001 + j)
        b = inst["bundle"] if inject_bug != "ng_sign_flip" else _flip_ng(inst["bundle"])
        sub = check_representation(b, inst["h"], inst["h_inf"], rng=inst["rng"])
        worst = max(worst, nm.to_number(sub["max_residual"], True))
    return {"pass": worst <= bundle.space.tol, "max_residual": nm.number_to_str(worst)}


def _battery_general(bundle, seed, count):
    rng = random.Random(seed + 2)
    out = check_general_decomposition(bundle, rng)
    worst = nm.to_number(out["max_residual"], bundle.space.exact)
    for j in range(count):
        inst = random_instance(seed * 1002 + j)
        sub = check_general_decomposition(inst["bundle"], inst["rng"])
        worst = max(worst, nm.to_number(sub["max_residual"], True))
    return {"pass": worst <= bundle.space.tol, "max_residual": nm.number_to_str(worst)}


def _battery_appendix(bundle, seed, count):
    rng = random.Random(seed + 3)
    out = check_appendix(bundle, rng)
    worst = nm.to_number(out["max_residual"], bundle.space.exact)
    for j in range(count):
        inst = random_instance(seed * 1003 + j)
        sub = check_appendix(inst["bundle"], inst["rng"])
        worst = max(worst, nm.to_number(sub["max_residual"], True))
    return {"pass": worst <= bundle.space.tol, "max_residual": nm.number_to_str(worst)}


def _battery_pricing(bundle, seed, count):
    rng = random.Random(seed + 4)
    out = check_pricing(bundle, rng)
    worst = nm.to_number(out["max_residual"], bundle.space.exact)
    for j in range(count):
        inst = random_instance(seed * 1004 + j)
        sub = check_pricing(inst["bundle"], inst["rng"])
        worst = max(worst, nm.to_number(sub["max_residual"], True))
    return {"pass": worst <= bundle.space.tol, "max_residual": nm.number_to_str(worst)}


def _battery_hedging(seed, count):
    worst = 0
    violations = 0
    mono = True
    for j in range(max(count // 4, 1)):
        sub = check_hedging(seed * 1005 + j)
        worst = max(worst, nm.to_number(sub["max_residual"], True))
        violations += sub["competitor_violations"]
        mono = mono and sub["securitization_monotone"]
    return {
        "pass": bool(worst == 0 and violations == 0 and mono),
        "max_residual": nm.number_to_str(worst),
        "competitor_violations": violations,
        "securitization_monotone": mono,
    }
