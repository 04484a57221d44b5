"""Quadratic risk-minimization in F and G: optimal strategies, remaining
risk, value/cost/risk processes, the pure-endowment and annuity strategy
splits, and hedging with mortality-linked instruments.

The standing assumptions on the pair (S, tau): S is an F-martingale,
<S, m> = 0, and S does not jump where G~ hits zero from G_- > 0.  Under them
the G-optimal strategy for a mortality claim is the F-optimal one scaled by
(G_- + phi_m)^{-1} on (0, tau], where phi_m is the GKW integrand of
U = I_{G_->0} . [S, m] on S.

Claims settled at a term T < horizon are handled by restricting everything
to the subgrid 0..T (the enlargement commutes with the restriction), which
keeps strategies supported on (0, T and tau] exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _numeric as nm
from .contracts import bond_price, xi_g_process
from .enlargement import EnlargementBundle, enlarge, hat_transform
from .errors import AssumptionViolated, DomainError, NotAdmissible
from .projections import gkw
from .representation import (
    claim_terminal,
    closed_g_martingale,
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
    check_measurability,
    clip_tau,
    cond_expect_atoms,
    cumulate,
    increments,
    increments_from_zero,
    is_martingale,
    pad_process,
    restrict_process,
    restrict_space,
    stop,
)

STOCK = "stock"
PURE_ENDOWMENT_INSTRUMENT = "pure_endowment"
LONGEVITY_BOND_INSTRUMENT = "longevity_bond"


@dataclass(frozen=True)
class MarketModel:
    space: FiniteFilteredSpace
    bundle: EnlargementBundle
    S: ProcessPath
    assumption_report: dict

    @property
    def ok(self) -> bool:
        return self.assumption_report["all_ok"]


def check_market_assumptions(S: ProcessPath, bundle: EnlargementBundle) -> dict:
    """Report on the three standing conditions for (S, tau)."""
    space = bundle.space
    mart = is_martingale(space, S)
    dS = increments(S)
    dm = increments(bundle.m)
    worst = space.zero()
    for t in range(1, space.horizon + 1):
        step = cond_expect_atoms(space, dS[:, t] * dm[:, t], space.partitions[t - 1])
        worst = max(worst, nm.max_abs(step))
    bracket_zero = worst <= space.tol
    rt = bundle.Rtilde.array()
    jump = space.zero()
    for i in range(space.n_paths):
        if rt[i] != INF:
            jump = max(jump, abs(dS[i, int(rt[i])]))
    no_jump = jump <= space.tol
    report = {
        "s_martingale": bool(mart.ok),
        "s_martingale_violation": mart.max_violation,
        "bracket_sm_zero": bool(bracket_zero),
        "bracket_sm_max": worst,
        "no_jump_at_rtilde": bool(no_jump),
        "jump_at_rtilde_max": jump,
    }
    report["all_ok"] = bool(mart.ok and bracket_zero and no_jump)
    return report


def market_model(bundle: EnlargementBundle, S: ProcessPath) -> MarketModel:
    check_measurability(bundle.space, S, ADAPTED)
    report = check_market_assumptions(S, bundle)
    return MarketModel(space=bundle.space, bundle=bundle, S=S, assumption_report=report)


def _require_assumptions(market: MarketModel) -> None:
    if not market.ok:
        raise AssumptionViolated(f"market assumptions fail: {market.assumption_report}")


def truncate_market(market: MarketModel, T: int) -> MarketModel:
    """The market restricted to the subgrid 0..T with tau clipped beyond T."""
    if T == market.space.horizon:
        return market
    space = restrict_space(market.space, T)
    bundle = enlarge(space, clip_tau(market.bundle.tau, T))
    return market_model(bundle, restrict_process(market.S, T))


def mortality_drift_gkw(market: MarketModel):
    """U = I_{G_- > 0} . [S, m], its GKW pair (phi_m, L_m) on S, and the
    positivity check G_- > 0 implies G_- + phi_m > 0 on (0, tau]."""
    _require_assumptions(market)
    space, bundle = market.space, market.bundle
    n, T = space.n_paths, space.horizon
    dS = increments(market.S)
    dm = increments(bundle.m)
    du = nm.zeros((n, T + 1), space.exact)
    for t in range(1, T + 1):
        guard = np.array([bundle.G.values[i, t - 1] > 0 for i in range(n)])
        du[:, t] = np.where(guard, dS[:, t] * dm[:, t], space.zero())
    U = ProcessPath(values=cumulate(space, du), klass=ADAPTED)
    res = gkw(space, U, market.S, check=False)
    phi_m, L_m = res.theta1, res.residual
    tau_arr = bundle.tau.array()
    for i in range(n):
        for t in range(1, T + 1):
            if t <= tau_arr[i] and bundle.G.values[i, t - 1] + phi_m.values[i, t] <= 0:
                raise AssumptionViolated(
                    f"G_- + phi_m not positive at path {i}, t={t}"
                )
    return U, phi_m, L_m


@dataclass(frozen=True)
class HedgeResult:
    xi: ProcessPath  # optimal G-strategy in the stock, full grid
    eta: ProcessPath  # cash position
    remaining: ProcessPath  # L^{(h,G)}
    value: ProcessPath  # V(rho*)
    cost: ProcessPath  # C(rho*)
    risk: ProcessPath  # R_t(rho*)
    xi_F: ProcessPath  # F-side strategy for the claim E[int h dD^o | F_T]
    L_F: ProcessPath  # F-side remaining risk
    H: ProcessPath  # price process of the claim
    payment: ProcessPath
    extras: dict = field(default_factory=dict)


def _claim_payment(bundle: EnlargementBundle, zeta: np.ndarray, T: int) -> ProcessPath:
    """Cumulative payment of a claim settled entirely at the term."""
    space = bundle.space
    vals = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
    for t in range(T, space.horizon + 1):
        vals[:, t] = zeta
    return ProcessPath(values=vals, klass=RAW)


def _conditional_risk(market: MarketModel, C: ProcessPath) -> ProcessPath:
    """R_t = E[(C_T - C_t)^2 | G_t]."""
    space, bundle = market.space, market.bundle
    n, T = space.n_paths, space.horizon
    out = nm.zeros((n, T + 1), space.exact)
    last = C.values[:, -1]
    for t in range(T + 1):
        sq = (last - C.values[:, t]) * (last - C.values[:, t])
        out[:, t] = cond_expect_atoms(space, sq, bundle.g_partitions[t])
    return ProcessPath(values=out, klass=RAW)


def risk_minimize(
    market: MarketModel,
    h: ProcessPath,
    T: int | None = None,
    h_surv=None,
    payment: ProcessPath | None = None,
) -> HedgeResult:
    """Risk-minimizing strategy for the mortality claim paying h at death up
    to the term and h_surv at the term on survival.

    Returns the G-side optimum and the underlying F-side GKW pair; the
    remaining risk is assembled both as H - H_0 - xi.S^tau and per the
    explicit transfer formula, and the two must agree (the gap is reported).
    """
    _require_assumptions(market)
    full = market
    T = market.space.horizon if T is None else T
    sub = truncate_market(market, T)
    space, bundle = sub.space, sub.bundle
    h_sub = restrict_process(h, T)
    check_measurability(space, h_sub, ADAPTED)

    rep = represent_optional_payoff(bundle, h_sub, h_surv)
    U, phi_m, L_m = mortality_drift_gkw(sub)
    fgkw = gkw(space, rep.Mh, sub.S, check=False)
    xi_F, L_F = fgkw.theta1, fgkw.residual

    n = space.n_paths
    Tn = space.horizon
    alive = bundle.alive_matrix()
    xi_vals = nm.zeros((n, Tn + 1), space.exact)
    for t in range(1, Tn + 1):
        den = bundle.G.values[:, t - 1] + phi_m.values[:, t]
        xi_vals[:, t] = np.where(alive[:, t], nm.div0(xi_F.values[:, t], den), space.zero())
    xi_sub = ProcessPath(values=xi_vals, klass=PREDICTABLE)

    S_tau = stop(space, sub.S, bundle.tau)
    dStau = increments(S_tau)
    gains = cumulate(space, xi_vals * dStau, start=nm.zeros(n, space.exact))
    L_vals = rep.H.values - rep.H.values[:, [0]] - gains
    L_sub = ProcessPath(values=L_vals, klass=RAW)

    # explicit Eq-(35)-style assembly (hat of the F residuals + the
    # correlation and pure-mortality parts of the payoff representation)
    Lm_hat = hat_transform(bundle, ProcessPath(values=L_m.values, klass=ADAPTED), check=False)
    Lf_hat = hat_transform(bundle, ProcessPath(values=L_F.values, klass=ADAPTED), check=False)
    dLm = increments(Lm_hat)
    dLf = increments(Lf_hat)
    assemble = nm.zeros((n, Tn + 1), space.exact)
    for t in range(1, Tn + 1):
        g_prev = bundle.G.values[:, t - 1]
        den = g_prev + phi_m.values[:, t]
        lead = -nm.div0(xi_F.values[:, t], g_prev * den)
        step = lead * dLm[:, t] + nm.div0(dLf[:, t], g_prev)
        assemble[:, t] = np.where(alive[:, t], step, space.zero())
    eq35 = cumulate(space, assemble) + rep.correlation.values + rep.pure1.values
    eq35_gap = nm.max_abs(eq35 - L_vals)

    # direct G-side GKW consistency on dS^tau
    direct = gkw(space, rep.H, S_tau, partitions=bundle.g_partitions, check=False)
    gap = nm.max_abs((direct.theta1.values - xi_vals) * dStau)

    # map back to the full grid
    xi_full = pad_process(full.space, xi_sub, mode="zero")
    L_full = pad_process(full.space, L_sub, mode="hold")
    H_full = pad_process(full.space, rep.H, mode="hold")
    zeta = claim_terminal(bundle, h_sub, rep.h_inf, rep.k)
    A = payment if payment is not None else _claim_payment(full.bundle, zeta, T)

    n_full, T_full = full.space.n_paths, full.space.horizon
    V_vals = nm.zeros((n_full, T_full + 1), full.space.exact)
    A_last = A.values[:, -1]
    for t in range(T_full + 1):
        V_vals[:, t] = cond_expect_atoms(
            full.space, A_last - A.values[:, t], full.bundle.g_partitions[t]
        )
    V = ProcessPath(values=V_vals, klass=RAW)
    S_tau_full = stop(full.space, full.S, full.bundle.tau)
    eta = ProcessPath(values=V.values - xi_full.values * S_tau_full.values, klass=RAW)
    C = ProcessPath(
        values=V.values
        - cumulate(full.space, xi_full.values * increments(S_tau_full), start=nm.zeros(n_full, full.space.exact))
        + A.values,
        klass=RAW,
    )
    R = _conditional_risk(full, C)
    return HedgeResult(
        xi=xi_full,
        eta=eta,
        remaining=pad_process(full.space, L_sub, mode="hold"),
        value=V,
        cost=C,
        risk=R,
        xi_F=pad_process(full.space, xi_F, mode="zero"),
        L_F=pad_process(full.space, L_F, mode="hold"),
        H=H_full,
        payment=A,
        extras={
            "T": T,
            "phi_m": phi_m,
            "L_m": L_m,
            "U": U,
            "eq35_gap": eq35_gap,
            "direct_gkw_gap": gap,
            "representation": rep,
            "sub_market": sub,
            "xi_sub": xi_sub,
            "L_sub": L_sub,
            "remaining_padded_const": L_full,
        },
    )


def risk_process(market: MarketModel, xi: ProcessPath, eta: ProcessPath, A: ProcessPath):
    """Cost and risk of an arbitrary 0-admissible strategy (xi, eta) against
    the payment process A: C = V - xi.S^tau + A, R_t = E[(C_T - C_t)^2|G_t]."""
    space, bundle = market.space, market.bundle
    S_tau = stop(space, market.S, bundle.tau)
    V = ProcessPath(values=xi.values * S_tau.values + eta.values, klass=RAW)
    if nm.max_abs(V.values[:, -1]) > space.tol:
        raise NotAdmissible("V_T(rho) != 0")
    gains = cumulate(space, xi.values * increments(S_tau), start=nm.zeros(space.n_paths, space.exact))
    C = ProcessPath(values=V.values - gains + A.values, klass=RAW)
    return C, _conditional_risk(market, C)


def value_formula(market: MarketModel, result: HedgeResult) -> ProcessPath:
    """The closed-form optimal value: zeta after death / before the term,
    Y_t/G_t while alive, 0 from the term on."""
    space = market.space
    sub: MarketModel = result.extras["sub_market"]
    rep = result.extras["representation"]
    T = result.extras["T"]
    bundle = sub.bundle
    zeta = claim_terminal(bundle, rep.h, rep.h_inf, rep.k)
    n = space.n_paths
    vals = nm.zeros((n, space.horizon + 1), space.exact)
    tau_arr = bundle.tau.array()
    for t in range(T):
        for i in range(n):
            if tau_arr[i] <= t:
                vals[i, t] = zeta[i]
            else:
                g = bundle.G.values[i, t]
                vals[i, t] = rep.Y.values[i, t] / g if g != 0 else space.zero()
    return ProcessPath(values=vals, klass=RAW)


# -- strategy splits ----------------------------------------------------------

def _closed_f_martingale(space: FiniteFilteredSpace, terminal) -> ProcessPath:
    vals = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
    for t in range(space.horizon + 1):
        vals[:, t] = cond_expect_atoms(space, terminal, space.partitions[t])
    return ProcessPath(values=vals, klass=ADAPTED)


def endowment_strategy_split(market: MarketModel, g, T: int) -> dict:
    """Thm-4.11-style split of the pure-endowment strategy into financial,
    survival, and correlation GKW components, with the assembled strategy."""
    _require_assumptions(market)
    sub = truncate_market(market, T)
    space, bundle = sub.space, sub.bundle
    g = g if isinstance(g, np.ndarray) else space.vector(g)
    surv = nm.zeros(space.n_paths, space.exact)
    one = space.one()
    for i, t in enumerate(bundle.tau.times):
        if t == INF:
            surv[i] = one
    Ug = _closed_f_martingale(space, g)
    GT = _closed_f_martingale(space, surv)
    Mg = _closed_f_martingale(space, g * surv)
    cov = ProcessPath(values=Mg.values - GT.values * Ug.values, klass=ADAPTED)
    br = cumulate(space, increments(GT) * increments(Ug))
    Cor = ProcessPath(values=br + cov.values, klass=ADAPTED)

    res_g = gkw(space, Ug, sub.S, check=False)
    res_GT = gkw(space, GT, sub.S, check=False)
    res_C = gkw(space, Cor, sub.S, check=False)
    _, phi_m, _ = mortality_drift_gkw(sub)

    n, Tn = space.n_paths, space.horizon
    xi_F = nm.zeros((n, Tn + 1), space.exact)
    L_F = nm.zeros((n, Tn + 1), space.exact)
    for t in range(1, Tn + 1):
        xi_F[:, t] = (
            GT.values[:, t - 1] * res_g.theta1.values[:, t]
            + Ug.values[:, t - 1] * res_GT.theta1.values[:, t]
            + res_C.theta1.values[:, t]
        )
    dLg = increments(res_g.residual)
    dLGT = increments(res_GT.residual)
    dLC = increments(res_C.residual)
    for t in range(1, Tn + 1):
        L_F[:, t] = (
            GT.values[:, t - 1] * dLg[:, t]
            + Ug.values[:, t - 1] * dLGT[:, t]
            + dLC[:, t]
        )
    alive = bundle.alive_matrix()
    xi_vals = nm.zeros((n, Tn + 1), space.exact)
    for t in range(1, Tn + 1):
        den = bundle.G.values[:, t - 1] + phi_m.values[:, t]
        xi_vals[:, t] = np.where(alive[:, t], nm.div0(xi_F[:, t], den), space.zero())

    zero_h = ProcessPath(
        values=nm.zeros((market.space.n_paths, market.space.horizon + 1), market.space.exact),
        klass=ADAPTED,
    )
    direct = risk_minimize(market, zero_h, T=T, h_surv=g)
    L_F_assembled = cumulate(space, L_F)
    return {
        "xi_g_F": res_g.theta1,
        "xi_GT_F": res_GT.theta1,
        "xi_Cor_F": res_C.theta1,
        "L_g_F": res_g.residual,
        "L_GT_F": res_GT.residual,
        "L_Cor_F": res_C.residual,
        "U_g": Ug,
        "G_T_process": GT,
        "Cor": Cor,
        "M_g": Mg,
        "xi_F_assembled": ProcessPath(values=xi_F, klass=PREDICTABLE),
        "L_F_assembled": ProcessPath(values=L_F_assembled, klass=RAW),
        "xi_G_assembled": ProcessPath(values=xi_vals, klass=PREDICTABLE),
        "direct": direct,
        "xi_F_gap": nm.max_abs(xi_F - restrict_process(direct.xi_F, Tn).values),
        "L_F_gap": nm.max_abs(L_F_assembled - restrict_process(direct.L_F, Tn).values),
        "xi_G_gap": nm.max_abs(xi_vals - direct.extras["xi_sub"].values),
    }


# -- securitization -----------------------------------------------------------

def instrument_hedge(sub: MarketModel, kind: str) -> HedgeResult:
    """Risk-minimization of a mortality security itself (benefit-1 pure
    endowment or the longevity bond) on the subgrid: its strategy is the
    instrument's phi^(.,G) and its remaining risk the L^(.,G) of the
    securitization formulas."""
    space, bundle = sub.space, sub.bundle
    T = space.horizon
    zeros = nm.zeros((space.n_paths, T + 1), space.exact)
    if kind == PURE_ENDOWMENT_INSTRUMENT:
        one = space.one()
        h_inf = nm.zeros(space.n_paths, space.exact)
        for i in range(space.n_paths):
            h_inf[i] = one
        return risk_minimize(sub, ProcessPath(values=zeros, klass=ADAPTED), h_surv=h_inf)
    if kind == LONGEVITY_BOND_INSTRUMENT:
        xi, _ = xi_g_process(bundle, T)
        gT = bundle.G.values[:, T]
        return risk_minimize(sub, ProcessPath(values=xi.values, klass=ADAPTED), h_surv=gT)
    raise DomainError(f"unknown instrument {kind!r}")


def quadratic_energy(space: FiniteFilteredSpace, X: ProcessPath):
    """E[[X]_T] = E[sum_t (dX_t)^2]."""
    dX = increments(X)
    total = space.zero()
    for i in range(space.n_paths):
        for t in range(1, X.values.shape[1]):
            total = total + space.weights[i] * dX[i, t] * dX[i, t]
    return total


@dataclass(frozen=True)
class SecuritizedHedge:
    instruments: tuple[str, ...]
    strategies: dict
    remaining: ProcessPath
    risk: ProcessPath
    base: HedgeResult
    instrument_results: dict
    energies: dict
    diagnostics: dict

    @property
    def R0(self):
        return self.risk.values[0, 0]


def securitized_hedge(
    market: MarketModel,
    h: ProcessPath,
    T: int | None = None,
    h_surv=None,
    instruments: tuple[str, ...] = (PURE_ENDOWMENT_INSTRUMENT, LONGEVITY_BOND_INSTRUMENT),
) -> SecuritizedHedge:
    """Risk-minimizing hedge of a mortality claim trading the stock together
    with mortality-linked instruments.

    The per-instrument strategies are the conditional projections of the
    stock-only remaining risk onto the instruments' own remaining risks
    (exact minimal-norm normal equations per (G-atom, time), so conditionally
    collinear instrument residuals fall back to the spanning direction
    instead of being dropped); the stock leg is re-adjusted by the
    instruments' stock deltas.
    """
    base = risk_minimize(market, h, T=T, h_surv=h_surv)
    sub: MarketModel = base.extras["sub_market"]
    space, bundle = sub.space, sub.bundle
    L_h = base.extras["L_sub"]
    xi_h = base.extras["xi_sub"]

    inst_results = {kind: instrument_hedge(sub, kind) for kind in instruments}
    inst_L = {k: r.extras["L_sub"] for k, r in inst_results.items()}
    inst_phi = {k: r.extras["xi_sub"] for k, r in inst_results.items()}

    def project(onto: tuple[str, ...]):
        if not onto:
            return {}, L_h, ()
        res = gkw(
            space,
            L_h,
            [inst_L[k] for k in onto],
            partitions=bundle.g_partitions,
            check=False,
        )
        xi_map = {k: res.theta[j] for j, k in enumerate(onto)}
        return xi_map, res.residual, res.gram_diagnostics

    xi_inst, L_rem, gram = project(tuple(instruments))

    xi_stock_vals = xi_h.values.copy()
    for k in instruments:
        xi_stock_vals = xi_stock_vals - inst_phi[k].values * xi_inst[k].values
    xi_stock = ProcessPath(values=xi_stock_vals, klass=PREDICTABLE)

    energies = {(): quadratic_energy(space, L_h)}
    for k in instruments:
        _, L_k, _ = project((k,))
        energies[(k,)] = quadratic_energy(space, L_k)
    if len(instruments) > 1:
        energies[tuple(instruments)] = quadratic_energy(space, L_rem)

    S_tau = stop(space, sub.S, bundle.tau)
    orth = {"stock": nm.max_abs(_pred_bracket_g(sub, L_rem, S_tau))}
    for k in instruments:
        orth[k] = nm.max_abs(_pred_bracket_g(sub, L_rem, inst_L[k]))

    risk_vals = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
    last = L_rem.values[:, -1]
    for t in range(space.horizon + 1):
        sq = (last - L_rem.values[:, t]) * (last - L_rem.values[:, t])
        risk_vals[:, t] = cond_expect_atoms(space, sq, bundle.g_partitions[t])
    risk = ProcessPath(values=risk_vals, klass=RAW)

    strategies = {STOCK: pad_process(market.space, xi_stock, mode="zero")}
    for k in instruments:
        strategies[k] = pad_process(market.space, xi_inst[k], mode="zero")
    return SecuritizedHedge(
        instruments=tuple(instruments),
        strategies=strategies,
        remaining=pad_process(market.space, L_rem, mode="hold"),
        risk=pad_process(market.space, risk, mode="hold"),
        base=base,
        instrument_results=inst_results,
        energies=energies,
        diagnostics={"gram": gram, "orthogonality": orth},
    )


def _pred_bracket_g(market: MarketModel, X: ProcessPath, Y: ProcessPath) -> np.ndarray:
    """Increments of the predictable G-bracket <X, Y>."""
    space, bundle = market.space, market.bundle
    prod = increments(X) * increments(Y)
    out = nm.zeros(prod.shape, space.exact)
    for t in range(1, prod.shape[1]):
        out[:, t] = cond_expect_atoms(space, prod[:, t], bundle.g_partitions[t - 1])
    return out


def annuity_strategy_split(market: MarketModel, C: ProcessPath, T: int) -> dict:
    """Thm-4.13-style split for the annuity paying the accumulated C at death
    or its terminal value at the term, whichever comes first."""
    _require_assumptions(market)
    check_measurability(market.space, C, ADAPTED)
    if any(v != 0 for v in C.values[:, 0]):
        raise DomainError("annuity accumulation must start at 0")
    dC = increments(C)
    for t in range(1, C.values.shape[1]):
        if any(v < 0 for v in dC[:, t]):
            raise DomainError("annuity accumulation must be nondecreasing")
    sub = truncate_market(market, T)
    space, bundle = sub.space, sub.bundle
    C_sub = restrict_process(C, T)
    cT = C_sub.values[:, -1]

    dDo = increments_from_zero(bundle.Do)
    c_tilde_T = (C_sub.values * dDo).sum(axis=1)
    U_ct = _closed_f_martingale(space, c_tilde_T)

    split = endowment_strategy_split(market, cT, T)
    res_ct = gkw(space, U_ct, sub.S, check=False)
    _, phi_m, _ = mortality_drift_gkw(sub)

    n, Tn = space.n_paths, space.horizon
    alive = bundle.alive_matrix()
    xi_F = split["xi_F_assembled"].values + res_ct.theta1.values
    xi_vals = nm.zeros((n, Tn + 1), space.exact)
    for t in range(1, Tn + 1):
        den = bundle.G.values[:, t - 1] + phi_m.values[:, t]
        xi_vals[:, t] = np.where(alive[:, t], nm.div0(xi_F[:, t], den), space.zero())

    direct = risk_minimize(market, C, T=T, h_surv=cT)
    return {
        "xi_CT_F": split["xi_g_F"],
        "xi_GT_F": split["xi_GT_F"],
        "xi_Cor_F": split["xi_Cor_F"],
        "xi_Ctilde_F": res_ct.theta1,
        "L_Ctilde_F": res_ct.residual,
        "C_tilde_T": c_tilde_T,
        "xi_F_assembled": ProcessPath(values=xi_F, klass=PREDICTABLE),
        "xi_G_assembled": ProcessPath(values=xi_vals, klass=PREDICTABLE),
        "direct": direct,
        "xi_F_gap": nm.max_abs(xi_F - restrict_process(direct.xi_F, Tn).values),
        "xi_G_gap": nm.max_abs(xi_vals - direct.extras["xi_sub"].values),
    }
