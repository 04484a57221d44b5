"""Optional martingale representation: decompose payoffs at the random time
and arbitrary G-martingales stopped there into financial, correlation, and
pure-mortality components, classify pure mortality martingales, and decide
whether Nbar^G is one of them.

A payoff is a pair (h, h_inf): h pays h_tau at death within the horizon,
h_inf (an F_T-measurable vector, optional) pays at the horizon on survival.
Internally this is the extended-grid construction: survival is a certain
death one step past the horizon, which is what makes every formula exact for
claims like pure endowments whose payoff lives on {tau > T}.

Second-type components are raw value-at-death marks k with zero F_tau-cell
averages; genuine G-adapted martingales always produce k = 0 (in discrete
time the sigma-field at tau generated by G-optional processes collapses onto
the one generated by F-optional processes), so mark-augmented inputs are the
only source of nonzero pure2 parts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _numeric as nm
from .enlargement import (
    F_TAU,
    F_TAU_MINUS,
    EnlargementBundle,
    cond_expect_at_tau,
    hat_transform,
    mu_cond_expect,
    value_at_tau,
)
from .errors import MeasurabilityError, NotMartingale
from .projections import OPTIONAL
from .space import (
    ADAPTED,
    INF,
    RAW,
    FiniteFilteredSpace,
    MartingaleReport,
    ProcessPath,
    check_measurability,
    cond_expect_atoms,
    cumulate,
    increments,
    increments_from_zero,
    is_martingale,
    process,
    stop,
)


@dataclass(frozen=True)
class OptionalRepresentation:
    """H - H_0 = financial + correlation + pure1 + pure2 (+ residual = 0)."""

    H: ProcessPath
    Mh: ProcessPath
    financial: ProcessPath
    correlation: ProcessPath
    pure1: ProcessPath
    pure2: ProcessPath
    residual: ProcessPath
    h: ProcessPath
    h_inf: np.ndarray | None
    k: np.ndarray
    Y: ProcessPath
    J: ProcessPath
    phi_o: ProcessPath
    Mf: ProcessPath

    @property
    def phi_pr(self) -> np.ndarray:
        return self.k

    def max_residual(self):
        return nm.max_abs(self.residual.values)


def claim_terminal(bundle: EnlargementBundle, h: ProcessPath, h_inf=None, k=None) -> np.ndarray:
    """Terminal value h_tau I_{tau<=T} + h_inf I_{tau=inf} (+ mark k at death)."""
    space = bundle.space
    zeta = nm.zeros(space.n_paths, space.exact)
    for i, t in enumerate(bundle.tau.times):
        if t == INF:
            if h_inf is not None:
                zeta[i] = h_inf[i]
        else:
            zeta[i] = h.values[i, int(t)]
            if k is not None and t >= 1:
                zeta[i] = zeta[i] + k[i]
    return zeta


def closed_g_martingale(bundle: EnlargementBundle, zeta: np.ndarray) -> ProcessPath:
    """The G-martingale closed by a terminal value: H_t = E[zeta | G_t]."""
    space = bundle.space
    out = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
    for t in range(space.horizon + 1):
        out[:, t] = cond_expect_atoms(space, zeta, bundle.g_partitions[t])
    return ProcessPath(values=out, klass=RAW)


def payoff_mass_martingale(
    bundle: EnlargementBundle, h: ProcessPath, h_inf=None
) -> tuple[np.ndarray, ProcessPath]:
    """Total mass A = int h dD^o (+ h_inf G_T survival mass) and M^h = E[A|F_t]."""
    space = bundle.space
    dDo = increments_from_zero(bundle.Do)
    A = (h.values * dDo).sum(axis=1)
    if h_inf is not None:
        A = A + h_inf * bundle.G.values[:, -1]
    vals = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
    for t in range(space.horizon + 1):
        vals[:, t] = cond_expect_atoms(space, A, space.partitions[t])
    return A, ProcessPath(values=vals, klass=ADAPTED)


def _k_process(bundle: EnlargementBundle) -> ProcessPath:
    """K = G + (G_{R-} + I_{G_{R-}=0}) I_[R,inf): the strictly positive
    substitute denominator from the J^h construction."""
    space = bundle.space
    n, T = space.n_paths, space.horizon
    vals = bundle.G.values.copy()
    one = space.one()
    for i, r in enumerate(bundle.R.times):
        if r == INF:
            continue
        r = int(r)
        g_rm = bundle.G.values[i, r - 1] if r >= 1 else bundle.G.values[i, 0]
        bump = g_rm if g_rm > 0 else one
        for t in range(r, T + 1):
            vals[i, t] = vals[i, t] + bump
    return ProcessPath(values=vals, klass=ADAPTED)


def _assemble(
    bundle: EnlargementBundle,
    h: ProcessPath,
    h_inf,
    k,
    target: ProcessPath | None = None,
) -> OptionalRepresentation:
    space = bundle.space
    n, T = space.n_paths, space.horizon
    check_measurability(space, h, ADAPTED)
    if h_inf is not None:
        h_inf = h_inf if isinstance(h_inf, np.ndarray) else space.vector(h_inf)
        for atom in space.partitions[T]:
            ref = h_inf[atom[0]]
            for i in atom[1:]:
                if abs(h_inf[i] - ref) > space.tol:
                    raise MeasurabilityError("h_inf must be F_T-measurable")
    if k is None:
        k = nm.zeros(n, space.exact)

    zeta = claim_terminal(bundle, h, h_inf, k)
    H = closed_g_martingale(bundle, zeta) if target is None else target
    _, Mh = payoff_mass_martingale(bundle, h, h_inf)

    dDo = increments_from_zero(bundle.Do)
    h_mass = cumulate(space, h.values * dDo)
    Y = ProcessPath(values=Mh.values - h_mass, klass=ADAPTED)
    K = _k_process(bundle)
    J_vals = nm.div0(Y.values, K.values)
    J = ProcessPath(values=J_vals, klass=ADAPTED)

    Mh_hat = hat_transform(bundle, Mh, check=False)
    m_hat = hat_transform(bundle, bundle.m, check=False)
    dMh_hat = increments(Mh_hat)
    dm_hat = increments(m_hat)
    dNG = increments(bundle.NG)
    alive = bundle.alive_matrix()
    r_arr = bundle.R.array()
    tau_arr = bundle.tau.array()

    fin = nm.zeros((n, T + 1), space.exact)
    corr = nm.zeros((n, T + 1), space.exact)
    pure1 = nm.zeros((n, T + 1), space.exact)
    pure2 = nm.zeros((n, T + 1), space.exact)
    for t in range(1, T + 1):
        g_prev = bundle.G.values[:, t - 1]
        fin[:, t] = np.where(alive[:, t], nm.div0(dMh_hat[:, t], g_prev), space.zero())
        corr[:, t] = np.where(
            alive[:, t],
            -nm.div0(Y.values[:, t - 1] * dm_hat[:, t], g_prev * g_prev),
            space.zero(),
        )
        before_r = np.array([t < r_arr[i] for i in range(n)])
        integrand = h.values[:, t] - J.values[:, t]
        pure1[:, t] = np.where(before_r, integrand * dNG[:, t], space.zero())
        pure2[:, t] = np.where(tau_arr == t, k, space.zero())

    financial = ProcessPath(values=cumulate(space, fin), klass=RAW)
    correlation = ProcessPath(values=cumulate(space, corr), klass=RAW)
    p1 = ProcessPath(values=cumulate(space, pure1), klass=RAW)
    p2 = ProcessPath(values=cumulate(space, pure2), klass=RAW)
    resid_vals = (
        H.values
        - H.values[:, [0]]
        - financial.values
        - correlation.values
        - p1.values
        - p2.values
    )
    residual = ProcessPath(values=resid_vals, klass=RAW)

    phi_o_vals = nm.zeros((n, T + 1), space.exact)
    for t in range(T + 1):
        before_r = np.array([t < r_arr[i] for i in range(n)])
        phi_o_vals[:, t] = np.where(before_r, h.values[:, t] - J.values[:, t], space.zero())
    phi_o = ProcessPath(values=phi_o_vals, klass=ADAPTED)

    # canonical F-martingale of the general decomposition:
    # M^F = G_- . M^h - Y_- . m  (both integrands predictable)
    dMh = increments(Mh)
    dm = increments(bundle.m)
    mf = nm.zeros((n, T + 1), space.exact)
    for t in range(1, T + 1):
        mf[:, t] = bundle.G.values[:, t - 1] * dMh[:, t] - Y.values[:, t - 1] * dm[:, t]
    Mf = ProcessPath(values=cumulate(space, mf), klass=ADAPTED)

    return OptionalRepresentation(
        H=H,
        Mh=Mh,
        financial=financial,
        correlation=correlation,
        pure1=p1,
        pure2=p2,
        residual=residual,
        h=h,
        h_inf=h_inf,
        k=k,
        Y=Y,
        J=J,
        phi_o=phi_o,
        Mf=Mf,
    )


def represent_optional_payoff(
    bundle: EnlargementBundle, h: ProcessPath, h_inf=None
) -> OptionalRepresentation:
    """Decompose H_t = E[h_tau | G_t] per the three-term optional
    representation; the pure second-type part is zero for payoff claims."""
    return _assemble(bundle, h, h_inf, k=None)


def g_increment_martingale_check(
    bundle: EnlargementBundle, MG: ProcessPath, tol=None
) -> MartingaleReport:
    return is_martingale(bundle.space, MG, partitions=bundle.g_partitions, tol=tol)


def represent_g_martingale(
    bundle: EnlargementBundle, MG: ProcessPath, check: bool = True
) -> OptionalRepresentation:
    """Decompose an arbitrary G-martingale stopped at tau.

    MG must satisfy the G-increment martingale property; it may carry raw
    marks on the death graph (the mark-augmented class), which is where
    nonzero second-type parts k come from.  The terminal value on survival
    atoms must be G_T-measurable.
    """
    space = bundle.space
    if check:
        rep = g_increment_martingale_check(bundle, MG)
        if not rep.ok:
            raise NotMartingale(
                f"input violates the G-martingale property by {rep.max_violation} at {rep.location}"
            )
    stopped = stop(space, MG, bundle.tau)
    zeta = stopped.values[:, -1].copy()
    T = space.horizon
    # the value on {tau = inf} must not carry marks: check G_T-measurability there
    h_inf = nm.zeros(space.n_paths, space.exact)
    for atom in space.partitions[T]:
        alive = [i for i in atom if bundle.tau.times[i] == INF]
        if not alive:
            continue
        ref = zeta[alive[0]]
        for i in alive[1:]:
            if abs(zeta[i] - ref) > space.tol:
                raise MeasurabilityError(
                    "terminal value on survival atoms must be G_T-measurable"
                )
        for i in atom:
            h_inf[i] = ref
    h = mu_cond_expect(space, bundle.tau, zeta, OPTIONAL)
    h_at_tau = value_at_tau(bundle.tau, h)
    k = nm.zeros(space.n_paths, space.exact)
    for i, t in enumerate(bundle.tau.times):
        if t != INF:
            k[i] = zeta[i] - h_at_tau[i]
    rep = _assemble(bundle, h, h_inf, k, target=stopped)
    return rep


def basis_f_martingales(space: FiniteFilteredSpace):
    """Compensated atom indicators: for every t >= 1 and F_t-atom A, the
    martingale with single increment I_A - P(A | F_{t-1}) at time t.  Their
    increments span all F-martingale increments on a finite space."""
    n, T = space.n_paths, space.horizon
    one = space.one()
    for t in range(1, T + 1):
        for atom in space.partitions[t]:
            ind = nm.zeros(n, space.exact)
            for i in atom:
                ind[i] = one
            comp = cond_expect_atoms(space, ind, space.partitions[t - 1])
            vals = nm.zeros((n, T + 1), space.exact)
            for s in range(t, T + 1):
                vals[:, s] = ind - comp
            yield (t, atom, ProcessPath(values=vals, klass=ADAPTED))


def _orthogonal_to_f_martingale(
    bundle: EnlargementBundle, X: ProcessPath, M: ProcessPath, tol
) -> bool:
    """Whether [X, M] passes the G-martingale increment check."""
    space = bundle.space
    prod = increments(X) * increments(M)
    brack = ProcessPath(values=cumulate(space, prod), klass=RAW)
    return is_martingale(space, brack, partitions=bundle.g_partitions, tol=tol).ok


@dataclass(frozen=True)
class PurityVerdict:
    pure: bool
    xi_o: ProcessPath | None
    xi_pr: np.ndarray | None
    witness: tuple | None  # (t, atom, martingale) failing orthogonality
    representation: OptionalRepresentation


def classify_pure_mortality(bundle: EnlargementBundle, N: ProcessPath, check: bool = True) -> PurityVerdict:
    """Decide whether N (stopped at tau internally) is a pure mortality
    martingale; if so return the unique pair (xi_o, xi_pr), otherwise a
    witness F-martingale whose covariation with N fails to be a G-martingale.
    """
    space = bundle.space
    stopped = stop(space, N, bundle.tau)
    rep = represent_g_martingale(bundle, stopped, check=check)
    hat_part = rep.financial.values + rep.correlation.values
    pure = nm.max_abs(hat_part) <= space.tol
    if pure:
        return PurityVerdict(pure=True, xi_o=rep.phi_o, xi_pr=rep.k, witness=None, representation=rep)
    witness = None
    for t, atom, M in basis_f_martingales(space):
        if not _orthogonal_to_f_martingale(bundle, stopped, M, space.tol):
            witness = (t, atom, M)
            break
    return PurityVerdict(pure=False, xi_o=None, xi_pr=None, witness=witness, representation=rep)


@dataclass(frozen=True)
class NbarReport:
    nbar_is_pure: bool
    nbar_equals_ng: bool
    condition_c: bool
    grid_condition: tuple[bool, ...]
    witness: dict | None

    @property
    def consistent(self) -> bool:
        all_grid = all(self.grid_condition)
        return (
            self.nbar_is_pure == self.nbar_equals_ng == self.condition_c == all_grid
        )


def nbar_report(bundle: EnlargementBundle) -> NbarReport:
    """The Nbar^G trichotomy: purity, coincidence with N^G, and the
    indistinguishability of ^p(G) G~ and G_- G, plus the per-time grid
    criterion (the discrete-market specialization of the predictable-support
    condition).  All evaluated on increments t >= 1."""
    space = bundle.space
    n, T = space.n_paths, space.horizon
    tol = space.tol

    dng = increments(bundle.NG)
    dnb = increments(bundle.NGbar)
    equals = nm.max_abs(dnb[:, 1:] - dng[:, 1:]) <= tol

    cond_c = True
    witness = None
    grid = []
    dDo = increments(bundle.Do)
    dDp = increments(bundle.Dp)
    for t in range(1, T + 1):
        pG = cond_expect_atoms(space, bundle.G.values[:, t], space.partitions[t - 1])
        lhs = pG * bundle.Gtilde.values[:, t]
        rhs = bundle.G.values[:, t - 1] * bundle.G.values[:, t]
        ok_c = nm.max_abs(lhs - rhs) <= tol
        if not ok_c and witness is None:
            witness = {
                "t": t,
                "proj_G_times_Gtilde": [nm.number_to_str(v) for v in lhs],
                "Gminus_times_G": [nm.number_to_str(v) for v in rhs],
            }
        cond_c = cond_c and ok_c
        g_lhs = dDo[:, t] * bundle.G.values[:, t - 1]
        g_rhs = dDp[:, t] * bundle.Gtilde.values[:, t]
        grid.append(bool(nm.max_abs(g_lhs - g_rhs) <= tol))

    is_pure = True
    for _t, _atom, M in basis_f_martingales(space):
        if not _orthogonal_to_f_martingale(bundle, bundle.NGbar, M, tol):
            is_pure = False
            break
    return NbarReport(
        nbar_is_pure=is_pure,
        nbar_equals_ng=equals,
        condition_c=cond_c,
        grid_condition=tuple(grid),
        witness=witness,
    )


def jeulin_class_check(bundle: EnlargementBundle, k) -> dict:
    """Membership of a value-at-death mark in the second-type class
    (E[k|F_tau] = 0) and Jeulin's larger third-type class (E[k|F_tau-] = 0).
    Second type always implies third type."""
    space = bundle.space
    k = k if isinstance(k, np.ndarray) else space.vector(k)
    second = nm.max_abs(cond_expect_at_tau(space, bundle.tau, k, F_TAU)) <= space.tol
    third = nm.max_abs(cond_expect_at_tau(space, bundle.tau, k, F_TAU_MINUS)) <= space.tol
    return {"second_type": bool(second), "third_type": bool(third)}
