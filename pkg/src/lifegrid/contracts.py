"""The four insurance payoffs and their price-process decompositions under a
risk-neutral measure: pure endowment, term insurance, endowment insurance,
and the zero-coupon longevity bond.

Prices are in discounted units (the numeraire is 1 on the grid) and every
price process is the closed G-martingale of its payoff, so decomposition
residuals vanish identically.  The longevity bond carries the value-at-death
ratio xi_G = d(G_T I_[tau,inf))^o / dD^o; on discrete progressive
enlargements its second-type jump term E[G_T|G_tau] - xi_G(tau) vanishes
identically because the sigma-field at tau collapses onto F_tau.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _numeric as nm
from .enlargement import (
    F_TAU,
    G_TAU,
    EnlargementBundle,
    cond_expect_at_tau,
    value_at_tau,
)
from .errors import MeasurabilityError, TermOutOfRange
from .projections import OPTIONAL, dual_projection
from .representation import (
    OptionalRepresentation,
    closed_g_martingale,
    represent_optional_payoff,
)
from .space import (
    ADAPTED,
    INF,
    RAW,
    ProcessPath,
    check_measurability,
    cond_expect_atoms,
    increments_from_zero,
)

PURE_ENDOWMENT = "pure_endowment"
TERM_INSURANCE = "term_insurance"
ENDOWMENT = "endowment"
LONGEVITY_BOND = "longevity_bond"

KINDS = (PURE_ENDOWMENT, TERM_INSURANCE, ENDOWMENT, LONGEVITY_BOND)


@dataclass(frozen=True)
class ContractSpec:
    kind: str
    T: int
    g: np.ndarray | None = None  # F_T-measurable benefit (pure endowment / endowment)
    K: ProcessPath | None = None  # adapted benefit process (term insurance / endowment)


@dataclass(frozen=True)
class PriceDecomposition:
    spec: ContractSpec
    price: ProcessPath  # E[payoff | G_t]; for the bond this is B^tau
    representation: OptionalRepresentation
    parts: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def residual(self) -> ProcessPath:
        return self.representation.residual

    def max_residual(self):
        return self.representation.max_residual()


def _validate(bundle: EnlargementBundle, spec: ContractSpec) -> None:
    space = bundle.space
    if not 0 <= spec.T <= space.horizon:
        raise TermOutOfRange(f"term {spec.T} outside grid 0..{space.horizon}")
    if spec.kind not in KINDS:
        raise TermOutOfRange(f"unknown contract kind {spec.kind!r}")
    if spec.kind in (PURE_ENDOWMENT, ENDOWMENT):
        if spec.g is None:
            raise MeasurabilityError("benefit g required")
        for atom in space.partitions[spec.T]:
            ref = spec.g[atom[0]]
            for i in atom[1:]:
                if abs(spec.g[i] - ref) > space.tol:
                    raise MeasurabilityError("g must be F_T-measurable")
    if spec.kind in (TERM_INSURANCE, ENDOWMENT):
        if spec.K is None:
            raise MeasurabilityError("benefit process K required")
        check_measurability(space, spec.K, ADAPTED)


def xi_g_process(bundle: EnlargementBundle, T: int) -> tuple[ProcessPath, ProcessPath]:
    """The ratio xi_G = d(G_T I_[tau,inf))^{o,F} / dD^{o,F} (0/0 -> 0), and
    the dual optional projection Dbar^o it comes from."""
    space = bundle.space
    n, TT = space.n_paths, space.horizon
    gT = bundle.G.values[:, T]
    dbar = nm.zeros((n, TT + 1), space.exact)
    for i, t in enumerate(bundle.tau.times):
        if t == INF:
            continue
        for s in range(int(t), TT + 1):
            dbar[i, s] = gT[i]
    Dbar = ProcessPath(values=dbar, klass=RAW)
    Dbar_o = dual_projection(space, Dbar, OPTIONAL)
    num = increments_from_zero(Dbar_o)
    den = increments_from_zero(bundle.Do)
    xi = ProcessPath(values=nm.div0(num, den), klass=ADAPTED)
    return xi, Dbar_o


def contract_payoff(bundle: EnlargementBundle, spec: ContractSpec):
    """Map a contract to its (h, h_inf) payoff pair and terminal value."""
    space = bundle.space
    n, TT = space.n_paths, space.horizon
    zeros = nm.zeros((n, TT + 1), space.exact)
    h_vals = zeros.copy()
    h_inf = None
    if spec.kind in (TERM_INSURANCE, ENDOWMENT):
        for t in range(spec.T + 1):
            h_vals[:, t] = spec.K.values[:, t]
    if spec.kind in (PURE_ENDOWMENT, ENDOWMENT):
        for t in range(spec.T + 1, TT + 1):
            h_vals[:, t] = spec.g
        h_inf = spec.g
    if spec.kind == LONGEVITY_BOND:
        xi, _ = xi_g_process(bundle, spec.T)
        gT = bundle.G.values[:, spec.T]
        for t in range(TT + 1):
            h_vals[:, t] = xi.values[:, t] if t <= spec.T else gT
        h_inf = gT
    return ProcessPath(values=h_vals, klass=ADAPTED), h_inf


def payment_process(bundle: EnlargementBundle, spec: ContractSpec) -> ProcessPath:
    """Cumulative payments A_t of the contract (death benefits at death,
    survival benefits at the term)."""
    space = bundle.space
    n, TT = space.n_paths, space.horizon
    A = nm.zeros((n, TT + 1), space.exact)
    tau = bundle.tau.times
    if spec.kind in (TERM_INSURANCE, ENDOWMENT):
        for i, t in enumerate(tau):
            if t != INF and t <= spec.T:
                for s in range(int(t), TT + 1):
                    A[i, s] = A[i, s] + spec.K.values[i, int(t)]
    if spec.kind in (PURE_ENDOWMENT, ENDOWMENT):
        for i, t in enumerate(tau):
            if t == INF or t > spec.T:
                for s in range(spec.T, TT + 1):
                    A[i, s] = A[i, s] + spec.g[i]
    if spec.kind == LONGEVITY_BOND:
        gT = bundle.G.values[:, spec.T]
        for i in range(n):
            for s in range(spec.T, TT + 1):
                A[i, s] = A[i, s] + gT[i]
    return ProcessPath(values=A, klass=RAW)


def bond_price(bundle: EnlargementBundle, T: int) -> ProcessPath:
    """Pre-death longevity bond price B_t = E[G_T | G_t] on the full grid."""
    return closed_g_martingale(bundle, bundle.G.values[:, T])


def price(bundle: EnlargementBundle, spec: ContractSpec) -> PriceDecomposition:
    """Price process E[payoff | G_t] with its optional-representation parts.

    Pure endowment and endowment use M^(g) = E[g G_T | F_t]; term insurance
    uses M^(K) = E[int_0^T K dD^o | F_t] and Y^(K) = M^(K) - K . D^o; the
    longevity bond is decomposed as B^tau with the xi_G value at death (its
    second-type term is identically zero here and kept in the extras).
    """
    _validate(bundle, spec)
    h, h_inf = contract_payoff(bundle, spec)
    rep = represent_optional_payoff(bundle, h, h_inf)
    parts = {
        "financial": rep.financial,
        "correlation": rep.correlation,
        "pure_mortality_1": rep.pure1,
        "pure_mortality_2": rep.pure2,
    }
    extras: dict = {"Mh": rep.Mh, "Y": rep.Y}
    if spec.kind == LONGEVITY_BOND:
        xi, dbar_o = xi_g_process(bundle, spec.T)
        risk, vanishes = second_type_risk(bundle, spec.T)
        extras.update(
            {
                "xi_G": xi,
                "Dbar_o": dbar_o,
                "B": bond_price(bundle, spec.T),
                "second_type_risk": risk,
                "second_type_vanishes": vanishes,
            }
        )
    return PriceDecomposition(spec=spec, price=rep.H, representation=rep, parts=parts, extras=extras)


def second_type_risk(bundle: EnlargementBundle, T: int) -> tuple[ProcessPath, bool]:
    """The longevity bond's second-type jump (E[G_T|G_tau] - xi_G(tau)) I_[tau,inf)
    and whether it vanishes, i.e. whether E[G_T|G_tau] = E[G_T|F_tau] on
    {tau < T}.  On these spaces it always does (G_tau = F_tau cellwise)."""
    space = bundle.space
    n, TT = space.n_paths, space.horizon
    gT = bundle.G.values[:, T]
    e_g = cond_expect_at_tau(space, bundle.tau, gT, G_TAU)
    e_f = cond_expect_at_tau(space, bundle.tau, gT, F_TAU)
    xi, _ = xi_g_process(bundle, T)
    xi_at_tau = value_at_tau(bundle.tau, xi)
    vals = nm.zeros((n, TT + 1), space.exact)
    for i, t in enumerate(bundle.tau.times):
        if t == INF:
            continue
        jump = e_g[i] - xi_at_tau[i]
        for s in range(int(t), TT + 1):
            vals[i, s] = jump
    vanish = True
    for i, t in enumerate(bundle.tau.times):
        if t != INF and t < T and abs(e_g[i] - e_f[i]) > space.tol:
            vanish = False
    return ProcessPath(values=vals, klass=RAW), vanish


def xi_g_duality_gap(bundle: EnlargementBundle, T: int, O: ProcessPath):
    """Defect of the defining duality E[G_T I_O(tau) I_{tau<inf}] =
    E[I_O(tau) xi_G(tau) I_{tau<inf}] for an adapted indicator process O."""
    space = bundle.space
    xi, _ = xi_g_process(bundle, T)
    gT = bundle.G.values[:, T]
    o_at = value_at_tau(bundle.tau, O)
    xi_at = value_at_tau(bundle.tau, xi)
    lhs = space.zero()
    rhs = space.zero()
    for i, t in enumerate(bundle.tau.times):
        if t == INF:
            continue
        lhs = lhs + space.weights[i] * gT[i] * o_at[i]
        rhs = rhs + space.weights[i] * xi_at[i] * o_at[i]
    return lhs - rhs


def contract_from_dict(bundle: EnlargementBundle, doc: dict) -> ContractSpec:
    """Parse a contract from a scenario config entry."""
    space = bundle.space
    kind = doc.get("kind")
    if kind not in KINDS:
        raise TermOutOfRange(f"unknown contract kind {kind!r}")
    T = int(doc.get("T", space.horizon))
    g = None
    K = None
    if "g" in doc:
        raw = doc["g"]
        if isinstance(raw, (list, tuple)):
            g = space.vector(raw)
        else:
            g = space.vector([raw] * space.n_paths)
    if "K" in doc:
        raw = doc["K"]
        if isinstance(raw, (list, tuple)) and raw and isinstance(raw[0], (list, tuple)):
            K = ProcessPath(values=nm.as_matrix(raw, space.exact), klass=ADAPTED)
        else:
            vals = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
            row = space.vector(raw if isinstance(raw, (list, tuple)) else [raw] * (space.horizon + 1))
            for t in range(space.horizon + 1):
                vals[:, t] = row[t] if len(row) == space.horizon + 1 else row[0]
            K = ProcessPath(values=vals, klass=ADAPTED)
    return ContractSpec(kind=kind, T=T, g=g, K=K)


def price_table_rows(decomp: PriceDecomposition) -> list[dict]:
    rows = []
    price_vals = decomp.price.values
    for i in range(price_vals.shape[0]):
        for t in range(price_vals.shape[1]):
            row = {
                "path": i,
                "time": t,
                "value": nm.number_to_str(price_vals[i, t]),
            }
            for name, proc in decomp.parts.items():
                row[name] = nm.number_to_str(proc.values[i, t])
            rows.append(row)
    return rows
