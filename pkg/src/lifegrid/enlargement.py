"""Progressive enlargement of a finite filtration by a random time.

Everything attached to the pair (F, tau) lives here: the enlarged partitions
G_t (F_t refined by {tau=0},...,{tau=t},{tau>t}), the Azema supermartingales
G and G~, the martingale m = G + D^o, the mortality martingales N^G and
Nbar^G, the hat and bar transforms of F-martingales, sigma-fields at tau and
mu = P (x) dD conditional expectations, and the G-compensator formulas.

Time-0 handling: dual projections carry the projected jump at 0, N^G
compensates its time-0 jump (the defining integral runs over [0,tau]) while
Nbar^G does not (its integral runs over (0,tau]).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import _numeric as nm
from .errors import DomainError, MeasurabilityError, NotMartingale
from .projections import OPTIONAL, PREDICTABLE_KLASS, dual_projection, projection
from .space import (
    ADAPTED,
    INF,
    PREDICTABLE,
    RAW,
    FiniteFilteredSpace,
    Partitions,
    ProcessPath,
    RandomTime,
    check_measurability,
    cond_expect_atoms,
    cumulate,
    increments,
    is_martingale,
    process,
)

F_TAU = "F_tau"
F_TAU_MINUS = "F_tau_minus"
G_TAU = "G_tau"
PROGRESSIVE = "progressive"


@dataclass(frozen=True)
class EnlargementBundle:
    """Derived objects of the progressive enlargement of (space, tau)."""

    space: FiniteFilteredSpace
    tau: RandomTime
    g_partitions: Partitions
    D: ProcessPath
    G: ProcessPath
    Gtilde: ProcessPath
    m: ProcessPath
    Do: ProcessPath
    Dp: ProcessPath
    NG: ProcessPath
    NGbar: ProcessPath
    R: RandomTime
    Rtilde: RandomTime

    @property
    def horizon(self) -> int:
        return self.space.horizon

    def alive(self, t: int) -> np.ndarray:
        """Indicator of {t <= tau} as a boolean vector."""
        return self.tau.ge(t)

    def alive_matrix(self) -> np.ndarray:
        arr = self.tau.array()
        return np.array([[t <= arr[i] for t in range(self.horizon + 1)] for i in range(len(arr))])


def enlarged_partitions(space: FiniteFilteredSpace, tau: RandomTime) -> Partitions:
    """G_t-atoms: F_t-atoms refined by the death history {tau=0},..,{tau=t},{tau>t}."""
    parts = []
    for t in range(space.horizon + 1):
        atoms = []
        for atom in space.partitions[t]:
            groups: dict = {}
            for i in atom:
                v = tau.times[i]
                key = v if v <= t else INF
                groups.setdefault(key, []).append(i)
            atoms.extend(tuple(g) for g in groups.values())
        parts.append(tuple(sorted(atoms)))
    return tuple(parts)


def enlarge(space: FiniteFilteredSpace, tau: RandomTime) -> EnlargementBundle:
    """Build the full enlargement bundle for (space, tau)."""
    n, T = space.n_paths, space.horizon
    arr = tau.array()
    death = nm.zeros((n, T + 1), space.exact)
    surv_strict = nm.zeros((n, T + 1), space.exact)
    surv_weak = nm.zeros((n, T + 1), space.exact)
    one = space.one()
    for i in range(n):
        for t in range(T + 1):
            if arr[i] <= t:
                death[i, t] = one
            if arr[i] > t:
                surv_strict[i, t] = one
            if arr[i] >= t:
                surv_weak[i, t] = one
    D = ProcessPath(values=death, klass=RAW)
    G = projection(space, ProcessPath(values=surv_strict, klass=RAW), OPTIONAL)
    Gt = projection(space, ProcessPath(values=surv_weak, klass=RAW), OPTIONAL)
    Do = dual_projection(space, D, OPTIONAL)
    Dp = dual_projection(space, D, PREDICTABLE_KLASS)
    m = ProcessPath(values=G.values + Do.values, klass=ADAPTED)

    dD = increments(D)
    dD[:, 0] = death[:, 0]
    dDo = increments(Do)
    dDo[:, 0] = Do.values[:, 0]
    dDp = increments(Dp)

    alive = np.array([[t <= arr[i] for t in range(T + 1)] for i in range(n)])
    ng = nm.zeros((n, T + 1), space.exact)
    nbar = nm.zeros((n, T + 1), space.exact)
    # time 0: N^G compensates the jump ([0,tau] includes 0, G~_0 = 1), Nbar does not
    ng[:, 0] = death[:, 0] - dDo[:, 0]
    nbar[:, 0] = death[:, 0]
    for t in range(1, T + 1):
        num_o = np.where(alive[:, t], dDo[:, t], space.zero())
        ng[:, t] = dD[:, t] - nm.div0(num_o, Gt.values[:, t])
        num_p = np.where(alive[:, t], dDp[:, t], space.zero())
        nbar[:, t] = dD[:, t] - nm.div0(num_p, G.values[:, t - 1])
    NG = ProcessPath(values=cumulate(space, ng), klass=RAW)
    NGbar = ProcessPath(values=cumulate(space, nbar), klass=RAW)

    r_times = []
    rt_times = []
    for i in range(n):
        r = next((t for t in range(T + 1) if G.values[i, t] == 0), INF)
        r_times.append(r)
        if r != INF and r >= 1 and Gt.values[i, r] == 0 and G.values[i, r - 1] > 0:
            rt_times.append(r)
        else:
            rt_times.append(INF)
    return EnlargementBundle(
        space=space,
        tau=tau,
        g_partitions=enlarged_partitions(space, tau),
        D=D,
        G=G,
        Gtilde=Gt,
        m=m,
        Do=Do,
        Dp=Dp,
        NG=NG,
        NGbar=NGbar,
        R=RandomTime(times=tuple(r_times)),
        Rtilde=RandomTime(times=tuple(rt_times)),
    )


def n_martingale(bundle: EnlargementBundle) -> ProcessPath:
    return bundle.NG


def nbar_martingale(bundle: EnlargementBundle) -> ProcessPath:
    return bundle.NGbar


def rtilde_jump_compensation(bundle: EnlargementBundle, M: ProcessPath) -> np.ndarray:
    """Predictable increments E[dM_t I_{Rtilde = t} | F_{t-1}] for t >= 1."""
    space = bundle.space
    n, T = space.n_paths, space.horizon
    dM = increments(M)
    rt = bundle.Rtilde.array()
    out = nm.zeros((n, T + 1), space.exact)
    for t in range(1, T + 1):
        hit = np.where(rt == t, dM[:, t], space.zero())
        out[:, t] = cond_expect_atoms(space, hit, space.partitions[t - 1])
    return out


def hat_transform(bundle: EnlargementBundle, M: ProcessPath, check: bool = True) -> ProcessPath:
    """The canonical G-martingale M^ attached to an F-martingale M:
    dM^_t = I_{t<=tau} (dM_t - dM_t dm_t / G~_t + E[dM_{R~} I_{R~=t}|F_{t-1}])."""
    space = bundle.space
    if check:
        rep = is_martingale(space, M)
        if not rep.ok:
            raise NotMartingale(f"hat_transform input off by {rep.max_violation} at {rep.location}")
    n, T = space.n_paths, space.horizon
    dM = increments(M)
    dm = increments(bundle.m)
    comp = rtilde_jump_compensation(bundle, M)
    alive = bundle.alive_matrix()
    out = nm.zeros((n, T + 1), space.exact)
    out[:, 0] = M.values[:, 0]
    for t in range(1, T + 1):
        corr = nm.div0(dM[:, t] * dm[:, t], bundle.Gtilde.values[:, t])
        step = dM[:, t] - corr + comp[:, t]
        out[:, t] = np.where(alive[:, t], step, space.zero())
    return ProcessPath(values=cumulate(space, out), klass=RAW)


def bar_transform(bundle: EnlargementBundle, M: ProcessPath, check: bool = True) -> ProcessPath:
    """Mbar = M^tau - (1/G_-) I_{(0,tau]} . <M, m>."""
    space = bundle.space
    if check:
        rep = is_martingale(space, M)
        if not rep.ok:
            raise NotMartingale(f"bar_transform input off by {rep.max_violation} at {rep.location}")
    n, T = space.n_paths, space.horizon
    dM = increments(M)
    dm = increments(bundle.m)
    alive = bundle.alive_matrix()
    out = nm.zeros((n, T + 1), space.exact)
    out[:, 0] = M.values[:, 0]
    for t in range(1, T + 1):
        dbr = cond_expect_atoms(space, dM[:, t] * dm[:, t], space.partitions[t - 1])
        step = dM[:, t] - nm.div0(dbr, bundle.G.values[:, t - 1])
        out[:, t] = np.where(alive[:, t], step, space.zero())
    return ProcessPath(values=cumulate(space, out), klass=RAW)


def value_at_tau(tau: RandomTime, X) -> np.ndarray:
    """X_tau per path on {tau < inf}; 0 elsewhere.  X may be a process or a
    raw per-path vector (already a value at tau)."""
    if isinstance(X, ProcessPath):
        n = X.values.shape[0]
        out = np.empty(n, dtype=X.values.dtype)
        for i, t in enumerate(tau.times):
            out[i] = X.values[i, int(t)] if t != INF else X.values[i, 0] - X.values[i, 0]
        return out
    X = np.asarray(X)
    out = X.copy()
    for i, t in enumerate(tau.times):
        if t == INF:
            out[i] = X[i] - X[i]
    return out


def graph_cells(space: FiniteFilteredSpace, tau: RandomTime, klass: str, g_partitions: Partitions | None = None):
    """Cells of the sigma-field at tau on {tau < inf}, keyed by (t, atom)."""
    cells = []
    for t in range(space.horizon + 1):
        if klass == F_TAU:
            atoms = space.partitions[t]
        elif klass == F_TAU_MINUS:
            atoms = space.partitions[max(t - 1, 0)]
        elif klass == G_TAU:
            parts = g_partitions if g_partitions is not None else enlarged_partitions(space, tau)
            atoms = parts[t]
        else:
            raise DomainError(f"unknown sigma-field klass {klass!r}")
        for atom in atoms:
            cell = tuple(i for i in atom if tau.times[i] == t)
            if cell:
                cells.append((t, cell))
    return cells


@dataclass(frozen=True)
class TauSigmaField:
    klass: str
    cells: tuple[tuple[int, tuple[int, ...]], ...]


def sigma_field_at_tau(space: FiniteFilteredSpace, tau: RandomTime, klass: str) -> TauSigmaField:
    return TauSigmaField(klass=klass, cells=tuple(graph_cells(space, tau, klass)))


def cond_expect_at_tau(space: FiniteFilteredSpace, tau: RandomTime, Y, klass: str) -> np.ndarray:
    """E[Y | sigma-field at tau] as a per-path vector on {tau < inf}, 0 off it.

    Y is a raw per-path value (e.g. a mark observed at death) or a process,
    in which case Y_tau is used.
    """
    yv = value_at_tau(tau, Y)
    out = nm.zeros(space.n_paths, space.exact)
    for _t, cell in graph_cells(space, tau, klass):
        mass = sum(space.weights[i] for i in cell)
        val = sum(space.weights[i] * yv[i] for i in cell) / mass
        for i in cell:
            out[i] = val
    return out


def mu_cond_expect(
    space: FiniteFilteredSpace,
    tau: RandomTime,
    X,
    klass: str = OPTIONAL,
) -> ProcessPath:
    """Conditional expectation under mu = P (x) dD: the optional (or
    predictable) process h with h_tau = E[X_tau | F_tau] (resp. F_{tau-}).

    In discrete time the progressive class collapses to the optional one; the
    two requests return identical processes.  The result is the induced
    process on the graph cells, 0 elsewhere, unique up to mu-null sets.
    """
    if klass in (OPTIONAL, PROGRESSIVE):
        field = F_TAU
        out_klass = ADAPTED
    elif klass == PREDICTABLE_KLASS:
        field = F_TAU_MINUS
        out_klass = PREDICTABLE
    else:
        raise DomainError(f"unknown projection klass {klass!r}")
    yv = value_at_tau(tau, X)
    vals = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
    for t, cell in graph_cells(space, tau, field):
        mass = sum(space.weights[i] for i in cell)
        val = sum(space.weights[i] * yv[i] for i in cell) / mass
        atoms = space.partitions[t] if field == F_TAU else space.partitions[max(t - 1, 0)]
        atom = next(a for a in atoms if cell[0] in a)
        for i in atom:
            vals[i, t] = val
    return ProcessPath(values=vals, klass=out_klass)


def g_compensator(bundle: EnlargementBundle, U: ProcessPath) -> ProcessPath:
    """G-compensator of U^tau for F-adapted finite-variation U with U_0 = 0:
    (1/G_-) I_{(0,tau]} . (G~ . U)^{p,F}."""
    space = bundle.space
    check_measurability(space, U, ADAPTED)
    if any(v != 0 for v in U.values[:, 0]):
        raise DomainError("g_compensator requires U_0 = 0")
    n, T = space.n_paths, space.horizon
    dU = increments(U)
    alive = bundle.alive_matrix()
    out = nm.zeros((n, T + 1), space.exact)
    for t in range(1, T + 1):
        pred = cond_expect_atoms(
            space, bundle.Gtilde.values[:, t] * dU[:, t], space.partitions[t - 1]
        )
        step = nm.div0(pred, bundle.G.values[:, t - 1])
        out[:, t] = np.where(alive[:, t], step, space.zero())
    return ProcessPath(values=cumulate(space, out), klass=RAW)


def bundle_report_rows(bundle: EnlargementBundle) -> list[dict]:
    """Per-(path, time) table of the bundle's headline processes."""
    dNG = increments(bundle.NG)
    dNG[:, 0] = bundle.NG.values[:, 0]
    dNGbar = increments(bundle.NGbar)
    dNGbar[:, 0] = bundle.NGbar.values[:, 0]
    rows = []
    for i in range(bundle.space.n_paths):
        for t in range(bundle.horizon + 1):
            rows.append(
                {
                    "path": i,
                    "time": t,
                    "G": nm.number_to_str(bundle.G.values[i, t]),
                    "Gtilde": nm.number_to_str(bundle.Gtilde.values[i, t]),
                    "m": nm.number_to_str(bundle.m.values[i, t]),
                    "dNG": nm.number_to_str(dNG[i, t]),
                    "dNGbar": nm.number_to_str(dNGbar[i, t]),
                }
            )
    return rows


def bundle_to_csv(bundle: EnlargementBundle) -> str:
    rows = bundle_report_rows(bundle)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
