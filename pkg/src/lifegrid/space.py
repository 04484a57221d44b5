"""Finite filtered probability spaces and discrete stochastic calculus.

A space is a finite set of paths with strictly positive weights, a time grid
0..horizon, and a refining partition sequence representing the filtration.
Processes are (paths x times) arrays tagged with a measurability class; all
operations are pure functions over immutable inputs.

Conventions used throughout the package:

* increments are ``X_t - X_{t-1}`` for t >= 1; stochastic integrals start at 0
  with value 0 and never pick up a time-0 jump,
* predictable at t means measurable w.r.t. the partition at t-1, with the
  partition at -1 taken to be the one at 0,
* INF is a sentinel ordered above every grid point.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _numeric as nm
from .errors import (
    BadWeights,
    MeasurabilityError,
    NonRefiningFiltration,
    TimeOutOfRange,
)

RAW = "raw"
ADAPTED = "adapted"
PREDICTABLE = "predictable"

INF = float("inf")

Partitions = tuple[tuple[tuple[int, ...], ...], ...]


@dataclass(frozen=True)
class FiniteFilteredSpace:
    weights: np.ndarray
    partitions: Partitions
    exact: bool
    tol: float

    @property
    def n_paths(self) -> int:
        return len(self.weights)

    @property
    def horizon(self) -> int:
        return len(self.partitions) - 1

    def atoms(self, t: int) -> tuple[tuple[int, ...], ...]:
        if not 0 <= t <= self.horizon:
            raise TimeOutOfRange(f"t={t} outside 0..{self.horizon}")
        return self.partitions[t]

    def atoms_before(self, t: int) -> tuple[tuple[int, ...], ...]:
        """Partition generating F_{t-1}, with F_{-1} := F_0."""
        return self.partitions[max(t - 1, 0)]

    def zero(self):
        return nm.zero(self.exact)

    def one(self):
        return nm.one(self.exact)

    def num(self, x):
        return nm.to_number(x, self.exact)

    def vector(self, values) -> np.ndarray:
        return nm.as_vector(values, self.exact)

    def zeros_matrix(self) -> np.ndarray:
        return nm.zeros((self.n_paths, self.horizon + 1), self.exact)


def _normalize_partition(partition, n_paths: int) -> tuple[tuple[int, ...], ...]:
    seen: list[int] = []
    atoms = []
    for atom in partition:
        atom = tuple(sorted(int(i) for i in atom))
        if not atom:
            continue
        atoms.append(atom)
        seen.extend(atom)
    if sorted(seen) != list(range(n_paths)):
        raise NonRefiningFiltration(
            "partition atoms must cover each path index exactly once"
        )
    return tuple(sorted(atoms))


def build_space(weights, partitions, horizon=None, exact=True, tol=1e-10) -> FiniteFilteredSpace:
    """Validate and construct a finite filtered space.

    ``partitions`` gives, for each t in 0..horizon, the atoms of F_t as lists
    of path indices.  Raises BadWeights or NonRefiningFiltration.
    """
    w = nm.as_vector(weights, exact)
    n = len(w)
    if n == 0:
        raise BadWeights("empty weight vector")
    if any(x <= 0 for x in w):
        raise BadWeights("weights must be strictly positive")
    total = sum(w)
    if exact:
        if total != 1:
            raise BadWeights(f"weights sum to {total}, expected 1")
    elif abs(total - 1.0) > tol:
        raise BadWeights(f"weights sum to {total}, expected 1 within {tol}")

    parts = tuple(_normalize_partition(p, n) for p in partitions)
    if not parts:
        raise NonRefiningFiltration("need at least the time-0 partition")
    if horizon is not None and horizon != len(parts) - 1:
        raise TimeOutOfRange(
            f"horizon {horizon} inconsistent with {len(parts)} partitions"
        )
    for t in range(len(parts) - 1):
        coarse = {i: k for k, atom in enumerate(parts[t]) for i in atom}
        for atom in parts[t + 1]:
            if len({coarse[i] for i in atom}) != 1:
                raise NonRefiningFiltration(
                    f"atom {atom} at t={t + 1} straddles atoms of t={t}"
                )
    return FiniteFilteredSpace(weights=w, partitions=parts, exact=exact, tol=(0.0 if exact else tol))


@dataclass(frozen=True)
class ProcessPath:
    """A (paths x times) array of field values with a measurability tag."""

    values: np.ndarray
    klass: str

    @property
    def n_times(self) -> int:
        return self.values.shape[1]


def process(space: FiniteFilteredSpace, values, klass: str = RAW) -> ProcessPath:
    if isinstance(values, ProcessPath):
        values = values.values
    mat = nm.as_matrix(values, space.exact) if not isinstance(values, np.ndarray) else values
    if mat.shape != (space.n_paths, space.horizon + 1):
        raise TimeOutOfRange(
            f"process shape {mat.shape} != {(space.n_paths, space.horizon + 1)}"
        )
    return ProcessPath(values=mat, klass=klass)


def constant_process(space: FiniteFilteredSpace, c, klass: str = ADAPTED) -> ProcessPath:
    mat = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
    mat[:, :] = space.num(c)
    return ProcessPath(values=mat, klass=klass)


def _constant_on(values_col: np.ndarray, atoms, tol) -> bool:
    for atom in atoms:
        ref = values_col[atom[0]]
        for i in atom[1:]:
            if abs(values_col[i] - ref) > tol:
                return False
    return True


def is_measurable(space: FiniteFilteredSpace, values_col: np.ndarray, atoms) -> bool:
    return _constant_on(values_col, atoms, space.tol)


def check_measurability(
    space: FiniteFilteredSpace,
    proc: ProcessPath,
    klass: str,
    partitions: Partitions | None = None,
) -> None:
    """Raise MeasurabilityError unless the values satisfy ``klass``.

    The check is against actual values, not the tag, so mislabeled processes
    are caught at the point of use.
    """
    parts = space.partitions if partitions is None else partitions
    horizon = len(parts) - 1
    for t in range(horizon + 1):
        atoms = parts[t] if klass == ADAPTED else parts[max(t - 1, 0)]
        if not _constant_on(proc.values[:, t], atoms, space.tol):
            raise MeasurabilityError(f"process not {klass} at t={t}")


def cond_expect(
    space: FiniteFilteredSpace,
    x,
    t: int,
    partitions: Partitions | None = None,
) -> np.ndarray:
    """E[X | F_t] as a per-path vector (constant on every F_t-atom)."""
    parts = space.partitions if partitions is None else partitions
    if not 0 <= t < len(parts):
        raise TimeOutOfRange(f"t={t} outside 0..{len(parts) - 1}")
    return cond_expect_atoms(space, x, parts[t])


def cond_expect_atoms(space: FiniteFilteredSpace, x, atoms) -> np.ndarray:
    x = np.asarray(x) if isinstance(x, np.ndarray) else space.vector(x)
    out = nm.zeros(space.n_paths, space.exact)
    w = space.weights
    for atom in atoms:
        idx = list(atom)
        mass = sum(w[i] for i in idx)
        val = sum(w[i] * x[i] for i in idx) / mass
        for i in idx:
            out[i] = val
    return out


@dataclass(frozen=True)
class RandomTime:
    """Per-path time in {0..horizon} or INF."""

    times: tuple

    @property
    def n_paths(self) -> int:
        return len(self.times)

    def array(self) -> np.ndarray:
        return np.array(self.times, dtype=float)

    def ge(self, t: int) -> np.ndarray:
        return self.array() >= t

    def eq(self, t: int) -> np.ndarray:
        return self.array() == t

    def finite(self) -> np.ndarray:
        return self.array() < INF


def random_time(space: FiniteFilteredSpace, values) -> RandomTime:
    out = []
    for v in values:
        if v == INF or v is None:
            out.append(INF)
            continue
        v = int(v)
        if not 0 <= v <= space.horizon:
            raise TimeOutOfRange(f"tau value {v} outside 0..{space.horizon}")
        out.append(v)
    if len(out) != space.n_paths:
        raise TimeOutOfRange("tau length != number of paths")
    return RandomTime(times=tuple(out))


def increments(proc: ProcessPath | np.ndarray) -> np.ndarray:
    """Increment matrix with column 0 equal to 0."""
    vals = proc.values if isinstance(proc, ProcessPath) else proc
    out = vals.copy()
    out[:, 1:] = vals[:, 1:] - vals[:, :-1]
    out[:, 0] = nm.zeros(vals.shape[0], vals.dtype == object)
    return out


def increments_from_zero(proc: ProcessPath | np.ndarray) -> np.ndarray:
    """Increment matrix for finite-variation processes started at 0-: column 0 is X_0."""
    vals = proc.values if isinstance(proc, ProcessPath) else proc
    out = vals.copy()
    out[:, 1:] = vals[:, 1:] - vals[:, :-1]
    return out


def cumulate(space: FiniteFilteredSpace, deltas: np.ndarray, start=None) -> np.ndarray:
    """Running sum over time of an increment matrix; column 0 = start (default: deltas[:,0])."""
    out = deltas.copy()
    if start is not None:
        out[:, 0] = start
    for t in range(1, out.shape[1]):
        out[:, t] = out[:, t - 1] + out[:, t]
    return out


def integrate(
    space: FiniteFilteredSpace,
    H: ProcessPath,
    X: ProcessPath,
    partitions: Partitions | None = None,
) -> ProcessPath:
    """Discrete stochastic integral (H . X)_t = sum_{s<=t} H_s (X_s - X_{s-1}).

    H must be predictable w.r.t. the given partitions (the space's own by
    default); the integral starts at 0.
    """
    check_measurability(space, H, PREDICTABLE, partitions)
    dX = increments(X)
    vals = cumulate(space, H.values * dX, start=nm.zeros(space.n_paths, space.exact))
    return ProcessPath(values=vals, klass=RAW)


def optional_integral(
    space: FiniteFilteredSpace,
    K: ProcessPath | np.ndarray,
    X: ProcessPath,
    include_time0: bool = False,
) -> ProcessPath:
    """Pathwise Stieltjes integral of an optional integrand against a
    finite-variation process.  With ``include_time0`` the time-0 jump of X
    (value X_0) contributes K_0 X_0."""
    Kv = K.values if isinstance(K, ProcessPath) else K
    dX = increments_from_zero(X) if include_time0 else increments(X)
    vals = cumulate(space, Kv * dX)
    if not include_time0:
        vals[:, 0] = nm.zeros(space.n_paths, space.exact)
    return ProcessPath(values=vals, klass=RAW)


def bracket(space: FiniteFilteredSpace, X: ProcessPath, Y: ProcessPath) -> ProcessPath:
    """Quadratic covariation [X,Y]_t = sum_{s<=t} dX_s dY_s, started at 0."""
    for P in (X, Y):
        check_measurability(space, P, ADAPTED)
    vals = cumulate(space, increments(X) * increments(Y))
    return ProcessPath(values=vals, klass=ADAPTED)


def predictable_bracket(
    space: FiniteFilteredSpace,
    X: ProcessPath,
    Y: ProcessPath,
    partitions: Partitions | None = None,
) -> ProcessPath:
    """<X,Y>: dual predictable projection of [X,Y] w.r.t. the given partitions."""
    parts = space.partitions if partitions is None else partitions
    prod = increments(X) * increments(Y)
    out = nm.zeros(prod.shape, space.exact)
    for t in range(1, prod.shape[1]):
        out[:, t] = cond_expect_atoms(space, prod[:, t], parts[t - 1])
    return ProcessPath(values=cumulate(space, out), klass=RAW)


@dataclass(frozen=True)
class MartingaleReport:
    ok: bool
    max_violation: object
    location: tuple[int, int] | None  # (t, atom index in partition t-1)

    def __bool__(self) -> bool:
        return self.ok


def is_martingale(
    space: FiniteFilteredSpace,
    X: ProcessPath,
    partitions: Partitions | None = None,
    tol=None,
) -> MartingaleReport:
    """Check E[dX_t | F_{t-1}] = 0 on every atom; report the worst violation.

    Only the increment property is checked; measurability of X is a separate
    concern (``check_measurability``), so mark-augmented processes can be
    probed too.
    """
    parts = space.partitions if partitions is None else partitions
    tol = space.tol if tol is None else tol
    dX = increments(X)
    worst = space.zero()
    where = None
    for t in range(1, len(parts)):
        for k, atom in enumerate(parts[t - 1]):
            mass = sum(space.weights[i] for i in atom)
            v = abs(sum(space.weights[i] * dX[i, t] for i in atom) / mass)
            if v > worst:
                worst, where = v, (t, k)
    return MartingaleReport(ok=(worst <= tol), max_violation=worst, location=where)


def stop(space: FiniteFilteredSpace, X: ProcessPath, sigma: RandomTime) -> ProcessPath:
    """X stopped at sigma: X^sigma_t = X_{min(t, sigma)} (INF = never stop)."""
    vals = X.values.copy()
    for i, s in enumerate(sigma.times):
        if s == INF:
            continue
        s = int(s)
        for t in range(s + 1, vals.shape[1]):
            vals[i, t] = vals[i, s]
    return ProcessPath(values=vals, klass=X.klass)


def restrict_space(space: FiniteFilteredSpace, T: int) -> FiniteFilteredSpace:
    """The same paths and weights filtered only up to time T."""
    if not 0 <= T <= space.horizon:
        raise TimeOutOfRange(f"T={T} outside 0..{space.horizon}")
    return FiniteFilteredSpace(
        weights=space.weights,
        partitions=space.partitions[: T + 1],
        exact=space.exact,
        tol=space.tol,
    )


def restrict_process(proc: ProcessPath, T: int) -> ProcessPath:
    return ProcessPath(values=proc.values[:, : T + 1], klass=proc.klass)


def clip_tau(tau: RandomTime, T: int) -> RandomTime:
    """Death times beyond T become INF (unobserved within the subgrid)."""
    return RandomTime(times=tuple(t if t <= T else INF for t in tau.times))


def pad_process(space: FiniteFilteredSpace, proc: ProcessPath, mode: str = "hold") -> ProcessPath:
    """Extend a subgrid process to the space's full grid by holding the last
    value or by zeros."""
    n, w = proc.values.shape
    if w == space.horizon + 1:
        return proc
    vals = nm.zeros((n, space.horizon + 1), space.exact)
    vals[:, :w] = proc.values
    if mode == "hold":
        for t in range(w, space.horizon + 1):
            vals[:, t] = proc.values[:, w - 1]
    return ProcessPath(values=vals, klass=proc.klass)


# -- serialization ------------------------------------------------------------

def space_to_dict(space: FiniteFilteredSpace) -> dict:
    return {
        "weights": [nm.number_to_str(w) for w in space.weights],
        "partitions": [[list(atom) for atom in part] for part in space.partitions],
        "horizon": space.horizon,
        "mode": "exact" if space.exact else "float",
        "tol": space.tol,
    }


def space_from_dict(doc: dict) -> FiniteFilteredSpace:
    exact = doc.get("mode", "exact") == "exact"
    return build_space(
        doc["weights"],
        doc["partitions"],
        horizon=doc.get("horizon"),
        exact=exact,
        tol=doc.get("tol", 1e-10),
    )


def process_to_dict(proc: ProcessPath) -> dict:
    return {
        "klass": proc.klass,
        "values": [[nm.number_to_str(v) for v in row] for row in proc.values],
    }


def process_from_dict(space: FiniteFilteredSpace, doc: dict) -> ProcessPath:
    return process(space, doc["values"], klass=doc.get("klass", RAW))


def tau_to_list(tau: RandomTime) -> list:
    return [None if t == INF else int(t) for t in tau.times]


def tau_from_list(space: FiniteFilteredSpace, values) -> RandomTime:
    return random_time(space, values)
