"""Projections, compensators, the dual Radon-Nikodym lemma, and the
Galtchouk-Kunita-Watanabe decomposition.

On a discrete grid the optional projection at t conditions on F_t and the
predictable one on F_{t-1}; dual projections condition the increments.  Dual
projections carry the projected time-0 jump as their initial value, so that
m = G + D^o is a martingale with m_0 = 1 even when P(tau = 0) > 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _numeric as nm
from .errors import DomainError, NotMartingale
from .space import (
    ADAPTED,
    PREDICTABLE,
    RAW,
    FiniteFilteredSpace,
    Partitions,
    ProcessPath,
    cond_expect_atoms,
    cumulate,
    increments,
    increments_from_zero,
    is_martingale,
)

OPTIONAL = "optional"
PREDICTABLE_KLASS = "predictable"


def projection(
    space: FiniteFilteredSpace,
    X: ProcessPath,
    klass: str,
    partitions: Partitions | None = None,
) -> ProcessPath:
    """Optional (E[X_t|F_t]) or predictable (E[X_t|F_{t-1}]) projection of a
    possibly raw process."""
    parts = space.partitions if partitions is None else partitions
    out = nm.zeros(X.values.shape, space.exact)
    for t in range(X.values.shape[1]):
        atoms = parts[t] if klass == OPTIONAL else parts[max(t - 1, 0)]
        out[:, t] = cond_expect_atoms(space, X.values[:, t], atoms)
    return ProcessPath(values=out, klass=ADAPTED if klass == OPTIONAL else PREDICTABLE)


def dual_projection(
    space: FiniteFilteredSpace,
    V: ProcessPath,
    klass: str,
    partitions: Partitions | None = None,
) -> ProcessPath:
    """Dual optional/predictable projection of a finite-variation process.

    Increments are E[dV_t | F_t] (optional) or E[dV_t | F_{t-1}] (predictable);
    a nonzero V_0 is treated as a jump at 0 and projected onto F_0 (the spec
    states V_0 = 0, but D = I_[tau,inf) needs the jump when P(tau=0) > 0).
    """
    parts = space.partitions if partitions is None else partitions
    dV = increments_from_zero(V)
    out = nm.zeros(dV.shape, space.exact)
    for t in range(dV.shape[1]):
        if klass == OPTIONAL:
            atoms = parts[t]
        else:
            atoms = parts[max(t - 1, 0)]
        out[:, t] = cond_expect_atoms(space, dV[:, t], atoms)
    return ProcessPath(values=cumulate(space, out), klass=ADAPTED)


def dual_rn_derivative(
    space: FiniteFilteredSpace,
    phi: ProcessPath,
    V: ProcessPath,
    partitions: Partitions | None = None,
) -> ProcessPath:
    """Predictable psi with 0 <= psi <= 1 and (phi.V)^p = psi.V^p.

    psi is the atomwise ratio E[phi dV|F_{t-1}] / E[dV|F_{t-1}]; off the
    support of dV^p it is set to 1, matching the positivity construction
    psi = psi1 ^ 1 + I_{psi1 = 0} off-support.
    """
    for col in range(phi.values.shape[1]):
        for v in phi.values[:, col]:
            if v < 0 or v > 1:
                raise DomainError("phi must take values in [0,1]")
    parts = space.partitions if partitions is None else partitions
    dV = increments_from_zero(V)
    out = nm.zeros(dV.shape, space.exact)
    one = space.one()
    for t in range(dV.shape[1]):
        atoms = parts[max(t - 1, 0)]
        num = cond_expect_atoms(space, phi.values[:, t] * dV[:, t], atoms)
        den = cond_expect_atoms(space, dV[:, t], atoms)
        col = nm.div0(num, den)
        for i in range(space.n_paths):
            if den[i] == 0:
                col[i] = one
        out[:, t] = col
    return ProcessPath(values=out, klass=PREDICTABLE)


# -- exact least squares ------------------------------------------------------

def _rref(M: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over exact rationals; returns pivot columns."""
    M = [row[:] for row in M]
    rows, cols = len(M), len(M[0]) if M else 0
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if M[i][c] != 0), None)
        if pivot is None:
            continue
        M[r], M[pivot] = M[pivot], M[r]
        inv = M[r][c]
        M[r] = [v / inv for v in M[r]]
        for i in range(rows):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return M, pivots


def _solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Unique solution of a small nonsingular rational system."""
    n = len(A)
    aug = [A[i][:] + [b[i]] for i in range(n)]
    R, pivots = _rref(aug)
    if len(pivots) != n or any(p >= n for p in pivots):
        raise ZeroDivisionError("singular system")
    x = [Fraction(0)] * n
    for r, c in enumerate(pivots):
        x[c] = R[r][n]
    return x


def solve_min_norm(G, b, exact: bool):
    """Minimal-norm solution of the (possibly singular) normal equations
    G theta = b for symmetric PSD G; returns (theta, rank)."""
    d = len(b)
    if not exact:
        Gm = np.array(G, dtype=float)
        bv = np.array(b, dtype=float)
        theta, _, rank, _ = np.linalg.lstsq(Gm, bv, rcond=None)
        return list(theta), int(rank)
    Gm = [[Fraction(x) for x in row] for row in G]
    bv = [Fraction(x) for x in b]
    aug = [Gm[i][:] + [bv[i]] for i in range(d)]
    R, pivots = _rref(aug)
    pivots = [p for p in pivots if p < d]
    rank = len(pivots)
    # particular solution with free variables set to 0
    x = [Fraction(0)] * d
    for r, c in enumerate(pivots):
        x[c] = R[r][d]
    if rank == d:
        return x, rank
    # null-space basis of G from the rref of G itself
    Rg, pg = _rref(Gm)
    free = [c for c in range(d) if c not in pg]
    basis = []
    for c in free:
        v = [Fraction(0)] * d
        v[c] = Fraction(1)
        for r, pc in enumerate(pg):
            v[pc] = -Rg[r][c]
        basis.append(v)
    # project the particular solution off the null space (G symmetric, so
    # null(G) orthogonal to range(G)): theta* = x - N (N^T N)^{-1} N^T x
    k = len(basis)
    NtN = [[sum(basis[i][m] * basis[j][m] for m in range(d)) for j in range(k)] for i in range(k)]
    Ntx = [sum(basis[i][m] * x[m] for m in range(d)) for i in range(k)]
    alpha = _solve_exact(NtN, Ntx)
    theta = [x[m] - sum(alpha[i] * basis[i][m] for i in range(k)) for m in range(d)]
    return theta, rank


@dataclass(frozen=True)
class GkwResult:
    """M = M_0 + sum_i theta_i . S_i + residual with <S_i, residual> = 0."""

    theta: tuple[ProcessPath, ...]
    residual: ProcessPath
    gram_diagnostics: tuple = field(default=())

    @property
    def theta1(self) -> ProcessPath:
        return self.theta[0]


def gkw(
    space: FiniteFilteredSpace,
    M: ProcessPath,
    S: ProcessPath | list[ProcessPath] | tuple[ProcessPath, ...],
    partitions: Partitions | None = None,
    check: bool = True,
) -> GkwResult:
    """Galtchouk-Kunita-Watanabe decomposition of M on the integrals of S.

    theta solves the atomwise normal equations
    E[dS dS'|F_{t-1}] theta = E[dS dM|F_{t-1}]; singular Gram matrices get the
    minimal-norm solution and a rank record in gram_diagnostics.
    """
    parts = space.partitions if partitions is None else partitions
    assets = [S] if isinstance(S, ProcessPath) else list(S)
    if check:
        for P in [M, *assets]:
            rep = is_martingale(space, P, partitions=parts)
            if not rep.ok:
                raise NotMartingale(
                    f"gkw input violates martingale property by {rep.max_violation} at {rep.location}"
                )
    d = len(assets)
    n, T1 = M.values.shape
    dM = increments(M)
    dS = [increments(A) for A in assets]
    theta_vals = [nm.zeros((n, T1), space.exact) for _ in range(d)]
    diagnostics = []
    for t in range(1, T1):
        for atom in parts[t - 1]:
            mass = sum(space.weights[i] for i in atom)
            G = [
                [
                    sum(space.weights[i] * dS[a][i, t] * dS[b][i, t] for i in atom) / mass
                    for b in range(d)
                ]
                for a in range(d)
            ]
            b = [sum(space.weights[i] * dS[a][i, t] * dM[i, t] for i in atom) / mass for a in range(d)]
            theta, rank = solve_min_norm(G, b, space.exact)
            if rank < d:
                diagnostics.append((t, tuple(atom), rank))
            for a in range(d):
                for i in atom:
                    theta_vals[a][i, t] = space.num(theta[a]) if not space.exact else theta[a]
    thetas = tuple(ProcessPath(values=v, klass=PREDICTABLE) for v in theta_vals)
    resid = M.values - M.values[:, [0]]
    for a in range(d):
        resid = resid - cumulate(space, theta_vals[a] * dS[a], start=nm.zeros(n, space.exact))
    residual = ProcessPath(values=resid, klass=RAW)
    return GkwResult(theta=thetas, residual=residual, gram_diagnostics=tuple(diagnostics))
