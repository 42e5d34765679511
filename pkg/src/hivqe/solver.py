"""Subspace Hamiltonians, the Davidson eigensolver and density matrices."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from hivqe.determinants import (
    Determinant,
    element,
    occupied,
    singles_and_doubles,
    tables,
)
from hivqe.integrals import IntegralSet

log = logging.getLogger(__name__)

__all__ = [
    "CIVector",
    "SparseHamiltonian",
    "SubspaceResult",
    "ConvergenceError",
    "CapacityError",
    "DENSE_LIMIT",
    "build_hamiltonian",
    "davidson",
    "dense_eigh",
    "dense_fci_oracle",
    "occupations",
    "one_rdm",
    "solve_subspace",
    "worker_count",
]

DENSE_LIMIT = 20_000
DEFAULT_TOL = 1e-8
WORKERS_ENV = "HIVQE_WORKERS"


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (final residual {residual:.3e})")
        self.residual = residual


class CapacityError(ValueError):
    pass


@dataclass
class CIVector:
    dets: list[Determinant]
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if len(self.dets) != len(self.coeffs):
            raise ValueError("dets and coeffs differ in length")

    def __len__(self) -> int:
        return len(self.dets)

    @property
    def weights(self) -> np.ndarray:
        return self.coeffs ** 2

    def as_dict(self) -> dict[Determinant, float]:
        return dict(zip(self.dets, self.coeffs.tolist()))


@dataclass
class SparseHamiltonian:
    """Upper triangle (row <= col) in COO form plus a full CSR copy for products."""

    dimension: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    diagonal: np.ndarray = field(repr=False)
    matrix: sp.csr_matrix = field(repr=False)

    @classmethod
    def from_upper(cls, n: int, rows, cols, values) -> "SparseHamiltonian":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        off = rows != cols
        full = sp.coo_matrix(
            (
                np.concatenate([values, values[off]]),
                (np.concatenate([rows, cols[off]]), np.concatenate([cols, rows[off]])),
            ),
            shape=(n, n),
        ).tocsr()
        diag = np.zeros(n)
        diag[rows[~off]] = values[~off]
        return cls(n, rows, cols, values, diag, full)

    @classmethod
    def from_dense(cls, a: np.ndarray) -> "SparseHamiltonian":
        a = np.asarray(a, dtype=float)
        r, c = np.nonzero(np.triu(a))
        idx = np.arange(a.shape[0])
        keep = np.concatenate([np.stack([r, c], 1), np.stack([idx, idx], 1)])
        keep = np.unique(keep, axis=0)
        return cls.from_upper(a.shape[0], keep[:, 0], keep[:, 1], a[keep[:, 0], keep[:, 1]])

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def dump(self, path: str | Path) -> None:
        """Coordinate text dump, 1-based ``i j value``, upper triangle only."""
        order = np.lexsort((self.cols, self.rows))
        with open(path, "w") as fh:
            for k in order:
                fh.write(f"{self.rows[k] + 1} {self.cols[k] + 1} {float(self.values[k])!r}\n")


@dataclass
class SubspaceResult:
    energy: float
    civector: CIVector
    occ_alpha: np.ndarray
    occ_beta: np.ndarray
    n_dets: int
    residual: float = 0.0
    iterations: int = 0


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring non-integer %s=%r", WORKERS_ENV, raw)
        return 1


# -- assembly --------------------------------------------------------------

def _rows_block(args) -> tuple[list[int], list[int], list[float]]:
    dets, s, lo, hi, strategy = args
    t = tables(s)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    if strategy == "pairs":
        for i in range(lo, hi):
            di = dets[i]
            a_i, b_i = di
            rows.append(i)
            cols.append(i)
            vals.append(element(di, di, t))
            for j in range(i + 1, len(dets)):
                dj = dets[j]
                if (a_i ^ dj[0]).bit_count() + (b_i ^ dj[1]).bit_count() > 4:
                    continue
                v = element(di, dj, t)
                if v != 0.0:
                    rows.append(i)
                    cols.append(j)
                    vals.append(v)
    else:
        index = {d: k for k, d in enumerate(dets)}
        for i in range(lo, hi):
            di = dets[i]
            rows.append(i)
            cols.append(i)
            vals.append(element(di, di, t))
            found = []
            for dj in singles_and_doubles(di, s.n_orb):
                j = index.get(dj)
                if j is not None and j > i:
                    found.append(j)
            found.sort()
            for j in found:
                v = element(di, dets[j], t)
                if v != 0.0:
                    rows.append(i)
                    cols.append(j)
                    vals.append(v)
    return rows, cols, vals


def _connections(n_orb: int, n_alpha: int, n_beta: int) -> int:
    sa = n_alpha * (n_orb - n_alpha)
    sb = n_beta * (n_orb - n_beta)
    da = sa * (n_alpha - 1) * (n_orb - n_alpha - 1) // 4
    db = sb * (n_beta - 1) * (n_orb - n_beta - 1) // 4
    return sa + sb + da + db + sa * sb


def build_hamiltonian(
    dets: Sequence[Determinant], s: IntegralSet, workers: int | None = None
) -> SparseHamiltonian:
    """Assemble the symmetric subspace Hamiltonian over `dets` (in the given order).

    Rows are split into contiguous blocks; blocks may run in worker processes
    and are merged in block order, so the result does not depend on the
    worker count.
    """
    dets = [Determinant(*d) for d in dets]
    n = len(dets)
    if len(set(dets)) != n:
        raise ValueError("duplicate determinants in subspace")
    if n == 0:
        raise ValueError("empty determinant list")
    na = dets[0].alpha.bit_count()
    nb = dets[0].beta.bit_count()
    strategy = "pairs" if n / 2 < 2 * _connections(s.n_orb, na, nb) else "connections"
    workers = worker_count() if workers is None else workers
    # pair scans have triangular cost; balance blocks by work, not rows
    if workers > 1 and n > 256:
        if strategy == "pairs":
            work = np.cumsum(np.arange(n, 0, -1, dtype=float))
            cuts = np.searchsorted(work, np.linspace(0, work[-1], workers + 1)[1:-1])
            bounds = [0, *cuts.tolist(), n]
        else:
            bounds = np.linspace(0, n, workers + 1).astype(int).tolist()
        jobs = [(dets, s, lo, hi, strategy) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_rows_block, jobs))
    else:
        parts = [_rows_block((dets, s, 0, n, strategy))]
    rows = [r for p in parts for r in p[0]]
    cols = [c for p in parts for c in p[1]]
    vals = [v for p in parts for v in p[2]]
    return SparseHamiltonian.from_upper(n, rows, cols, vals)


# -- eigensolvers ----------------------------------------------------------

def _orthonormalize(v: np.ndarray, basis: np.ndarray | None, floor: float = 1e-10) -> np.ndarray | None:
    norm0 = np.linalg.norm(v)
    if norm0 == 0.0:
        return None
    v = v / norm0
    if basis is not None and basis.shape[1]:
        for _ in range(2):
            v = v - basis @ (basis.T @ v)
    norm = np.linalg.norm(v)
    if norm < floor:
        return None
    return v / norm


def davidson(
    h: SparseHamiltonian,
    guess: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
    max_space: int = 25,
    keep: int = 2,
    max_iter: int = 2000,
    guard_tol: float = 1e-6,
) -> tuple[float, np.ndarray, float, int]:
    """Lowest eigenpair of `h` by Davidson with a diagonal preconditioner.

    The two lowest Ritz pairs are expanded together and the lowest is only
    accepted once the second has also settled (to `guard_tol`). A warm-start
    vector that is an exact but excited eigenvector, e.g. of a symmetry the
    new determinants do not couple to, therefore cannot stop the search.
    On overflow of `max_space` vectors the space restarts from the current
    Ritz vectors plus the previous lowest one.

    Returns
    -------
    (energy, vector, residual norm, iterations)
    """
    n = h.dimension
    diag = h.diagonal
    if n == 1:
        return float(diag[0]), np.ones(1), 0.0, 0
    lowest = int(np.argmin(diag))
    seed = np.zeros(n)
    seed[lowest] = 1.0
    # A closed-shell start is even under alpha<->beta exchange and the
    # diagonal preconditioner keeps it so; a fixed pseudo-random vector
    # lets odd-spin ground states (e.g. triplets, septets) into the space.
    mix = np.random.default_rng(0xDA71D).standard_normal(n)
    starts = [seed, mix] if guess is None else [np.asarray(guess, dtype=float), seed, mix]
    n_roots = 2

    def span(vectors):
        basis = np.zeros((n, 0))
        for vec in vectors:
            q = _orthonormalize(vec, basis)
            if q is not None:
                basis = np.column_stack([basis, q])
        return basis, np.column_stack([h.matvec(basis[:, k]) for k in range(basis.shape[1])])

    V, AV = span(starts)
    prev = None
    theta, x, rnorm = float(diag[lowest]), seed, np.inf
    for it in range(1, max_iter + 1):
        T = V.T @ AV
        T = 0.5 * (T + T.T)
        evals, evecs = np.linalg.eigh(T)
        m = min(n_roots, V.shape[1])
        X = V @ evecs[:, :m]
        R = AV @ evecs[:, :m] - X * evals[:m]
        norms = np.linalg.norm(R, axis=0)
        theta, x, rnorm = float(evals[0]), X[:, 0], float(norms[0])
        open_roots = [i for i in range(m) if norms[i] > (tol if i == 0 else guard_tol)]
        if not open_roots:
            if m > 1 and evals[1] - evals[0] < 1e-9:
                log.warning("near-degenerate ground state: gap %.2e Ha", evals[1] - evals[0])
            break
        if V.shape[1] >= n:
            # the space is complete, so the Ritz pairs are exact up to rounding
            break
        if V.shape[1] + len(open_roots) > max_space:
            kept = [X[:, i] for i in range(m)] + ([] if prev is None else [prev])
            V, AV = span(kept[: max(keep, m + 1)])
        prev = x
        added = 0
        for i in open_roots:
            denom = evals[i] - diag
            small = np.abs(denom) < 1e-8
            denom[small] = np.where(denom[small] >= 0, 1e-8, -1e-8)
            t = _orthonormalize(R[:, i] / denom, V)
            if t is None:
                t = _orthonormalize(R[:, i], V)
            if t is None:
                continue
            V = np.column_stack([V, t])
            AV = np.column_stack([AV, h.matvec(t)])
            added += 1
        if not added:
            break
    else:
        raise ConvergenceError(f"Davidson did not converge in {max_iter} iterations", rnorm)
    if rnorm > max(tol, 1e-10 * max(1.0, abs(theta))):
        raise ConvergenceError("Davidson search space collapsed before convergence", rnorm)
    x = _fix_sign(x / np.linalg.norm(x))
    return theta, x, rnorm, it


def _fix_sign(x: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(x)))
    return -x if x[k] < 0 else x


def dense_eigh(h: SparseHamiltonian) -> tuple[float, np.ndarray]:
    if h.dimension > DENSE_LIMIT:
        raise CapacityError(f"dense diagonalization limited to {DENSE_LIMIT} determinants")
    evals, evecs = np.linalg.eigh(h.toarray())
    return float(evals[0]), _fix_sign(evecs[:, 0])


def _result(dets, energy, vec, n_orb, residual=0.0, iterations=0) -> SubspaceResult:
    civ = CIVector(list(dets), vec)
    occ_a, occ_b = occupations(civ, n_orb)
    return SubspaceResult(energy, civ, occ_a, occ_b, len(dets), residual, iterations)


def dense_fci_oracle(dets: Sequence[Determinant], s: IntegralSet) -> SubspaceResult:
    """Exact lowest eigenpair by dense symmetric diagonalization."""
    dets = [Determinant(*d) for d in dets]
    if len(dets) > DENSE_LIMIT:
        raise CapacityError(f"{len(dets)} determinants exceed the dense limit of {DENSE_LIMIT}")
    h = build_hamiltonian(dets, s)
    energy, vec = dense_eigh(h)
    return _result(dets, energy, vec, s.n_orb)


def solve_subspace(
    dets: Sequence[Determinant],
    s: IntegralSet,
    guess: CIVector | dict | None = None,
    tol: float = DEFAULT_TOL,
) -> SubspaceResult:
    """Build and diagonalize H over `dets`; `guess` amplitudes are matched by determinant."""
    dets = [Determinant(*d) for d in dets]
    h = build_hamiltonian(dets, s)
    g = None
    if guess is not None:
        lookup = guess.as_dict() if isinstance(guess, CIVector) else guess
        g = np.array([lookup.get(d, 0.0) for d in dets])
        if not np.any(g):
            g = None
    energy, vec, res, its = davidson(h, g, tol=tol)
    return _result(dets, energy, vec, s.n_orb, res, its)


# -- densities -------------------------------------------------------------

def occupations(v: CIVector, n_orb: int) -> tuple[np.ndarray, np.ndarray]:
    w = v.weights
    occ_a = np.zeros(n_orb)
    occ_b = np.zeros(n_orb)
    for d, wi in zip(v.dets, w.tolist()):
        for p in occupied(d.alpha):
            occ_a[p] += wi
        for p in occupied(d.beta):
            occ_b[p] += wi
    return occ_a, occ_b


def one_rdm(v: CIVector, n_orb: int) -> tuple[np.ndarray, np.ndarray]:
    """Spin-resolved gamma^sigma_pq = sum_ij c_i c_j <D_i| a+_p a_q |D_j>."""
    index = {d: k for k, d in enumerate(v.dets)}
    c = v.coeffs.tolist()
    gammas = []
    for spin in (0, 1):
        g = np.zeros((n_orb, n_orb))
        for j, d in enumerate(v.dets):
            mask = d[spin]
            occ = occupied(mask)
            for q in occ:
                g[q, q] += c[j] * c[j]
            for q in occ:
                for p in range(n_orb):
                    if mask >> p & 1:
                        continue
                    new = mask ^ (1 << q) ^ (1 << p)
                    target = Determinant(new, d.beta) if spin == 0 else Determinant(d.alpha, new)
                    i = index.get(target)
                    if i is None:
                        continue
                    lo, hi = (p, q) if p < q else (q, p)
                    between = (mask & (((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1))).bit_count()
                    sign = -1.0 if between & 1 else 1.0
                    g[p, q] += sign * c[i] * c[j]
        gammas.append(g)
    return gammas[0], gammas[1]
