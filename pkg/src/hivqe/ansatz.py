"""Excitation-preserving ansatz simulated inside fixed particle-number sectors.

Qubits ``0..n_orb-1`` hold alpha orbitals and ``n_orb..2*n_orb-1`` hold
beta orbitals. Every gate is a real Givens rotation on two adjacent qubits of
the same spin block, so the state factorizes into an alpha part and a beta
part and is stored as a ``(n_alpha_strings, n_beta_strings)`` amplitude
matrix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from hivqe.determinants import MAX_ORBITALS, Determinant, from_bitstring, to_bitstring
from hivqe.solver import CapacityError

log = logging.getLogger(__name__)

__all__ = [
    "SECTOR_LIMIT",
    "AnsatzCircuit",
    "SampleBatch",
    "SectorState",
    "build_epa",
    "statevector",
    "sample",
    "apply_bitflip_noise",
    "initial_parameters",
]

# largest sector (alpha strings x beta strings) simulated before refusing
SECTOR_LIMIT = 4_000_000


@dataclass(frozen=True)
class AnsatzCircuit:
    n_orb: int
    n_alpha: int
    n_beta: int
    reps: int
    gates: tuple[tuple[int, int, int], ...]
    n_params: int

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_orb


@dataclass
class SampleBatch:
    shots: int
    counts: dict[str, int]
    seed: int | None = None

    def __post_init__(self) -> None:
        if sum(self.counts.values()) != self.shots:
            raise ValueError("multiplicities do not add up to the shot count")


@dataclass
class SectorState:
    """Amplitudes over (alpha string, beta string) pairs."""

    n_orb: int
    alpha_strings: list[int]
    beta_strings: list[int]
    amplitudes: np.ndarray = field(repr=False)

    def as_dict(self) -> dict[Determinant, float]:
        out = {}
        for i, a in enumerate(self.alpha_strings):
            for j, b in enumerate(self.beta_strings):
                out[Determinant(a, b)] = float(self.amplitudes[i, j])
        return out

    def probabilities(self) -> np.ndarray:
        p = self.amplitudes.ravel() ** 2
        return p / p.sum()


def _chain(n_orb: int) -> list[tuple[int, int]]:
    even = [(k, k + 1) for k in range(0, n_orb - 1, 2)]
    odd = [(k, k + 1) for k in range(1, n_orb - 1, 2)]
    return even + odd


def build_epa(n_orb: int, n_alpha: int, n_beta: int, reps: int = 2) -> AnsatzCircuit:
    """Linear-entanglement Givens brick circuit, one parameter per gate.

    Gate order per repetition: alpha even pairs, alpha odd pairs, then the
    same for the beta block.
    """
    if n_orb < 1 or not (0 <= n_alpha <= n_orb and 0 <= n_beta <= n_orb):
        raise ValueError(f"invalid occupation ({n_alpha}, {n_beta}) for {n_orb} orbitals")
    if reps < 1:
        raise ValueError("reps must be at least 1")
    sector = comb(n_orb, n_alpha) * comb(n_orb, n_beta)
    if n_orb > MAX_ORBITALS or sector > SECTOR_LIMIT:
        raise CapacityError(f"sector of {sector} configurations exceeds {SECTOR_LIMIT}")
    if not 2 <= reps <= 4:
        log.warning("reps=%d lies outside the usual 2-4 range", reps)
    gates = []
    k = 0
    for _ in range(reps):
        for offset in (0, n_orb):
            for a, b in _chain(n_orb):
                gates.append((a + offset, b + offset, k))
                k += 1
    return AnsatzCircuit(n_orb, n_alpha, n_beta, reps, tuple(gates), k)


def initial_parameters(c: AnsatzCircuit, seed: int, scale: float = 0.1) -> np.ndarray:
    rng = np.random.default_rng([seed, 0xA75])
    return rng.uniform(-scale, scale, size=c.n_params)


def _strings(n_orb: int, n_el: int) -> list[int]:
    return sorted(sum(1 << p for p in c) for c in combinations(range(n_orb), n_el))


def _pairs(strings: list[int], index: dict[int, int], q0: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows where (q0, q0+1) reads |01> and their |10> partners."""
    lo, hi = [], []
    for s in strings:
        if not s >> q0 & 1 and s >> (q0 + 1) & 1:
            lo.append(index[s])
            hi.append(index[s ^ (0b11 << q0)])
    return np.array(lo, dtype=np.intp), np.array(hi, dtype=np.intp)


def statevector(c: AnsatzCircuit, theta, reference: Determinant) -> SectorState:
    """Apply the circuit to `reference` exactly within its sector.

    On the two-qubit {|01>, |10>} subspace (first character = lower qubit) a
    gate with angle t acts as [[cos t, -sin t], [sin t, cos t]].
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (c.n_params,):
        raise ValueError(f"expected {c.n_params} parameters, got {theta.shape}")
    ref = Determinant(*reference)
    if ref.alpha.bit_count() != c.n_alpha or ref.beta.bit_count() != c.n_beta:
        raise ValueError("reference determinant lies outside the circuit's sector")
    n = c.n_orb
    alphas = _strings(n, c.n_alpha)
    betas = _strings(n, c.n_beta)
    ia = {s: k for k, s in enumerate(alphas)}
    ib = {s: k for k, s in enumerate(betas)}
    # the two spin blocks never interact, so evolve each factor separately
    va = np.zeros(len(alphas))
    vb = np.zeros(len(betas))
    va[ia[ref.alpha]] = 1.0
    vb[ib[ref.beta]] = 1.0
    pa = {q: _pairs(alphas, ia, q) for q in range(n - 1)}
    pb = {q: _pairs(betas, ib, q) for q in range(n - 1)}
    for qa, qb, k in c.gates:
        ct, st = np.cos(theta[k]), np.sin(theta[k])
        if qa < n:
            v, (lo, hi) = va, pa[qa]
        else:
            v, (lo, hi) = vb, pb[qa - n]
        x01 = v[lo].copy()
        x10 = v[hi]
        v[lo] = ct * x01 - st * x10
        v[hi] = st * x01 + ct * x10
    return SectorState(n, alphas, betas, np.outer(va, vb))


def sample(
    c: AnsatzCircuit,
    theta,
    reference: Determinant,
    shots: int,
    seed,
) -> SampleBatch:
    """Draw `shots` bitstrings from the sector state's Born distribution."""
    if shots < 1:
        raise ValueError("shots must be positive")
    state = statevector(c, theta, reference)
    p = state.probabilities()
    rng = np.random.default_rng(seed)
    counts_arr = rng.multinomial(shots, p)
    nb = len(state.beta_strings)
    counts = {}
    for flat in np.flatnonzero(counts_arr):
        d = Determinant(state.alpha_strings[flat // nb], state.beta_strings[flat % nb])
        counts[to_bitstring(d, c.n_orb)] = int(counts_arr[flat])
    return SampleBatch(shots, dict(sorted(counts.items())), seed if isinstance(seed, int) else None)


def apply_bitflip_noise(b: SampleBatch, p: float, seed) -> SampleBatch:
    """Flip every bit of every shot independently with probability `p`."""
    if not 0 <= p < 1:
        raise ValueError(f"flip probability must lie in [0, 1), got {p}")
    if p == 0:
        return SampleBatch(b.shots, dict(b.counts), b.seed)
    rng = np.random.default_rng(seed)
    out: dict[str, int] = {}
    for bits, m in sorted(b.counts.items()):
        arr = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
        flips = rng.random((m, len(bits))) < p
        noisy = arr[None, :] ^ flips
        rows, mult = np.unique(noisy, axis=0, return_counts=True)
        for row, k in zip(rows, mult):
            key = "".join("1" if x else "0" for x in row)
            out[key] = out.get(key, 0) + int(k)
    return SampleBatch(b.shots, dict(sorted(out.items())), seed if isinstance(seed, int) else None)


def batch_determinants(b: SampleBatch) -> dict[Determinant, int]:
    """Decode bitstrings, merging counts (no sector check)."""
    out: dict[Determinant, int] = {}
    for bits, m in b.counts.items():
        d = from_bitstring(bits)
        out[d] = out.get(d, 0) + m
    return out
