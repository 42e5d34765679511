"""Configuration recovery and the two optional subspace enrichments.

Recovery repairs sampled bitstrings whose per-spin electron count is wrong.
Surplus electrons are removed from an occupied orbital drawn with weight
``1 - occ(p)``; missing ones are added to an empty orbital drawn with weight
``occ(p)``, where ``occ`` are reference occupation numbers (Hartree-Fock at
the start, afterwards those of the previous diagonalization).
"""

from __future__ import annotations

import enum
import logging
from collections import Counter
from dataclasses import dataclass

import numpy as np

from hivqe.ansatz import SampleBatch
from hivqe.determinants import Determinant, from_bitstring, occupied
from hivqe.hci import HeatBathTable, hci_expand
from hivqe.integrals import IntegralSet
from hivqe.solver import CIVector

log = logging.getLogger(__name__)

__all__ = [
    "OccupationSource",
    "ReferenceOccupations",
    "RecoveryResult",
    "hf_occupations",
    "recover",
    "tensor_product_expand",
    "classical_expand",
]


class OccupationSource(str, enum.Enum):
    HARTREE_FOCK = "hartree_fock"
    PREVIOUS_ITERATION = "previous_iteration"
    DESIGNATED = "designated"


@dataclass(frozen=True)
class ReferenceOccupations:
    occ_alpha: tuple[float, ...]
    occ_beta: tuple[float, ...]
    source: OccupationSource = OccupationSource.DESIGNATED

    def __post_init__(self) -> None:
        if len(self.occ_alpha) != len(self.occ_beta):
            raise ValueError("alpha and beta occupations differ in length")
        clamp = lambda xs: tuple(min(1.0, max(0.0, float(x))) for x in xs)  # noqa: E731
        object.__setattr__(self, "occ_alpha", clamp(self.occ_alpha))
        object.__setattr__(self, "occ_beta", clamp(self.occ_beta))

    @property
    def n_orb(self) -> int:
        return len(self.occ_alpha)


def hf_occupations(n_orb: int, n_alpha: int, n_beta: int) -> ReferenceOccupations:
    return ReferenceOccupations(
        tuple(1.0 if p < n_alpha else 0.0 for p in range(n_orb)),
        tuple(1.0 if p < n_beta else 0.0 for p in range(n_orb)),
        OccupationSource.HARTREE_FOCK,
    )


@dataclass
class RecoveryResult:
    """Recovered determinants with multiplicities plus per-shot diagnostics."""

    counts: Counter
    n_valid: int = 0
    n_repaired: int = 0
    n_fallback: int = 0
    n_discarded: int = 0

    @property
    def determinants(self) -> list[Determinant]:
        return sorted(self.counts)


def _repair_channel(mask: int, target: int, occ: tuple[float, ...], rng) -> tuple[int, bool]:
    """Fix one spin channel's popcount; returns (mask, used uniform fallback)."""
    fallback = False
    n = len(occ)
    while mask.bit_count() > target:
        cands = occupied(mask)
        w = np.array([1.0 - occ[p] for p in cands])
        if w.sum() <= 0.0:
            w = np.ones(len(cands))
            fallback = True
        mask ^= 1 << cands[int(rng.choice(len(cands), p=w / w.sum()))]
    while mask.bit_count() < target:
        cands = [p for p in range(n) if not mask >> p & 1]
        w = np.array([occ[p] for p in cands])
        if w.sum() <= 0.0:
            w = np.ones(len(cands))
            fallback = True
        mask |= 1 << cands[int(rng.choice(len(cands), p=w / w.sum()))]
    return mask, fallback


def recover(
    raw: SampleBatch,
    ref: ReferenceOccupations,
    n_alpha: int,
    n_beta: int,
    seed,
) -> RecoveryResult:
    """Map every shot into the (n_alpha, n_beta) sector.

    Shots are processed in sorted bitstring order from one seeded stream, so
    the output depends only on the batch, the reference and the seed.
    """
    rng = np.random.default_rng(seed)
    out = RecoveryResult(Counter())
    for bits, m in sorted(raw.counts.items()):
        if len(bits) != 2 * ref.n_orb:
            raise ValueError(f"bitstring {bits!r} does not match {ref.n_orb} orbitals")
        d = from_bitstring(bits)
        if d.alpha.bit_count() == n_alpha and d.beta.bit_count() == n_beta:
            out.counts[d] += m
            out.n_valid += m
            continue
        for _ in range(m):
            a, fa = _repair_channel(d.alpha, n_alpha, ref.occ_alpha, rng)
            b, fb = _repair_channel(d.beta, n_beta, ref.occ_beta, rng)
            out.counts[Determinant(a, b)] += 1
            out.n_repaired += 1
            if fa or fb:
                out.n_fallback += 1
    if out.n_fallback:
        log.info("recovery used uniform fallback weights for %d shots", out.n_fallback)
    return out


def discard_invalid(raw: SampleBatch, n_alpha: int, n_beta: int) -> RecoveryResult:
    """Keep only shots already in the sector (recovery disabled)."""
    out = RecoveryResult(Counter())
    for bits, m in sorted(raw.counts.items()):
        d = from_bitstring(bits)
        if d.alpha.bit_count() == n_alpha and d.beta.bit_count() == n_beta:
            out.counts[d] += m
            out.n_valid += m
        else:
            out.n_discarded += m
    return out


def tensor_product_expand(dets) -> list[Determinant]:
    """All recombinations of the distinct alpha and beta strings, sorted."""
    dets = list(dets)
    if not dets:
        raise ValueError("tensor product of an empty set")
    alphas = sorted({d[0] for d in dets})
    betas = sorted({d[1] for d in dets})
    return [Determinant(a, b) for a in alphas for b in betas]


def classical_expand(
    v: CIVector,
    epsilon_ce: float,
    table: HeatBathTable,
    s: IntegralSet,
) -> list[Determinant]:
    """One heat-bath step from `v`, united with `v`'s own determinants."""
    return sorted(set(v.dets) | hci_expand(v, epsilon_ce, table, s))
