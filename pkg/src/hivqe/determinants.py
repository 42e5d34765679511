"""Bit-mask Slater determinants and Slater-Condon matrix elements.

A determinant is a pair of Python ints. Bit ``p`` of ``alpha`` set means
spatial orbital ``p + 1`` holds an alpha electron; same for ``beta``.
Spin orbitals are ordered alpha block first, ascending within a block, and
fermionic signs follow from that ordering.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, NamedTuple

from hivqe.integrals import IntegralSet

__all__ = [
    "MAX_ORBITALS",
    "Determinant",
    "ExcitationInfo",
    "hf_determinant",
    "excitation_info",
    "matrix_element",
    "singles_and_doubles",
    "cas_determinants",
    "occupied",
    "render",
    "parse_determinant",
    "to_bitstring",
    "from_bitstring",
]

MAX_ORBITALS = 64


class Determinant(NamedTuple):
    alpha: int
    beta: int

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return f"Determinant(alpha={self.alpha:#b}, beta={self.beta:#b})"


@dataclass(frozen=True)
class ExcitationInfo:
    degree_alpha: int
    degree_beta: int
    holes_alpha: tuple[int, ...]
    particles_alpha: tuple[int, ...]
    holes_beta: tuple[int, ...]
    particles_beta: tuple[int, ...]
    phase: int

    @property
    def degree(self) -> int:
        return self.degree_alpha + self.degree_beta


def occupied(mask: int) -> list[int]:
    """0-based indices of set bits, ascending."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def hf_determinant(n_alpha: int, n_beta: int, n_orb: int) -> Determinant:
    if n_orb > MAX_ORBITALS:
        raise ValueError(f"n_orb={n_orb} exceeds the {MAX_ORBITALS}-orbital mask limit")
    if min(n_alpha, n_beta) < 0 or max(n_alpha, n_beta) > n_orb:
        raise ValueError(f"cannot place ({n_alpha}, {n_beta}) electrons in {n_orb} orbitals")
    return Determinant((1 << n_alpha) - 1, (1 << n_beta) - 1)


def _between(mask: int, i: int, a: int) -> int:
    """Number of set bits strictly between orbitals i and a."""
    lo, hi = (i, a) if i < a else (a, i)
    return (mask & (((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1))).bit_count()


def _channel_phase(mask: int, holes: list[int], parts: list[int]) -> tuple[int, int]:
    """Apply hole->particle moves pairwise in ascending order; return (sign, final mask)."""
    sign = 1
    for i, a in zip(holes, parts):
        if _between(mask, i, a) & 1:
            sign = -sign
        mask ^= (1 << i) | (1 << a)
    return sign, mask


def excitation_info(d1: Determinant, d2: Determinant) -> ExcitationInfo:
    xa = d1.alpha ^ d2.alpha
    xb = d1.beta ^ d2.beta
    ha = occupied(xa & d1.alpha)
    pa = occupied(xa & d2.alpha)
    hb = occupied(xb & d1.beta)
    pb = occupied(xb & d2.beta)
    sa, _ = _channel_phase(d1.alpha, ha, pa)
    sb, _ = _channel_phase(d1.beta, hb, pb)
    return ExcitationInfo(
        degree_alpha=len(ha),
        degree_beta=len(hb),
        holes_alpha=tuple(ha),
        particles_alpha=tuple(pa),
        holes_beta=tuple(hb),
        particles_beta=tuple(pb),
        phase=sa * sb,
    )


def _diagonal(occ_a: list[int], occ_b: list[int], h1, eri) -> float:
    e = 0.0
    for p in occ_a:
        e += h1[p][p]
    for p in occ_b:
        e += h1[p][p]
    for idx, p in enumerate(occ_a):
        for q in occ_a[idx + 1:]:
            e += eri[p][p][q][q] - eri[p][q][q][p]
    for idx, p in enumerate(occ_b):
        for q in occ_b[idx + 1:]:
            e += eri[p][p][q][q] - eri[p][q][q][p]
    for p in occ_a:
        for q in occ_b:
            e += eri[p][p][q][q]
    return e


def _single(i: int, a: int, same: list[int], other: list[int], h1, eri) -> float:
    v = h1[i][a]
    for q in same:
        v += eri[i][a][q][q] - eri[i][q][q][a]
    for q in other:
        v += eri[i][a][q][q]
    return v


class _Tables:
    """Nested-list views of the integrals; indexing lists beats numpy scalars."""

    __slots__ = ("h1", "eri", "core")

    def __init__(self, s: IntegralSet):
        h1, eri = s.arrays
        self.h1 = h1.tolist()
        self.eri = eri.tolist()
        self.core = s.core_energy


def tables(s: IntegralSet) -> _Tables:
    t = s.__dict__.get("_sc_tables")
    if t is None:
        t = _Tables(s)
        s.__dict__["_sc_tables"] = t
    return t


def matrix_element(d1: Determinant, d2: Determinant, s: IntegralSet) -> float:
    """<d1|H|d2> by the Slater-Condon rules (core energy on the diagonal)."""
    return element(d1, d2, tables(s))


def element(d1: Determinant, d2: Determinant, t: _Tables) -> float:
    xa = d1.alpha ^ d2.alpha
    xb = d1.beta ^ d2.beta
    na = xa.bit_count()
    nb = xb.bit_count()
    if na + nb > 4:
        return 0.0
    h1, eri = t.h1, t.eri
    if na + nb == 0:
        return t.core + _diagonal(occupied(d1.alpha), occupied(d1.beta), h1, eri)
    if na + nb == 2:
        if na:
            mask, other, x = d1.alpha, d1.beta, xa
            target = d2.alpha
        else:
            mask, other, x = d1.beta, d1.alpha, xb
            target = d2.beta
        i = (x & mask).bit_length() - 1
        a = (x & target).bit_length() - 1
        sign = -1.0 if _between(mask, i, a) & 1 else 1.0
        same = occupied(mask & ~(1 << i))
        return sign * _single(i, a, same, occupied(other), h1, eri)
    if na == 4 or nb == 4:
        mask, x, target = (d1.alpha, xa, d2.alpha) if na else (d1.beta, xb, d2.beta)
        holes = occupied(x & mask)
        parts = occupied(x & target)
        sign, _ = _channel_phase(mask, holes, parts)
        i, j = holes
        a, b = parts
        return sign * (eri[i][a][j][b] - eri[i][b][j][a])
    # one alpha and one beta excitation
    i = (xa & d1.alpha).bit_length() - 1
    a = (xa & d2.alpha).bit_length() - 1
    j = (xb & d1.beta).bit_length() - 1
    b = (xb & d2.beta).bit_length() - 1
    odd = (_between(d1.alpha, i, a) + _between(d1.beta, j, b)) & 1
    return (-1.0 if odd else 1.0) * eri[i][a][j][b]


def _channel_singles(mask: int, n_orb: int) -> Iterator[int]:
    occ = occupied(mask)
    virt = [p for p in range(n_orb) if not mask >> p & 1]
    for i in occ:
        for a in virt:
            yield mask ^ (1 << i) ^ (1 << a)


def _channel_doubles(mask: int, n_orb: int) -> Iterator[int]:
    occ = occupied(mask)
    virt = [p for p in range(n_orb) if not mask >> p & 1]
    for i, j in combinations(occ, 2):
        for a, b in combinations(virt, 2):
            yield mask ^ (1 << i) ^ (1 << j) ^ (1 << a) ^ (1 << b)


def singles_and_doubles(d: Determinant, n_orb: int) -> Iterator[Determinant]:
    """All determinants one or two spin-orbital excitations away from `d`.

    Order: alpha singles, beta singles, alpha-alpha doubles, beta-beta
    doubles, alpha-beta doubles.
    """
    a_singles = list(_channel_singles(d.alpha, n_orb))
    b_singles = list(_channel_singles(d.beta, n_orb))
    for a in a_singles:
        yield Determinant(a, d.beta)
    for b in b_singles:
        yield Determinant(d.alpha, b)
    for a in _channel_doubles(d.alpha, n_orb):
        yield Determinant(a, d.beta)
    for b in _channel_doubles(d.beta, n_orb):
        yield Determinant(d.alpha, b)
    for a in a_singles:
        for b in b_singles:
            yield Determinant(a, b)


def _strings(n_orb: int, n_el: int) -> list[int]:
    return sorted(sum(1 << p for p in c) for c in combinations(range(n_orb), n_el))


def cas_determinants(n_orb: int, n_alpha: int, n_beta: int) -> list[Determinant]:
    """Full complete-active-space list in canonical (alpha, beta) order."""
    alphas = _strings(n_orb, n_alpha)
    betas = _strings(n_orb, n_beta)
    return [Determinant(a, b) for a in alphas for b in betas]


# -- text forms ------------------------------------------------------------

def _occ_string(mask: int, n_orb: int) -> str:
    return "".join("1" if mask >> p & 1 else "0" for p in range(n_orb))


def render(d: Determinant, n_orb: int) -> str:
    """``a:1100|b:1100`` with orbital 1 leftmost."""
    return f"a:{_occ_string(d.alpha, n_orb)}|b:{_occ_string(d.beta, n_orb)}"


_RENDERED = re.compile(r"^a:([01]*)\|b:([01]*)$")


def _mask(bits: str) -> int:
    return sum(1 << p for p, ch in enumerate(bits) if ch == "1")


def parse_determinant(text: str) -> tuple[Determinant, int]:
    m = _RENDERED.match(text.strip())
    if not m or len(m.group(1)) != len(m.group(2)):
        raise ValueError(f"not a rendered determinant: {text!r}")
    return Determinant(_mask(m.group(1)), _mask(m.group(2))), len(m.group(1))


def to_bitstring(d: Determinant, n_orb: int) -> str:
    """Qubit string: character k is qubit k (alpha orbitals, then beta)."""
    return _occ_string(d.alpha, n_orb) + _occ_string(d.beta, n_orb)


def from_bitstring(bits: str) -> Determinant:
    n = len(bits) // 2
    if len(bits) != 2 * n or set(bits) - {"0", "1"}:
        raise ValueError(f"malformed bitstring {bits!r}")
    return Determinant(_mask(bits[:n]), _mask(bits[n:]))
