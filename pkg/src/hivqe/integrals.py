"""FCIDUMP reading/writing and the spatial-orbital integral container.

Two-electron integrals are kept in chemists' notation (pq|rs) under a single
canonical key per 8-fold permutation class. Indices are 1-based, as in the
file format.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

__all__ = [
    "FCIDUMPError",
    "FormatError",
    "BoundsError",
    "ConsistencyError",
    "IntegralSet",
    "canonical_pair",
    "canonical_quad",
    "parse_fcidump",
    "read_fcidump",
    "write_fcidump",
]

_CONFLICT_TOL = 1e-12


class FCIDUMPError(ValueError):
    """Base class for FCIDUMP problems."""


class FormatError(FCIDUMPError):
    pass


class BoundsError(FCIDUMPError):
    pass


class ConsistencyError(FCIDUMPError):
    pass


def canonical_pair(p: int, q: int) -> tuple[int, int]:
    return (p, q) if p <= q else (q, p)


def canonical_quad(p: int, q: int, r: int, s: int) -> tuple[int, int, int, int]:
    """Lexicographically smallest member of the 8-fold symmetry class of (pq|rs)."""
    a = (p, q) if p <= q else (q, p)
    b = (r, s) if r <= s else (s, r)
    return a + b if a <= b else b + a


@dataclass(frozen=True)
class IntegralSet:
    n_orb: int
    n_elec: int
    ms2: int
    core_energy: float = 0.0
    one_body: Mapping[tuple[int, int], float] = field(default_factory=dict)
    two_body: Mapping[tuple[int, int, int, int], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_orb < 0 or self.n_elec < 0:
            raise ValueError("n_orb and n_elec must be non-negative")
        if (self.n_elec + self.ms2) % 2 or abs(self.ms2) > self.n_elec:
            raise ValueError(f"inconsistent NELEC={self.n_elec}, MS2={self.ms2}")
        one = {}
        for (p, q), v in self.one_body.items():
            self._check(p, q)
            one[canonical_pair(p, q)] = float(v)
        two = {}
        for (p, q, r, s), v in self.two_body.items():
            self._check(p, q, r, s)
            two[canonical_quad(p, q, r, s)] = float(v)
        object.__setattr__(self, "one_body", one)
        object.__setattr__(self, "two_body", two)

    def _check(self, *idx: int) -> None:
        for i in idx:
            if not 1 <= i <= self.n_orb:
                raise BoundsError(f"orbital index {i} outside [1, {self.n_orb}]")

    @property
    def n_alpha(self) -> int:
        return (self.n_elec + self.ms2) // 2

    @property
    def n_beta(self) -> int:
        return (self.n_elec - self.ms2) // 2

    def h1(self, p: int, q: int) -> float:
        return self.one_body.get(canonical_pair(p, q), 0.0)

    def g2(self, p: int, q: int, r: int, s: int) -> float:
        return self.two_body.get(canonical_quad(p, q, r, s), 0.0)

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense 0-based (h1, eri) arrays with all symmetry copies filled in."""
        n = self.n_orb
        h1 = np.zeros((n, n))
        for (p, q), v in self.one_body.items():
            h1[p - 1, q - 1] = h1[q - 1, p - 1] = v
        eri = np.zeros((n, n, n, n))
        for (p, q, r, s), v in self.two_body.items():
            p, q, r, s = p - 1, q - 1, r - 1, s - 1
            for a, b, c, d in (
                (p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p),
            ):
                eri[a, b, c, d] = v
        h1.flags.writeable = False
        eri.flags.writeable = False
        return h1, eri

    @cached_property
    def fingerprint(self) -> str:
        """SHA-256 of the canonical FCIDUMP rendering."""
        return hashlib.sha256(write_fcidump(self).encode()).hexdigest()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntegralSet):
            return NotImplemented
        return (
            self.n_orb == other.n_orb
            and self.n_elec == other.n_elec
            and self.ms2 == other.ms2
            and self.core_energy == other.core_energy
            and self.one_body == other.one_body
            and self.two_body == other.two_body
        )

    __hash__ = None  # type: ignore[assignment]


# -- parsing ---------------------------------------------------------------

_HEADER_END = re.compile(r"(&END|/)\s*$", re.IGNORECASE)
_KEYVAL = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([^=]*?)(?=,?\s*[A-Za-z_][A-Za-z0-9_]*\s*=|$)")


def _split_header(lines: list[str]) -> tuple[str, int]:
    """Join namelist lines up to the terminator; return (header text, body start)."""
    if not lines or not lines[0].lstrip().upper().startswith("&FCI"):
        first = lines[0].split()[0] if lines and lines[0].split() else "<empty>"
        raise FormatError(f"expected '&FCI' namelist header, got {first!r}")
    chunks = []
    for i, line in enumerate(lines):
        stripped = line.strip()
        if _HEADER_END.search(stripped):
            chunks.append(_HEADER_END.sub("", stripped))
            return " ".join(chunks), i + 1
        chunks.append(stripped)
    raise FormatError("namelist header has no '&END' or '/' terminator")


def _header_fields(header: str) -> dict[str, str]:
    body = re.sub(r"^&FCI", "", header.strip(), flags=re.IGNORECASE).strip()
    out: dict[str, str] = {}
    for m in _KEYVAL.finditer(body):
        out[m.group(1).upper()] = m.group(2).strip().rstrip(",").strip()
    leftover = _KEYVAL.sub("", body).replace(",", "").strip()
    if leftover:
        raise FormatError(f"unparseable header token {leftover.split()[0]!r}")
    return out


def _header_int(fields: dict[str, str], key: str, default: int | None = None) -> int:
    if key not in fields:
        if default is None:
            raise FormatError(f"header is missing {key}")
        return default
    tok = fields[key]
    try:
        return int(tok)
    except ValueError:
        raise FormatError(f"bad value for {key}: {tok!r}") from None


def parse_fcidump(text: str) -> IntegralSet:
    lines = text.splitlines()
    header, start = _split_header(lines)
    fields = _header_fields(header)
    norb = _header_int(fields, "NORB")
    nelec = _header_int(fields, "NELEC")
    ms2 = _header_int(fields, "MS2", 0)
    if norb < 0 or norb > 64:
        raise FormatError(f"NORB={norb} outside supported range [0, 64]")
    # ORBSYM / ISYM are read but unused.

    one: dict[tuple[int, int], float] = {}
    two: dict[tuple[int, int, int, int], float] = {}
    core: float | None = None

    def store(table: dict, key: tuple, value: float, lineno: int) -> None:
        old = table.get(key)
        if old is not None and abs(old - value) > _CONFLICT_TOL:
            raise ConsistencyError(
                f"line {lineno}: conflicting values {old!r} and {value!r} for index {key}"
            )
        table[key] = value

    for lineno, line in enumerate(lines[start:], start=start + 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise FormatError(f"line {lineno}: expected 'value i j k l', got {line.strip()!r}")
        try:
            value = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(t) for t in parts[1:])
        except ValueError:
            raise FormatError(f"line {lineno}: unparseable entry {line.strip()!r}") from None
        for idx in (i, j, k, l):
            if not 0 <= idx <= norb:
                raise BoundsError(f"line {lineno}: index {idx} outside [0, {norb}]")
        if i == j == k == l == 0:
            if core is not None and abs(core - value) > _CONFLICT_TOL:
                raise ConsistencyError(f"line {lineno}: second core energy {value!r}")
            core = value
        elif k == 0 and l == 0 and i > 0 and j > 0:
            store(one, canonical_pair(i, j), value, lineno)
        elif i and j and k and l:
            store(two, canonical_quad(i, j, k, l), value, lineno)
        elif i > 0 and j == k == l == 0:
            continue  # orbital energies, not needed
        else:
            raise FormatError(f"line {lineno}: unsupported index pattern {i} {j} {k} {l}")

    return IntegralSet(
        n_orb=norb,
        n_elec=nelec,
        ms2=ms2,
        core_energy=0.0 if core is None else core,
        one_body=one,
        two_body=two,
    )


def read_fcidump(path: str | Path) -> IntegralSet:
    return parse_fcidump(Path(path).read_text())


def _iter_body(s: IntegralSet) -> Iterator[str]:
    for key in sorted(s.two_body):
        yield f"{s.two_body[key]!r} {key[0]} {key[1]} {key[2]} {key[3]}"
    for key in sorted(s.one_body):
        yield f"{s.one_body[key]!r} {key[0]} {key[1]} 0 0"
    yield f"{s.core_energy!r} 0 0 0 0"


def write_fcidump(s: IntegralSet) -> str:
    """Render `s` canonically; ``parse_fcidump`` inverts this exactly.

    Floats are written with ``repr`` so every value survives the round trip
    bit for bit.
    """
    orbsym = ",".join("1" for _ in range(s.n_orb))
    head = f"&FCI NORB={s.n_orb},NELEC={s.n_elec},MS2={s.ms2},"
    if s.n_orb:
        head += f"\n  ORBSYM={orbsym},"
    head += "\n  ISYM=1,\n&END"
    return "\n".join([head, *_iter_body(s)]) + "\n"
