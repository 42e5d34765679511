"""Heat-bath configuration interaction.

A determinant ``a`` outside the variational space is admitted when some
member ``i`` couples to it with ``|H_ai * c_i| >= epsilon``. Double
excitations are found through a per-orbital-pair table of integral
magnitudes sorted in descending order, so the scan for each occupied pair
stops at the first magnitude below ``epsilon / |c_i|``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations

from hivqe.determinants import Determinant, element, hf_determinant, occupied, tables
from hivqe.integrals import IntegralSet
from hivqe.solver import CIVector, SubspaceResult, solve_subspace

log = logging.getLogger(__name__)

__all__ = [
    "HCIConfig",
    "HCITraceRow",
    "HeatBathTable",
    "build_heatbath_table",
    "hci_expand",
    "hci_run",
]


@dataclass(frozen=True)
class HeatBathTable:
    """Sorted double-excitation couplings keyed by the occupied orbital pair.

    ``same_spin[(p, q)]`` (p < q) lists ``(r, s, |(pr|qs) - (ps|qr)|)`` with
    r < s; ``opposite_spin[(p, q)]`` (p alpha, q beta) lists
    ``(r, s, |(pr|qs)|)``. Orbitals are 0-based; zero magnitudes are dropped.
    """

    n_orb: int
    same_spin: dict[tuple[int, int], list[tuple[int, int, float]]]
    opposite_spin: dict[tuple[int, int], list[tuple[int, int, float]]]


@dataclass(frozen=True)
class HCIConfig:
    epsilon: float = 1e-4
    max_iterations: int = 50
    energy_tol: float = 1e-8

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.energy_tol > 0:
            raise ValueError(f"energy_tol must be positive, got {self.energy_tol}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class HCITraceRow:
    iteration: int
    energy: float
    n_dets: int


@dataclass
class HCIResult:
    trace: list[HCITraceRow]
    result: SubspaceResult
    converged: bool
    reason: str = ""

    @property
    def civector(self) -> CIVector:
        return self.result.civector


def build_heatbath_table(s: IntegralSet) -> HeatBathTable:
    n = s.n_orb
    _, eri = s.arrays
    same: dict[tuple[int, int], list[tuple[int, int, float]]] = {}
    opp: dict[tuple[int, int], list[tuple[int, int, float]]] = {}
    for p in range(n):
        for q in range(n):
            entries = []
            for r in range(n):
                if r == p:
                    continue
                for t in range(n):
                    if t == q:
                        continue
                    mag = abs(float(eri[p, r, q, t]))
                    if mag > 0.0:
                        entries.append((r, t, mag))
            entries.sort(key=lambda e: (-e[2], e[0], e[1]))
            opp[(p, q)] = entries
            if p < q:
                entries = []
                for r, t in combinations(range(n), 2):
                    if r in (p, q) or t in (p, q):
                        continue
                    mag = abs(float(eri[p, r, q, t] - eri[p, t, q, r]))
                    if mag > 0.0:
                        entries.append((r, t, mag))
                entries.sort(key=lambda e: (-e[2], e[0], e[1]))
                same[(p, q)] = entries
    return HeatBathTable(n, same, opp)


def _flip(mask: int, *bits: int) -> int:
    for b in bits:
        mask ^= 1 << b
    return mask


def hci_expand(
    v: CIVector | dict[Determinant, float],
    epsilon: float,
    table: HeatBathTable,
    s: IntegralSet,
) -> set[Determinant]:
    """Determinants outside `v` reached from it with ``|H_ai c_i| >= epsilon``."""
    amps = v.as_dict() if isinstance(v, CIVector) else dict(v)
    t = tables(s)
    n = s.n_orb
    found: set[Determinant] = set()
    for d, c in amps.items():
        ac = abs(c)
        if ac == 0.0:
            continue
        cutoff = epsilon / ac
        occ = (occupied(d.alpha), occupied(d.beta))
        masks = (d.alpha, d.beta)

        def admit(new: Determinant, mag: float) -> None:
            if new not in amps and mag * ac >= epsilon:
                found.add(new)

        # singles: full matrix element including the occupied-orbital sums
        for spin in (0, 1):
            mask = masks[spin]
            for i in occ[spin]:
                for a in range(n):
                    if mask >> a & 1:
                        continue
                    m = _flip(mask, i, a)
                    new = Determinant(m, d.beta) if spin == 0 else Determinant(d.alpha, m)
                    if new in amps or new in found:
                        continue
                    admit(new, abs(element(new, d, t)))

        # same-spin doubles
        for spin in (0, 1):
            mask = masks[spin]
            for p, q in combinations(occ[spin], 2):
                for r, u, mag in table.same_spin[(p, q)]:
                    if mag < cutoff:
                        break
                    if mask >> r & 1 or mask >> u & 1:
                        continue
                    m = _flip(mask, p, q, r, u)
                    new = Determinant(m, d.beta) if spin == 0 else Determinant(d.alpha, m)
                    admit(new, mag)

        # opposite-spin doubles
        for p in occ[0]:
            for q in occ[1]:
                for r, u, mag in table.opposite_spin[(p, q)]:
                    if mag < cutoff:
                        break
                    if d.alpha >> r & 1 or d.beta >> u & 1:
                        continue
                    admit(Determinant(_flip(d.alpha, p, r), _flip(d.beta, q, u)), mag)
    return found


def hci_run(
    s: IntegralSet,
    cfg: HCIConfig,
    start: Determinant | None = None,
    table: HeatBathTable | None = None,
) -> HCIResult:
    """Iterate expand -> union -> diagonalize until the space stops growing.

    The first trace row is the diagonalization of the starting determinant
    alone.
    """
    if start is None:
        start = hf_determinant(s.n_alpha, s.n_beta, s.n_orb)
    table = build_heatbath_table(s) if table is None else table
    dets = [Determinant(*start)]
    res = solve_subspace(dets, s)
    trace = [HCITraceRow(1, res.energy, res.n_dets)]
    log.info("hci iter 1: E=%.10f n_dets=%d", res.energy, res.n_dets)
    converged, reason = False, "max_iterations"
    for it in range(2, cfg.max_iterations + 1):
        new = hci_expand(res.civector, cfg.epsilon, table, s)
        if not new:
            converged, reason = True, "no new determinants"
            break
        dets = sorted(set(res.civector.dets) | new)
        prev = res.energy
        res = solve_subspace(dets, s, guess=res.civector)
        trace.append(HCITraceRow(it, res.energy, res.n_dets))
        log.info("hci iter %d: E=%.10f n_dets=%d", it, res.energy, res.n_dets)
        if abs(res.energy - prev) < cfg.energy_tol:
            converged, reason = True, "energy change below tolerance"
            break
    else:
        if cfg.max_iterations == 1:
            new = hci_expand(res.civector, cfg.epsilon, table, s)
            converged = not new
            reason = "no new determinants" if converged else reason
    return HCIResult(trace, res, converged, reason)
