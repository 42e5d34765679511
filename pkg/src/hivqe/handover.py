"""The HI-VQE handover loop.

Each iteration samples the ansatz, optionally repairs and enriches the
samples, diagonalizes the sampled subspace and the accumulated subspace, and
updates circuit parameters with SPSA using the sampled-subspace energy as
cost. Every random draw comes from a seed derived from ``(seed, iteration,
evaluation)`` so a run is reproducible bit for bit.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from hivqe.ansatz import (
    AnsatzCircuit,
    apply_bitflip_noise,
    initial_parameters,
    sample,
)
from hivqe.determinants import Determinant, hf_determinant
from hivqe.hci import HeatBathTable, build_heatbath_table
from hivqe.integrals import IntegralSet
from hivqe.optimizer import SPSASettings, propose_params
from hivqe.recovery import (
    OccupationSource,
    RecoveryResult,
    ReferenceOccupations,
    classical_expand,
    discard_invalid,
    hf_occupations,
    recover,
    tensor_product_expand,
)
from hivqe.solver import CIVector, SubspaceResult, solve_subspace

log = logging.getLogger(__name__)

__all__ = [
    "HIVQEConfig",
    "HIVQETraceRow",
    "HIVQEResult",
    "SamplingError",
    "run",
    "truncate_sampled",
    "truncate_total",
]

# evaluation slots inside one iteration
_EVAL_CENTER, _EVAL_PERTURBED = 0, 1


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class HIVQEConfig:
    shots: int = 2000
    max_iterations: int = 20
    sample_keep_limit: int = 1000
    total_trunc_threshold: float = 0.0
    enable_cr: bool = True
    enable_tp: bool = True
    enable_ce: bool = True
    epsilon_ce: float = 1e-3
    optimizer: SPSASettings = field(default_factory=SPSASettings)
    energy_tol: float = 1e-6
    patience: int = 3
    seed: int = 0
    readout_error: float = 0.0
    init_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValueError("shots must be at least 1")
        if self.sample_keep_limit < 1:
            raise ValueError("sample_keep_limit must be at least 1")
        if not 0 <= self.total_trunc_threshold < 1:
            raise ValueError("total_trunc_threshold must lie in [0, 1)")
        if not 0 <= self.readout_error < 1:
            raise ValueError("readout_error must lie in [0, 1)")
        if self.max_iterations < 1 or self.patience < 1:
            raise ValueError("max_iterations and patience must be at least 1")
        if isinstance(self.optimizer, dict):
            object.__setattr__(self, "optimizer", SPSASettings(**self.optimizer))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class HIVQETraceRow:
    iteration: int
    e_sampled: float
    e_total: float
    n_sampled: int
    n_total: int
    n_valid: int
    n_repaired: int
    theta_norm: float
    # diagnostics
    n_shots: int = 0
    n_fallback: int = 0
    n_discarded: int = 0
    n_kept: int = 0
    n_ce_added: int = 0


@dataclass
class HIVQEResult:
    trace: list[HIVQETraceRow]
    result: SubspaceResult
    converged: bool
    theta: np.ndarray
    monotonic_checked: bool
    error: str | None = None


def _canonical_rank(v: CIVector) -> list[int]:
    """Indices ordered by descending c^2, ties by canonical determinant order."""
    w = v.weights.tolist()
    return sorted(range(len(v)), key=lambda i: (-w[i], v.dets[i]))


def truncate_sampled(v: CIVector, k: int) -> list[Determinant]:
    """Top-`k` determinants by squared coefficient."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return [v.dets[i] for i in _canonical_rank(v)[:k]]


def truncate_total(v: CIVector, tau: float) -> list[Determinant]:
    """Determinants with ``c^2 >= tau``; never empty."""
    if not 0 <= tau < 1:
        raise ValueError("tau must lie in [0, 1)")
    w = v.weights
    kept = [d for d, wi in zip(v.dets, w.tolist()) if wi >= tau]
    if not kept:
        kept = [v.dets[_canonical_rank(v)[0]]]
    return kept


def _subvector(v: CIVector, dets: list[Determinant]) -> CIVector:
    amps = v.as_dict()
    c = np.array([amps[d] for d in dets])
    return CIVector(list(dets), c / np.linalg.norm(c))


class _Sampler:
    """Sampling + repair + enrichment + diagonalization for one parameter vector."""

    def __init__(self, s: IntegralSet, cfg: HIVQEConfig, circuit: AnsatzCircuit, ref: Determinant):
        self.s = s
        self.cfg = cfg
        self.circuit = circuit
        self.ref = ref

    def draw(self, theta, seed: list[int], occ: ReferenceOccupations) -> RecoveryResult:
        cfg = self.cfg
        for attempt in range(2):
            base = [*seed, attempt]
            batch = sample(self.circuit, theta, self.ref, cfg.shots, base + [0])
            if cfg.readout_error > 0:
                batch = apply_bitflip_noise(batch, cfg.readout_error, base + [1])
            na, nb = self.circuit.n_alpha, self.circuit.n_beta
            if cfg.enable_cr:
                rec = recover(batch, occ, na, nb, base + [2])
            else:
                rec = discard_invalid(batch, na, nb)
            if rec.counts:
                return rec
            log.warning("no usable samples at seed %s; resampling", base)
        raise SamplingError("sampled set empty after recovery, even after one retry")

    def sampled_space(self, rec: RecoveryResult) -> list[Determinant]:
        dets = rec.determinants
        if self.cfg.enable_tp:
            dets = tensor_product_expand(dets)
        return dets

    def energy(self, theta, seed, occ, guess=None) -> tuple[SubspaceResult, RecoveryResult]:
        rec = self.draw(theta, seed, occ)
        res = solve_subspace(self.sampled_space(rec), self.s, guess=guess)
        return res, rec


def run(
    s: IntegralSet,
    cfg: HIVQEConfig,
    circuit: AnsatzCircuit,
    theta0=None,
    table: HeatBathTable | None = None,
) -> HIVQEResult:
    na, nb = s.n_alpha, s.n_beta
    if (circuit.n_orb, circuit.n_alpha, circuit.n_beta) != (s.n_orb, na, nb):
        raise ValueError("circuit does not match the integral set's orbitals and electrons")
    ref = hf_determinant(na, nb, s.n_orb)
    theta = initial_parameters(circuit, cfg.seed, cfg.init_scale) if theta0 is None else np.asarray(theta0, float)
    if cfg.enable_ce and table is None:
        table = build_heatbath_table(s)

    sampler = _Sampler(s, cfg, circuit, ref)
    occ = hf_occupations(s.n_orb, na, nb)
    core: list[Determinant] = []
    total: SubspaceResult | None = None
    history: list[tuple[np.ndarray, float]] = []
    trace: list[HIVQETraceRow] = []
    streak = 0
    converged = False
    monotonic = cfg.total_trunc_threshold == 0
    error = None

    for t in range(cfg.max_iterations):
        try:
            # (1)-(4) sample, repair, enrich, diagonalize the sampled space
            occ_used = occ
            sampled, rec = sampler.energy(theta, [cfg.seed, t, _EVAL_CENTER], occ_used)
            # (5) keep the top sampled determinants
            kept = truncate_sampled(sampled.civector, cfg.sample_keep_limit)
            kept_vec = _subvector(sampled.civector, kept)
            # (6) optional classical expansion
            new = kept
            if cfg.enable_ce:
                new = classical_expand(kept_vec, cfg.epsilon_ce, table, s)
            # (7) accumulate and diagonalize
            union = sorted(set(core) | set(new))
            prev = None if total is None else total.energy
            guess = None if total is None else total.civector
            total = solve_subspace(union, s, guess=guess)
        except Exception as exc:  # abort with the trace so far
            log.error("iteration %d failed: %s", t, exc)
            error = f"{type(exc).__name__}: {exc}"
            break

        # (8) optional extraction of highly weighted determinants
        if cfg.total_trunc_threshold > 0:
            core = sorted(truncate_total(total.civector, cfg.total_trunc_threshold))
        else:
            core = union
        occ = ReferenceOccupations(
            tuple(total.occ_alpha.tolist()),
            tuple(total.occ_beta.tolist()),
            OccupationSource.PREVIOUS_ITERATION,
        )

        trace.append(
            HIVQETraceRow(
                iteration=t,
                e_sampled=sampled.energy,
                e_total=total.energy,
                n_sampled=sampled.n_dets,
                n_total=total.n_dets,
                n_valid=rec.n_valid,
                n_repaired=rec.n_repaired,
                theta_norm=float(np.linalg.norm(theta)),
                n_shots=cfg.shots,
                n_fallback=rec.n_fallback,
                n_discarded=rec.n_discarded,
                n_kept=len(kept),
                n_ce_added=len(new) - len(kept),
            )
        )
        log.info(
            "iter %d: E_sampled=%.10f E_total=%.10f n_sampled=%d n_total=%d",
            t, sampled.energy, total.energy, sampled.n_dets, total.n_dets,
        )

        if prev is not None and abs(total.energy - prev) < cfg.energy_tol:
            streak += 1
        else:
            streak = 0
        if streak >= cfg.patience:
            converged = True
            break
        if t == cfg.max_iterations - 1:
            break

        # (9) parameter update on the sampled-subspace energy
        history.append((theta, sampled.energy))

        def cost(x, sign, _t=t, _occ=occ_used):
            # theta+ and theta- share one stream (common random numbers)
            try:
                return sampler.energy(x, [cfg.seed, _t, _EVAL_PERTURBED], _occ)[0].energy
            except Exception as exc:
                raise RuntimeError(f"SPSA cost evaluation failed: {exc}") from exc

        try:
            step = propose_params(history, cfg.optimizer, [cfg.seed], cost)
        except Exception as exc:
            log.error("parameter update failed: %s", exc)
            error = f"{type(exc).__name__}: {exc}"
            break
        theta = step.theta_next

    if total is None:
        raise SamplingError(error or "no iteration completed")
    return HIVQEResult(trace, total, converged, np.asarray(theta), monotonic, error)
