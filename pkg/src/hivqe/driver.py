"""Run FCI, HCI or HI-VQE on one integral set and write the artifacts."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from hivqe import reporting
from hivqe.ansatz import build_epa
from hivqe.determinants import cas_determinants
from hivqe.handover import HIVQEConfig, HIVQEResult
from hivqe.handover import run as hivqe_run
from hivqe.hci import HCIConfig, hci_run
from hivqe.integrals import IntegralSet
from hivqe.optimizer import SPSASettings
from hivqe.solver import DENSE_LIMIT, CapacityError, SubspaceResult, build_hamiltonian, dense_fci_oracle

log = logging.getLogger(__name__)

METHODS = ("fci", "hci", "hivqe")


@dataclass
class MethodConfig:
    """Everything a run needs besides the integrals; built from config file + flags."""

    method: str = "hci"
    seed: int = 0
    hci: HCIConfig = field(default_factory=HCIConfig)
    hivqe: HIVQEConfig = field(default_factory=HIVQEConfig)
    reps: int = 2

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MethodConfig":
        data = dict(data)
        unknown = set(data) - {f.name for f in fields(cls)} - {"input", "out"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        hci = HCIConfig(**data.get("hci", {}))
        hv = dict(data.get("hivqe", {}))
        if "optimizer" in hv:
            hv["optimizer"] = SPSASettings(**hv["optimizer"])
        seed = int(data.get("seed", hv.get("seed", 0)))
        hv["seed"] = seed
        return cls(
            method=data.get("method", "hci"),
            seed=seed,
            hci=hci,
            hivqe=HIVQEConfig(**hv),
            reps=int(data.get("reps", 2)),
        )

    def with_overrides(self, *, method=None, epsilon=None, shots=None, seed=None,
                       noise=None) -> "MethodConfig":
        cfg = self
        if method is not None:
            cfg = replace(cfg, method=method)
        if epsilon is not None:
            cfg = replace(cfg, hci=replace(cfg.hci, epsilon=epsilon),
                          hivqe=replace(cfg.hivqe, epsilon_ce=epsilon))
        if shots is not None:
            cfg = replace(cfg, hivqe=replace(cfg.hivqe, shots=shots))
        if seed is not None:
            cfg = replace(cfg, seed=seed, hivqe=replace(cfg.hivqe, seed=seed))
        if noise is not None:
            cfg = replace(cfg, hivqe=replace(cfg.hivqe, readout_error=noise))
        if cfg.method not in METHODS:
            raise ValueError(f"unknown method {cfg.method!r}; choose from {METHODS}")
        return cfg

    def echo(self) -> dict[str, Any]:
        """The part of the config that influenced this method."""
        out: dict[str, Any] = {"method": self.method, "seed": self.seed}
        if self.method == "hci":
            out["hci"] = asdict(self.hci)
        elif self.method == "hivqe":
            out["hivqe"] = asdict(self.hivqe)
            out["reps"] = self.reps
        return out


@dataclass
class RunOutcome:
    method: str
    energy: float
    n_dets: int
    converged: bool
    iterations: int
    result: SubspaceResult
    trace: list
    error: str | None = None
    hivqe: HIVQEResult | None = None


def run_method(s: IntegralSet, cfg: MethodConfig) -> RunOutcome:
    if cfg.method == "fci":
        dets = cas_determinants(s.n_orb, s.n_alpha, s.n_beta)
        if len(dets) > DENSE_LIMIT:
            raise CapacityError(f"CAS of {len(dets)} determinants exceeds the dense limit {DENSE_LIMIT}")
        res = dense_fci_oracle(dets, s)
        return RunOutcome("fci", res.energy, res.n_dets, True, 1, res,
                          [reporting.EnergyRow(1, res.energy, res.n_dets)])
    if cfg.method == "hci":
        out = hci_run(s, cfg.hci)
        rows = [reporting.EnergyRow(r.iteration, r.energy, r.n_dets) for r in out.trace]
        return RunOutcome("hci", out.result.energy, out.result.n_dets, out.converged,
                          len(rows), out.result, rows)
    circuit = build_epa(s.n_orb, s.n_alpha, s.n_beta, cfg.reps)
    out = hivqe_run(s, cfg.hivqe, circuit)
    return RunOutcome("hivqe", out.result.energy, out.result.n_dets, out.converged,
                      len(out.trace), out.result, out.trace, out.error, out)


def write_artifacts(outcome: RunOutcome, s: IntegralSet, cfg: MethodConfig, input_path: str,
                    out_dir: Path, dump_hamiltonian: bool = False) -> dict[str, Any]:
    out_dir.mkdir(parents=True, exist_ok=True)
    if outcome.method == "hivqe":
        reporting.write_hivqe_trace(out_dir / "trace.csv", outcome.trace)
        reporting.write_diagnostics(out_dir / "diagnostics.csv", outcome.trace)
    else:
        reporting.write_energy_trace(out_dir / "trace.csv", outcome.trace)
    if dump_hamiltonian:
        build_hamiltonian(outcome.result.civector.dets, s).dump(out_dir / "hamiltonian.txt")
    summary = reporting.run_summary(
        method=outcome.method,
        input_path=input_path,
        s=s,
        energy=outcome.energy,
        n_dets=outcome.n_dets,
        converged=outcome.converged,
        iterations=outcome.iterations,
        config=cfg.echo(),
        error=outcome.error,
    )
    reporting.write_json(out_dir / "summary.json", summary)
    return summary
