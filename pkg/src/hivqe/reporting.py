"""CSV/JSON artifacts, PES tables, dissociation energies and run comparison.

Energies are carried in hartree at full double precision everywhere and
written with ``repr``; rounding happens only in the ``render_*`` helpers.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

from hivqe.integrals import IntegralSet

SCHEMA_VERSION = "1"
# CODATA 2018 hartree energy in eV
HARTREE_TO_EV = 27.211386245988


@dataclass(frozen=True)
class EnergyRow:
    iteration: int
    energy: float
    n_dets: int


@dataclass(frozen=True)
class PESRecord:
    label: Decimal
    energy: float | None
    n_dets: int | None
    method: str
    status: str = "ok"


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict[str, Any]:
    text = resources.files("hivqe.schemas").joinpath(f"{name}.v{SCHEMA_VERSION}.json").read_text()
    return json.loads(text)


def columns(name: str) -> list[str]:
    return [c["name"] for c in load_schema(name)["columns"]]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, schema: str, rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns(schema))
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    Path(path).write_text(buf.getvalue())


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_energy_trace(path: Path, rows: Sequence[EnergyRow]) -> None:
    _write_csv(path, "energy_trace", ((r.iteration, r.energy, r.n_dets) for r in rows))


def write_hivqe_trace(path: Path, rows) -> None:
    _write_csv(path, "hivqe_trace", (
        (r.iteration, r.e_sampled, r.e_total, r.n_sampled, r.n_total, r.n_valid,
         r.n_repaired, r.theta_norm)
        for r in rows
    ))


def write_diagnostics(path: Path, rows) -> None:
    _write_csv(path, "hivqe_diagnostics", (
        (r.iteration, r.n_shots, r.n_valid, r.n_repaired, r.n_fallback, r.n_discarded,
         r.n_kept, r.n_ce_added)
        for r in rows
    ))


def write_json(path: Path, data: dict) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def run_summary(*, method, input_path, s: IntegralSet, energy, n_dets, converged, iterations,
                config, error=None) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "method": method,
        "input": str(input_path),
        "fingerprint": s.fingerprint,
        "n_orb": s.n_orb,
        "n_elec": s.n_elec,
        "ms2": s.ms2,
        "energy_ha": float(energy),
        "n_dets": int(n_dets),
        "converged": bool(converged),
        "iterations": int(iterations),
        "config": config,
        "error": error,
    }


# -- PES ------------------------------------------------------------------

def parse_label(text: str) -> Decimal:
    try:
        return Decimal(text.strip())
    except InvalidOperation:
        raise ValueError(f"PES label {text!r} is not a decimal number") from None


def write_pes(path: Path, records: Sequence[PESRecord]) -> None:
    ordered = sorted(records, key=lambda r: r.label)
    _write_csv(path, "pes", ((r.label, r.energy, r.n_dets, r.method, r.status) for r in ordered))


def read_pes(path: str | Path) -> list[PESRecord]:
    out = []
    for row in read_csv(path):
        out.append(PESRecord(
            label=parse_label(row["label"]),
            energy=float(row["energy_ha"]) if row["energy_ha"] else None,
            n_dets=int(row["n_dets"]) if row["n_dets"] else None,
            method=row["method"],
            status=row["status"],
        ))
    return out


def dissociation(records: Sequence[PESRecord], eq_label, ext_label) -> dict[str, Any]:
    """E_diss = E(extended) - E(equilibrium), in hartree and eV."""
    by_label = {r.label: r for r in records}
    eq, ext = parse_label(str(eq_label)), parse_label(str(ext_label))
    for lab in (eq, ext):
        if lab not in by_label:
            raise KeyError(f"label {lab} not present in the PES table")
        if by_label[lab].energy is None:
            raise ValueError(f"label {lab} has no energy (status {by_label[lab].status!r})")
    e_eq = by_label[eq].energy
    e_ext = by_label[ext].energy
    e_diss = e_ext - e_eq
    return {
        "schema_version": SCHEMA_VERSION,
        "eq_label": str(eq_label),
        "ext_label": str(ext_label),
        "e_eq_ha": e_eq,
        "e_ext_ha": e_ext,
        "e_diss_ha": e_diss,
        "e_diss_ev": e_diss * HARTREE_TO_EV,
        "hartree_to_ev": HARTREE_TO_EV,
    }


def render_dissociation(rep: dict[str, Any]) -> str:
    return (
        f"E(eq={rep['eq_label']})  = {rep['e_eq_ha']:.6f} Ha\n"
        f"E(ext={rep['ext_label']}) = {rep['e_ext_ha']:.6f} Ha\n"
        f"E_diss = {rep['e_diss_ha']:.6f} Ha = {rep['e_diss_ev']:.2f} eV\n"
    )


# -- comparison ----------------------------------------------------------

@dataclass(frozen=True)
class CompareRow:
    run: str
    method: str
    energy: float
    delta_e_mha: float
    n_dets: int
    dets_ratio: float


def compare(summaries: Sequence[tuple[str, dict[str, Any]]]) -> list[CompareRow]:
    """Align run summaries; all must share one integral fingerprint."""
    if len(summaries) < 2:
        raise ValueError("need at least two runs to compare")
    prints = {s["fingerprint"] for _, s in summaries}
    if len(prints) != 1:
        raise ValueError("runs were made on different integral sets (fingerprint mismatch)")
    best = min(s["energy_ha"] for _, s in summaries)
    ref_dets = summaries[0][1]["n_dets"]
    return [
        CompareRow(
            run=name,
            method=s["method"],
            energy=s["energy_ha"],
            delta_e_mha=(s["energy_ha"] - best) * 1e3,
            n_dets=s["n_dets"],
            dets_ratio=s["n_dets"] / ref_dets,
        )
        for name, s in summaries
    ]


def write_compare(path: Path, rows: Sequence[CompareRow]) -> None:
    _write_csv(path, "compare", (
        (r.run, r.method, r.energy, r.delta_e_mha, r.n_dets, r.dets_ratio) for r in rows
    ))


def render_compare(rows: Sequence[CompareRow]) -> str:
    header = ("run", "method", "E (Ha)", "dE (mHa)", "No. of Dets", "ratio")
    body = [
        (r.run, r.method, f"{r.energy:.6f}", f"{r.delta_e_mha:.4f}", f"{r.n_dets:,}",
         f"{r.dets_ratio:.4f}")
        for r in rows
    ]
    widths = [max(len(str(x)) for x in col) for col in zip(header, *body)]
    lines = ["  ".join(str(x).rjust(w) for x, w in zip(line, widths)) for line in [header, *body]]
    return "\n".join(lines) + "\n"
