"""Command-line entry point: ``hivqe run|pes|dissociation|compare``.

Exit status: 0 success/converged, 2 finished without convergence, 1 error.
Set ``HIVQE_WORKERS`` to assemble Hamiltonians with several processes.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from hivqe import reporting
from hivqe.driver import METHODS, MethodConfig, run_method, write_artifacts
from hivqe.integrals import FCIDUMPError, read_fcidump

log = logging.getLogger("hivqe")

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2


class InputError(Exception):
    pass


def _load_config(args) -> MethodConfig:
    data = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
    try:
        cfg = MethodConfig.from_dict(data)
        return cfg.with_overrides(
            method=args.method, epsilon=args.epsilon, shots=args.shots, seed=args.seed,
            noise=getattr(args, "noise", None),
        )
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid configuration: {exc}") from exc


def _config_input(args) -> str | None:
    if args.input:
        return args.input
    if getattr(args, "config", None):
        data = json.loads(Path(args.config).read_text())
        return data.get("input")
    return None


def _read_integrals(path: str):
    try:
        return read_fcidump(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except FCIDUMPError as exc:
        raise InputError(f"{path}: {exc}") from exc


def cmd_run(args) -> int:
    cfg = _load_config(args)
    path = _config_input(args)
    if not path:
        raise InputError("no input FCIDUMP given (use --input or an 'input' config key)")
    s = _read_integrals(path)
    out = Path(args.out)
    outcome = run_method(s, cfg)
    summary = write_artifacts(outcome, s, cfg, path, out, args.dump_hamiltonian)
    print(f"{summary['method']}: E = {summary['energy_ha']:.10f} Ha, "
          f"{summary['n_dets']} determinants, converged={summary['converged']}")
    if outcome.error:
        log.error("run aborted: %s", outcome.error)
        return EXIT_ERROR
    return EXIT_OK if outcome.converged else EXIT_NOT_CONVERGED


def _scan_points(args) -> list[tuple[str, str]]:
    points: list[tuple[str, str]] = []
    if args.scan:
        for row in reporting.read_csv(args.scan):
            points.append((row["label"], row["path"]))
    for item in args.point or []:
        label, sep, path = item.partition("=")
        if not sep:
            raise InputError(f"--point expects LABEL=PATH, got {item!r}")
        points.append((label, path))
    if len(points) < 2:
        raise InputError("a PES scan needs at least two points")
    seen = set()
    for label, _ in points:
        try:
            key = reporting.parse_label(label)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        if key in seen:
            raise InputError(f"duplicate PES label {label}")
        seen.add(key)
    return points


def cmd_pes(args) -> int:
    cfg = _load_config(args)
    points = _scan_points(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    for label, path in points:
        key = reporting.parse_label(label)
        try:
            s = _read_integrals(path)
            outcome = run_method(s, cfg)
            write_artifacts(outcome, s, cfg, path, out / str(key))
            status = "ok" if outcome.converged else "not_converged"
            if outcome.error:
                status = f"error: {outcome.error}"
            records.append(reporting.PESRecord(key, outcome.energy, outcome.n_dets, cfg.method, status))
        except Exception as exc:  # record and keep scanning
            log.error("PES point %s failed: %s", label, exc)
            records.append(reporting.PESRecord(key, None, None, cfg.method, f"error: {exc}"))
    reporting.write_pes(out / "pes.csv", records)
    for r in sorted(records, key=lambda r: r.label):
        e = "-" if r.energy is None else f"{r.energy:.6f}"
        print(f"{r.label}\t{e}\t{r.n_dets if r.n_dets is not None else '-'}\t{r.status}")
    if all(r.energy is None for r in records):
        return EXIT_ERROR
    return EXIT_OK


def cmd_dissociation(args) -> int:
    records = reporting.read_pes(args.pes)
    try:
        rep = reporting.dissociation(records, args.eq, args.ext)
    except (KeyError, ValueError) as exc:
        raise InputError(str(exc.args[0] if exc.args else exc)) from exc
    sys.stdout.write(reporting.render_dissociation(rep))
    if args.out:
        reporting.write_json(Path(args.out), rep)
    return EXIT_OK


def _load_summary(item: str) -> tuple[str, dict]:
    p = Path(item)
    f = p / "summary.json" if p.is_dir() else p
    try:
        data = json.loads(f.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read run summary {f}: {exc}") from exc
    return (p.name if p.is_dir() else p.stem), data


def cmd_compare(args) -> int:
    summaries = [_load_summary(x) for x in args.runs]
    try:
        rows = reporting.compare(summaries)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reporting.write_compare(out / "compare.csv", rows)
    text = reporting.render_compare(rows)
    (out / "compare.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def _shared(p: argparse.ArgumentParser, with_input: bool = True) -> None:
    if with_input:
        p.add_argument("--input", help="FCIDUMP file")
    p.add_argument("--method", choices=METHODS, default=None)
    p.add_argument("--epsilon", type=float, default=None,
                   help="HCI threshold (also the HI-VQE classical-expansion threshold)")
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--noise", type=float, default=None, help="readout bit-flip probability")
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--out", default="out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hivqe", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one method on one FCIDUMP")
    _shared(p)
    p.add_argument("--dump-hamiltonian", action="store_true",
                   help="write the final subspace Hamiltonian as 'i j value' text")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("pes", help="scan a potential energy surface")
    _shared(p, with_input=False)
    p.add_argument("--point", action="append", metavar="LABEL=PATH")
    p.add_argument("--scan", help="CSV with columns label,path")
    p.add_argument("--input", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_pes)

    p = sub.add_parser("dissociation", help="E_diss = E(ext) - E(eq) from a PES table")
    p.add_argument("--pes", required=True)
    p.add_argument("--eq", required=True, help="equilibrium label")
    p.add_argument("--ext", required=True, help="extended-geometry label")
    p.add_argument("--out", help="optional JSON report path")
    p.set_defaults(func=cmd_dissociation)

    p = sub.add_parser("compare", help="compare run outputs on the same integrals")
    p.add_argument("runs", nargs="+", help="run directories or summary.json files")
    p.add_argument("--out", default="compare")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
