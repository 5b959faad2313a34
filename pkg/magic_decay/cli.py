"""Command-line front end: exact RoM, thresholds, bound sweeps, Wigner negativity and the basis cache."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from pydantic import BaseModel, ValidationError
from tenacity import RetryError

from . import bounds, settings
from .errors import InputError, MagicDecayError, NumericalError, UnsupportedError
from .families import named_state
from .file_utils import ensure_parent
from .hypergraph import Hypergraph, four_qubit_scan_classes, load_hypergraph
from .pauli import NoiseModel, apply_noise
from .rom import (
    as_state,
    capacity_vanishing_point,
    default_backend,
    diagonal_gate,
    magic_capacity_details,
    rom,
    threshold,
    verify_certificates,
)
from .stabilizer import BasisStore
from .structures import CapacityReport, Provenance, RomReport, RunConfig, ThresholdReport, WignerRow
from .wigner import QuditHypergraph, QuditSystem, noisy_wigner, rom_lb_from_sn, ub_qudit_cnz

logger = logging.getLogger("magic_decay")

SWEEP_COLUMNS = ("lambda", "lb_D", "ub_convexity", "ub_family_specific", "rom_exact")


def _print_header(title: str) -> None:
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)


def _display_exception(exc: BaseException) -> int:
    code = getattr(exc, "code", "E_MAGIC")
    print(f"{code}: {exc}", file=sys.stderr)
    if logger.isEnabledFor(logging.DEBUG):
        traceback.print_exception(type(exc), exc, exc.__traceback__)
    return 2


def _parse_range(raw: str) -> list[int]:
    """``5`` or ``3..7`` (inclusive)."""
    start, sep, stop = raw.partition("..")
    try:
        values = list(range(int(start), int(stop) + 1)) if sep else [int(start)]
    except ValueError as exc:
        raise InputError(f"malformed range {raw!r}; use N or A..B") from exc
    if not values:
        raise InputError(f"empty range {raw!r}")
    return values


def _parse_floats(raw: str) -> list[float]:
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise InputError(f"malformed list {raw!r}") from exc


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.9f}"
    return str(value)


def _csv_text(rows: Iterable[dict[str, Any]], columns: Sequence[str], comments: Sequence[str] = ()) -> str:
    buffer = io.StringIO()
    for line in comments:
        buffer.write(f"# {line}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in columns])
    return buffer.getvalue()


def _json_text(payload: BaseModel | Sequence[BaseModel]) -> str:
    if isinstance(payload, BaseModel):
        data: Any = payload.model_dump(mode="json", by_alias=True)
    else:
        data = [item.model_dump(mode="json", by_alias=True) for item in payload]
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _emit(config: RunConfig, text: str, summary: str) -> None:
    if config.output is None:
        sys.stdout.write(text)
        return
    ensure_parent(config.output)
    config.output.write_text(text, encoding="utf-8")
    _print_header(summary)
    print(f"Written to {config.output}")


def _emit_rows(config: RunConfig, rows: Sequence[BaseModel], summary: str, comments: Sequence[str] = ()) -> None:
    if config.format == "json":
        _emit(config, _json_text(rows), summary)
        return
    columns = list(type(rows[0]).model_fields) if rows else []
    columns = [c for c in columns if c != "provenance"]
    dumped = [row.model_dump(by_alias=False) for row in rows]
    _emit(config, _csv_text(dumped, columns, comments), summary)


def _store(config: RunConfig) -> BasisStore:
    return BasisStore(config.cache_dir or settings.CACHE_DIR, allow_large=config.allow_n5)


def _target(config: RunConfig) -> tuple[str, Hypergraph]:
    if config.file is not None:
        loaded = load_hypergraph(config.file)
        if isinstance(loaded, QuditHypergraph):
            raise UnsupportedError("qudit hypergraphs are only handled by the wigner command")
        return config.file.name, loaded
    if config.state is None:
        raise InputError("give --state NAME or --file PATH")
    return config.state, named_state(config.state, config.n)


def _cmd_rom(args: argparse.Namespace, config: RunConfig) -> int:
    label, hypergraph = _target(config)
    store = _store(config)
    state = as_state(hypergraph)
    noise = None
    if config.noise:
        noise = NoiseModel.parse(config.noise)
        state = apply_noise(state, noise)
    result = rom(state, store, backend=default_backend())
    report = RomReport(
        state=label,
        n=hypergraph.n,
        noise=noise.describe() if noise else None,
        value=result.value,
        negative_mass=result.negative_mass,
        support_size=result.support_size,
        dual_value=result.dual_value,
        duality_gap=result.duality_gap,
        reconstruction_error=result.reconstruction_error,
        backend=result.backend,
        iterations=result.iterations,
        provenance=Provenance(
            formulas={"value": "lp"},
            basis_checksum=store.get(hypergraph.n).checksum if hypergraph.n else None,
            backend=result.backend,
        ),
    )
    if config.format == "json":
        _emit(config, _json_text(report), f"RoM of {label}: {report.value:.9f}")
    else:
        _emit_rows(config, [report], f"RoM of {label}: {report.value:.9f}")
    return 0


def _threshold_report(label: str, hypergraph: Hypergraph, config: RunConfig, store: BasisStore, check: bool) -> ThresholdReport:
    result = threshold(
        hypergraph,
        config.noise or "depolarizing",
        config.epsilon,
        config.tol,
        store,
        check_monotone=check,
        threads=config.threads,
    )
    return ThresholdReport(
        state=label,
        n=hypergraph.n,
        noise=result.noise,
        epsilon=result.epsilon,
        lambda_star=result.lambda_star,
        bracket=list(result.bracket),
        evaluations=result.evaluations,
        monotone=result.monotone,
        provenance=Provenance(
            formulas={"lambda_star": "bisection"},
            basis_checksum=store.get(hypergraph.n).checksum if hypergraph.n else None,
            backend=default_backend().name,
        ),
    )


def _cmd_threshold(args: argparse.Namespace, config: RunConfig) -> int:
    store = _store(config)
    if args.scan4:
        classes = four_qubit_scan_classes()
        store.get(4)
        labels = [" ".join("".join(str(v) for v in e) for e in h.edge_vertices()) for h in classes]
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            reports = list(
                pool.map(lambda item: _threshold_report(item[0], item[1], config, store, False), zip(labels, classes))
            )
        best = max(reports, key=lambda r: r.lambda_star)
        _emit_rows(config, reports, f"Largest threshold: {best.state} ({best.lambda_star:.4f})")
        return 0
    label, hypergraph = _target(config)
    report = _threshold_report(label, hypergraph, config, store, args.check_monotone)
    if not report.monotone:
        logger.warning("[Threshold] %s: profile is not monotone; reporting the first crossing", label)
    _emit_rows(config, [report], f"Threshold of {label}: {report.lambda_star:.6f}")
    return 0


def _cmd_sweep(args: argparse.Namespace, config: RunConfig) -> int:
    store = _store(config)
    custom = None
    if args.family == "custom":
        if config.file is None:
            raise InputError("the custom family needs --file")
        custom = load_hypergraph(config.file)
        if isinstance(custom, QuditHypergraph):
            raise UnsupportedError("qudit hypergraphs are only handled by the wigner command")
    sizes = [3] if args.family == "ccz" else _parse_range(args.sizes) if args.sizes else []
    if custom is not None:
        sizes = [custom.n]
    if not sizes:
        raise InputError(f"--n is required for the {args.family} family")
    profiles = [
        bounds.bound_profile(
            args.family,
            size,
            config.grid(),
            hypergraph=custom,
            basis=store,
            exact=not args.no_lp,
            lower_only=args.lower_only,
        )
        for size in sizes
    ]
    summary = f"{args.family} profile for n={','.join(str(p.n) for p in profiles)}"
    if config.format == "json":
        _emit(config, _json_text(profiles), summary)
        return 0
    comments = [f"family={args.family}"]
    first = profiles[0].provenance
    comments += [f"{key}={value}" for key, value in sorted(first.formulas.items())]
    comments += [f"feasibility_tol={first.feasibility_tol}", f"report_tol={first.report_tol}"]
    for profile in profiles:
        if profile.provenance.basis_checksum:
            comments.append(f"basis_checksum[n={profile.n}]={profile.provenance.basis_checksum}")
    rows = []
    for profile in profiles:
        for row in profile.rows:
            data = row.model_dump(by_alias=True)
            data["n"] = profile.n
            rows.append(data)
    columns = ("n",) + SWEEP_COLUMNS if len(profiles) > 1 else SWEEP_COLUMNS
    _emit(config, _csv_text(rows, columns, comments), summary)
    return 0


def _cmd_wigner(args: argparse.Namespace, config: RunConfig) -> int:
    lams = _parse_floats(args.lam)
    if config.file is not None:
        loaded = load_hypergraph(config.file)
        if not isinstance(loaded, QuditHypergraph):
            raise InputError("the wigner command needs a file with an odd prime d")
        targets = [loaded]
    elif args.cnz:
        targets = [QuditHypergraph.cnz(size, args.d) for size in _parse_range(args.sizes or "3")]
    else:
        raise InputError("give --cnz with --n or --file PATH")
    if args.m_d is not None and (config.file is not None or not args.cnz):
        raise InputError("--m-d bounds the CnZ family only; combine it with --cnz")
    provenance = None
    if args.m_d is not None:
        provenance = Provenance(formulas={"rom_ub": "ub_qudit_cnz"}, m_d=args.m_d)
    rows = []
    for target in targets:
        system = QuditSystem(target.d, target.n)
        system.check_capacity()
        for lam in lams:
            table = noisy_wigner(system, target, lam)
            upper = ub_qudit_cnz(target.n, target.d, lam, args.m_d) if provenance is not None else None
            rows.append(
                WignerRow(
                    n=target.n,
                    d=target.d,
                    lam=lam,
                    sn=table.sn,
                    rom_lb=rom_lb_from_sn(table.sn),
                    rom_ub=upper,
                    provenance=provenance,
                )
            )
    comments = [f"m_d={args.m_d}"] if provenance is not None else []
    _emit_rows(config, rows, f"Wigner negativity (d={targets[0].d})", comments)
    return 0


def _cmd_enumerate(args: argparse.Namespace, config: RunConfig) -> int:
    if config.n is None:
        raise InputError("enumerate needs -n")
    store = _store(config)
    basis = store.get(config.n)
    _print_header(f"Stabilizer basis n={config.n}")
    print(f"{len(basis)} states")
    print(f"Cache: {store.path_for(config.n)}")
    print(f"sha256: {basis.checksum}")
    return 0


def _cmd_capacity(args: argparse.Namespace, config: RunConfig) -> int:
    store = _store(config)
    noise = NoiseModel.parse(config.noise) if config.noise else None
    _, diag = diagonal_gate(args.gate, config.n)
    qubits = int(diag.size).bit_length() - 1
    details = magic_capacity_details(args.gate, config.n, store, noise, threads=config.threads)
    report = CapacityReport(
        gate=args.gate,
        n=qubits,
        noise=noise.describe() if noise else None,
        value=details.value,
        inputs=details.inputs,
        distinct_outputs=details.distinct_outputs,
    )
    if args.dephasing_scan:
        scan = capacity_vanishing_point(args.gate, config.n, "dephasing", store, tol=config.tol, threads=config.threads)
        report.vanishing_point = scan.lambda_star
    _emit_rows(config, [report], f"Capacity of {args.gate}: {details.value:.6f}")
    return 0


def _cmd_verify(args: argparse.Namespace, config: RunConfig) -> int:
    report = verify_certificates(
        args.table,
        config.grid(),
        _store(config),
        tolerance=args.tolerance,
        compare_rom=not args.no_lp,
        threads=config.threads,
    )
    if config.format == "json":
        _emit(config, _json_text(report), "Certificate check")
    else:
        comments = [f"{name} max|Tr(sigma A)|={value:.9f}" for name, value in report.feasibility.items()]
        comments.append(f"tolerance={report.tolerance} ok={report.ok}")
        _emit_rows(config, report.rows, "Certificate check", comments)
    if not report.ok:
        raise NumericalError("certificate table disagrees with the LP or is not dual feasible")
    return 0


def _cmd_local_magic(args: argparse.Namespace, config: RunConfig) -> int:
    samples = args.sample or list(bounds.DEFAULT_LOCAL_SAMPLES)
    rows = bounds.local_magic_prop_check(samples, basis=_store(config), tol=config.tol)
    _emit_rows(config, rows, f"Local magic: {len(rows)} samples")
    return 0


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=settings.THREADS, help="Worker threads for batched LPs.")
    common.add_argument("--basis-cache", type=Path, default=None, help="Stabilizer basis cache directory.")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", type=Path, default=None, help="Output file (default: stdout).")
    common.add_argument("--allow-n5", action="store_true", default=settings.ALLOW_N5, help="Allow the n=5 basis.")
    common.add_argument("-v", "--verbose", action="store_true", help="DEBUG logging and tracebacks.")
    return common


def _state_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--state", help="ccz, plus, cnz:N, 3complete:N, 4complete:N, complete:N:R, unionjack")
    parser.add_argument("--file", type=Path, help="Hypergraph file (vertices 1..n).")
    parser.add_argument("-n", type=int, default=None, help="Qubit count for named states.")


def _grid_options(parser: argparse.ArgumentParser, points: int) -> None:
    parser.add_argument("--start", type=float, default=0.0)
    parser.add_argument("--stop", type=float, default=1.0)
    parser.add_argument("--points", type=int, default=points)


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="magic_decay", description="Decay of magic in noisy hypergraph states.")
    commands = parser.add_subparsers(dest="command", required=True)

    rom_cmd = commands.add_parser("rom", parents=[common], help="Exact robustness of magic by LP.")
    _state_options(rom_cmd)
    rom_cmd.add_argument("--noise", help="dep:0.2, deph:0.3 or rep:0.2:+")
    rom_cmd.set_defaults(handler=_cmd_rom)

    thr = commands.add_parser("threshold", parents=[common], help="Magic noise threshold by bisection.")
    _state_options(thr)
    thr.add_argument("--noise", default="depolarizing")
    thr.add_argument("--eps", type=float, default=0.0)
    thr.add_argument("--tol", type=float, default=1e-4)
    thr.add_argument("--scan4", action="store_true", help="Every 4-qubit class with edges of degree >= 3.")
    thr.add_argument("--check-monotone", action="store_true")
    thr.set_defaults(handler=_cmd_threshold)

    sweep = commands.add_parser("sweep", parents=[common], help="Upper and lower bounds on a lambda grid.")
    sweep.add_argument("--family", required=True, choices=("ccz", "cnz", "3complete", "4complete", "custom"))
    sweep.add_argument("--n", dest="sizes", help="N or A..B")
    sweep.add_argument("--file", type=Path)
    sweep.add_argument("--lower-only", action="store_true")
    sweep.add_argument("--no-lp", action="store_true")
    _grid_options(sweep, 11)
    sweep.set_defaults(handler=_cmd_sweep)

    wig = commands.add_parser("wigner", parents=[common], help="Qudit Wigner negativity.")
    wig.add_argument("--d", type=int, default=3)
    wig.add_argument("--cnz", action="store_true")
    wig.add_argument("--n", dest="sizes", help="N or A..B")
    wig.add_argument("--file", type=Path)
    wig.add_argument("--lam", default="0", help="Comma-separated noise rates.")
    wig.add_argument("--m-d", type=float, default=None, help="Single-qudit RoM supremum; adds the CnZ upper bound.")
    wig.set_defaults(handler=_cmd_wigner)

    enum = commands.add_parser("enumerate", parents=[common], help="Enumerate and cache a stabilizer basis.")
    enum.add_argument("-n", type=int, required=True)
    enum.set_defaults(handler=_cmd_enumerate)

    cap = commands.add_parser("capacity", parents=[common], help="Magic capacity of diagonal gates.")
    cap.add_argument("--gate", default="ccz", help="cz, ccz or cnz:N")
    cap.add_argument("-n", type=int, default=None)
    cap.add_argument("--noise", default=None)
    cap.add_argument("--dephasing-scan", action="store_true")
    cap.add_argument("--tol", type=float, default=1e-3)
    cap.set_defaults(handler=_cmd_capacity)

    ver = commands.add_parser("verify-certificates", parents=[common], help="Check the dual witness table against the LP.")
    ver.add_argument("--table", type=Path, default=None)
    ver.add_argument("--tolerance", type=float, default=5e-4)
    ver.add_argument("--no-lp", action="store_true")
    _grid_options(ver, 21)
    ver.set_defaults(handler=_cmd_verify)

    local = commands.add_parser("local-magic", parents=[common], help="Local magic and marginal thresholds.")
    local.add_argument("--sample", action="append", help="unionjack, cnz:N, 4complete, counterexample, 3complete:N:K")
    local.add_argument("--tol", type=float, default=1e-3)
    local.set_defaults(handler=_cmd_local_magic)
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    values: dict[str, Any] = {
        "command": args.command,
        "state": getattr(args, "state", None),
        "file": getattr(args, "file", None),
        "n": getattr(args, "n", None),
        "noise": getattr(args, "noise", None),
        "epsilon": getattr(args, "eps", 0.0),
        "cache_dir": args.basis_cache,
        "output": args.output,
        "format": args.format,
        "threads": args.threads,
        "allow_n5": args.allow_n5,
    }
    if getattr(args, "tol", None) is not None:
        values["tol"] = args.tol
    if hasattr(args, "points"):
        values.update(grid_start=args.start, grid_stop=args.stop, points=args.points)
    return RunConfig(**values)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else settings.LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    handler: Callable[[argparse.Namespace, RunConfig], int] = args.handler
    try:
        config = _run_config(args)
        return handler(args, config)
    except ValidationError as exc:
        first = exc.errors()[0]
        return _display_exception(InputError(f"{'.'.join(str(p) for p in first['loc'])}: {first['msg']}"))
    except RetryError as exc:
        last_attempt = getattr(exc, "last_attempt", None)
        inner = last_attempt.exception() if last_attempt else None
        return _display_exception(inner or exc)
    except MagicDecayError as exc:
        return _display_exception(exc)


if __name__ == "__main__":
    raise SystemExit(main())
