"""Command-line driver.

Subcommands: ``build``, ``bounds``, ``resources``, ``verify`` and ``sweep``.
Settings come from flags or a JSON/YAML config file (``--config``); flags
win over the file.  Result tables are CSV with a JSON mirror; timing columns
go to a separate telemetry CSV so identical configs give identical tables.

Exit codes: 0 success, 1 usage error, 2 numerical failure (with
``--strict``), 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_VERIFY = 3

THREADS_ENV = "TROTTERBOUNDS_THREADS"
COMMANDS = ("build", "bounds", "resources", "verify", "sweep")

BOUND_COLUMNS = ("method", "N", "eta", "r_s", "sides", "shift", "first_order", "W1",
                 "tvt", "tvv", "tvv_unmerged", "W2_vtv", "W2_tvt", "W2_best", "error")
TELEMETRY_COLUMNS = ("command", "method", "N", "eta", "r_s", "sides", "wall_time_s",
                     "peak_mem_bytes")
RESOURCE_COLUMNS = ("r_s", "eta", "filling", "sides", "N", "method", "W2", "N_PE", "t",
                    "rotations_per_step", "toffolis_per_step", "t_per_rotation",
                    "N_tof", "N_T", "aggregated", "ancilla", "lambda",
                    "qubitization_T", "qubitization_ancilla", "delta_total",
                    "delta_pe", "delta_ts", "delta_syn", "error")
VERIFY_COLUMNS = ("method", "N", "eta", "r_s", "quantity", "bound", "exact", "ok",
                  "message")

log = logging.getLogger("trotterbounds")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = "bounds"
    sides: list = field(default_factory=lambda: [8, 8])
    eta: int = 49
    wigner_seitz: float = 5.0
    nuclei: list = field(default_factory=list)
    spinful: bool = True
    kinetic_denominator: str = "spin_orbitals"
    methods: list = field(default_factory=lambda: ["spectral", "cholesky", "cosine", "shc"])
    mha_per_electron: float = 1.0
    basis_change: str = "auto"
    hwp_cap: int = 14
    synthesis_a: float = 1.15
    synthesis_b: float = 9.2
    W2: float | None = None
    output: str | None = None
    telemetry: str | None = None
    threads: int | None = None
    strict: bool = False
    sweep_eta: list = field(default_factory=list)
    sweep_sides: list = field(default_factory=list)
    sweep_rs: list = field(default_factory=list)
    verify_n: list = field(default_factory=lambda: [4, 6, 8, 10, 12])
    verify_rs: list = field(default_factory=lambda: [1.0, 5.0, 10.0])
    verify_times: list = field(default_factory=lambda: [0.01, 0.1])

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if not self.sides or any(int(s) < 1 for s in self.sides):
            raise UsageError("sides must be a non-empty list of positive integers")
        if len(self.sides) not in (2, 3):
            raise UsageError("only 2D and 3D lattices are supported")
        if self.eta < 0:
            raise UsageError("eta must be non-negative")
        if not self.wigner_seitz > 0:
            raise UsageError("wigner_seitz must be positive")
        known = {"spectral", "cholesky", "cosine", "shc"}
        bad = [m for m in self.methods if m not in known]
        if bad:
            raise UsageError(f"unknown methods {bad}; choose from {sorted(known)}")
        if self.basis_change not in ("auto", "fft", "givens", "none"):
            raise UsageError(f"unknown basis_change {self.basis_change!r}")
        if self.hwp_cap < 0:
            raise UsageError("hwp_cap must be non-negative")
        if not self.mha_per_electron > 0:
            raise UsageError("mha_per_electron must be positive")
        if self.command == "sweep" and not self.output:
            raise UsageError("sweep needs --output for resumable CSV")

    def spec(self, sides=None, eta=None, rs=None):
        from .hamiltonian import SystemSpec

        sides = list(sides if sides is not None else self.sides)
        return SystemSpec(len(sides), tuple(sides), self.eta if eta is None else eta,
                          self.wigner_seitz if rs is None else rs,
                          tuple((tuple(p), z) for p, z in self.nuclei), self.spinful,
                          self.kinetic_denominator)


CONFIG_KEYS = {f.name for f in dataclasses.fields(RunConfig)}


def load_config_file(path: str | Path) -> dict:
    text = Path(path).read_text()
    if str(path).endswith((".yaml", ".yml")):
        import yaml

        data = yaml.safe_load(text) or {}
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise UsageError("config file must hold a mapping")
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {unknown}")
    return data


# --- formatting -------------------------------------------------------------


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        value = float(value)
        return repr(value) if math.isfinite(value) else str(value)
    if isinstance(value, (list, tuple)):
        return "x".join(str(v) for v in value)
    if hasattr(value, "item"):
        return _fmt(value.item())
    return "" if value is None else str(value)


class TableWriter:
    """CSV writer that can append to an existing file and mirror rows to JSON."""

    def __init__(self, path: str | None, columns: Iterable[str], append: bool = False):
        self.columns = tuple(columns)
        self.rows: list[dict] = []
        self.path = path
        if path is None:
            self.fh = sys.stdout
        else:
            exists = append and os.path.exists(path) and os.path.getsize(path) > 0
            self.fh = open(path, "a" if exists else "w", newline="")
            append = exists
        self.writer = csv.writer(self.fh, lineterminator="\n")
        if not append:
            self.writer.writerow(self.columns)
            self.fh.flush()

    def write(self, row: dict) -> None:
        self.rows.append({c: row.get(c) for c in self.columns})
        self.writer.writerow([_fmt(row.get(c)) for c in self.columns])
        self.fh.flush()

    def close(self, json_mirror: bool = True) -> None:
        if self.path is None:
            return
        self.fh.close()
        if json_mirror:
            with open(self.path, newline="") as fh:
                rows = list(csv.DictReader(fh))
            Path(self.path).with_suffix(".json").write_text(json.dumps(rows, indent=1))


def _telemetry_path(cfg: RunConfig) -> str | None:
    if cfg.telemetry:
        return cfg.telemetry
    if cfg.output:
        p = Path(cfg.output)
        return str(p.with_name(p.stem + ".telemetry.csv"))
    return None


def _bound_row(rep) -> dict:
    return {"method": rep.method, "N": rep.N, "eta": rep.eta, "r_s": float(rep.r_s),
            "sides": list(rep.sides), "shift": rep.shift,
            "first_order": rep.first_order_seminorm, "W1": rep.W1, "tvt": rep.tvt,
            "tvv": rep.tvv, "tvv_unmerged": rep.tvv_unmerged, "W2_vtv": rep.W2_vtv,
            "W2_tvt": rep.W2_tvt, "W2_best": rep.W2_best, "error": rep.error}


def _telemetry_row(command: str, rep) -> dict:
    return {"command": command, "method": rep.method, "N": rep.N, "eta": rep.eta,
            "r_s": float(rep.r_s), "sides": list(rep.sides),
            "wall_time_s": rep.wall_time_s, "peak_mem_bytes": rep.peak_mem_bytes}


def _zero_reports(spec, methods):
    from .bounds import BoundReport

    return [BoundReport.assemble(m, 0, 0.0, 0.0, 0.0, N=spec.n_orbitals,
                                 r_s=spec.wigner_seitz, sides=spec.sides,
                                 tvv_unmerged=0.0)
            for m in methods]


def _run_bounds_for(spec, methods, eta=None):
    from .bounds import bound_suite

    if eta == 0:
        return _zero_reports(spec, methods)
    return bound_suite(spec, methods, eta=eta, track_memory=True)


# --- commands ---------------------------------------------------------------


def cmd_build(cfg: RunConfig) -> int:
    from .hamiltonian import build_matrices, dump_matrix

    spec = cfg.spec()
    out = Path(cfg.output or ".")
    out.mkdir(parents=True, exist_ok=True)
    m = build_matrices(spec)
    for name, mat in (("T", m.T), ("U", m.U), ("V", m.V)):
        dump_matrix(out / f"{name}.txt", mat, spec, name)
    (out / "system.json").write_text(json.dumps(spec.to_dict(), indent=1))
    log.info("wrote T, U, V for N=%d to %s", spec.n_orbitals, out)
    return EXIT_OK


def _has_errors(rows) -> bool:
    return any(r.get("error") for r in rows)


def cmd_bounds(cfg: RunConfig) -> int:
    eta = cfg.eta
    spec = cfg.spec(eta=max(eta, 1))
    table = TableWriter(cfg.output, BOUND_COLUMNS)
    tele = TableWriter(_telemetry_path(cfg), TELEMETRY_COLUMNS) if _telemetry_path(cfg) else None
    rows = []
    for method in cfg.methods:
        log.info("bounds: %s on N=%d eta=%d", method, spec.n_orbitals, eta)
        for rep in _run_bounds_for(spec, [method], eta=eta):
            row = _bound_row(rep)
            rows.append(row)
            table.write(row)
            if tele:
                tele.write(_telemetry_row("bounds", rep))
    table.close()
    if tele:
        tele.close(json_mirror=False)
    return EXIT_NUMERIC if cfg.strict and _has_errors(rows) else EXIT_OK


def _resource_row(spec, method, W2, est=None, error="") -> dict:
    row = {"r_s": spec.wigner_seitz, "eta": spec.eta,
           "filling": spec.eta / spec.n_orbitals, "sides": list(spec.sides),
           "N": spec.n_orbitals, "method": method, "W2": W2, "error": error}
    if est is not None:
        r = est.row()
        row.update({k: r[k] for k in RESOURCE_COLUMNS if k in r})
        row.update({"delta_pe": est.budget.delta_pe, "delta_ts": est.budget.delta_ts,
                    "delta_syn": est.budget.delta_syn})
    return row


def _resources_for(cfg: RunConfig, spec, tele=None) -> dict:
    from .bounds import best_report
    from .resources import SynthesisModel, estimate_resources

    method = "given"
    W2 = cfg.W2
    if W2 is None:
        reps = _run_bounds_for(spec, [m for m in cfg.methods if m != "shc"] or ["cholesky"])
        if tele:
            for rep in reps:
                tele.write(_telemetry_row("resources", rep))
        best = best_report(reps)
        W2, method = best.W2_best, best.method
    try:
        est = estimate_resources(spec, W2, cfg.mha_per_electron, cfg.basis_change,
                                 cfg.hwp_cap, SynthesisModel(cfg.synthesis_a, cfg.synthesis_b))
    except (ValueError, ArithmeticError) as exc:
        return _resource_row(spec, method, W2, error=f"{type(exc).__name__}: {exc}")
    return _resource_row(spec, method, W2, est)


def cmd_resources(cfg: RunConfig) -> int:
    spec = cfg.spec()
    table = TableWriter(cfg.output, RESOURCE_COLUMNS)
    tpath = _telemetry_path(cfg)
    tele = TableWriter(tpath, TELEMETRY_COLUMNS) if tpath else None
    log.info("resources: N=%d eta=%d r_s=%g", spec.n_orbitals, spec.eta, spec.wigner_seitz)
    row = _resources_for(cfg, spec, tele)
    table.write(row)
    table.close()
    if tele:
        tele.close(json_mirror=False)
    return EXIT_NUMERIC if cfg.strict and row["error"] else EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    from .oracle import check_soundness, soundness_specs

    table = TableWriter(cfg.output, VERIFY_COLUMNS)
    failures = total = 0
    specs = list(soundness_specs(tuple(cfg.verify_n), tuple(cfg.verify_rs)))
    for i, spec in enumerate(specs, 1):
        log.info("verify %d/%d: N=%d eta=%d r_s=%g", i, len(specs), spec.n_orbitals,
                 spec.eta, spec.wigner_seitz)
        for row in check_soundness(spec, tuple(cfg.verify_times)):
            total += 1
            if not row["ok"]:
                failures += 1
                table.write(row)
            elif cfg.output:
                table.write(row)
    table.close()
    log.info("verify: %d checks, %d violations", total, failures)
    print(f"verify: {total} checks, {failures} violations", file=sys.stderr)
    return EXIT_VERIFY if failures else EXIT_OK


def _sweep_points(cfg: RunConfig):
    sides_list = cfg.sweep_sides or [cfg.sides]
    eta_list = cfg.sweep_eta or [cfg.eta]
    rs_list = cfg.sweep_rs or [cfg.wigner_seitz]
    for sides in sides_list:
        for rs in rs_list:
            for eta in eta_list:
                yield list(sides), float(rs), int(eta)


def _done_keys(path: str) -> set:
    if not os.path.exists(path):
        return set()
    with open(path, newline="") as fh:
        return {(r["sides"], repr(float(r["r_s"])), r["eta"], r["method"])
                for r in csv.DictReader(fh)}


def cmd_sweep(cfg: RunConfig) -> int:
    done = _done_keys(cfg.output)
    table = TableWriter(cfg.output, BOUND_COLUMNS, append=True)
    tpath = _telemetry_path(cfg)
    tele = TableWriter(tpath, TELEMETRY_COLUMNS, append=True)
    rows = []
    points = list(_sweep_points(cfg))
    for i, (sides, rs, eta) in enumerate(points, 1):
        for method in cfg.methods:
            key = ("x".join(map(str, sides)), repr(rs), str(eta), method)
            if key in done:
                continue
            log.info("sweep %d/%d: sides=%s r_s=%g eta=%d %s", i, len(points),
                     key[0], rs, eta, method)
            try:
                spec = cfg.spec(sides=sides, eta=eta, rs=rs)
            except ValueError as exc:
                from .bounds import BoundReport

                rep = BoundReport.failed(method, eta, f"{type(exc).__name__}: {exc}",
                                         r_s=rs, sides=tuple(sides))
                reps = [rep]
            else:
                reps = _run_bounds_for(spec, [method])
            for rep in reps:
                row = _bound_row(rep)
                rows.append(row)
                table.write(row)
                tele.write(_telemetry_row("sweep", rep))
    table.close()
    tele.close(json_mirror=False)
    return EXIT_NUMERIC if cfg.strict and _has_errors(rows) else EXIT_OK


COMMAND_FUNCS = {"build": cmd_build, "bounds": cmd_bounds, "resources": cmd_resources,
                 "verify": cmd_verify, "sweep": cmd_sweep}


# --- argument parsing -------------------------------------------------------


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace("x", ",").split(",") if x]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _sides_list(text: str) -> list[list[int]]:
    return [_int_list(part) for part in text.split(";") if part]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trotterbounds",
        description="Fermionic-seminorm Trotter error bounds and phase-estimation costs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON or YAML file with RunConfig keys")
        p.add_argument("--sides", type=_int_list, help="lattice sides, e.g. 8x8")
        p.add_argument("--eta", type=int)
        p.add_argument("--rs", dest="wigner_seitz", type=float, help="Wigner-Seitz radius")
        p.add_argument("--spinless", dest="spinful", action="store_false", default=None)
        p.add_argument("--kinetic-denominator", dest="kinetic_denominator",
                       choices=["spin_orbitals", "spatial_orbitals"])
        p.add_argument("--methods", type=lambda s: s.split(","))
        p.add_argument("--mha", dest="mha_per_electron", type=float,
                       help="energy budget in mHa per electron")
        p.add_argument("--basis-change", dest="basis_change",
                       choices=["auto", "fft", "givens", "none"])
        p.add_argument("--hwp-cap", dest="hwp_cap", type=int)
        p.add_argument("--synthesis-a", dest="synthesis_a", type=float)
        p.add_argument("--synthesis-b", dest="synthesis_b", type=float)
        p.add_argument("--W2", dest="W2", type=float, help="use this error constant")
        p.add_argument("-o", "--output")
        p.add_argument("--telemetry")
        p.add_argument("--threads", type=int)
        p.add_argument("--strict", action="store_true", default=None)
        p.add_argument("--sweep-eta", dest="sweep_eta", type=_int_list)
        p.add_argument("--sweep-sides", dest="sweep_sides", type=_sides_list,
                       help="semicolon-separated lattices, e.g. '8x8;12x12'")
        p.add_argument("--sweep-rs", dest="sweep_rs", type=_float_list)
        p.add_argument("--verify-n", dest="verify_n", type=_int_list)
        p.add_argument("--verify-rs", dest="verify_rs", type=_float_list)
        p.add_argument("--verify-times", dest="verify_times", type=_float_list)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def make_config(argv: list[str] | None = None) -> tuple[RunConfig, bool]:
    args = build_parser().parse_args(argv)
    values: dict[str, Any] = {}
    if args.config:
        values.update(load_config_file(args.config))
    for key, value in vars(args).items():
        if key in CONFIG_KEYS and value is not None:
            values[key] = value
    values["command"] = args.command
    cfg = RunConfig(**values)
    if cfg.threads is None and os.environ.get(THREADS_ENV):
        cfg.threads = int(os.environ[THREADS_ENV])
    cfg.validate()
    return cfg, args.verbose


def main(argv: list[str] | None = None) -> int:
    try:
        cfg, verbose = make_config(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    except (UsageError, ValueError, TypeError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s", stream=sys.stderr)
    from threadpoolctl import threadpool_limits

    try:
        with threadpool_limits(limits=cfg.threads):
            return COMMAND_FUNCS[cfg.command](cfg)
    except (ValueError, TypeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
