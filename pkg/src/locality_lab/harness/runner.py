"""Run one config or a manifest of configs."""
from __future__ import annotations

import concurrent.futures as cf
import datetime as dt
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import EXIT_ASSERTION, EXIT_PASS, LocalityLabError, SchemaError
from .config import ExperimentConfig, load_config
from .protocols import REGISTRY, Outcome
from .records import append_ledger, to_jsonable, write_csv, write_json

log = logging.getLogger("locality_lab")


@dataclass
class RunRecord:
    """Outcome of one experiment run.

    ``measured`` and ``assertions`` are the deterministic payload; timestamps
    are kept apart so repeated runs can be compared byte for byte.
    """

    protocol: str
    config_hash: str
    config: dict
    assertions: list
    measured: dict
    files: list
    started: str = ""
    finished: str = ""
    version: str = __version__
    source: str | None = None
    error: dict | None = None
    exit_code: int = EXIT_PASS

    @property
    def passed(self):
        return self.error is None and all(a["passed"] for a in self.assertions)

    def payload(self):
        """Record content without timestamps."""
        d = asdict(self)
        d.pop("started")
        d.pop("finished")
        return to_jsonable(d)


def _now():
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def run(config: ExperimentConfig | str | Path, write=True) -> RunRecord:
    """Execute the named protocol and persist record.json plus CSV tables.

    Library errors (schema, capacity, convergence) are captured in the record
    with their exit code; other exceptions propagate.
    """
    cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
    if cfg.protocol not in REGISTRY:
        raise SchemaError(f"protocol {cfg.protocol!r} has no implementation")
    np.random.seed(cfg.seed)
    started = _now()
    out = Outcome()
    error = None
    exit_code = EXIT_PASS
    try:
        REGISTRY[cfg.protocol](cfg, out)
    except LocalityLabError as exc:
        error = {"type": type(exc).__name__, "message": str(exc)}
        exit_code = exc.exit_code
        log.error("%s: %s", cfg.source or cfg.protocol, exc)
    if error is None and not all(a["passed"] for a in out.assertions):
        exit_code = EXIT_ASSERTION
    odir = Path(cfg.output_dir)
    files = []
    if write:
        for name, (header, rows) in sorted(out.tables.items()):
            write_csv(odir / f"{name}.csv", header, rows)
            files.append(f"{name}.csv")
    rec = RunRecord(cfg.protocol, cfg.config_hash(), cfg.canonical(), out.assertions,
                    out.measured, files, started, _now(), source=cfg.source, error=error,
                    exit_code=exit_code)
    if write:
        write_json(odir / "record.json", asdict(rec))
        ledger = Path(cfg.ledger) if cfg.ledger else odir.parent / "ledger.jsonl"
        append_ledger(ledger, {"config_hash": rec.config_hash, "protocol": rec.protocol,
                               "source": rec.source, "passed": rec.passed,
                               "exit_code": rec.exit_code, "started": rec.started,
                               "finished": rec.finished, "output_dir": str(odir)})
    return rec


def read_manifest(path):
    """Config paths, one per line, relative to the manifest ('#' comments)."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise SchemaError(f"cannot read manifest {path}: {exc}") from exc
    out = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(str((path.parent / line).resolve()))
    return out


def _run_path(p):
    return run(p)


@dataclass
class SuiteSummary:
    records: list = field(default_factory=list)

    @property
    def exit_code(self):
        codes = [r.exit_code for r in self.records]
        hard = [c for c in codes if c not in (EXIT_PASS, EXIT_ASSERTION)]
        if hard:
            return hard[0]
        return EXIT_ASSERTION if EXIT_ASSERTION in codes else EXIT_PASS

    def table(self):
        lines = [f"{'config':<40} {'protocol':<12} {'result':<6} failed"]
        for r in self.records:
            name = Path(r.source).name if r.source else r.protocol
            failed = [a["name"] for a in r.assertions if not a["passed"]]
            if r.error:
                failed.append(r.error["type"])
            lines.append(f"{name:<40} {r.protocol:<12} {'PASS' if r.passed else 'FAIL':<6} "
                         + ", ".join(failed))
        return "\n".join(lines)


def suite(manifest, jobs=1) -> SuiteSummary:
    """Run every config in a manifest (a path or a list of config paths)."""
    paths = read_manifest(manifest) if isinstance(manifest, (str, Path)) else list(manifest)
    configs = [load_config(p) for p in paths]  # schema errors surface before any run
    if jobs > 1 and len(configs) > 1:
        with cf.ProcessPoolExecutor(max_workers=jobs) as ex:
            records = list(ex.map(_run_path, paths))
    else:
        records = [run(c) for c in configs]
    return SuiteSummary(records)
