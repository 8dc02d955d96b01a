"""Batch runner: ``confsurf run <config>``, ``report <manifest>``, ``list-kinds``.

A config is one JSON document::

    {"output_dir": "out", "scenarios": [
        {"name": "sweep", "kind": "bifurcation_sweep", "parameters": {"A": 1.0}}]}

Every scenario is validated before any computation starts.  Each writes
into its own directory (``output_dir/name`` unless overridden) and the
manifest ``output_dir/manifest.json`` is written last, listing every file
with its SHA-256.  Exit codes: 0 ok, 2 configuration error, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConfigError, ConfsurfError
from .scenarios import SCHEMAS, run_scenario, validate_parameters

log = logging.getLogger("confsurf")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
MANIFEST = "manifest.json"


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    parameters: dict
    output_dir: Path


def load_config(path) -> tuple[Path, list[Scenario]]:
    """Parse and validate a batch config; raises :class:`ConfigError`."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - {"output_dir", "scenarios"}
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    out_root = Path(doc.get("output_dir", "confsurf_out"))
    raw = doc.get("scenarios", [])
    if not isinstance(raw, list):
        raise ConfigError("scenarios must be a list")
    scenarios, seen = [], set()
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise ConfigError(f"scenario {i} must be an object")
        extra = set(item) - {"name", "kind", "parameters", "output_dir"}
        if extra:
            raise ConfigError(f"scenario {i}: unknown keys {sorted(extra)}")
        name, kind = item.get("name"), item.get("kind")
        if not isinstance(name, str) or not name or "/" in name:
            raise ConfigError(f"scenario {i}: name must be a non-empty string without '/'")
        if name in seen:
            raise ConfigError(f"duplicate scenario name {name!r}")
        seen.add(name)
        params = validate_parameters(kind, item.get("parameters", {}))
        out = Path(item["output_dir"]) if "output_dir" in item else out_root / name
        scenarios.append(Scenario(name, kind, params, out))
    return out_root, scenarios


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _execute(sc: Scenario) -> dict:
    """Run one scenario and describe the result; package errors are recorded, not raised."""
    entry = {"name": sc.name, "kind": sc.kind, "output_dir": str(sc.output_dir),
             "status": "ok", "partial": False, "checks": [], "error": None}
    try:
        checks = run_scenario(sc.kind, sc.parameters, sc.output_dir)
        entry["checks"] = [c.to_dict() for c in checks]
    except ConfsurfError as exc:
        # ConfigError cannot occur here: parameters were validated up front
        tb = traceback.extract_tb(exc.__traceback__)
        origin = tb[-1] if tb else None
        entry.update(status="numerical_failure", partial=True, error={
            "type": type(exc).__name__, "message": str(exc),
            "module": Path(origin.filename).stem if origin else None,
            "operation": origin.name if origin else None})
    files = sorted(p for p in sc.output_dir.rglob("*") if p.is_file()) if sc.output_dir.exists() else []
    entry["files"] = [{"path": str(p), "sha256": _sha256(p)} for p in files]
    return entry


def run(config_path, threads: int | None = None) -> int:
    """Validate, run every scenario and write the manifest; returns the exit code."""
    try:
        out_root, scenarios = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if threads is None:
        threads = int(os.environ.get("CONFSURF_THREADS", "1"))
    if threads > 1 and len(scenarios) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            entries = list(pool.map(_execute, scenarios))
    else:
        entries = [_execute(sc) for sc in scenarios]
    out_root.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config": str(config_path),
        "config_sha256": _sha256(Path(config_path)),
        "created": datetime.now(timezone.utc).isoformat(),
        "scenarios": entries,
    }
    (out_root / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for e in entries:
        if e["error"]:
            print(f"{e['name']}: {e['error']['type']} in {e['error']['module']}."
                  f"{e['error']['operation']}: {e['error']['message']}", file=sys.stderr)
    failed = any(e["status"] != "ok" for e in entries)
    return EXIT_NUMERICAL if failed else EXIT_OK


def report(manifest_path) -> str:
    """Pass/fail table of every check in a manifest, then a per-criterion summary."""
    manifest = json.loads(Path(manifest_path).read_text())
    lines = [f"{'scenario':<20} {'check':<32} {'crit':>4} {'module.operation':<40} "
             f"{'value':>11} {'rel':>3} {'tol':>9}  result"]
    n_fail = 0
    by_crit: dict[int, bool] = {}
    for e in manifest.get("scenarios", []):
        if e.get("error"):
            err = e["error"]
            n_fail += 1
            lines.append(f"{e['name']:<20} {'(error)':<32} {'':>4} "
                         f"{err['module']}.{err['operation']:<30} {err['type']}: {err['message']}")
        for c in e.get("checks", []):
            ok = c["passed"]
            n_fail += not ok
            crit = c.get("criterion")
            if crit is not None:
                by_crit[crit] = by_crit.get(crit, True) and ok
            where = f"{c['module']}.{c['operation']}"
            lines.append(f"{e['name']:<20} {c['id']:<32} {crit if crit is not None else '-':>4} "
                         f"{where:<40} {c['value']:>11.3e} {c['relation']:>3} "
                         f"{c['tolerance']:>9.1e}  {'PASS' if ok else 'FAIL'}")
    if by_crit:
        lines.append("")
        lines.append("criterion  result")
        for k in sorted(by_crit):
            lines.append(f"{k:>9}  {'PASS' if by_crit[k] else 'FAIL'}")
    lines.append("")
    lines.append(f"{n_fail} failure(s)")
    return "\n".join(lines)


def list_kinds() -> str:
    lines = []
    for kind, schema in SCHEMAS.items():
        lines.append(kind)
        for name, p in schema.items():
            default = p.default if not isinstance(p.default, dict) or len(str(p.default)) < 50 else "{...}"
            doc = f"  # {p.doc}" if p.doc else ""
            lines.append(f"  {name} = {default!r}{doc}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="confsurf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a batch config")
    p_run.add_argument("config")
    p_run.add_argument("--threads", type=int, default=None,
                       help="parallel scenarios (default: CONFSURF_THREADS or 1)")
    p_rep = sub.add_parser("report", help="summarise a manifest")
    p_rep.add_argument("manifest")
    sub.add_parser("list-kinds", help="list scenario kinds and their parameters")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.command == "run":
        return run(args.config, args.threads)
    if args.command == "report":
        print(report(args.manifest))
        return EXIT_OK
    print(list_kinds())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
