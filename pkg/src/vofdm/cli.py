"""Command-line runner: ``vofdm run|validate|list-experiments``."""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import logging
import math
import sys
import time
from pathlib import Path

from . import __version__
from .experiments import DESCRIPTIONS, EXPERIMENTS, expected_rows, resolve, run_experiment, validate

log = logging.getLogger("vofdm")


class ConfigError(Exception):
    pass


def _line_of(text: str, field: str) -> int | None:
    key = '"' + field.split(".")[-1] + '"'
    for i, line in enumerate(text.splitlines(), 1):
        if key in line:
            return i
    return None


def load_config(path: str) -> tuple[dict, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1: config must be a JSON object")
    return data, text


def apply_overrides(config: dict, overrides, seed=None, trials=None, out=None) -> dict:
    cfg = copy.deepcopy(config)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"--override {item!r}: expected key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--override {key}: {part} is not an object")
        node[parts[-1]] = value
    if seed is not None:
        cfg["seed"] = seed
    if trials is not None:
        cfg["trials"] = trials
    if out is not None:
        cfg["output"] = out
    return cfg


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float) or hasattr(v, "dtype"):
        x = float(v)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.8e}"
    return str(v)


def manifest_hash(cfg: dict) -> str:
    payload = json.dumps({"config": cfg, "version": __version__}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def write_outputs(cfg: dict, columns, rows, counts, duration: float) -> tuple[Path, Path]:
    out = Path(cfg["output"])
    digest = manifest_hash(cfg)
    lines = [f"# manifest_sha256={digest} experiment={cfg['experiment']} seed={cfg['seed']}"]
    if cfg["experiment"] == "snr_vs_threshold_selective":
        ch = cfg["channel"]
        lines.append(f"# channel n_taps={ch['n_taps']} sigma_ln={ch['sigma_ln']} redrawn_per_frame=1")
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        for line in lines:
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(c)) for c in columns])
    manifest = {
        "artifact": "vofdm",
        "version": __version__,
        "manifest_sha256": digest,
        "seed": cfg["seed"],
        "config": cfg,
        "rows": len(rows),
        "sample_counts": counts,
        "duration_s": round(duration, 3),
    }
    mpath = out.with_name(out.stem + ".manifest.json")
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out, mpath


def _print_diags(diags, path, text):
    for field, msg in diags:
        line = _line_of(text, field) if text else None
        where = f"{path}:{line}" if line else path
        print(f"{where}: {field}: {msg}", file=sys.stderr)


def cmd_run(args) -> int:
    try:
        config, text = load_config(args.config)
        config = apply_overrides(config, args.override, args.seed, args.trials, args.out)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    diags = validate(config)
    if diags:
        _print_diags(diags, args.config, text)
        return 2
    cfg = resolve(config)
    t0 = time.perf_counter()
    log.info("running %s (seed %d, %d trials)", cfg["experiment"], cfg["seed"], cfg["trials"])
    columns, rows, counts = run_experiment(cfg)
    duration = time.perf_counter() - t0
    try:
        out, mpath = write_outputs(cfg, columns, rows, counts, duration)
    except OSError as exc:
        print(f"{cfg['output']}: cannot write output: {exc.strerror or exc}", file=sys.stderr)
        return 3
    if len(rows) != expected_rows(cfg):
        log.warning("row count %d differs from grid size %d", len(rows), expected_rows(cfg))
    print(f"wrote {out} ({len(rows)} rows) and {mpath} in {duration:.1f} s")
    return 0


def cmd_validate(args) -> int:
    try:
        config, text = load_config(args.config)
        config = apply_overrides(config, args.override, args.seed, args.trials, args.out)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    diags = validate(config)
    if diags:
        _print_diags(diags, args.config, text)
        return 1
    print("ok")
    return 0


def cmd_list(args) -> int:
    for name in EXPERIMENTS:
        print(f"{name:28s} {DESCRIPTIONS[name]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vofdm", description="VOFDM impulsive-noise experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("run", cmd_run), ("validate", cmd_validate)):
        p = sub.add_parser(name)
        p.add_argument("config")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--out")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
        p.set_defaults(func=fn)
    p = sub.add_parser("list-experiments")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
