"""Experiment recipes: one per reproduced figure, each producing CSV rows.

A config is a plain dict (parsed from JSON). ``resolve`` fills defaults,
``validate`` lists every problem without running anything, and ``EXPERIMENTS``
maps names to runner functions returning ``(columns, rows, sample_counts)``.
"""
from __future__ import annotations

import copy
import math
from typing import Callable

import numpy as np

from . import metrics
from .channel import NoiseConfig
from .modem import QAM_ORDERS, ModemConfig
from .numerics import RngStream
from .optimizer import SIGMA_S, SweepSpec, optimize_threshold, point_stream, run_sweep
from .preprocess import Preprocessor

SINR_GRID = list(range(-40, 1, 5))

BASE = {
    "seed": 20170101,
    "output": "results.csv",
    "workers": 1,
    "modem": {"n_subcarriers": 256, "qam_order": 4, "oversampling": 1},
    "noise": {"p": 0.01, "snr_db": 25.0, "sinr_db": -15.0},
    "channel": {"n_taps": 4, "sigma_ln": 0.5},
}

# per-experiment defaults; trial counts keep each recipe well under 5 minutes
DEFAULTS = {
    "ccdf": {
        "trials": 100_000,
        "sweep": {"m_values": [1, 4, 16, 64], "papr_grid_db": [round(0.1 * i, 1) for i in range(0, 131)]},
    },
    "pde": {
        "trials": 2000,
        "sweep": {"m_values": [1, 16, 32, 64], "thresholds": [round(0.1 * i, 1) for i in range(1, 61)]},
    },
    "snr_vs_threshold": {
        "trials": 3907,
        "sweep": {
            "m_values": [1, 16, 32, 64],
            "modes": ["nulling", "clipping"],
            "thresholds": [0.25 * i for i in range(4, 41)],
        },
    },
    "snr_vs_threshold_selective": {
        "trials": 3907,
        "sweep": {
            "m_values": [1, 16, 32, 64],
            "modes": ["nulling", "clipping"],
            "thresholds": [0.25 * i for i in range(4, 41)],
        },
    },
    "optimize_nulling": {
        "trials": 3907,
        "sweep": {
            "m_values": [1, 16, 32, 64],
            "p_values": [0.01, 0.1],
            "sinr_grid_db": SINR_GRID,
            "threshold_grid": [0.05, 20 * SIGMA_S, 0.05],
            "objective": "max_output_snr",
            "include_analytic": True,
        },
    },
    "optimize_clipping": {
        "trials": 3907,
        "sweep": {
            "m_values": [1, 16, 32, 64],
            "p_values": [0.01, 0.1],
            "sinr_grid_db": SINR_GRID,
            "threshold_grid": [0.05, 20 * SIGMA_S, 0.05],
            "objective": "max_output_snr",
            "include_analytic": True,
        },
    },
    "ber_vs_sinr": {
        "trials": 3907,
        "sweep": {
            "m_values": [1, 16, 64],
            "p_values": [0.01, 0.1],
            "sinr_grid_db": SINR_GRID,
            "threshold_grid": [0.05, 20 * SIGMA_S, 0.05],
            "mode": "clipping",
            "objective": "max_output_snr",
            "ber_trials": 2000,
        },
    },
}

DESCRIPTIONS = {
    "ccdf": "PAPR CCDF per VB size (columns m, papr_o_db, ccdf)",
    "pde": "probability of noise-detection error vs threshold",
    "snr_vs_threshold": "output SNR vs threshold, Monte-Carlo and closed form (M=1)",
    "snr_vs_threshold_selective": "output SNR vs threshold over a log-normal multipath channel",
    "optimize_nulling": "optimal nulling threshold and output SNR vs SINR",
    "optimize_clipping": "optimal clipping threshold and output SNR vs SINR",
    "ber_vs_sinr": "BER at the optimal clipping threshold vs SINR",
}


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def resolve(config: dict) -> dict:
    """Config with every default filled in for its experiment."""
    name = config.get("experiment")
    base = _merge(BASE, DEFAULTS.get(name, {}))
    return _merge(base, config)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def validate(config: dict) -> list[tuple[str, str]]:
    """Every violated invariant as ``(field, message)``; empty when runnable."""
    diags: list[tuple[str, str]] = []
    name = config.get("experiment")
    if name not in EXPERIMENTS:
        return [("experiment", f"unknown experiment {name!r}; expected one of {sorted(EXPERIMENTS)}")]
    cfg = resolve(config)

    def bad(field, msg):
        diags.append((field, msg))

    if not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool) or not 0 <= cfg["seed"] < 2**64:
        bad("seed", "seed must be a 64-bit non-negative integer")
    if not isinstance(cfg["trials"], int) or cfg["trials"] < 1:
        bad("trials", "trials must be a positive integer")
    if not isinstance(cfg.get("workers"), int) or cfg["workers"] < 1:
        bad("workers", "workers must be a positive integer")

    md = cfg["modem"]
    n = md.get("n_subcarriers")
    if not isinstance(n, int) or n < 1:
        bad("modem.n_subcarriers", "N must be a positive integer")
        n = None
    if md.get("qam_order") not in QAM_ORDERS:
        bad("modem.qam_order", f"qam_order must be one of {QAM_ORDERS}")
    if not isinstance(md.get("oversampling"), int) or md["oversampling"] < 1:
        bad("modem.oversampling", "oversampling must be a positive integer")

    nz = cfg["noise"]
    if not _is_num(nz.get("p")) or not 0.0 <= nz["p"] <= 1.0:
        bad("noise.p", "probability out of range")
    for key in ("snr_db", "sinr_db"):
        if not _is_num(nz.get(key)):
            bad(f"noise.{key}", "must be a finite number")

    sw = cfg.get("sweep", {})
    for m in sw.get("m_values", []):
        if not isinstance(m, int) or m < 1:
            bad("sweep.m_values", f"M={m!r} must be a positive integer")
        elif n and n % m:
            bad("sweep.m_values", f"M must divide N (M={m}, N={n})")
    if "m_values" in sw and not sw["m_values"]:
        bad("sweep.m_values", "must be non-empty")
    for p in sw.get("p_values", []):
        if not _is_num(p) or not 0.0 <= p <= 1.0:
            bad("sweep.p_values", "probability out of range")
    for key in ("thresholds", "papr_grid_db", "sinr_grid_db", "p_values"):
        if key in sw:
            vals = sw[key]
            if not isinstance(vals, list) or not vals:
                bad(f"sweep.{key}", "must be a non-empty list")
            elif not all(_is_num(v) for v in vals):
                bad(f"sweep.{key}", "entries must be finite numbers")
    if "thresholds" in sw and isinstance(sw["thresholds"], list):
        if any(_is_num(t) and t <= 0 for t in sw["thresholds"]):
            bad("sweep.thresholds", "thresholds must be > 0")
    if "threshold_grid" in sw:
        g = sw["threshold_grid"]
        if not (isinstance(g, list) and len(g) == 3 and all(_is_num(v) for v in g)):
            bad("sweep.threshold_grid", "must be [lo, hi, step]")
        else:
            lo, hi, step = g
            if lo <= 0:
                bad("sweep.threshold_grid", "lower bound must be > 0")
            if step <= 0:
                bad("sweep.threshold_grid", "step must be > 0")
            if hi < lo:
                bad("sweep.threshold_grid", "upper bound must be >= lower bound")
            if hi > 20 * SIGMA_S + 1e-9:
                bad("sweep.threshold_grid", "upper bound exceeds 20*sigma_s")
    for mode in sw.get("modes", []):
        if mode not in ("nulling", "clipping"):
            bad("sweep.modes", f"unknown mode {mode!r}")
    if "mode" in sw and sw["mode"] not in ("nulling", "clipping"):
        bad("sweep.mode", f"unknown mode {sw['mode']!r}")
    if "objective" in sw and sw["objective"] not in ("max_output_snr", "min_ber"):
        bad("sweep.objective", "objective must be max_output_snr or min_ber")
    ch = cfg["channel"]
    if not isinstance(ch.get("n_taps"), int) or ch["n_taps"] < 1:
        bad("channel.n_taps", "n_taps must be a positive integer")
    elif n and ch["n_taps"] > n:
        bad("channel.n_taps", "n_taps must not exceed N")
    if not _is_num(ch.get("sigma_ln")) or ch["sigma_ln"] < 0:
        bad("channel.sigma_ln", "sigma_ln must be >= 0")
    if not isinstance(cfg.get("output"), str) or not cfg["output"]:
        bad("output", "output path must be a non-empty string")
    return diags


def _modem(cfg: dict, m: int) -> ModemConfig:
    md = cfg["modem"]
    return ModemConfig(md["n_subcarriers"], m, md["qam_order"], md["oversampling"])


def _noise(cfg: dict, **kw) -> NoiseConfig:
    nz = {**cfg["noise"], **kw}
    return NoiseConfig(nz["p"], nz["snr_db"], nz["sinr_db"])


def run_ccdf(cfg: dict, rng: RngStream):
    sw = cfg["sweep"]
    grid = np.asarray(sw["papr_grid_db"], dtype=float)
    rows = []
    for i, m in enumerate(sw["m_values"]):
        paprs = metrics.papr_samples(_modem(cfg, m), cfg["trials"], rng.child(i))
        curve = metrics.ccdf(metrics.to_db(paprs), grid)
        for x, c, e, low in zip(grid, curve.ccdf, curve.exceedances, curve.low_confidence):
            rows.append({"m": m, "papr_o_db": x, "ccdf": c, "exceedances": int(e), "low_confidence": bool(low)})
    cols = ["m", "papr_o_db", "ccdf", "exceedances", "low_confidence"]
    return cols, rows, {"frames_per_m": cfg["trials"]}


def run_pde(cfg: dict, rng: RngStream):
    sw = cfg["sweep"]
    ts = np.asarray(sw["thresholds"], dtype=float)
    noise = _noise(cfg)
    rows = []
    for i, m in enumerate(sw["m_values"]):
        est = metrics.p_detection_error(_modem(cfg, m), noise, ts, cfg["trials"], rng.child(i))
        rows += [{"m": m, "threshold": t, "p_de": v} for t, v in zip(ts, est)]
    n = cfg["trials"] * cfg["modem"]["n_subcarriers"]
    return ["m", "threshold", "p_de"], rows, {"samples_per_m": n}


def _snr_vs_threshold(cfg: dict, rng: RngStream, selective):
    sw = cfg["sweep"]
    ts = np.asarray(sw["thresholds"], dtype=float)
    noise = _noise(cfg)
    rows = []
    n_samples = 0
    for j, mode in enumerate(sw["modes"]):
        # same stream for every M so all VB sizes see the same noise
        stream = rng.child(j)
        for m in sw["m_values"]:
            gamma, n_samples = metrics.output_snr_sweep(_modem(cfg, m), noise, mode, ts, cfg["trials"], stream, selective)
            gdb = metrics.to_db(gamma)
            for t, g in zip(ts, gdb):
                row = {"m": m, "mode": mode, "threshold": t, "output_snr_db": g}
                if selective is None:
                    row["analytic_snr_db"] = _analytic_db(t, noise, mode) if m == 1 else None
                rows.append(row)
    cols = ["m", "mode", "threshold", "output_snr_db"]
    if selective is None:
        cols.append("analytic_snr_db")
    return cols, rows, {"samples_per_point": n_samples}


def _analytic_db(t, noise, mode):
    try:
        return metrics.output_snr_analytic(float(t), noise, mode).gamma_db
    except ValueError:
        return None


def run_snr_vs_threshold(cfg, rng):
    return _snr_vs_threshold(cfg, rng, None)


def run_snr_vs_threshold_selective(cfg, rng):
    ch = cfg["channel"]
    return _snr_vs_threshold(cfg, rng, (ch["n_taps"], ch["sigma_ln"]))


def _sweep_spec(cfg: dict, mode: str, **kw) -> SweepSpec:
    sw = cfg["sweep"]
    return SweepSpec(
        m_values=tuple(sw["m_values"]),
        p_values=tuple(sw["p_values"]),
        sinr_grid_db=tuple(sw["sinr_grid_db"]),
        snr_db=cfg["noise"]["snr_db"],
        threshold_grid=tuple(sw["threshold_grid"]),
        mode=mode,
        objective=sw.get("objective", "max_output_snr"),
        trials_per_point=cfg["trials"],
        n_subcarriers=cfg["modem"]["n_subcarriers"],
        qam_order=cfg["modem"]["qam_order"],
        **kw,
    )


def _run_optimize(cfg: dict, rng: RngStream, mode: str):
    spec = _sweep_spec(cfg, mode)
    records = run_sweep(spec, rng, workers=cfg["workers"])
    analytic = {}
    if cfg["sweep"].get("include_analytic") and 1 in spec.m_values and spec.objective == "max_output_snr":
        aspec = _sweep_spec(cfg, mode, method="analytic")
        for p in spec.p_values:
            for s in spec.sinr_grid_db:
                analytic[(p, s)] = optimize_threshold((1, p, s, mode), aspec, None)
    rows = []
    for r in records:
        a = analytic.get((r.p, r.sinr_db)) if r.m == 1 else None
        rows.append(
            {
                "m": r.m,
                "p": r.p,
                "sinr_db": float(r.sinr_db),
                "optimal_threshold": r.optimal_threshold,
                "objective_value": r.objective_value,
                "objective_kind": r.objective_kind,
                "boundary": r.boundary,
                "near_optimal_lo": r.near_optimal_lo,
                "near_optimal_hi": r.near_optimal_hi,
                "analytic_threshold": a.optimal_threshold if a else None,
                "analytic_snr_db": a.objective_value if a else None,
            }
        )
    cols = list(rows[0]) if rows else []
    return cols, rows, {"samples_per_point": records[0].n_samples if records else 0}


def run_optimize_nulling(cfg, rng):
    return _run_optimize(cfg, rng, "nulling")


def run_optimize_clipping(cfg, rng):
    return _run_optimize(cfg, rng, "clipping")


def run_ber_vs_sinr(cfg: dict, rng: RngStream):
    """BER at the threshold chosen by the sweep objective, on a fresh realization."""
    sw = cfg["sweep"]
    spec = _sweep_spec(cfg, sw.get("mode", "clipping"))
    records = run_sweep(spec, rng.child(0), workers=cfg["workers"])
    ber_rng = rng.child(1)
    rows = []
    cells = {}
    for r in records:
        key = (spec.p_values.index(r.p), spec.sinr_grid_db.index(r.sinr_db))
        cells.setdefault(key, []).append(r)
    bits = 0
    for (ip, isn), recs in cells.items():
        stream = point_stream(ber_rng, ip, isn)
        for r in recs:
            cfg_m = _modem(cfg, r.m)
            est = metrics.ber_counts(
                cfg_m,
                NoiseConfig(r.p, spec.snr_db, r.sinr_db),
                [Preprocessor(spec.mode, r.optimal_threshold)],
                sw["ber_trials"],
                stream,
            )[0]
            bits = est.bits
            rows.append(
                {
                    "m": r.m,
                    "p": r.p,
                    "sinr_db": float(r.sinr_db),
                    "mode": spec.mode,
                    "threshold": r.optimal_threshold,
                    "ber": est.ber,
                    "bit_errors": est.errors,
                    "bits": est.bits,
                }
            )
    cols = ["m", "p", "sinr_db", "mode", "threshold", "ber", "bit_errors", "bits"]
    return cols, rows, {"samples_per_point": records[0].n_samples if records else 0, "bits_per_point": bits}


EXPERIMENTS: dict[str, Callable] = {
    "ccdf": run_ccdf,
    "pde": run_pde,
    "snr_vs_threshold": run_snr_vs_threshold,
    "snr_vs_threshold_selective": run_snr_vs_threshold_selective,
    "optimize_nulling": run_optimize_nulling,
    "optimize_clipping": run_optimize_clipping,
    "ber_vs_sinr": run_ber_vs_sinr,
}


def expected_rows(cfg: dict) -> int:
    """Row count implied by the grid cross-product of a resolved config."""
    sw = cfg["sweep"]
    name = cfg["experiment"]
    n_m = len(sw["m_values"])
    if name == "ccdf":
        return n_m * len(sw["papr_grid_db"])
    if name == "pde":
        return n_m * len(sw["thresholds"])
    if name.startswith("snr_vs_threshold"):
        return n_m * len(sw["modes"]) * len(sw["thresholds"])
    return n_m * len(sw["p_values"]) * len(sw["sinr_grid_db"])


def run_experiment(cfg: dict):
    cfg = resolve(cfg)
    rng = RngStream(cfg["seed"])
    return EXPERIMENTS[cfg["experiment"]](cfg, rng)
