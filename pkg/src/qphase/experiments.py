"""Reproduction runs: the quadratic-phase demo and the success-probability sweep."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import rng as rng_mod
from .fitting import FitParams, fit_success_curve, weights_from_std
from .protocol import (
    ProtocolConfig,
    exact_outcome_distribution,
    exact_success_probability,
    ideal_phase_state,
    run_protocol,
)
from .statevector import amplitudes_to_pairs, fidelity_up_to_global_phase

CSV_COLUMNS = ("delta", "p_mean", "p_std", "p_exact")


def uniform_state(n: int) -> np.ndarray:
    N = 1 << n
    return np.full(N, 1 / math.sqrt(N), dtype=np.complex128)


def linear_state(n: int) -> np.ndarray:
    """``x / sqrt(A)`` with ``A = sum x^2``; ``A = 140`` for three qubits."""
    x = np.arange(1 << n, dtype=float)
    return (x / math.sqrt(np.sum(x * x))).astype(np.complex128)


def _relative_phases(amps: np.ndarray) -> np.ndarray:
    rel = np.angle(amps * np.conj(amps[0])) if abs(amps[0]) > 0 else np.angle(amps)
    return rel


def _align(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a`` rotated by the global phase that best matches ``b``."""
    ov = np.vdot(a, b)
    return a * (ov / abs(ov)) if abs(ov) > 0 else a


# ----------------------------------------------------------------------------
# Quadratic phase demo


def demo_quadratic(delta: float = 0.05, cycles: int = 100, n: int = 3,
                   completion: str = "householder") -> dict:
    """Post-selected run imprinting ``alpha x^2`` with ``alpha = cycles * delta / A``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    psi, phi = uniform_state(n), linear_state(n)
    A = float(np.sum(np.arange(1 << n, dtype=float) ** 2))
    software_alpha = cycles * delta
    coeff = software_alpha / A

    sim = run_protocol(psi, phi, ProtocolConfig(delta=delta, cycles=cycles, mode="postselected",
                                                completion=completion))
    oracle = run_protocol(psi, phi, ProtocolConfig(delta=delta, cycles=cycles, mode="exact"))
    ideal = ideal_phase_state(psi, phi, software_alpha)

    amps = sim.final_state.amplitudes
    wrapped = _relative_phases(amps)
    unwrapped = np.unwrap(wrapped)
    x = np.arange(1 << n)
    ideal_phase = coeff * x**2
    oracle_dev = float(np.max(np.abs(_align(amps, oracle.final_state.amplitudes)
                                     - oracle.final_state.amplitudes)))
    rows = [
        {
            "x": int(k),
            "magnitude": float(abs(amps[k])),
            "phase": float(wrapped[k]),
            "phase_unwrapped": float(unwrapped[k]),
            "ideal_phase": float(ideal_phase[k]),
            "deviation": float(unwrapped[k] - ideal_phase[k]),
        }
        for k in x
    ]
    return {
        "kind": "demo_quadratic",
        "delta": delta,
        "cycles": cycles,
        "n": n,
        "completion": completion,
        "normalization": A,
        "quadratic_coefficient": coeff,
        "rows": rows,
        "fidelity_ideal": fidelity_up_to_global_phase(sim.final_state, ideal),
        "oracle_deviation": oracle_dev,
        "total_success_probability": sim.total_success_probability,
        "final_amplitudes": amplitudes_to_pairs(amps),
    }


# ----------------------------------------------------------------------------
# Success-probability sweep


@dataclass(frozen=True)
class SweepConfig:
    delta_min: float = -8.0
    delta_max: float = 8.0
    delta_points: int = 65
    n_shot: int = 1000
    n_repetition: int = 100
    seed: int = rng_mod.DEFAULT_SEED
    mode: str = "sampled"
    n: int = 3
    completion: str = "householder"

    def __post_init__(self):
        if self.delta_points < 2:
            raise ValueError("delta_points must be >= 2")
        if self.n_shot < 1 or self.n_repetition < 1:
            raise ValueError("n_shot and n_repetition must be >= 1")
        if self.mode not in ("sampled", "exact"):
            raise ValueError(f"unknown sweep mode {self.mode!r}")

    def deltas(self) -> np.ndarray:
        return np.linspace(self.delta_min, self.delta_max, self.delta_points)


@dataclass
class SweepReport:
    config: SweepConfig
    deltas: np.ndarray
    p_mean: np.ndarray
    p_std: np.ndarray
    p_exact: np.ndarray
    fit: Optional[FitParams]
    fit_scatter: Optional[dict] = None
    flagged: list = field(default_factory=list)
    wall_time: float = 0.0
    estimates: Optional[np.ndarray] = field(default=None, repr=False)

    def rows(self):
        return zip(self.deltas, self.p_mean, self.p_std, self.p_exact)

    def to_dict(self) -> dict:
        return {
            "kind": "sweep_success",
            "config": asdict(self.config),
            "seed": self.config.seed,
            "rows": [dict(zip(CSV_COLUMNS, map(float, r))) for r in self.rows()],
            "fit": self.fit.to_dict() if self.fit else None,
            "fit_scatter": self.fit_scatter,
            "flagged": self.flagged,
            "wall_time": self.wall_time,
        }


def _shot_estimates(cdf: np.ndarray, seed: int, delta_index: int, n_shot: int,
                    n_repetition: int) -> np.ndarray:
    # Repetition r of point i reads the first n_shot draws of stream (seed, i, r).
    out = np.empty(n_repetition)
    threshold = cdf[0] / cdf[-1]
    for r in range(n_repetition):
        u = rng_mod.stream(seed, delta_index, r).random(n_shot)
        out[r] = np.count_nonzero(u < threshold) / n_shot
    return out


def sweep_success(config: SweepConfig, workers: int = 1, scatter: bool = True) -> SweepReport:
    """Estimate single-cycle success probability over a grid of phase steps.

    Shots are drawn from the exact outcome distribution of one cycle; success
    is outcome 0.  Each (point, repetition) pair owns an independent stream.
    """
    t0 = time.perf_counter()
    psi, phi = uniform_state(config.n), linear_state(config.n)
    deltas = config.deltas()
    p_exact = np.array([exact_success_probability(psi, phi, d) for d in deltas])

    if config.mode == "exact":
        estimates = np.repeat(p_exact[:, None], config.n_repetition, axis=1)
    else:
        cdfs = [np.cumsum(exact_outcome_distribution(psi, phi, d, config.completion).probabilities)
                for d in deltas]

        def task(i):
            return _shot_estimates(cdfs[i], config.seed, i, config.n_shot, config.n_repetition)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                estimates = np.array(list(pool.map(task, range(len(deltas)))))
        else:
            estimates = np.array([task(i) for i in range(len(deltas))])

    p_mean = estimates.mean(axis=1)
    if config.mode == "exact":
        p_mean = p_exact.copy()
    R = config.n_repetition
    p_std = estimates.std(axis=1, ddof=1) if R > 1 else np.zeros(len(deltas))

    fit = None
    scatter_stats = None
    if np.ptp(deltas) >= 1.0 and len(deltas) >= 4:
        fit = fit_success_curve(deltas, p_mean, weights_from_std(p_std))
        if scatter and config.mode == "sampled" and R > 1:
            per_rep = np.array([fit_success_curve(deltas, estimates[:, r]).values for r in range(R)])
            std = per_rep.std(axis=0, ddof=1)
            scatter_stats = {
                "std": dict(zip("abc", map(float, std))),
                "sem": dict(zip("abc", map(float, std / math.sqrt(R)))),
            }

    band = 5 * p_std / math.sqrt(R) + 1e-9
    flagged = [float(d) for d, m, e, b in zip(deltas, p_mean, p_exact, band) if abs(m - e) > b]
    return SweepReport(
        config=config, deltas=deltas, p_mean=p_mean, p_std=p_std, p_exact=p_exact,
        fit=fit, fit_scatter=scatter_stats, flagged=flagged,
        wall_time=time.perf_counter() - t0, estimates=estimates,
    )


# ----------------------------------------------------------------------------
# Export


def sweep_csv_text(report: SweepReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in report.rows():
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def load_sweep_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        rows = list(reader)
    return {c: np.array([float(r[c]) for r in rows]) for c in CSV_COLUMNS}


def fit_from_csv(path) -> FitParams:
    data = load_sweep_csv(path)
    return fit_success_curve(data["delta"], data["p_mean"], weights_from_std(data["p_std"]))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def report_text(report, fmt: str = "json") -> str:
    if fmt == "csv":
        if isinstance(report, SweepReport):
            return sweep_csv_text(report)
        rows = report.get("rows") if isinstance(report, dict) else None
        if not rows:
            raise ValueError("csv export needs a report with rows")
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
        return buf.getvalue()
    if fmt == "json":
        data = report.to_dict() if hasattr(report, "to_dict") else report
        return json.dumps(_jsonable(data), indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def export(report, fmt: str, path) -> None:
    """Write ``report`` as CSV or JSON.  I/O problems raise ``OSError``."""
    text = report_text(report, fmt)
    p = Path(path)
    try:
        p.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {fmt} report to {p}: {exc.strerror or exc}") from exc
