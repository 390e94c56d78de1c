"""Subcommand implementations.

Every command takes a validated ``ExperimentConfig``, computes its curves and
writes the results under ``out_dir``: a data file (CSV, or JSON when
``output.format`` is ``json``) and a JSON sidecar echoing the canonical
config, its hash and the seed. Files are written atomically.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from nonmarkov_rb.analysis.coherence import coherence_diagnosis, default_residual_threshold, excess_residual
from nonmarkov_rb.analysis.fitting import auto_reference_window, fit_exponential
from nonmarkov_rb.analysis.memory import markovianized_baseline, memory_length_scan
from nonmarkov_rb.analysis.nonmarkovianity import nonmarkovianity_table
from nonmarkov_rb.cli.experiment import ExperimentConfig, build_process
from nonmarkov_rb.config import Config
from nonmarkov_rb.engine.analytical import pattern_curve
from nonmarkov_rb.engine.curve import ASFCurve
from nonmarkov_rb.engine.oracle import asf_oracle_clifford_enum
from nonmarkov_rb.exceptions import ConfigError
from nonmarkov_rb.noise.classical import (
    AveragingMode,
    classical_dephasing_asf,
    shallow_pocket_curve,
    shallow_pocket_markovian_curve,
)
from nonmarkov_rb.noise.models import markovianized_process
from nonmarkov_rb.noise.process import NoiseProcess
from nonmarkov_rb.sim.patterns import IdentityPattern
from nonmarkov_rb.sim.runner import run_rb

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["m", "analytical", "markovianized", "mc_mean", "mc_stderr"]


@dataclass
class CurveSet:
    """Curves computed for one config, keyed by engine name."""

    curves: dict[str, ASFCurve] = field(default_factory=dict)
    oracle: dict[int, float] = field(default_factory=dict)

    def primary(self) -> tuple[str, ASFCurve]:
        for name in ("analytical", "monte-carlo", "markovianized"):
            if name in self.curves:
                return name, self.curves[name]
        raise ConfigError("no curve engine selected", "engines")

    def table(self) -> pd.DataFrame:
        ms = sorted(set().union(*(c.m_values.tolist() for c in self.curves.values())))
        frame = pd.DataFrame(index=pd.Index(ms, name="m"), columns=CSV_COLUMNS[1:], dtype=float)
        for name, column in (("analytical", "analytical"), ("markovianized", "markovianized")):
            if name in self.curves:
                frame[column] = self.curves[name].to_frame()["value"]
        if "monte-carlo" in self.curves:
            mc = self.curves["monte-carlo"].to_frame()
            frame["mc_mean"] = mc["value"]
            frame["mc_stderr"] = mc["stderr"]
        return frame.reset_index()


# -- Output --------------------------------------------------------------------

def write_atomic(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def _dump(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n"


def _frame_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=Config.CSV_FLOAT_FORMAT, lineterminator="\n")


def _frame_records(frame: pd.DataFrame) -> list[dict]:
    """Rows as Python floats, so JSON keeps every bit; missing cells become null."""
    return frame.astype(object).where(frame.notna(), None).to_dict(orient="records")


def write_results(
    cfg: ExperimentConfig,
    out_dir: Path,
    command: str,
    frame: pd.DataFrame | None,
    payload: dict,
) -> list[Path]:
    """Write ``<command>.csv`` (unless JSON output) and the ``<command>.json`` sidecar."""
    stem = command.replace("-", "_")
    document = {
        "command": command,
        "config": cfg.to_dict(),
        "config_hash": cfg.content_hash(),
        "seed": cfg.run.seed,
        **payload,
    }
    written = []
    if frame is not None:
        if cfg.output.format == "csv":
            written.append(write_atomic(out_dir / f"{stem}.csv", _frame_csv(frame)))
            document["data_file"] = f"{stem}.csv"
        else:
            document["data"] = _frame_records(frame)
    written.append(write_atomic(out_dir / f"{stem}.json", _dump(document)))
    for path in written:
        logger.info(f"Wrote {path}")
    return written


# -- Curve computation ---------------------------------------------------------

def _quantum_process(cfg: ExperimentConfig, command: str) -> NoiseProcess:
    if cfg.model.is_classical:
        raise ConfigError(f"'{command}' needs a quantum noise model, not {cfg.model.name}", "model.model")
    return build_process(cfg)


def _on_grid(curve: ASFCurve, m_values: tuple[int, ...]) -> ASFCurve:
    wanted = set(m_values)
    return replace(curve, points=tuple(p for p in curve.points if p.m in wanted))


def _classical_curves(cfg: ExperimentConfig) -> CurveSet:
    p = cfg.model.params
    m_values = cfg.run.m_values
    m_max = m_values[-1]
    result = CurveSet()
    if "monte-carlo" in cfg.engines or "oracle" in cfg.engines:
        raise ConfigError(f"{cfg.model.name} supports only analytical and markovianized engines", "engines")
    if cfg.model.name == "classical_dephasing":
        mode = AveragingMode(p["mode"])
        full = classical_dephasing_asf(p["sigma"], m_max, mode)
        reference = classical_dephasing_asf(p["sigma"], m_max, AveragingMode.MARKOVIAN)
    else:
        taus = p["taus"] if p["taus"] is not None else [p["tau"]] * m_max
        if len(taus) < m_max:
            raise ConfigError(f"{len(taus)} dephasing times for m up to {m_max}", "model.params.taus")
        full = shallow_pocket_curve(p["gamma"], taus[:m_max], method=p["method"])
        reference = shallow_pocket_markovian_curve(p["gamma"], taus[:m_max])
    if "analytical" in cfg.engines:
        result.curves["analytical"] = _on_grid(full, m_values)
    if "markovianized" in cfg.engines:
        result.curves["markovianized"] = _on_grid(reference, m_values)
    return result


def _pattern_run(
    process: NoiseProcess,
    cfg: ExperimentConfig,
    pattern: IdentityPattern,
    engine: str,
    threads: int,
    show_progress: bool,
) -> ASFCurve:
    if engine == "monte-carlo":
        return run_rb(process, cfg.run, threads, show_progress, pattern=pattern)
    if engine == "markovianized":
        process = markovianized_process(process)
    return pattern_curve(process, cfg.run.m_values, pattern, show_progress)


def compute_curves(
    cfg: ExperimentConfig,
    threads: int = Config.THREADS,
    show_progress: bool = False,
    engines: tuple[str, ...] | None = None,
) -> CurveSet:
    """Evaluate every requested engine on the configured m grid and identity pattern."""
    engines = cfg.engines if engines is None else engines
    if cfg.model.is_classical:
        return _classical_curves(replace(cfg, engines=engines))

    process = build_process(cfg)
    pattern = cfg.run.pattern
    result = CurveSet()
    for engine in engines:
        if engine == "oracle":
            continue
        result.curves[engine] = _pattern_run(process, cfg, pattern, engine, threads, show_progress)
    if "oracle" in engines:
        if not pattern.is_empty:
            logger.warning("Oracle enumeration ignores identity patterns; skipped")
        else:
            for m in cfg.run.m_values:
                if m <= Config.ORACLE_MAX_M:
                    result.oracle[m] = asf_oracle_clifford_enum(process, m)
    return result


def _comparison(curves: CurveSet) -> dict:
    summary = {}
    if "analytical" in curves.curves and "monte-carlo" in curves.curves:
        a = curves.curves["analytical"].to_frame()["value"]
        mc = curves.curves["monte-carlo"].to_frame()
        shared = a.index.intersection(mc.index)
        diff = (a.loc[shared] - mc.loc[shared, "value"]).abs()
        summary["max_abs_mc_minus_analytical"] = float(diff.max()) if len(diff) else None
    if curves.oracle and "analytical" in curves.curves:
        a = curves.curves["analytical"].to_frame()["value"]
        summary["max_abs_oracle_minus_analytical"] = max(
            abs(v - a.loc[m]) for m, v in curves.oracle.items() if m in a.index
        ) if any(m in a.index for m in curves.oracle) else None
    return summary


# -- Commands ------------------------------------------------------------------

def cmd_asf(cfg: ExperimentConfig, out_dir: Path, threads: int = Config.THREADS, show_progress: bool = False) -> list[Path]:
    curves = compute_curves(cfg, threads, show_progress)
    payload = {
        "oracle": {str(m): v for m, v in curves.oracle.items()},
        "curves": {name: c.meta() for name, c in curves.curves.items()},
        "comparison": _comparison(curves),
    }
    return write_results(cfg, out_dir, "asf", curves.table()[CSV_COLUMNS], payload)


def cmd_simulate(cfg: ExperimentConfig, out_dir: Path, threads: int = Config.THREADS, show_progress: bool = False) -> list[Path]:
    _quantum_process(cfg, "simulate")
    curves = compute_curves(cfg, threads, show_progress, engines=("monte-carlo",))
    mc = curves.curves["monte-carlo"]
    return write_results(cfg, out_dir, "simulate", curves.table()[CSV_COLUMNS], {"curves": {"monte-carlo": mc.meta()}})


def cmd_fit(cfg: ExperimentConfig, out_dir: Path, threads: int = Config.THREADS, show_progress: bool = False) -> list[Path]:
    curves = compute_curves(cfg, threads, show_progress)
    engine, curve = curves.primary()
    window = cfg.analysis.fit_window or auto_reference_window(curve)
    fit = fit_exponential(curve, window)
    baseline = markovianized_baseline(fit, cfg.analysis.baseline_constraint, curve.m_values)
    logger.info(f"Fit {engine}: A={fit.A:.6f} p={fit.p:.6f} B={fit.B:.6f} on m ∈ {list(fit.m_window)}")
    frame = pd.DataFrame({
        "m": curve.m_values,
        "value": curve.values,
        "fitted": fit.predict(curve.m_values),
        "baseline": baseline.values,
    })
    payload = {"engine": engine, "fit": fit.to_dict(), "baseline": baseline.meta()}
    return write_results(cfg, out_dir, "fit", frame, payload)


def _long_frame(labelled: list[tuple[str, ASFCurve]]) -> pd.DataFrame:
    frames = []
    for label, curve in labelled:
        frame = curve.to_frame().reset_index()
        frame.insert(0, "pattern", label)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def cmd_memory_scan(cfg: ExperimentConfig, out_dir: Path, threads: int = Config.THREADS, show_progress: bool = False) -> list[Path]:
    process = _quantum_process(cfg, "memory-scan")
    if cfg.analysis.scan_max_k is None:
        raise ConfigError("memory-scan needs the largest prefix length to try", "analysis.scan_max_k")
    engine = "analytical" if "analytical" in cfg.engines else "monte-carlo"
    if engine not in cfg.engines:
        raise ConfigError("memory-scan needs the analytical or monte-carlo engine", "engines")

    scans = {}
    for k in range(cfg.analysis.scan_max_k + 1):
        pattern = IdentityPattern.prefix(k) if k else IdentityPattern.none()
        scans[tuple(range(1, k + 1))] = _pattern_run(process, cfg, pattern, engine, threads, show_progress)
    report = memory_length_scan(scans, cfg.analysis.fit_window, cfg.analysis.rel_tol)
    logger.info(f"Estimated memory length ℓ̂={report.ell_hat} (converged={report.converged})")
    frame = _long_frame([("none" if not ids else f"1..{len(ids)}", c) for ids, c in scans.items()])
    return write_results(cfg, out_dir, "memory-scan", frame, {"engine": engine, "report": report.to_dict()})


def cmd_nonmarkov(cfg: ExperimentConfig, out_dir: Path, threads: int = Config.THREADS, show_progress: bool = False) -> list[Path]:
    engines = tuple(e for e in cfg.engines if e in ("analytical", "monte-carlo"))[:1] + ("markovianized",)
    curves = compute_curves(cfg, threads, show_progress, engines=engines)
    engine, curve = curves.primary()
    reference = curves.curves["markovianized"]
    table = nonmarkovianity_table(curve, reference, cfg.analysis.q_values)
    for row in table.itertuples():
        logger.info(f"N_{row.q} = {row.N_q:.6e}")
    payload = {"engine": engine, "values": dict(zip(table["q"], table["N_q"]))}
    return write_results(cfg, out_dir, "nonmarkov", table, payload)


def cmd_coherence(cfg: ExperimentConfig, out_dir: Path, threads: int = Config.THREADS, show_progress: bool = False) -> list[Path]:
    process = _quantum_process(cfg, "coherence")
    engine = "analytical" if "analytical" in cfg.engines else "monte-carlo"
    if engine not in cfg.engines:
        raise ConfigError("coherence needs the analytical or monte-carlo engine", "engines")

    patterns = [IdentityPattern.none()] + [IdentityPattern.interleave(k) for k in cfg.analysis.interleave_depths]
    scan = [_pattern_run(process, cfg, p, engine, threads, show_progress) for p in patterns]
    threshold = cfg.analysis.residual_threshold
    if threshold is None:
        reference = pattern_curve(markovianized_process(process), cfg.run.m_values, IdentityPattern.none())
        threshold = default_residual_threshold(reference)
    verdict = coherence_diagnosis(scan, threshold)
    logger.info(f"Memory diagnosis: {verdict.value}")
    payload = {
        "engine": engine,
        "verdict": verdict.value,
        "residual_threshold": threshold,
        "residuals": {p.label: excess_residual(c) for p, c in zip(patterns, scan)},
    }
    frame = _long_frame([(p.label, c) for p, c in zip(patterns, scan)])
    return write_results(cfg, out_dir, "coherence", frame, payload)


COMMANDS = {
    "asf": cmd_asf,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "memory-scan": cmd_memory_scan,
    "nonmarkov": cmd_nonmarkov,
    "coherence": cmd_coherence,
}
