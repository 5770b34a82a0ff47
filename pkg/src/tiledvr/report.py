"""Compare proposed and reference runs: quality over time, bitrate maps, summary."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .manifest import canonical_dumps
from .simulator import SimulationLog, csv_text, fmt_db, fmt_ms

# run settings that must agree between the compared logs
_SHARED_META = ("manifest", "trace", "segment_duration", "media_duration", "tick_ms", "hfov_deg", "vfov_deg")


def _check_runs(proposed, reference):
    problems = []
    if not proposed or not reference:
        problems.append("need at least one proposed and one reference log")
        raise ValidationError(problems, where="report")
    logs = list(proposed) + list(reference)
    for key in _SHARED_META:
        values = {str(log.meta.get(key)) for log in logs}
        if len(values) > 1:
            problems.append(f"runs disagree on {key}: {sorted(values)}")
    p_names = [log.meta["trajectory"] for log in proposed]
    r_names = [log.meta["trajectory"] for log in reference]
    if len(set(p_names)) != len(p_names) or len(set(r_names)) != len(r_names):
        problems.append("each trajectory may appear once per policy")
    if sorted(p_names) != sorted(r_names):
        problems.append(f"trajectories differ: {sorted(p_names)} vs {sorted(r_names)}")
    tick_times = {tuple(t.media_ms for t in log.ticks) for log in logs}
    if len(tick_times) > 1:
        problems.append("display ticks are not aligned across runs")
    if problems:
        raise ValidationError(problems, where="report")


def _band(logs):
    q = np.array([[t.quality for t in log.ticks] for log in logs])
    return q.mean(axis=0), q.min(axis=0), q.max(axis=0)


def report(
    logs_proposed: Sequence[SimulationLog],
    logs_reference: Sequence[SimulationLog],
    out_dir,
) -> dict[str, Path]:
    """Write ``timeseries.csv``, ``bitrate_map.csv``, ``summary.csv`` and ``summary.json``.

    The time series carries the mean and min-max band across trajectories.
    Summary rows pair runs by trajectory; the final ``ALL`` row averages them.
    """
    _check_runs(logs_proposed, logs_reference)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    proposed = sorted(logs_proposed, key=lambda log: log.meta["trajectory"])
    reference = sorted(logs_reference, key=lambda log: log.meta["trajectory"])

    times = [t.media_ms for t in proposed[0].ticks]
    p_mean, p_min, p_max = _band(proposed)
    r_mean, r_min, r_max = _band(reference)
    rows = [["media_ms", "proposed_mean_db", "proposed_min_db", "proposed_max_db",
             "reference_mean_db", "reference_min_db", "reference_max_db"]]
    for k, t in enumerate(times):
        rows.append([t] + [fmt_db(v[k]) for v in (p_mean, p_min, p_max, r_mean, r_min, r_max)])
    timeseries = csv_text(rows)

    rows = [["policy", "trajectory", "seg_index", "tile_id", "target_bps", "rep_id", "bitrate_bps"]]
    for log in proposed + reference:
        for s in log.segments:
            for tid, target, rep, rate in zip(s.tile_ids, s.targets, s.rep_ids, s.bitrates):
                rows.append([log.meta["policy"], log.meta["trajectory"], s.seg_index, tid, fmt_ms(target), rep, rate])
    bitrate_map = csv_text(rows)

    summary = []
    for p, r in zip(proposed, reference):
        pq, rq = p.mean_quality(), r.mean_quality()
        summary.append({
            "trajectory": p.meta["trajectory"],
            "proposed_mean_db": pq,
            "reference_mean_db": rq,
            "delta_db": pq - rq,
            "proposed_stall_ms": sum(s.stall_ms for s in p.segments),
            "reference_stall_ms": sum(s.stall_ms for s in r.segments),
        })
    keys = list(summary[0])
    overall = {"trajectory": "ALL"}
    for key in keys[1:]:
        overall[key] = float(np.mean([row[key] for row in summary]))
    summary.append(overall)

    rows = [keys]
    for row in summary:
        rows.append([row["trajectory"]] + [
            fmt_db(row[k]) if k.endswith("_db") else fmt_ms(row[k]) for k in keys[1:]
        ])
    summary_csv = csv_text(rows)
    summary_doc = {
        "trace": proposed[0].meta["trace"],
        "manifest": proposed[0].meta["manifest"],
        "rows": [{k: (round(v, 6) if isinstance(v, float) else v) for k, v in row.items()} for row in summary],
    }

    paths = {
        "timeseries": out_dir / "timeseries.csv",
        "bitrate_map": out_dir / "bitrate_map.csv",
        "summary": out_dir / "summary.csv",
        "summary_json": out_dir / "summary.json",
    }
    paths["timeseries"].write_text(timeseries)
    paths["bitrate_map"].write_text(bitrate_map)
    paths["summary"].write_text(summary_csv)
    paths["summary_json"].write_text(canonical_dumps(summary_doc))
    return paths


def load_logs(directory) -> tuple[list[SimulationLog], list[SimulationLog]]:
    """Read every run in ``directory``, split into (proposed, reference)."""
    directory = Path(directory)
    metas = sorted(directory.glob("*.meta.json"))
    if not metas:
        raise ValidationError([f"no simulation logs (*.meta.json) in {directory}"], where="report")
    logs = [SimulationLog.read(p) for p in metas]
    return (
        [log for log in logs if log.meta["policy"] == "proposed"],
        [log for log in logs if log.meta["policy"] == "reference"],
    )
