"""Delimited-text and JSON serialization of features, alignments, and reports.

All numeric output uses 6 significant digits unless full precision is
requested (full precision round-trips float64 exactly, which lets a dumped
raw spectrogram reproduce an alignment bit for bit).
"""

import json
from typing import IO, Iterable

import numpy as np

from .dp_align import AlignmentResult
from .filterbank import Spectrogram
from .score import ScoreSequence
from .synth_eval import ERROR_THRESHOLDS_MS, EvalReport


def _fmt(value: float, precision) -> str:
    if precision == "full":
        return repr(float(value))
    return f"{value:.{int(precision)}g}"


def write_feature_csv(out: IO[str], spectrogram: Spectrogram,
                      precision=6) -> None:
    """Header ``frame,p<low>,...,p<high>``, one row per frame."""
    header = "frame," + ",".join(f"p{p}" for p in spectrogram.band_pitches)
    out.write(header + "\n")
    for t in range(spectrogram.num_frames):
        row = ",".join(_fmt(v, precision) for v in spectrogram.values[:, t])
        out.write(f"{t},{row}\n")


def read_feature_csv(path: str, frame_rate: float) -> Spectrogram:
    """Parse a feature CSV back into a Spectrogram.

    The CSV carries no frame rate, so the effective rate must be supplied.
    """
    with open(path) as f:
        header = f.readline().strip().split(",")
        if not header or header[0] != "frame":
            raise ValueError(f"{path!r}: not a feature CSV (header {header!r})")
        pitches = np.array([int(col[1:]) for col in header[1:]])
        rows = []
        for line in f:
            fields = line.strip().split(",")
            rows.append([float(v) for v in fields[1:]])
    values = np.array(rows, dtype=np.float64).T if rows \
        else np.zeros((len(pitches), 0))
    return Spectrogram(values=values, frame_rate=frame_rate,
                       band_pitches=pitches)


def write_alignment_csv(out: IO[str], result: AlignmentResult,
                        precision=6) -> None:
    out.write("score_index,beat,pitches,frame,time_s,cumulative_cost\n")
    for e in result.entries:
        pitches = "+".join(str(p) for p in e.pitches)
        out.write(f"{e.score_index},{_fmt(e.beat, precision)},{pitches},"
                  f"{e.frame},{_fmt(e.time_s, precision)},"
                  f"{_fmt(e.cumulative_cost, precision)}\n")


def read_alignment_csv(path: str) -> list[dict]:
    with open(path) as f:
        header = f.readline().strip().split(",")
        required = {"score_index", "time_s"}
        if not required.issubset(header):
            raise ValueError(f"{path!r}: missing columns {required - set(header)}")
        idx = {name: header.index(name) for name in header}
        entries = []
        for line in f:
            fields = line.strip().split(",")
            entries.append({
                "score_index": int(fields[idx["score_index"]]),
                "time_s": float(fields[idx["time_s"]]),
            })
    return entries


def alignment_to_json(result: AlignmentResult) -> dict:
    return {
        "entries": [
            {
                "score_index": e.score_index,
                "beat": e.beat,
                "pitches": list(e.pitches),
                "frame": e.frame,
                "time_s": e.time_s,
                "cumulative_cost": e.cumulative_cost,
            }
            for e in result.entries
        ],
        "total_cost": result.total_cost,
        "effective_frame_rate": result.effective_frame_rate,
    }


def write_truth_csv(out: IO[str], score: ScoreSequence,
                    times: Iterable[float], precision=6) -> None:
    out.write("score_index,beat,time_s\n")
    for i, (onset, t) in enumerate(zip(score.onsets, times)):
        out.write(f"{i},{_fmt(onset.beat, precision)},{_fmt(t, precision)}\n")


def read_truth_csv(path: str) -> list[float]:
    with open(path) as f:
        header = f.readline().strip().split(",")
        if "time_s" not in header:
            raise ValueError(f"{path!r}: missing time_s column")
        col = header.index("time_s")
        return [float(line.strip().split(",")[col]) for line in f]


def format_eval_text(report: EvalReport) -> str:
    lines = [
        f"{'onsets':<12}{len(report.errors_ms):>10d}",
        f"{'mean_ms':<12}{report.mean_ms:>10.2f}",
        f"{'median_ms':<12}{report.median_ms:>10.2f}",
    ]
    for thr in ERROR_THRESHOLDS_MS:
        lines.append(f"{'<' + format(thr, 'g') + ' ms':<12}"
                     f"{report.pct_below[thr]:>9.1f}%")
    return "\n".join(lines)


def eval_to_json(report: EvalReport) -> dict:
    return {
        "onsets": len(report.errors_ms),
        "mean_ms": report.mean_ms,
        "median_ms": report.median_ms,
        "pct_below": {format(thr, "g"): report.pct_below[thr]
                      for thr in ERROR_THRESHOLDS_MS},
    }


def dump_json(out: IO[str], doc: dict) -> None:
    json.dump(doc, out, indent=2)
    out.write("\n")
