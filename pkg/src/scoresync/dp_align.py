"""Score-to-audio alignment by dynamic programming over (chord, frame) pairs.

The aligner walks the score one chord at a time. For every surviving
placement of the previous chord it scores a window of candidate frames for
the next one, charging three things: missing onset activation at the
candidate frame, missing sustained spectral activation in the few frames
right after it, and deviation from the tempo the path has implied so far.
Every cell carries its own beat-period estimate (frames per beat), smoothed
after each accepted transition, so the stretch penalty tracks local tempo
instead of assuming a global one.

A virtual start state precedes the first chord: the first transition scans
a fixed-length opening window with no stretch charge, since leading silence
says nothing about tempo. After each row the accumulated costs can be
pruned against the row minimum (``reset_threshold``), which bounds the work
per chord and keeps total time linear in the recording length.

All cost arithmetic keeps a fixed evaluation order; exhaustive path
enumeration over the same terms reproduces the accumulated costs exactly.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, EmptyAudioError, InfeasiblePathError, ScoreError
from .features import FeaturePair
from .score import ScoreSequence


@dataclass(frozen=True)
class AlignmentParams:
    """Tuning knobs of the dynamic program.

    ``stretch_min``/``stretch_max`` bound how far a transition may deviate
    from the beat-period prediction; ``bp_alpha`` is the smoothing weight
    kept on the old beat period at each update. ``sustain_frames`` is how
    many frames after a candidate must still show spectral energy.
    ``reset_threshold`` (optional) prunes cells whose cost exceeds the row
    minimum by more than the threshold. ``initial_window`` (seconds) is the
    search range for the first chord.
    """

    stretch_min: float = 1.0 / 3.0
    stretch_max: float = 3.0
    w_onset: float = 1.0
    w_stretch: float = 1.0
    w_spec: float = 1.0
    bp_init: float = 25.0
    bp_alpha: float = 0.5
    sustain_frames: int = 3
    reset_threshold: float | None = None
    pitch_aggregation: str = "mean"  # "mean" or "min" over the chord
    initial_window: float = 5.0
    bp_bounds: tuple[float, float] = (5.0, 250.0)
    max_window_frames: int | None = None

    def __post_init__(self):
        if not 0.0 < self.stretch_min < 1.0 < self.stretch_max:
            raise ConfigurationError(
                "stretch limits must satisfy 0 < stretch_min < 1 < stretch_max")
        if min(self.w_onset, self.w_stretch, self.w_spec) < 0:
            raise ConfigurationError("cost weights must be non-negative")
        if self.bp_bounds[0] < 1 or self.bp_bounds[0] > self.bp_bounds[1]:
            raise ConfigurationError("invalid beat-period bounds")
        if not self.bp_bounds[0] <= self.bp_init <= self.bp_bounds[1]:
            raise ConfigurationError("bp_init outside bp_bounds")
        if not 0.0 <= self.bp_alpha <= 1.0:
            raise ConfigurationError("bp_alpha must lie in [0, 1]")
        if self.sustain_frames < 1:
            raise ConfigurationError("sustain_frames must be >= 1")
        if self.pitch_aggregation not in ("mean", "min"):
            raise ConfigurationError(
                f"unknown pitch aggregation {self.pitch_aggregation!r}")
        if self.initial_window <= 0:
            raise ConfigurationError("initial_window must be positive")
        if self.reset_threshold is not None and self.reset_threshold < 0:
            raise ConfigurationError("reset_threshold must be non-negative")
        if self.max_window_frames is not None and self.max_window_frames < 1:
            raise ConfigurationError("max_window_frames must be >= 1")


@dataclass
class DPState:
    """Accumulated costs, backpointers, and beat periods, (M+1) x N.

    Row 0 is the virtual start state; row r >= 1 belongs to score onset
    r - 1. Backpointer -1 marks an unreached cell.
    """

    d: np.ndarray
    back: np.ndarray
    bp: np.ndarray
    score: ScoreSequence


@dataclass(frozen=True)
class AlignmentEntry:
    score_index: int
    beat: float
    pitches: tuple[int, ...]
    frame: int
    time_s: float
    cumulative_cost: float


@dataclass
class AlignmentResult:
    entries: list[AlignmentEntry]
    total_cost: float
    effective_frame_rate: float

    @property
    def frames(self) -> list[int]:
        return [e.frame for e in self.entries]

    @property
    def times(self) -> list[float]:
        return [e.time_s for e in self.entries]


def compute_frame_window(j: int, bp: float, dscore: float,
                         params: AlignmentParams, num_frames: int) -> range:
    """Candidate target frames for a transition out of frame j.

    The window is ``[j + max(1, ceil(stretch_min * bp * dscore)),
    j + floor(stretch_max * bp * dscore)]`` clipped to the valid frame
    range; it may come out empty near the end of the recording.
    """
    span = bp * dscore
    lo = j + max(1, math.ceil(params.stretch_min * span))
    hi = j + math.floor(params.stretch_max * span)
    if params.max_window_frames is not None:
        hi = min(hi, lo + params.max_window_frames - 1)
    hi = min(hi, num_frames - 1)
    return range(lo, hi + 1)


def stretch_cost(dframes, bp: float, dscore: float,
                 params: AlignmentParams):
    """Tempo-deviation cost in [0, 1]; zero when a transition of
    ``dframes`` frames matches the predicted ``bp * dscore`` exactly.

    Accepts a scalar or an array of frame deltas.
    """
    ratio = dframes / (bp * dscore)
    cost = np.abs(np.log2(ratio)) / np.log2(params.stretch_max)
    return np.clip(cost, 0.0, 1.0)


def update_beat_period(dframes, dscore: float, bp: float,
                       params: AlignmentParams):
    """Exponentially smoothed beat period after observing a transition."""
    observed = dframes / dscore
    bp_new = params.bp_alpha * bp + (1.0 - params.bp_alpha) * observed
    return np.clip(bp_new, params.bp_bounds[0], params.bp_bounds[1])


def _sustained_spec(spec_values: np.ndarray, row: int, k_max: int) -> np.ndarray:
    """min over k = 1..k_max of spec[row, min(j + k, N - 1)], per frame j."""
    n = spec_values.shape[1]
    base = np.arange(n)
    out = spec_values[row, np.minimum(base + 1, n - 1)].copy()
    for k in range(2, k_max + 1):
        np.minimum(out, spec_values[row, np.minimum(base + k, n - 1)], out=out)
    return out


def _chord_cost_vectors(onsets_values: np.ndarray, spec_values: np.ndarray,
                        rows: np.ndarray, params: AlignmentParams
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame onset and sustained-spectral costs for one chord.

    Pitches accumulate in row order; keep that order fixed, results must be
    bit-reproducible against scalar re-evaluation.
    """
    n = onsets_values.shape[1]
    if params.pitch_aggregation == "mean":
        con = np.zeros(n)
        csp = np.zeros(n)
        for r in rows:
            con += 1.0 - onsets_values[r]
            csp += 1.0 - _sustained_spec(spec_values, r, params.sustain_frames)
        con /= len(rows)
        csp /= len(rows)
    else:
        con = np.full(n, np.inf)
        csp = np.full(n, np.inf)
        for r in rows:
            np.minimum(con, 1.0 - onsets_values[r], out=con)
            np.minimum(csp,
                       1.0 - _sustained_spec(spec_values, r,
                                             params.sustain_frames),
                       out=csp)
    return con, csp


def transition_cost(target: int, j: int, j_new: int, features: FeaturePair,
                    score: ScoreSequence, bp: float,
                    params: AlignmentParams) -> float:
    """Step cost of placing score onset ``target`` at frame ``j_new`` coming
    from frame ``j`` (accumulated cost of the source cell not included).

    For ``target == 0`` (reached from the virtual start) the stretch term
    is zero by definition.
    """
    onsets_values = features.onsets.values
    spec_values = features.spec.values
    n = features.num_frames
    chord = score.onsets[target]
    rows = [features.onsets.pitch_row(p) for p in chord.pitches]
    k_max = params.sustain_frames

    if params.pitch_aggregation == "mean":
        c_on = 0.0
        c_sp = 0.0
        for r in rows:
            c_on += 1.0 - onsets_values[r, j_new]
            m = spec_values[r, min(j_new + 1, n - 1)]
            for k in range(2, k_max + 1):
                m = min(m, spec_values[r, min(j_new + k, n - 1)])
            c_sp += 1.0 - m
        c_on /= len(rows)
        c_sp /= len(rows)
    else:
        c_on = np.inf
        c_sp = np.inf
        for r in rows:
            c_on = min(c_on, 1.0 - onsets_values[r, j_new])
            m = spec_values[r, min(j_new + 1, n - 1)]
            for k in range(2, k_max + 1):
                m = min(m, spec_values[r, min(j_new + k, n - 1)])
            c_sp = min(c_sp, 1.0 - m)

    if target == 0:
        c_st = 0.0
    else:
        dscore = score.onsets[target].beat - score.onsets[target - 1].beat
        c_st = stretch_cost(float(j_new - j), bp, dscore, params)
    return float((params.w_onset * c_on + params.w_stretch * c_st)
                 + params.w_spec * c_sp)


def prune_row(row: np.ndarray, reset_threshold: float | None) -> np.ndarray:
    """Mask every cost above the row minimum plus the threshold to infinity.

    With no threshold the row passes through unchanged.
    """
    if reset_threshold is None:
        return row
    out = row.copy()
    out[out > row.min() + reset_threshold] = np.inf
    return out


def align(score: ScoreSequence, features: FeaturePair,
          params: AlignmentParams | None = None) -> AlignmentResult:
    """Assign an audio frame to every score onset.

    Raises InfeasiblePathError (with the failing score index) when the
    candidate windows run out of frames, and ConfigurationError when a
    score pitch has no filterbank band.
    """
    if params is None:
        params = AlignmentParams()
    m = len(score)
    if m == 0:
        raise ScoreError("empty score: nothing to align")
    onsets_values = features.onsets.values
    spec_values = features.spec.values
    if onsets_values.shape != spec_values.shape:
        raise ConfigurationError("onset/spec feature shapes differ")
    n = features.num_frames
    if n == 0:
        raise EmptyAudioError("features contain no frames")
    rate = features.frame_rate
    beats = score.beats
    chord_rows = [
        np.array([features.onsets.pitch_row(p) for p in o.pitches])
        for o in score.onsets
    ]

    d = np.full((m + 1, n), np.inf)
    back = np.full((m + 1, n), -1, dtype=np.int64)
    bp_table = np.full((m + 1, n), float(params.bp_init))
    d[0, 0] = 0.0

    for target in range(m):
        src = target
        dst = target + 1
        con, csp = _chord_cost_vectors(onsets_values, spec_values,
                                       chord_rows[target], params)
        d_dst = d[dst]
        b_dst = back[dst]
        bp_dst = bp_table[dst]

        if target == 0:
            # virtual start at frame 0: scan the opening window, stretch
            # cost zero, beat period left at bp_init
            hi = min(n - 1, math.floor(params.initial_window * rate))
            sl = slice(0, hi + 1)
            step = params.w_onset * con[sl]
            step = step + params.w_spec * csp[sl]
            cand = d[0, 0] + step
            seg = d_dst[sl]
            better = cand < seg
            seg[better] = cand[better]
            b_dst[sl][better] = 0
        else:
            dscore = beats[target] - beats[target - 1]
            for j in np.flatnonzero(np.isfinite(d[src])):
                bp = bp_table[src, j]
                window = compute_frame_window(int(j), float(bp), dscore,
                                              params, n)
                if len(window) == 0:
                    continue
                sl = slice(window.start, window.stop)
                dframes = np.arange(window.start - j, window.stop - j,
                                    dtype=np.float64)
                st = stretch_cost(dframes, float(bp), dscore, params)
                step = params.w_onset * con[sl]
                step = step + params.w_stretch * st
                step = step + params.w_spec * csp[sl]
                cand = d[src, j] + step
                seg = d_dst[sl]
                better = cand < seg
                if better.any():
                    seg[better] = cand[better]
                    b_dst[sl][better] = j
                    bp_new = update_beat_period(dframes, dscore, float(bp),
                                                params)
                    bp_dst[sl][better] = bp_new[better]

        if not np.isfinite(d_dst).any():
            raise InfeasiblePathError(
                f"no feasible frame for score onset {target} "
                f"(beat {beats[target]:g})", score_index=target)
        if params.reset_threshold is not None:
            d[dst] = prune_row(d[dst], params.reset_threshold)

    state = DPState(d=d, back=back, bp=bp_table, score=score)
    return backtrack(state, rate)


def backtrack(state: DPState, effective_frame_rate: float) -> AlignmentResult:
    """Read the alignment off the backpointers, starting from the cheapest
    cell of the final row (ties resolved toward the smaller frame)."""
    d = state.d
    back = state.back
    m = d.shape[0] - 1
    j = int(np.argmin(d[m]))  # first occurrence = smallest frame on ties
    if not np.isfinite(d[m, j]):
        raise InfeasiblePathError("no finite cost in the final row",
                                  score_index=m - 1)
    frames = [0] * m
    for row in range(m, 0, -1):
        frames[row - 1] = j
        j = int(back[row, j])

    entries = []
    for idx, frame in enumerate(frames):
        onset = state.score.onsets[idx]
        entries.append(AlignmentEntry(
            score_index=idx,
            beat=onset.beat,
            pitches=onset.pitches,
            frame=frame,
            time_s=frame / effective_frame_rate,
            cumulative_cost=float(d[idx + 1, frame])))
    return AlignmentResult(entries=entries,
                           total_cost=float(d[m, frames[-1]]),
                           effective_frame_rate=effective_frame_rate)
