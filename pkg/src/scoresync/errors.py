"""Exception types shared across the package."""


class ScoreSyncError(Exception):
    """Base class for all errors raised by this package."""


class AudioReadError(ScoreSyncError):
    """Audio file missing, truncated, or otherwise unreadable."""


class UnsupportedAudioError(ScoreSyncError):
    """Audio file uses an encoding we do not decode (e.g. compressed WAV)."""


class EmptyAudioError(ScoreSyncError):
    """Audio contains no usable samples (or fewer than one analysis frame)."""


class ScoreError(ScoreSyncError):
    """Score file malformed or violating the score-sequence invariants."""


class ConfigurationError(ScoreSyncError):
    """Inconsistent setup, e.g. score pitches outside the filterbank range
    or a band edge at/above Nyquist."""


class InfeasiblePathError(ScoreSyncError):
    """The aligner ran out of candidate frames before placing every chord."""

    def __init__(self, message: str, score_index: int):
        super().__init__(message)
        self.score_index = score_index
