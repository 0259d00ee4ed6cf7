"""Semitone-spaced IIR filterbank and window-max framing.

One second-order Butterworth bandpass per piano key, centered on the
equal-tempered key frequencies and bounded by the quarter-tone midpoints
to the neighboring keys. Each band is filtered causally in double
precision, rectified, and aggregated into frames by the maximum absolute
value per window, giving an 88 x T activation matrix at (nominally)
50 frames per second.

The hop is ``round(sample_rate / frame_rate)`` and all frame/seconds
conversions use the effective rate ``sample_rate / hop``, so sample rates
that do not divide evenly stay exact.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .audio_io import AudioBuffer
from .errors import ConfigurationError, EmptyAudioError


@dataclass(frozen=True)
class FilterbankConfig:
    """Temperament, register, and framing parameters of the filterbank."""

    num_bands: int = 88
    midi_low: int = 21
    reference_pitch: int = 69
    reference_freq: float = 440.0
    frame_rate: float = 50.0
    window_factor: int = 1  # window width = window_factor * hop

    def __post_init__(self):
        if self.num_bands < 1:
            raise ConfigurationError("num_bands must be >= 1")
        if self.midi_low + self.num_bands - 1 > 127:
            raise ConfigurationError("band range exceeds MIDI pitch 127")
        if self.reference_freq <= 0:
            raise ConfigurationError("reference_freq must be positive")
        if self.frame_rate <= 0:
            raise ConfigurationError("frame_rate must be positive")
        if self.window_factor < 1:
            raise ConfigurationError("window_factor must be >= 1")

    @property
    def band_pitches(self) -> np.ndarray:
        return np.arange(self.midi_low, self.midi_low + self.num_bands)


DEFAULT_CONFIG = FilterbankConfig()


@dataclass(frozen=True)
class BandpassCoefficients:
    """One second-order section: y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2]
    - a1 y[n-1] - a2 y[n-2]."""

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float
    center_freq: float

    @property
    def ba(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([self.b0, self.b1, self.b2]),
                np.array([1.0, self.a1, self.a2]))

    def pole_magnitudes(self) -> np.ndarray:
        return np.abs(np.roots([1.0, self.a1, self.a2]))


@dataclass
class Spectrogram:
    """Non-negative band x frame activation matrix.

    ``frame_rate`` is the effective rate (sample_rate / hop), and
    ``band_pitches[r]`` gives the MIDI pitch of row ``r``.
    """

    values: np.ndarray
    frame_rate: float
    band_pitches: np.ndarray = field(
        default_factory=lambda: DEFAULT_CONFIG.band_pitches)

    @property
    def num_bands(self) -> int:
        return self.values.shape[0]

    @property
    def num_frames(self) -> int:
        return self.values.shape[1]

    def pitch_row(self, midi_pitch: int) -> int:
        """Row index of a MIDI pitch; ConfigurationError if out of range."""
        row = int(midi_pitch) - int(self.band_pitches[0])
        if row < 0 or row >= self.num_bands or \
                self.band_pitches[row] != midi_pitch:
            raise ConfigurationError(
                f"pitch {midi_pitch} outside filterbank range "
                f"{self.band_pitches[0]}..{self.band_pitches[-1]}")
        return row


def center_frequency(midi_pitch: int,
                     config: FilterbankConfig = DEFAULT_CONFIG) -> float:
    """Equal-tempered frequency of a MIDI pitch under the config's tuning."""
    if not 0 <= midi_pitch <= 127:
        raise ValueError(f"MIDI pitch out of range: {midi_pitch}")
    return config.reference_freq * 2.0 ** (
        (midi_pitch - config.reference_pitch) / 12.0)


def band_edges(midi_pitch: int,
               config: FilterbankConfig = DEFAULT_CONFIG
               ) -> tuple[float, float]:
    """Quarter-tone passband limits around a pitch's center frequency."""
    fc = center_frequency(midi_pitch, config)
    return fc * 2.0 ** (-1.0 / 24.0), fc * 2.0 ** (1.0 / 24.0)


def design_bandpass(lo: float, hi: float,
                    sample_rate: float) -> BandpassCoefficients:
    """Second-order Butterworth bandpass with -3 dB points at lo and hi.

    First-order lowpass prototype transformed to bandpass and discretized
    by the bilinear transform with both edges pre-warped, i.e. unit gain
    at the warp-consistent center and exactly -3 dB at the edges.
    """
    if not 0.0 < lo < hi:
        raise ConfigurationError(f"invalid band edges ({lo}, {hi})")
    if hi >= sample_rate / 2.0:
        raise ConfigurationError(
            f"band edge {hi:.2f} Hz reaches Nyquist at sample rate "
            f"{sample_rate:g} Hz")
    b, a = signal.butter(1, [lo, hi], btype="bandpass", fs=sample_rate)
    coeffs = BandpassCoefficients(
        b0=float(b[0]), b1=float(b[1]), b2=float(b[2]),
        a1=float(a[1]), a2=float(a[2]),
        center_freq=float(np.sqrt(lo * hi)))
    if np.any(coeffs.pole_magnitudes() >= 1.0):
        raise ConfigurationError(
            f"unstable design for band ({lo:.3f}, {hi:.3f}) Hz "
            f"at {sample_rate:g} Hz")
    return coeffs


def design_filterbank(config: FilterbankConfig,
                      sample_rate: float) -> list[BandpassCoefficients]:
    """Design all bands; any edge at/above Nyquist is an error (bands are
    never dropped silently, which would desynchronize rows from pitches)."""
    bank = []
    for pitch in config.band_pitches:
        lo, hi = band_edges(int(pitch), config)
        try:
            bank.append(design_bandpass(lo, hi, sample_rate))
        except ConfigurationError as exc:
            raise ConfigurationError(
                f"band for MIDI pitch {pitch}: {exc}") from exc
    return bank


def window_max(x: np.ndarray, hop: int, window: int) -> np.ndarray:
    """Frame a 1-D signal into floor(len(x) / hop) window maxima.

    Frame t covers samples [t * hop, t * hop + window), truncated at the
    end of the signal when the window is wider than the hop.
    """
    num_frames = len(x) // hop
    if window == hop:
        return x[:num_frames * hop].reshape(num_frames, hop).max(axis=1)
    out = np.empty(num_frames)
    for t in range(num_frames):
        out[t] = x[t * hop:t * hop + window].max()
    return out


def compute_spectrogram(audio: AudioBuffer,
                        config: FilterbankConfig = DEFAULT_CONFIG
                        ) -> Spectrogram:
    """Filter the signal through the bank and frame it by window maxima.

    Each band is filtered causally (forward pass, zero initial state); a
    frame holds the maximum of |filtered| over its window. Window width is
    ``window_factor * hop`` (default: non-overlapping windows).
    """
    samples = np.asarray(audio.samples, dtype=np.float64)
    hop = int(round(audio.sample_rate / config.frame_rate))
    num_frames = len(samples) // hop
    if num_frames == 0:
        raise EmptyAudioError(
            f"audio too short: {len(samples)} samples is less than one "
            f"frame of {hop}")

    bank = design_filterbank(config, audio.sample_rate)
    window = hop * config.window_factor
    values = np.empty((config.num_bands, num_frames))
    for row, coeffs in enumerate(bank):
        b, a = coeffs.ba
        values[row] = window_max(np.abs(signal.lfilter(b, a, samples)),
                                 hop, window)

    return Spectrogram(values=values,
                       frame_rate=audio.sample_rate / hop,
                       band_pitches=config.band_pitches)
