"""Audio container, WAV file I/O, resampling and mixing.

Everything downstream works on `AudioClip`: a mono float64 buffer plus its
sample rate. Files of any supported bit depth are converted to that canonical
form on load so cepstra are never quantization-limited.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.io.wavfile
import scipy.signal

log = logging.getLogger(__name__)

DEFAULT_SAMPLE_RATE = 44100

# resampler design: windowed-sinc polyphase, Kaiser window
RESAMPLE_TAPS_PER_PHASE = 64
RESAMPLE_KAISER_BETA = 12.0
_MAX_POLYPHASE_FACTOR = 4096


@dataclass
class AudioClip:
    """Mono audio buffer.

    samples: float64 amplitudes, nominal range [-1, 1], all finite.
    sample_rate: positive rate in Hz.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("AudioClip samples must be one-dimensional (mono)")
        if self.samples.size < 1:
            raise ValueError("AudioClip needs at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("AudioClip samples must be finite (no NaN/Inf)")
        self.sample_rate = int(self.sample_rate)
        if self.sample_rate <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")

    def __len__(self):
        return self.samples.size

    @property
    def duration_seconds(self) -> float:
        return self.samples.size / self.sample_rate

    def copy(self) -> "AudioClip":
        return AudioClip(self.samples.copy(), self.sample_rate)


def load_audio(path) -> AudioClip:
    """Read a RIFF/WAVE file as a mono AudioClip at the file's native rate.

    Supports 16/24-bit PCM and 32/64-bit IEEE float data, 1..8 channels.
    Channels are averaged with equal weights; integer samples are scaled to
    [-1, 1) by dividing by 2^(bits-1). Extra chunks (LIST, bext, ...) are
    skipped.
    """
    with warnings.catch_warnings():
        # non-data chunks are tolerated by skipping, quietly
        warnings.simplefilter("ignore", scipy.io.wavfile.WavFileWarning)
        try:
            rate, data = scipy.io.wavfile.read(path)
        except ValueError as exc:
            raise ValueError(f"unsupported or compressed WAV file {path!r}: {exc}") from exc
    if data.size == 0:
        raise ValueError(f"zero-length audio in {path!r}")
    if data.ndim == 2:
        if data.shape[1] > 8:
            raise ValueError(f"{path!r} has {data.shape[1]} channels; at most 8 supported")
        data = data.mean(axis=1, dtype=np.float64)
    if data.dtype == np.int16:
        samples = data / 32768.0
    elif data.dtype == np.int32:
        # scipy returns 24-bit PCM upshifted into int32, so 2^31 scales both
        samples = data / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise ValueError(f"unsupported WAV sample format {data.dtype} in {path!r}")
    return AudioClip(samples, rate)


def save_audio(clip: AudioClip, path, format: str = "float32") -> int:
    """Write a clip as a WAV file in the given format ("pcm16" or "float32").

    For pcm16, samples outside [-1, 1] are clipped; the number of clipped
    samples is logged as a warning and returned (0 when nothing clipped).
    float32 output round-trips bit-exactly through load_audio.
    """
    clipped = 0
    if format == "pcm16":
        x = clip.samples
        clipped = int(np.count_nonzero((x < -1.0) | (x > 1.0)))
        if clipped:
            log.warning("save_audio: clipped %d out-of-range samples writing %s", clipped, path)
        q = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16)
        scipy.io.wavfile.write(path, clip.sample_rate, q)
    elif format == "float32":
        scipy.io.wavfile.write(path, clip.sample_rate, clip.samples.astype(np.float32))
    else:
        raise ValueError(f"unknown output format {format!r} (expected 'pcm16' or 'float32')")
    return clipped


def _design_resample_kernel(up: int, down: int) -> np.ndarray:
    # lowpass at min(fs_in, fs_out)/2 in the upsampled domain; resample_poly
    # applies the interpolation gain `up` itself
    m = max(up, down)
    n_taps = 2 * (RESAMPLE_TAPS_PER_PHASE // 2) * m + 1
    return scipy.signal.firwin(n_taps, 1.0 / m, window=("kaiser", RESAMPLE_KAISER_BETA))


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Band-limited polyphase resampling to target_rate.

    Output length is round(len(clip) * target_rate / sample_rate). Equal
    rates short-circuit to a copy.
    """
    target_rate = int(target_rate)
    if target_rate <= 0:
        raise ValueError(f"target rate must be positive, got {target_rate}")
    if target_rate == clip.sample_rate:
        return clip.copy()
    frac = Fraction(target_rate, clip.sample_rate)
    if max(frac.numerator, frac.denominator) > _MAX_POLYPHASE_FACTOR:
        frac = Fraction(target_rate, clip.sample_rate).limit_denominator(_MAX_POLYPHASE_FACTOR)
    up, down = frac.numerator, frac.denominator
    h = _design_resample_kernel(up, down)
    y = scipy.signal.resample_poly(clip.samples, up, down, window=h)
    n_out = int(round(len(clip) * target_rate / clip.sample_rate))
    n_out = max(n_out, 1)
    if y.size < n_out:
        y = np.pad(y, (0, n_out - y.size))
    return AudioClip(y[:n_out], target_rate)


def mix(clips, weights) -> AudioClip:
    """Weighted sum of clips sharing one sample rate.

    Shorter clips are zero-padded to the longest; output[n] = sum_i w[i] * clip_i[n].
    """
    clips = list(clips)
    weights = list(weights)
    if not clips:
        raise ValueError("mix needs at least one clip")
    if len(weights) != len(clips):
        raise ValueError(f"got {len(clips)} clips but {len(weights)} weights")
    rates = {c.sample_rate for c in clips}
    if len(rates) != 1:
        raise ValueError(f"mix requires one shared sample rate, got {sorted(rates)}")
    n = max(len(c) for c in clips)
    out = np.zeros(n)
    for c, w in zip(clips, weights):
        out[: len(c)] += w * c.samples
    return AudioClip(out, rates.pop())
