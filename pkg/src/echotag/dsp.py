"""Spectral core: real cepstrum, convolution, cross-correlation.

The real cepstrum is ifft(log|fft(x)|) taken over the whole buffer, with no
analysis window and no padding; an echo at lag d shows up as a peak at
quefrency d (and its mirror N-d).
"""

from __future__ import annotations

import numpy as np
import scipy.signal

from .audio import AudioClip

# magnitude floor applied before the log so silent or band-limited input
# yields a finite cepstrum
SPECTRAL_FLOOR = 1e-12


def _samples(x) -> np.ndarray:
    if isinstance(x, AudioClip):
        return x.samples
    return np.asarray(x, dtype=np.float64)


def real_cepstrum(clip) -> np.ndarray:
    """Real cepstrum of a clip (or bare sample array).

    Inputs:
        clip: AudioClip or 1-D array, length >= 2
    Output:
        length-N float64 array of cepstral values indexed by lag; symmetric
        about N/2 (values[k] == values[N-k]) since the log spectrum is real
        and even.
    """
    x = _samples(clip)
    n = x.size
    if n < 2:
        raise ValueError("cepstrum needs at least 2 samples")
    magnitude = np.abs(np.fft.rfft(x))
    return np.fft.irfft(np.log(np.maximum(magnitude, SPECTRAL_FLOOR)), n=n)


def convolve(clip: AudioClip, kernel) -> AudioClip:
    """Full linear convolution of a clip with a kernel, via FFT.

    Output length is len(clip) + len(kernel) - 1 at the clip's rate.
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 1 or kernel.size < 1:
        raise ValueError("kernel must be a non-empty 1-D sequence")
    y = scipy.signal.fftconvolve(clip.samples, kernel, mode="full")
    return AudioClip(y, clip.sample_rate)


def cross_correlate(cepstrum, template) -> np.ndarray:
    """Sliding dot product of a cepstrum with a +-1 template.

    out[n] = sum_k cepstrum[n + k] * template[k] for n in [0, N - L]; the sum
    is left unnormalized (downstream z-scoring is scale-invariant). A pattern
    embedded at lag d peaks at index d.
    """
    c = np.asarray(cepstrum, dtype=np.float64)
    t = np.asarray(template, dtype=np.float64)
    if t.size > c.size:
        raise ValueError(f"template (length {t.size}) longer than cepstrum (length {c.size})")
    return scipy.signal.correlate(c, t, mode="valid")


def enhance_correlation(cstar) -> np.ndarray:
    """Sharpen a correlation signal: out[n] = c*[n] - 0.5 c*[n-1] - 0.5 c*[n+1].

    Out-of-range neighbors count as zero, so boundary samples subtract only
    the neighbor that exists.
    """
    c = np.asarray(cstar, dtype=np.float64)
    if c.size < 3:
        raise ValueError("enhancement needs at least 3 samples")
    out = c.copy()
    out[:-1] -= 0.5 * c[1:]
    out[1:] -= 0.5 * c[:-1]
    return out
