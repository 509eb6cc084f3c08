"""Detection statistics: exclusion z-scores over a lag band, echo scans.

The score at lag i standardizes the analyzed value against the mean and
standard deviation of its band neighborhood with i itself (and optionally
+-halfwidth neighbors) excluded, which makes detection independent of
loudness: scaling the clip shifts only quefrency 0 of the cepstrum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .audio import AudioClip
from .dsp import cross_correlate, enhance_correlation, real_cepstrum
from .embed import DEFAULT_SINGLE_ECHO_BAND, SpreadKey

# sigma below this is treated as degenerate (constant neighborhood)
SIGMA_FLOOR = 1e-12

SPREAD_BAND_START = 3
SPREAD_EXCLUSION_HALFWIDTH = 3

CSV_FIELDS = ("clip_id", "key_id", "duration_seconds", "argmax_lag", "z_at_key", "degenerate")


class ZScore(NamedTuple):
    z: float
    degenerate: bool


def exclusion_zscore(values, i: int, a: int, b: int, halfwidth: int = 0,
                     mu_over_sigma: bool = False) -> ZScore:
    """Exclusion z-score of values[i] against the band [a, b].

    The mean and (population) standard deviation are taken over indices
    j in [a, b] with |j - i| > halfwidth; halfwidth=0 excludes only i itself.
    Returns (z, degenerate); degenerate results carry z = 0.0 rather than
    propagating NaN. mu_over_sigma=True computes the bare ratio mu/sigma
    instead of the standardized deviation (compatibility mode, see
    zscore_profile).
    """
    values = np.asarray(values, dtype=np.float64)
    if not 0 <= a <= i <= b < values.size:
        raise ValueError(f"need 0 <= a <= i <= b < len(values); got a={a}, i={i}, b={b}")
    j = np.arange(a, b + 1)
    kept = values[a : b + 1][np.abs(j - i) > halfwidth]
    if kept.size < 2:
        raise ValueError("fewer than 2 samples remain after exclusion")
    mu = kept.mean()
    sigma = np.sqrt(np.mean((kept - mu) ** 2))
    if sigma < SIGMA_FLOOR:
        return ZScore(0.0, True)
    numerator = mu if mu_over_sigma else values[i] - mu
    return ZScore(float(numerator / sigma), False)


@dataclass
class ZScoreProfile:
    """Per-lag z-scores over a scan band.

    z[k] is the score at lag band[0] + k; degenerate marks profiles where at
    least one lag had a constant neighborhood (those entries are 0.0).
    """

    z: np.ndarray
    band: tuple
    exclusion_halfwidth: int
    source: str
    degenerate: bool = False

    @property
    def argmax_lag(self) -> int:
        return int(self.band[0] + np.argmax(self.z))

    def z_at(self, lag: int) -> float:
        a, b = self.band
        if not a <= lag <= b:
            raise ValueError(f"lag {lag} outside band [{a}, {b}]")
        return float(self.z[lag - a])


def zscore_profile(values, band, halfwidth: int = 0, source: str = "cepstrum",
                   mu_over_sigma: bool = False) -> ZScoreProfile:
    """Exclusion z-score at every lag of the band, vectorized.

    mu_over_sigma=True evaluates the ratio mu/sigma as literally printed in
    the source formula; the default standardized form (values[i] - mu)/sigma
    is what peak detection needs.
    """
    a, b = int(band[0]), int(band[1])
    values = np.asarray(values, dtype=np.float64)
    if not 0 <= a < b < values.size:
        raise ValueError(f"band [{a}, {b}] invalid for sequence of length {values.size}")
    v = values[a : b + 1]
    m = v.size
    idx = np.arange(m)
    lo = np.maximum(idx - halfwidth, 0)
    hi = np.minimum(idx + halfwidth, m - 1)
    keep_n = m - (hi - lo + 1)
    if np.any(keep_n < 2):
        raise ValueError("fewer than 2 samples remain after exclusion")
    csum = np.concatenate(([0.0], np.cumsum(v)))
    csumsq = np.concatenate(([0.0], np.cumsum(v * v)))
    mu = (v.sum() - (csum[hi + 1] - csum[lo])) / keep_n
    mean_sq = (np.dot(v, v) - (csumsq[hi + 1] - csumsq[lo])) / keep_n
    sigma = np.sqrt(np.maximum(mean_sq - mu * mu, 0.0))
    ok = sigma >= SIGMA_FLOOR
    numerator = mu if mu_over_sigma else v - mu
    z = np.where(ok, numerator / np.where(ok, sigma, 1.0), 0.0)
    return ZScoreProfile(
        z=z,
        band=(a, b),
        exclusion_halfwidth=halfwidth,
        source=source,
        degenerate=bool(not ok.all()),
    )


@dataclass
class DetectionReport:
    """Result of one detection run on one clip."""

    profile: ZScoreProfile
    argmax_lag: int
    z_at_key: float | None = None
    clip_id: str = ""
    duration_seconds: float = 0.0
    key_id: str = ""

    def to_dict(self, include_profile: bool = True) -> dict:
        out = {
            "clip_id": self.clip_id,
            "key_id": self.key_id,
            "duration_seconds": self.duration_seconds,
            "argmax_lag": self.argmax_lag,
            "z_at_key": self.z_at_key,
            "degenerate": self.profile.degenerate,
            "band": list(self.profile.band),
            "exclusion_halfwidth": self.profile.exclusion_halfwidth,
            "source": self.profile.source,
        }
        if include_profile:
            out["z"] = [float(v) for v in self.profile.z]
        return out

    def to_csv_row(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "key_id": self.key_id,
            "duration_seconds": self.duration_seconds,
            "argmax_lag": self.argmax_lag,
            "z_at_key": self.z_at_key,
            "degenerate": self.profile.degenerate,
        }


def detect_single_echo(clip: AudioClip, band=DEFAULT_SINGLE_ECHO_BAND,
                       key_lag: int | None = None, clip_id: str = "",
                       key_id: str = "") -> DetectionReport:
    """Scan the whole-clip cepstrum for a single echo over the band.

    z_at_key is filled when key_lag is given. Requires len(clip) > 2*band[1].
    """
    a, b = band
    if len(clip) <= 2 * b:
        raise ValueError(f"clip too short: need more than {2 * b} samples, got {len(clip)}")
    c = real_cepstrum(clip)
    profile = zscore_profile(c, (a, b), halfwidth=0, source="cepstrum")
    z_at_key = profile.z_at(key_lag) if key_lag is not None else None
    return DetectionReport(
        profile=profile,
        argmax_lag=profile.argmax_lag,
        z_at_key=z_at_key,
        clip_id=clip_id,
        duration_seconds=clip.duration_seconds,
        key_id=key_id,
    )


def detect_spread(clip: AudioClip, key: SpreadKey, enhanced: bool = False,
                  clip_id: str = "", key_id: str = "") -> DetectionReport:
    """Correlate the cepstrum with the key's +-1 template and score the band.

    The band is [3, L + delta] with a +-3 exclusion window; when the clip is
    too short for the full band it is clamped to the available correlation
    lags. z_at_key reports the score at the key's lag.
    """
    length, delta = key.length, key.delta
    if len(clip) <= length + delta + 1:
        raise ValueError(
            f"clip too short: need more than {length + delta + 1} samples, got {len(clip)}"
        )
    c = real_cepstrum(clip)
    cstar = cross_correlate(c, key.template)
    source = "spread_correlation"
    if enhanced:
        cstar = enhance_correlation(cstar)
        source = "spread_correlation_enhanced"
    a = SPREAD_BAND_START
    b = min(length + delta, cstar.size - 1)
    if b <= a + 2 * SPREAD_EXCLUSION_HALFWIDTH:
        raise ValueError("clip too short for any usable spread detection band")
    profile = zscore_profile(cstar, (a, b), halfwidth=SPREAD_EXCLUSION_HALFWIDTH, source=source)
    z_at_key = profile.z_at(delta) if a <= delta <= b else None
    return DetectionReport(
        profile=profile,
        argmax_lag=profile.argmax_lag,
        z_at_key=z_at_key,
        clip_id=clip_id,
        duration_seconds=clip.duration_seconds,
        key_id=key_id,
    )
