"""Shared test utilities: seeded signal factories and a small music synth.

The synthetic music clips stand in for real corpus material: bass, chords,
melody and percussion with per-note envelopes, deterministic per seed.
"""

import numpy as np

from echotag import AudioClip

SR = 44100


def noise_clip(seed, seconds=10.0, rate=SR, scale=0.1):
    rng = np.random.default_rng(seed)
    return AudioClip(scale * rng.standard_normal(int(round(seconds * rate))), rate)


def sine_clip(freq, seconds=1.0, rate=SR, amplitude=0.5):
    t = np.arange(int(round(seconds * rate))) / rate
    return AudioClip(amplitude * np.sin(2 * np.pi * freq * t), rate)


def _adsr(n, attack, decay, sustain, release, rate=SR):
    env = np.full(n, sustain)
    na = min(int(attack * rate), n)
    nd = min(int(decay * rate), max(n - na, 0))
    nr = min(int(release * rate), n)
    env[:na] = np.linspace(0, 1, na, endpoint=False)
    env[na:na + nd] = np.linspace(1, sustain, nd, endpoint=False)
    if nr > 0:
        env[-nr:] *= np.linspace(1, 0, nr)
    return env


def _tone(f0, n, rng, n_harmonics=6, rate=SR):
    t = np.arange(n) / rate
    vibrato = 1 + 0.002 * np.sin(2 * np.pi * 5.2 * t + rng.uniform(0, 2 * np.pi))
    harmonics = np.arange(1, n_harmonics + 1)
    amps = 1.0 / harmonics**1.4
    phases = rng.uniform(0, 2 * np.pi, size=n_harmonics)
    phase = 2 * np.pi * f0 * vibrato * t
    return (amps[:, None] * np.sin(harmonics[:, None] * phase[None, :] + phases[:, None])).sum(axis=0)


def _drum(n, rng, kind, rate=SR):
    t = np.arange(n) / rate
    if kind == "kick":
        freq = 110 * np.exp(-t * 18) + 45
        return np.sin(2 * np.pi * np.cumsum(freq) / rate) * np.exp(-t * 9)
    decay = 25 if kind == "snare" else 60
    return rng.standard_normal(n) * np.exp(-t * decay)


def music_clip(seed, seconds=10.0, rate=SR):
    """Deterministic music-like clip: bass + chords + melody + drums."""
    rng = np.random.default_rng([seed, 777])
    n = int(round(seconds * rate))
    out = np.zeros(n)
    roots = rng.choice([55.0, 61.74, 65.41, 73.42, 82.41, 98.0], size=4)
    beat = 60.0 / rng.uniform(85, 130)

    def place(start_s, length_s, level, make):
        i0 = int(start_s * rate)
        nseg = min(int(length_s * rate), n - i0)
        if nseg <= 0:
            return
        out[i0:i0 + nseg] += level * make(nseg)

    pos = 0.0
    while pos < seconds:
        f0 = float(rng.choice(roots)) * rng.choice([1, 1, 2])
        dur = beat * rng.choice([1, 2])
        place(pos, dur, 0.5,
              lambda m: _tone(f0, m, rng)[:m] * _adsr(m, 0.01, 0.08, 0.5, 0.05))
        pos += dur
    pos = 0.0
    while pos < seconds:
        root = float(rng.choice(roots)) * 4
        place(pos, beat * 2, 0.22, lambda m: sum(
            _tone(root * ratio, m, rng, n_harmonics=5)[:m] for ratio in (1.0, 1.25, 1.5)
        ) * _adsr(m, 0.02, 0.2, 0.4, 0.1))
        pos += beat * 2
    pos = beat * float(rng.integers(0, 2))
    while pos < seconds:
        f0 = float(rng.choice(roots)) * rng.choice([4, 5, 6, 8])
        dur = beat * rng.choice([0.5, 1])
        place(pos, dur, 0.18,
              lambda m: _tone(f0, m, rng, n_harmonics=4)[:m] * _adsr(m, 0.01, 0.1, 0.55, 0.08))
        pos += dur
    pos, hit_index = 0.0, 0
    while pos < seconds:
        kind = "kick" if hit_index % 2 == 0 else "snare"
        place(pos, 0.25, 0.4, lambda m: _drum(m, rng, kind))
        place(pos + beat / 2, 0.08, 0.12, lambda m: _drum(m, rng, "hat"))
        pos += beat
        hit_index += 1
    return AudioClip(0.5 * out / np.abs(out).max(), rate)
