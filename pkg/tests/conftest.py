import pytest

from helpers import music_clip, noise_clip


@pytest.fixture(scope="session")
def music_corpus():
    """Ten deterministic 10 s music-like clips (real-corpus stand-in)."""
    return [(f"music-{seed:02d}", music_clip(seed)) for seed in range(10)]


@pytest.fixture(scope="session")
def sweep_corpus():
    """Five 65 s noise clips: long enough for 60 s segment sweeps."""
    return [(f"noise-{seed:02d}", noise_clip(seed, seconds=65.0)) for seed in range(5)]
