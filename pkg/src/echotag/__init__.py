"""echotag: embed and detect echo watermarks in audio corpora.

Single echoes and time-spread pseudorandom echo patterns are embedded across
whole clips and recovered from the real cepstrum via exclusion z-scores; an
evaluation harness measures robustness through simulated degradation
channels (noise, mixing, pitch shift).
"""

from .audio import DEFAULT_SAMPLE_RATE, AudioClip, load_audio, mix, resample, save_audio
from .detect import (
    DetectionReport,
    ZScoreProfile,
    detect_single_echo,
    detect_spread,
    exclusion_zscore,
    zscore_profile,
)
from .dsp import convolve, cross_correlate, enhance_correlation, real_cepstrum
from .embed import (
    CANONICAL_DELTAS,
    DEFAULT_SINGLE_ECHO_BAND,
    EchoKey,
    SpreadKey,
    build_echo_kernel,
    embed,
    embed_single_echo,
    embed_spread,
)
from .harness import (
    BitflipCurve,
    ChannelSpec,
    RocResult,
    apply_channel,
    roc,
    run_bitflip_curve,
    run_duration_sweep,
    run_tagging_experiment,
)
from .keyfiles import load_key_file, load_pattern_set, save_key_file, save_pattern_set
from .patterns import (
    PatternSet,
    flip_bits,
    generate_pattern,
    generate_pattern_set,
    hamming,
    is_run_valid,
)
from .payload import PayloadConfig, bits_per_second, capacity_bits, decode_payload, encode_payload

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "BitflipCurve",
    "CANONICAL_DELTAS",
    "ChannelSpec",
    "DEFAULT_SAMPLE_RATE",
    "DEFAULT_SINGLE_ECHO_BAND",
    "DetectionReport",
    "EchoKey",
    "PatternSet",
    "PayloadConfig",
    "RocResult",
    "SpreadKey",
    "ZScoreProfile",
    "apply_channel",
    "bits_per_second",
    "build_echo_kernel",
    "capacity_bits",
    "convolve",
    "cross_correlate",
    "decode_payload",
    "detect_single_echo",
    "detect_spread",
    "embed",
    "embed_single_echo",
    "embed_spread",
    "encode_payload",
    "enhance_correlation",
    "exclusion_zscore",
    "flip_bits",
    "generate_pattern",
    "generate_pattern_set",
    "hamming",
    "is_run_valid",
    "load_audio",
    "load_key_file",
    "load_pattern_set",
    "mix",
    "real_cepstrum",
    "resample",
    "roc",
    "run_bitflip_curve",
    "run_duration_sweep",
    "run_tagging_experiment",
    "save_audio",
    "save_key_file",
    "save_pattern_set",
    "zscore_profile",
]
