"""ECG monitoring core: filtering, feature extraction, metrics, classifier,
and the telemetry frame codec, backed by the C++ library."""

from ._ecgmon import (
    BiquadCascade,
    EcgmonError,
    Model,
    apply_filter,
    apply_zero_phase,
    auc_score,
    butterworth_lowpass,
    classification_report,
    confusion_matrix,
    crc32,
    decode_frame,
    dequantize,
    detect_r_peaks,
    encode_frame,
    extract_features,
    feature_names,
    load_model,
    quantize,
    round2_half_up,
    synth_ecg,
    train_model,
)

__all__ = [
    "BiquadCascade",
    "EcgmonError",
    "Model",
    "apply_filter",
    "apply_zero_phase",
    "auc_score",
    "butterworth_lowpass",
    "classification_report",
    "confusion_matrix",
    "crc32",
    "decode_frame",
    "dequantize",
    "detect_r_peaks",
    "encode_frame",
    "extract_features",
    "feature_names",
    "load_model",
    "quantize",
    "round2_half_up",
    "synth_ecg",
    "train_model",
]

__version__ = "0.1.0"
