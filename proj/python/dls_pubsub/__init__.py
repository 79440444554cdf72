"""DLS content-based publish/subscribe engine."""

from ._core import (
    CBFParams,
    ContentSchema,
    CountingBloomFilter,
    DlsError,
    Simulator,
    decode_label,
    evaluate,
    event_label,
    measure_fpr,
    run_cli,
    subscription_labels,
    theoretical_fpr_approx,
    theoretical_fpr_exact,
)

__all__ = [
    "CBFParams",
    "ContentSchema",
    "CountingBloomFilter",
    "DlsError",
    "Simulator",
    "decode_label",
    "evaluate",
    "event_label",
    "measure_fpr",
    "run_cli",
    "subscription_labels",
    "theoretical_fpr_approx",
    "theoretical_fpr_exact",
]
