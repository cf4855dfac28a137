"""Fp (fraction of probabilities) text naturalness toolkit."""

from ._fpscore import (
    ClassLabel,
    Error,
    FormatError,
    InvalidArgument,
    IoError,
    LocalScorer,
    NgramModel,
    RemoteError,
    RemoteScorer,
    SampleScore,
    Scorer,
    ThresholdConfig,
    TokenScore,
    calibrate_dual,
    calibrate_single,
    classify,
    cli,
    emit_jsonl,
    evaluate_system,
    h_score_three_class,
    h_score_two_class,
    heatmap_html,
    paired_compare,
    run_study,
    summarize,
    token_fp,
    tokenize,
)

__version__ = "0.1.0"


def main() -> int:
    """Console entry point mirroring the C++ ``fpscore`` tool."""
    import sys

    code, out, err = cli(sys.argv[1:])
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
