"""Verified inference for quadratic-activation networks.

An untrusted prover evaluates a quantized network over a Mersenne-prime
field and emits an interactive-proof transcript; the verifier checks it in
sublinear time against the public model and input.
"""

from .field import FIELDS, M61, M127, OutOfRange, PrimeField, ZeroInverse
from .mle import (
    DimensionMismatch,
    EmptyTable,
    EvalTable,
    eq_evaluate,
    eq_table,
    fold_table,
    fold_values,
    mle_evaluate,
)
from .network import (
    FieldLayer,
    FieldModel,
    FloatLayer,
    FloatModel,
    LayerTrace,
    MaxValueReport,
    ModelFormatError,
    Overflow,
    ShapeMismatch,
    check_range,
    decode_output,
    forward_infer,
    load_field_model,
    load_float_model,
    load_input_matrix,
    pad_input,
    pad_to_pow2,
    padded_batch,
    quantize_input,
    quantize_model,
    round_half_away,
    save_field_model,
    save_float_model,
)
from .session import (
    EntropyExhausted,
    FiatShamirSource,
    InteractiveSource,
    MalformedTranscript,
    ProofTranscript,
    VerificationResult,
    derive_challenge,
    drive_verifier,
    expected_phase_counts,
    phase_counts_for_shapes,
    prove,
    serve_prover,
    soundness_bound,
    transcript_size_bytes,
    transcript_size_for_shapes,
    verify,
)
from .sumcheck import (
    ChannelClosed,
    Claim,
    MalformedRound,
    interpolate_at,
    sumcheck_prove,
    sumcheck_verify,
)

__version__ = "0.1.0"

__all__ = [
    "FIELDS",
    "M61",
    "M127",
    "PrimeField",
    "OutOfRange",
    "ZeroInverse",
    "EvalTable",
    "DimensionMismatch",
    "EmptyTable",
    "eq_evaluate",
    "eq_table",
    "fold_table",
    "fold_values",
    "mle_evaluate",
    "Claim",
    "ChannelClosed",
    "MalformedRound",
    "interpolate_at",
    "sumcheck_prove",
    "sumcheck_verify",
    "FloatModel",
    "FloatLayer",
    "FieldModel",
    "FieldLayer",
    "LayerTrace",
    "MaxValueReport",
    "ModelFormatError",
    "Overflow",
    "ShapeMismatch",
    "quantize_model",
    "quantize_input",
    "check_range",
    "round_half_away",
    "pad_to_pow2",
    "pad_input",
    "padded_batch",
    "forward_infer",
    "decode_output",
    "load_float_model",
    "save_float_model",
    "load_field_model",
    "save_field_model",
    "load_input_matrix",
    "ProofTranscript",
    "VerificationResult",
    "FiatShamirSource",
    "InteractiveSource",
    "EntropyExhausted",
    "MalformedTranscript",
    "derive_challenge",
    "prove",
    "verify",
    "serve_prover",
    "drive_verifier",
    "soundness_bound",
    "transcript_size_bytes",
    "transcript_size_for_shapes",
    "expected_phase_counts",
    "phase_counts_for_shapes",
]
