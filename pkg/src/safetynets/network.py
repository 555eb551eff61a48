"""Quadratic-activation networks as field-domain arithmetic.

A model is a chain of linear layers (weight matrix + bias vector) with
elementwise squaring between consecutive layers and a verifier-side softmax
after the last one.  Training happens elsewhere in floats; here the floats
are scaled to integers, encoded into a Mersenne field, padded to power-of-two
shapes, and run forward with full intermediate traces so a prover can answer
for every layer.

Scaling convention: inputs carry a factor of alpha, every weight matrix a
factor of beta.  Squaring doubles the accumulated exponent, so the scale of
layer i's pre-activation is s_0 = alpha*beta, s_{i+1} = beta * s_i**2, and
biases must be quantized with the scale of the pre-activation they join.
All scale bookkeeping uses exact rationals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from ._gemm import matmul_exact, matmul_mod
from .field import FIELDS, PrimeField


class ShapeMismatch(Exception):
    """Matrix dimensions do not chain."""


class Overflow(Exception):
    """A scaled value left the signed range ±(p−1)/2; carries the report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ModelFormatError(Exception):
    """Model or input file violates the JSON schema."""


def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length() if n > 1 else 1


def round_half_away(x: Fraction) -> int:
    """Nearest integer, ties away from zero."""
    if x < 0:
        return -round_half_away(-x)
    n, d = x.numerator, x.denominator
    return (2 * n + d) // (2 * d)


# --------------------------------------------------------------------------
# model containers


@dataclass
class FloatLayer:
    weights: list[list[float]]
    bias: list[float]

    @property
    def rows(self) -> int:
        return len(self.weights)

    @property
    def cols(self) -> int:
        return len(self.weights[0])


@dataclass
class FloatModel:
    """Real-valued parameters straight out of training."""

    layers: list[FloatLayer]

    def __post_init__(self):
        for prev, cur in zip(self.layers, self.layers[1:]):
            if cur.cols != prev.rows:
                raise ShapeMismatch(
                    f"layer takes {cur.cols} inputs but previous layer emits {prev.rows}"
                )

    @property
    def n_in(self) -> int:
        return self.layers[0].cols


@dataclass
class FieldLayer:
    weights: list[list[int]]  # encoded field elements, row-major
    bias: list[int]
    orig_rows: int
    orig_cols: int

    @property
    def rows(self) -> int:
        return len(self.weights)

    @property
    def cols(self) -> int:
        return len(self.weights[0])


@dataclass
class FieldModel:
    """Quantized, encoded parameters plus the scale ledger."""

    field: PrimeField
    alpha: Fraction
    beta: Fraction
    layers: list[FieldLayer]

    def bias_scale(self, i: int) -> Fraction:
        s = self.alpha * self.beta
        for _ in range(i):
            s = self.beta * s * s
        return s

    @property
    def output_scale(self) -> Fraction:
        return self.bias_scale(len(self.layers) - 1)

    @property
    def is_padded(self) -> bool:
        return all(
            layer.rows == _next_pow2(layer.rows) and layer.cols == _next_pow2(layer.cols)
            for layer in self.layers
        )


@dataclass
class LayerTrace:
    """Every intermediate of one forward pass, kept for the prover.

    y[0] is the encoded input; y[i+1] is the elementwise square of z[i];
    z[i] = w_i·y[i] + b_i·1ᵀ over the field.  z[-1] is the network output.
    """

    x: list[list[int]]
    z: list[list[list[int]]]
    y: list[list[list[int]]]

    @property
    def z_last(self) -> list[list[int]]:
        return self.z[-1]


@dataclass
class MaxValueReport:
    """Largest magnitudes seen during exact (no-modulus) calibration."""

    alpha: Fraction
    beta: Fraction
    per_stage: list[tuple[str, int]]
    limit: int

    @property
    def max_abs(self) -> int:
        return max(v for _, v in self.per_stage)

    @property
    def feasible(self) -> bool:
        return self.max_abs <= self.limit


# --------------------------------------------------------------------------
# quantization


def _quantize_matrix(rows, scale: Fraction) -> list[list[int]]:
    return [[round_half_away(scale * Fraction(v)) for v in row] for row in rows]


def quantize_input(model: FieldModel, x_real) -> list[list[int]]:
    """Scale a real input batch by alpha, round, and encode."""
    f = model.field
    out = []
    for row in x_real:
        q = [round_half_away(model.alpha * Fraction(v)) for v in row]
        if any(abs(v) > f.half for v in q):
            raise Overflow("scaled input exceeds the signed range")
        out.append([f.encode_signed(v) for v in q])
    return out


def quantize_model(
    fm: FloatModel,
    alpha,
    beta,
    field: PrimeField,
    calibration=None,
    strict: bool = True,
):
    """Scale float parameters to integers and encode them into the field.

    Weights are scaled by beta; biases by the cumulative scale of the
    pre-activation they join.  When a calibration batch (real matrix,
    column = sample) is supplied, an exact big-integer forward pass records
    the per-stage maximum magnitudes; with strict=True a maximum beyond
    ±(p−1)/2 raises Overflow (with .report attached) instead of returning.
    """
    alpha = Fraction(alpha)
    beta = Fraction(beta)
    if alpha < 1 or beta < 1:
        raise ValueError("alpha and beta must be ≥ 1")
    half = field.half

    int_layers = []
    stages: list[tuple[str, int]] = []
    s = alpha * beta
    for i, layer in enumerate(fm.layers):
        w = _quantize_matrix(layer.weights, beta)
        b = [round_half_away(s * Fraction(v)) for v in layer.bias]
        w_max = max((abs(v) for row in w for v in row), default=0)
        b_max = max((abs(v) for v in b), default=0)
        stages.append((f"w[{i}]", w_max))
        stages.append((f"b[{i}]", b_max))
        if w_max > half or b_max > half:
            report = MaxValueReport(alpha, beta, stages, half)
            raise Overflow(f"layer {i} parameters exceed the signed range", report)
        int_layers.append((w, b))
        s = beta * s * s

    if calibration is not None:
        x_int = [
            [round_half_away(alpha * Fraction(v)) for v in row] for row in calibration
        ]
        stages.append(("x", max((abs(v) for row in x_int for v in row), default=0)))
        stages.extend(_exact_forward_stages(int_layers, x_int))

    report = MaxValueReport(alpha, beta, stages, half)
    if strict and not report.feasible:
        raise Overflow(
            f"calibration maximum {report.max_abs} exceeds {half}", report
        )

    f_layers = [
        FieldLayer(
            weights=[[field.encode_signed(v) for v in row] for row in w],
            bias=[field.encode_signed(v) for v in b],
            orig_rows=len(w),
            orig_cols=len(w[0]),
        )
        for w, b in int_layers
    ]
    return FieldModel(field, alpha, beta, f_layers), report


def _exact_forward_stages(int_layers, x_int):
    """Per-stage max magnitudes of an exact integer forward pass."""
    stages = []
    y = x_int
    last = len(int_layers) - 1
    for i, (w, b) in enumerate(int_layers):
        if len(w[0]) != len(y):
            raise ShapeMismatch("calibration batch does not match layer input size")
        z = matmul_exact(w, y)
        z = [[val + b[j] for val in row] for j, row in enumerate(z)]
        stages.append((f"z[{i}]", max(abs(v) for row in z for v in row)))
        if i != last:
            y = [[v * v for v in row] for row in z]
            stages.append((f"y[{i + 1}]", max(v for row in y for v in row)))
    return stages


# --------------------------------------------------------------------------
# padding


def pad_to_pow2(model: FieldModel, batch: int | None = None) -> FieldModel:
    """Zero-pad every layer to power-of-two dimensions (idempotent).

    Original dimensions are kept on each layer; `batch` is accepted so
    callers can ask for the padded batch via padded_batch(). Padding chains:
    a layer's padded input size always matches the previous padded output.
    """
    layers = []
    for layer in model.layers:
        rows, cols = _next_pow2(layer.rows), _next_pow2(layer.cols)
        w = [row + [0] * (cols - len(row)) for row in layer.weights]
        w += [[0] * cols for _ in range(rows - len(w))]
        b = layer.bias + [0] * (rows - len(layer.bias))
        layers.append(
            FieldLayer(w, b, orig_rows=layer.orig_rows, orig_cols=layer.orig_cols)
        )
    return FieldModel(model.field, model.alpha, model.beta, layers)


def padded_batch(batch: int) -> int:
    return _next_pow2(batch)


def pad_input(x: list[list[int]], rows: int, cols: int) -> list[list[int]]:
    """Zero-pad an encoded input batch to rows×cols."""
    if len(x) > rows or any(len(r) > cols for r in x):
        raise ShapeMismatch("input larger than padded target")
    out = [list(r) + [0] * (cols - len(r)) for r in x]
    out += [[0] * cols for _ in range(rows - len(out))]
    return out


# --------------------------------------------------------------------------
# inference


def forward_infer(model: FieldModel, x: list[list[int]]) -> LayerTrace:
    """Field-domain forward pass keeping all intermediates."""
    f = model.field
    p = f.p
    if len(x) != model.layers[0].cols:
        raise ShapeMismatch(
            f"input has {len(x)} rows, layer 0 takes {model.layers[0].cols}"
        )
    width = len(x[0])
    if any(len(row) != width for row in x):
        raise ShapeMismatch("ragged input batch")

    y_list = [x]
    z_list = []
    y = x
    last = len(model.layers) - 1
    for i, layer in enumerate(model.layers):
        z = matmul_mod(layer.weights, y, f)
        z = [[(v + bj) % p for v in row] for bj, row in zip(layer.bias, z)]
        z_list.append(z)
        if i != last:
            y = [[v * v % p for v in row] for row in z]
            y_list.append(y)
    return LayerTrace(x=x, z=z_list, y=y_list)


def check_range(model: FieldModel, x: list[list[int]]) -> None:
    """Prove-time guard: raise Overflow unless the exact (no-modulus) trace
    provably stays within ±(p−1)/2.

    A float64 triangle-inequality bound on magnitudes clears the common case
    without big-integer work; only a bound near the limit triggers the exact
    forward pass.
    """
    import numpy as np

    f = model.field
    half = f.half
    dec = f.decode_signed
    y_bound = np.array(
        [[float(abs(dec(v))) for v in row] for row in x], dtype=np.float64
    )
    last = len(model.layers) - 1
    certain = True
    for i, layer in enumerate(model.layers):
        w_abs = np.array(
            [[float(abs(dec(v))) for v in row] for row in layer.weights],
            dtype=np.float64,
        )
        b_abs = np.array([[float(abs(dec(v)))] for v in layer.bias], dtype=np.float64)
        z_bound = w_abs @ y_bound + b_abs
        if float(z_bound.max()) * (1 + 1e-6) >= float(half):
            certain = False
            break
        if i != last:
            y_bound = z_bound * z_bound

    if certain:
        return
    int_layers = [
        (
            [[dec(v) for v in row] for row in layer.weights],
            [dec(v) for v in layer.bias],
        )
        for layer in model.layers
    ]
    x_int = [[dec(v) for v in row] for row in x]
    stages = _exact_forward_stages(int_layers, x_int)
    report = MaxValueReport(model.alpha, model.beta, stages, half)
    if not report.feasible:
        raise Overflow(
            f"trace maximum {report.max_abs} exceeds the signed range", report
        )


def decode_output(model: FieldModel, z_last: list[list[int]], mode: str = "argmax"):
    """Decode the output block to scores or class indices, column = sample.

    mode: "scores" (descaled reals), "softmax", or "argmax".  Argmax is
    invariant under the positive scale, so it skips descaling.
    """
    import math

    f = model.field
    rows = model.layers[-1].orig_rows
    cols = len(z_last[0])
    signed = [[f.decode_signed(v) for v in row[:cols]] for row in z_last[:rows]]
    if mode == "argmax":
        out = []
        for c in range(cols):
            col = [signed[r][c] for r in range(rows)]
            out.append(col.index(max(col)))
        return out
    scale = float(model.output_scale)
    scores = [[v / scale for v in row] for row in signed]
    if mode == "scores":
        return scores
    if mode == "softmax":
        out = []
        for c in range(cols):
            col = [scores[r][c] for r in range(rows)]
            m = max(col)
            exps = [math.exp(v - m) for v in col]
            total = sum(exps)
            out.append([e / total for e in exps])
        # transpose back to rows × cols
        return [[out[c][r] for c in range(cols)] for r in range(rows)]
    raise ValueError(f"unknown decode mode: {mode}")


# --------------------------------------------------------------------------
# JSON model files
#
# Field model: { "p": "M61"|"M127", "alpha": .., "beta": ..,
#                "layers": [ {"type":"linear","rows":..,"cols":..,
#                             "weights":[flat row-major signed ints],
#                             "bias":[signed ints]},
#                            {"type":"quad"}, ... ] }
# Float model: same without "p" (and real-valued entries).


def _layers_to_json(layers, flatten_value):
    out = []
    for i, layer in enumerate(layers):
        if i:
            out.append({"type": "quad"})
        out.append(
            {
                "type": "linear",
                "rows": layer.rows,
                "cols": layer.cols,
                "weights": [flatten_value(v) for row in layer.weights for v in row],
                "bias": [flatten_value(v) for v in layer.bias],
            }
        )
    return out


def _layers_from_json(entries, convert):
    if not entries:
        raise ModelFormatError("model has no layers")
    parsed = []
    expect_linear = True
    for entry in entries:
        kind = entry.get("type")
        if expect_linear:
            if kind != "linear":
                raise ModelFormatError("expected a linear layer entry")
            rows, cols = entry["rows"], entry["cols"]
            flat = entry["weights"]
            if len(flat) != rows * cols:
                raise ModelFormatError("weights length does not match rows*cols")
            if len(entry["bias"]) != rows:
                raise ModelFormatError("bias length does not match rows")
            w = [
                [convert(flat[r * cols + c]) for c in range(cols)] for r in range(rows)
            ]
            b = [convert(v) for v in entry["bias"]]
            parsed.append((w, b))
        else:
            if kind != "quad":
                raise ModelFormatError("expected a quad activation entry")
        expect_linear = not expect_linear
    if expect_linear:
        raise ModelFormatError("model ends with a dangling activation")
    return parsed


def save_float_model(model: FloatModel, path: str) -> None:
    doc = {"layers": _layers_to_json(model.layers, float)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_float_model(path: str) -> FloatModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    layers = [
        FloatLayer(w, b) for w, b in _layers_from_json(doc["layers"], float)
    ]
    return FloatModel(layers)


def save_field_model(model: FieldModel, path: str) -> None:
    f = model.field
    doc = {
        "p": f.name.upper(),
        "alpha": float(model.alpha),
        "beta": float(model.beta),
        "layers": _layers_to_json(
            [
                FieldLayer(
                    [[f.decode_signed(v) for v in row] for row in layer.weights],
                    [f.decode_signed(v) for v in layer.bias],
                    layer.orig_rows,
                    layer.orig_cols,
                )
                for layer in model.layers
            ],
            int,
        ),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_field_model(path: str) -> FieldModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    name = str(doc.get("p", "")).lower()
    if name not in FIELDS:
        raise ModelFormatError(f"unknown modulus tag: {doc.get('p')!r}")
    f = FIELDS[name]

    def convert(v):
        if not isinstance(v, int):
            raise ModelFormatError("field model entries must be integers")
        if abs(v) > f.half:
            raise ModelFormatError(f"entry {v} outside the signed range")
        return f.encode_signed(v)

    layers = [
        FieldLayer(w, b, orig_rows=len(w), orig_cols=len(w[0]))
        for w, b in _layers_from_json(doc["layers"], convert)
    ]
    model = FieldModel(f, Fraction(doc["alpha"]), Fraction(doc["beta"]), layers)
    for prev, cur in zip(model.layers, model.layers[1:]):
        if cur.cols != prev.rows:
            raise ModelFormatError("layer dimensions do not chain")
    return model


def load_input_matrix(path: str) -> list[list[float]]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if (
        not isinstance(doc, list)
        or not doc
        or not all(isinstance(row, list) and row for row in doc)
    ):
        raise ModelFormatError("input must be a non-empty JSON 2-D array")
    width = len(doc[0])
    if any(len(row) != width for row in doc):
        raise ModelFormatError("ragged input batch")
    return doc
