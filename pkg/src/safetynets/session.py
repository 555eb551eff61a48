"""End-to-end proof sessions.

The prover runs the forward pass, commits to the output block, and then
walks the layers from output to input: bias reduction (when the layer has
one), matrix-multiplication reduction, and — for hidden layers — the
activation reduction that hands the claim to the layer below.  The verifier
replays the same walk on the transcript, samples every challenge itself
(interactively or via the hash chain), evaluates weight/bias claims against
the model it already holds, and settles the last claim against the input.

Challenges in fiat_shamir mode come from a SHA-256 chain seeded with the
transcript header and the output block, absorbing every prover message
before the next squeeze; the proof is then a file instead of a conversation.
The interactive mode keeps the verifier's private randomness (used by the
TCP demo and by the statistical soundness tests).
"""

from __future__ import annotations

import hashlib
import socket as _socket
import struct
from dataclasses import dataclass
from fractions import Fraction

from .field import FIELDS_BY_WIRE_ID, PrimeField
from .layer_protocols import (
    LayerShape,
    RoundCheckFailed,
    activation_element_count,
    activation_reduce_prove,
    activation_reduce_verify,
    bias_element_count,
    bias_reduce_prove,
    bias_reduce_verify,
    matmul_element_count,
    matmul_reduce_prove,
    matmul_reduce_verify,
)
from .mle import DimensionMismatch, EvalTable, log2_exact, mle_evaluate
from .network import FieldModel, LayerTrace, ShapeMismatch, check_range, forward_infer
from .sumcheck import ChannelClosed, Claim, MalformedRound

TRANSCRIPT_MAGIC = b"SFNT"
TRANSCRIPT_VERSION = 1
MODE_BYTES = {"fs": 0, "interactive": 1}
MODE_NAMES = {v: k for k, v in MODE_BYTES.items()}
HEADER_LEN = 4 + 2 + 1 + 1 + 32


class MalformedTranscript(Exception):
    """Transcript bytes violate the framing or element canonicality."""


class EntropyExhausted(Exception):
    """An interactive challenge source ran out of scripted randomness."""


# --------------------------------------------------------------------------
# challenge sources


class FiatShamirSource:
    """SHA-256 hash chain: absorb prover bytes, squeeze field challenges.

    Rejection-samples the masked squeeze output so challenges are uniform
    over [0, p).  Identical absorbed prefixes give identical challenges.
    """

    mode = "fs"

    def __init__(self, field: PrimeField, seed_bytes: bytes):
        self.field = field
        self.state = hashlib.sha256(seed_bytes).digest()
        self.counter = 0

    def absorb(self, tag: bytes, data: bytes) -> None:
        self.state = hashlib.sha256(self.state + tag + data).digest()

    def challenge(self) -> int:
        f = self.field
        while True:
            block = hashlib.sha256(
                self.state + b"chal" + self.counter.to_bytes(8, "little")
            ).digest()
            self.counter += 1
            v = int.from_bytes(block[: f.elem_bytes], "little") & f.p
            if v < f.p:
                return v


class InteractiveSource:
    """Caller-supplied randomness: an RNG or a finite script of challenges."""

    mode = "interactive"

    def __init__(self, field: PrimeField, rng=None, script=None):
        self.field = field
        self.rng = rng
        self.script = list(script) if script is not None else None

    def absorb(self, tag: bytes, data: bytes) -> None:
        pass

    def challenge(self) -> int:
        if self.script is not None:
            if not self.script:
                raise EntropyExhausted("challenge script exhausted")
            return self.script.pop(0)
        if self.rng is None:
            raise EntropyExhausted("interactive source has no randomness")
        return self.field.rand_element(self.rng)


def derive_challenge(source, data: bytes = b"") -> int:
    """Absorb `data` (if any) into the source and return one challenge."""
    if data:
        source.absorb(b"data", data)
    return source.challenge()


# --------------------------------------------------------------------------
# channels: how protocol messages travel


class ProverChannel:
    """Records prover messages into transcript phases; absorbs them for FS."""

    def __init__(self, field: PrimeField, source):
        self.field = field
        self.source = source
        self.phases: list[list[int]] = []

    def begin_phase(self) -> None:
        self.phases.append([])

    def send_elements(self, elems: list[int]) -> None:
        self.phases[-1].extend(elems)
        self.source.absorb(b"msg", _elements_bytes(self.field, elems))

    def challenge(self) -> int:
        return self.source.challenge()


class ReplayChannel:
    """Feeds recorded transcript phases to the verifier, absorbing as it goes."""

    def __init__(self, field: PrimeField, phases: list[list[int]], source):
        self.field = field
        self.phases = phases
        self.source = source
        self.index = -1
        self.cursor = 0

    def begin_phase(self) -> None:
        if self.index >= 0 and self.cursor != len(self.phases[self.index]):
            raise MalformedTranscript("leftover elements in a protocol phase")
        self.index += 1
        self.cursor = 0
        if self.index >= len(self.phases):
            raise MalformedTranscript("transcript has too few phases")

    def recv_elements(self, n: int) -> list[int]:
        phase = self.phases[self.index]
        if self.cursor + n > len(phase):
            raise MalformedTranscript("transcript phase ran out of elements")
        out = phase[self.cursor : self.cursor + n]
        self.cursor += n
        self.source.absorb(b"msg", _elements_bytes(self.field, out))
        return out

    def challenge(self) -> int:
        return self.source.challenge()

    def finish(self) -> None:
        if self.index >= 0 and self.cursor != len(self.phases[self.index]):
            raise MalformedTranscript("leftover elements in final phase")
        if self.index + 1 != len(self.phases):
            raise MalformedTranscript("transcript has extra phases")


def _elements_bytes(field: PrimeField, elems: list[int]) -> bytes:
    return b"".join(field.to_bytes(e) for e in elems)


# --------------------------------------------------------------------------
# transcripts


@dataclass
class ProofTranscript:
    """Every prover message, phase by phase, plus the session header."""

    field: PrimeField
    mode: str
    shape_digest: bytes
    phases: list[list[int]]

    def header_bytes(self) -> bytes:
        return (
            TRANSCRIPT_MAGIC
            + struct.pack("<H", TRANSCRIPT_VERSION)
            + bytes([self.field.wire_id, MODE_BYTES[self.mode]])
            + self.shape_digest
        )

    def element_count(self) -> int:
        return sum(len(ph) for ph in self.phases)

    def to_bytes(self) -> bytes:
        out = [self.header_bytes()]
        for phase in self.phases:
            body = _elements_bytes(self.field, phase)
            out.append(struct.pack("<I", len(body)))
            out.append(body)
        return b"".join(out)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "ProofTranscript":
        if len(raw) < HEADER_LEN:
            raise MalformedTranscript("shorter than the fixed header")
        if raw[:4] != TRANSCRIPT_MAGIC:
            raise MalformedTranscript("bad magic")
        (version,) = struct.unpack_from("<H", raw, 4)
        if version != TRANSCRIPT_VERSION:
            raise MalformedTranscript(f"unsupported version {version}")
        field = FIELDS_BY_WIRE_ID.get(raw[6])
        if field is None:
            raise MalformedTranscript(f"unknown modulus id {raw[6]}")
        mode = MODE_NAMES.get(raw[7])
        if mode is None:
            raise MalformedTranscript(f"unknown challenge mode {raw[7]}")
        digest = raw[8:HEADER_LEN]
        phases = []
        pos = HEADER_LEN
        eb = field.elem_bytes
        while pos < len(raw):
            if pos + 4 > len(raw):
                raise MalformedTranscript("truncated phase length")
            (body_len,) = struct.unpack_from("<I", raw, pos)
            pos += 4
            if body_len % eb or pos + body_len > len(raw):
                raise MalformedTranscript("truncated or misaligned phase body")
            try:
                phase = [
                    field.from_bytes(raw[i : i + eb])
                    for i in range(pos, pos + body_len, eb)
                ]
            except ValueError as e:
                raise MalformedTranscript(str(e)) from e
            phases.append(phase)
            pos += body_len
        return cls(field, mode, digest, phases)


def shape_digest(model: FieldModel, batch: int) -> bytes:
    """Digest of everything that fixes the message schedule."""
    parts = [model.field.name, f"b={batch}"]
    for layer in model.layers:
        has_bias = 1 if any(layer.bias) else 0
        parts.append(f"{layer.rows}x{layer.cols}:{has_bias}")
    return hashlib.sha256("|".join(parts).encode("ascii")).digest()


def phase_counts_for_shapes(shapes, batch: int) -> list[int]:
    """Element count of every transcript phase, outermost layer first.

    `shapes` lists one (rows, cols, has_bias) triple per layer in forward
    order, so sizes can be computed without materializing any parameters.
    """
    log_b = log2_exact(batch)
    counts = []
    for i in reversed(range(len(shapes))):
        rows, cols, has_bias = shapes[i]
        if has_bias:
            counts.append(bias_element_count(log2_exact(rows)))
        counts.append(matmul_element_count(log2_exact(cols)))
        if i:
            counts.append(activation_element_count(log2_exact(cols), log_b))
    return counts


def _model_shapes(model: FieldModel):
    return [(l.rows, l.cols, bool(any(l.bias))) for l in model.layers]


def expected_phase_counts(model: FieldModel, batch: int) -> list[int]:
    return phase_counts_for_shapes(_model_shapes(model), batch)


def transcript_size_for_shapes(shapes, batch: int, field: PrimeField) -> int:
    """Exact serialized size: header plus length-prefixed phases."""
    counts = phase_counts_for_shapes(shapes, batch)
    return HEADER_LEN + sum(4 + c * field.elem_bytes for c in counts)


def transcript_size_bytes(model: FieldModel, batch: int) -> int:
    return transcript_size_for_shapes(_model_shapes(model), batch, model.field)


# --------------------------------------------------------------------------
# soundness


def soundness_bound(widths, batch: int, field: PrimeField) -> Fraction:
    """Upper bound on the accept probability for a false output claim.

    ε = 3·b·Σ n_i / p over all layer widths n_0..n_L; exact rational.
    """
    total = sum(widths)
    if total <= 0 or batch <= 0:
        raise ValueError("widths and batch must be positive")
    return Fraction(3 * batch * total, field.p)


# --------------------------------------------------------------------------
# prove


def _output_point(field: PrimeField, model: FieldModel, batch: int, source):
    log_out = log2_exact(model.layers[-1].rows)
    log_b = log2_exact(batch)
    q = tuple(source.challenge() for _ in range(log_out))
    r = tuple(source.challenge() for _ in range(log_b))
    return q, r


def _prove_phases(field, model, trace, channel, q, r) -> None:
    p = field.p
    value = mle_evaluate(field, EvalTable.from_matrix(trace.z_last), q, r)
    claim = Claim(value, q + r, "output")
    for i in reversed(range(len(model.layers))):
        layer = model.layers[i]
        if any(layer.bias):
            z_prime = [
                [(v - bj) % p for v in row]
                for bj, row in zip(layer.bias, trace.z[i])
            ]
            channel.begin_phase()
            claim, _ = bias_reduce_prove(field, z_prime, layer.bias, claim, channel)
        channel.begin_phase()
        _, _, y_claim = matmul_reduce_prove(
            field,
            layer.weights,
            trace.y[i],
            claim,
            channel,
            y_tag="input" if i == 0 else "activation-output",
        )
        if i:
            channel.begin_phase()
            claim = activation_reduce_prove(field, trace.z[i - 1], y_claim, channel)


def _require_padded(model: FieldModel, x: list[list[int]]) -> int:
    if not model.is_padded:
        raise ShapeMismatch("model must be padded to powers of two first")
    if len(x) != model.layers[0].cols:
        raise ShapeMismatch("input rows do not match the first layer")
    batch = len(x[0])
    if batch & (batch - 1):
        raise ShapeMismatch("batch size must be a power of two")
    return batch

def prove(
    model: FieldModel,
    x: list[list[int]],
    *,
    mode: str = "fs",
    rng=None,
    trace: LayerTrace | None = None,
    check_overflow: bool = True,
):
    """Run inference and produce (z_last, transcript).

    A precomputed trace may be passed to separate inference timing from
    proof generation.  check_overflow guards against silent wraparound by
    bounding the exact-integer trace (raises Overflow).
    """
    if mode not in MODE_BYTES:
        raise ValueError(f"unknown mode {mode!r}")
    field = model.field
    batch = _require_padded(model, x)
    if check_overflow:
        check_range(model, x)
    if trace is None:
        trace = forward_infer(model, x)
    digest = shape_digest(model, batch)

    if mode == "fs":
        header = (
            TRANSCRIPT_MAGIC
            + struct.pack("<H", TRANSCRIPT_VERSION)
            + bytes([field.wire_id, MODE_BYTES[mode]])
            + digest
        )
        source = FiatShamirSource(field, header)
        source.absorb(
            b"out", b"".join(_elements_bytes(field, row) for row in trace.z_last)
        )
    else:
        source = InteractiveSource(field, rng=rng)

    channel = ProverChannel(field, source)
    q, r = _output_point(field, model, batch, source)
    _prove_phases(field, model, trace, channel, q, r)
    transcript = ProofTranscript(field, mode, digest, channel.phases)
    return trace.z_last, transcript


# --------------------------------------------------------------------------
# verify


@dataclass
class VerificationResult:
    accepted: bool
    phase: str | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.accepted

    def __str__(self) -> str:
        if self.accepted:
            return "ACCEPT"
        return f"REJECT: {self.reason} [{self.phase}]"


class _Reject(Exception):
    def __init__(self, phase: str, reason: str):
        super().__init__(f"{phase}: {reason}")
        self.phase = phase
        self.reason = reason


def _verify_phases(field, model, x, channel, claim: Claim, log_b: int) -> None:
    for i in reversed(range(len(model.layers))):
        layer = model.layers[i]
        log_out = log2_exact(layer.rows)
        log_in = log2_exact(layer.cols)
        phase_name = f"layer{i}"
        if any(layer.bias):
            channel.begin_phase()
            try:
                claim, b_claim = bias_reduce_verify(field, log_out, claim, channel)
            except RoundCheckFailed as e:
                raise _Reject(f"{phase_name}-bias", str(e)) from e
            local = mle_evaluate(
                field, EvalTable.from_vector(layer.bias), b_claim.point, ()
            )
            if local != b_claim.value:
                raise _Reject(
                    f"{phase_name}-bias", "bias claim does not match the model"
                )
        channel.begin_phase()
        shape = LayerShape(layer.cols, layer.rows, 1 << log_b)
        try:
            _, w_claim, y_claim = matmul_reduce_verify(
                field,
                shape,
                claim,
                channel,
                y_tag="input" if i == 0 else "activation-output",
            )
        except RoundCheckFailed as e:
            raise _Reject(f"{phase_name}-matmul", str(e)) from e
        local = mle_evaluate(
            field,
            EvalTable.from_matrix(layer.weights),
            w_claim.point[:log_out],
            w_claim.point[log_out:],
        )
        if local != w_claim.value:
            raise _Reject(
                f"{phase_name}-matmul", "weight claim does not match the model"
            )
        if i:
            channel.begin_phase()
            try:
                claim = activation_reduce_verify(
                    field, log_in, log_b, y_claim, channel
                )
            except RoundCheckFailed as e:
                raise _Reject(f"{phase_name}-activation", str(e)) from e
        else:
            local = mle_evaluate(
                field,
                EvalTable.from_matrix(x),
                y_claim.point[:log_in],
                y_claim.point[log_in:],
            )
            if local != y_claim.value:
                raise _Reject("input", "input claim does not match the batch")


def verify(
    model: FieldModel,
    x: list[list[int]],
    z_last: list[list[int]],
    transcript: ProofTranscript,
    *,
    rng=None,
) -> VerificationResult:
    """Check a transcript against the model, input batch, and output block.

    Rejection is a result, not an exception.  Interactive transcripts need
    the verifier's rng (the TCP demo verifies inline; offline replay of an
    interactive session only works with the same challenge stream).
    """
    field = model.field
    try:
        batch = _require_padded(model, x)
        if transcript.field is not field:
            raise MalformedTranscript("transcript modulus does not match the model")
        digest = shape_digest(model, batch)
        if transcript.shape_digest != digest:
            raise MalformedTranscript("shape digest mismatch")
        if [len(ph) for ph in transcript.phases] != expected_phase_counts(model, batch):
            raise MalformedTranscript("message counts do not match the shape")
        n_out = model.layers[-1].rows
        if len(z_last) != n_out or any(len(row) != batch for row in z_last):
            raise MalformedTranscript("output block has the wrong shape")
        for row in z_last:
            for v in row:
                if not 0 <= v < field.p:
                    raise MalformedTranscript("non-canonical output element")

        if transcript.mode == "fs":
            source = FiatShamirSource(field, transcript.header_bytes())
            source.absorb(
                b"out", b"".join(_elements_bytes(field, row) for row in z_last)
            )
        else:
            if rng is None:
                raise ValueError("interactive verification needs an rng")
            source = InteractiveSource(field, rng=rng)

        channel = ReplayChannel(field, transcript.phases, source)
        q, r = _output_point(field, model, batch, source)
        value = mle_evaluate(field, EvalTable.from_matrix(z_last), q, r)
        claim = Claim(value, q + r, "output")
        _verify_phases(field, model, x, channel, claim, log2_exact(batch))
        channel.finish()
    except _Reject as e:
        return VerificationResult(False, e.phase, e.reason)
    except MalformedTranscript as e:
        return VerificationResult(False, "transcript", f"malformed transcript ({e})")
    except (MalformedRound, ChannelClosed, DimensionMismatch, ShapeMismatch) as e:
        return VerificationResult(False, "transcript", f"malformed transcript ({e})")
    return VerificationResult(True)


# --------------------------------------------------------------------------
# TCP demo: one connection, u32-framed turns, verifier drives challenges


def _send_frame(sock, payload: bytes) -> None:
    sock.sendall(struct.pack("<I", len(payload)) + payload)


def _recv_exact(sock, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ChannelClosed("peer closed the connection")
        buf += chunk
    return buf


def _recv_frame(sock, limit: int = 1 << 26) -> bytes:
    (length,) = struct.unpack("<I", _recv_exact(sock, 4))
    if length > limit:
        raise MalformedTranscript(f"frame of {length} bytes exceeds the limit")
    return _recv_exact(sock, length)


class SocketProverChannel:
    """Prover end of the live protocol: sends messages, reads challenges."""

    def __init__(self, field: PrimeField, sock):
        self.field = field
        self.sock = sock
        self.phases: list[list[int]] = []

    def begin_phase(self) -> None:
        self.phases.append([])

    def send_elements(self, elems: list[int]) -> None:
        self.phases[-1].extend(elems)
        _send_frame(self.sock, _elements_bytes(self.field, elems))

    def challenge(self) -> int:
        raw = _recv_frame(self.sock)
        return self.field.from_bytes(raw)


class SocketVerifierChannel:
    """Verifier end: reads prover messages, samples and sends challenges."""

    def __init__(self, field: PrimeField, sock, rng):
        self.field = field
        self.sock = sock
        self.rng = rng

    def begin_phase(self) -> None:
        pass

    def recv_elements(self, n: int) -> list[int]:
        raw = _recv_frame(self.sock)
        eb = self.field.elem_bytes
        if len(raw) != n * eb:
            raise MalformedTranscript(f"expected {n} elements, got {len(raw)} bytes")
        return [self.field.from_bytes(raw[i : i + eb]) for i in range(0, len(raw), eb)]

    def challenge(self) -> int:
        c = self.field.rand_element(self.rng)
        _send_frame(self.sock, self.field.to_bytes(c))
        return c


class _SocketSource:
    """Adapter: prover-side challenges arrive from the verifier's frames."""

    mode = "interactive"

    def __init__(self, channel):
        self._channel = channel

    def absorb(self, tag: bytes, data: bytes) -> None:
        pass

    def challenge(self) -> int:
        return self._channel.challenge()


def serve_prover(model: FieldModel, x: list[list[int]], host: str, port: int):
    """Listen for one verifier connection and prove interactively."""
    field = model.field
    batch = _require_padded(model, x)
    check_range(model, x)
    trace = forward_infer(model, x)
    digest = shape_digest(model, batch)
    header = (
        TRANSCRIPT_MAGIC
        + struct.pack("<H", TRANSCRIPT_VERSION)
        + bytes([field.wire_id, MODE_BYTES["interactive"]])
        + digest
    )
    with _socket.create_server((host, port)) as server:
        conn, _addr = server.accept()
        with conn:
            _send_frame(conn, header)
            _send_frame(
                conn, b"".join(_elements_bytes(field, row) for row in trace.z_last)
            )
            channel = SocketProverChannel(field, conn)
            source = _SocketSource(channel)
            q, r = _output_point(field, model, batch, source)
            _prove_phases(field, model, trace, channel, q, r)
    return trace.z_last, ProofTranscript(field, "interactive", digest, channel.phases)


def drive_verifier(model: FieldModel, x: list[list[int]], host: str, port: int, rng):
    """Connect to a prover and verify live; returns (result, z_last)."""
    field = model.field
    batch = _require_padded(model, x)
    z_last = None
    try:
        with _socket.create_connection((host, port)) as conn:
            header = _recv_frame(conn)
            expected = (
                TRANSCRIPT_MAGIC
                + struct.pack("<H", TRANSCRIPT_VERSION)
                + bytes([field.wire_id, MODE_BYTES["interactive"]])
                + shape_digest(model, batch)
            )
            if header != expected:
                raise MalformedTranscript("session header mismatch")
            raw = _recv_frame(conn)
            n_out = model.layers[-1].rows
            eb = field.elem_bytes
            if len(raw) != n_out * batch * eb:
                raise MalformedTranscript("output block has the wrong size")
            flat = [
                field.from_bytes(raw[i : i + eb]) for i in range(0, len(raw), eb)
            ]
            z_last = [flat[i * batch : (i + 1) * batch] for i in range(n_out)]
            channel = SocketVerifierChannel(field, conn, rng)
            q, r = _output_point(field, model, batch, channel)
            value = mle_evaluate(field, EvalTable.from_matrix(z_last), q, r)
            claim = Claim(value, q + r, "output")
            _verify_phases(field, model, x, channel, claim, log2_exact(batch))
    except _Reject as e:
        return VerificationResult(False, e.phase, e.reason), z_last
    except (
        MalformedTranscript,
        MalformedRound,
        ChannelClosed,
        RoundCheckFailed,
        ValueError,
    ) as e:
        return VerificationResult(False, "transcript", f"malformed transcript ({e})"), z_last
    return VerificationResult(True), z_last
