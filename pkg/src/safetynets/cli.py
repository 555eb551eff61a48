"""Command-line surface: quantize, infer, prove, verify, bound, selftest.

Exit codes: 0 success/accept, 1 verification reject, 2 usage, 3 I/O or
format problems, 4 overflow / out-of-range values.  Set SAFETYNETS_LOG to
DEBUG/INFO/... for logging verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
import time

from .field import FIELDS, OutOfRange
from .mle import EvalTable, mle_evaluate
from .network import (
    FloatLayer,
    FloatModel,
    ModelFormatError,
    Overflow,
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
    save_field_model,
)
from .session import (
    ProofTranscript,
    drive_verifier,
    prove,
    serve_prover,
    soundness_bound,
    transcript_size_bytes,
    verify,
)

log = logging.getLogger("safetynets")

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_RANGE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="safetynets",
        description="Verified inference for quadratic-activation networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quantize", help="scale a float model into the field")
    q.add_argument("--model", required=True, help="float model JSON")
    q.add_argument("--alpha", required=True, help="input scale (or comma list to sweep)")
    q.add_argument("--beta", required=True, help="weight scale (or comma list to sweep)")
    q.add_argument("--prime", choices=sorted(FIELDS), default="m61")
    q.add_argument("--input", help="calibration batch JSON (column = sample)")
    q.add_argument("--out", help="field model JSON to write")

    inf = sub.add_parser("infer", help="field-domain forward pass")
    inf.add_argument("--model", required=True, help="field model JSON")
    inf.add_argument("--input", required=True, help="input batch JSON")
    inf.add_argument("--out", help="write the raw output block (signed JSON)")

    pr = sub.add_parser("prove", help="run inference and emit a proof transcript")
    pr.add_argument("--model", required=True, help="field model JSON")
    pr.add_argument("--input", required=True, help="input batch JSON")
    pr.add_argument("--out", help="write the output block (signed JSON)")
    pr.add_argument("--transcript", help="write the binary transcript here")
    pr.add_argument("--mode", choices=["fs", "interactive"], default="fs")
    pr.add_argument("--seed", type=int, help="rng seed (interactive mode)")
    pr.add_argument("--listen", metavar="HOST:PORT", help="serve one TCP verifier")

    ve = sub.add_parser("verify", help="check a transcript against model+input")
    ve.add_argument("--model", required=True, help="field model JSON")
    ve.add_argument("--input", required=True, help="input batch JSON")
    ve.add_argument("--out", help="output block JSON (from prove)")
    ve.add_argument("--transcript", help="binary transcript (from prove)")
    ve.add_argument("--seed", type=int, help="rng seed (interactive replay / TCP)")
    ve.add_argument("--connect", metavar="HOST:PORT", help="drive a TCP prover")

    bo = sub.add_parser("bound", help="soundness bound for given shapes")
    bo.add_argument("--shapes", required=True, help="comma widths n_0,...,n_L")
    bo.add_argument("--batch", required=True, type=int)
    bo.add_argument("--prime", choices=sorted(FIELDS), default="m61")

    st = sub.add_parser("selftest", help="run the built-in property smoke suite")
    st.add_argument("--seed", type=int, default=7)
    return parser


def _parse_hostport(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"expected HOST:PORT, got {text!r}")
    return host, int(port)


def _load_prepared(args):
    """Load model + input, quantize/pad, and return everything prove/verify need."""
    model = load_field_model(args.model)
    x_real = load_input_matrix(args.input)
    x = quantize_input(model, x_real)
    model = pad_to_pow2(model)
    batch = padded_batch(len(x[0]))
    x = pad_input(x, model.layers[0].cols, batch)
    return model, x


def _write_signed_block(field, block, path):
    signed = [[field.decode_signed(v) for v in row] for row in block]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(signed, fh)


def _read_signed_block(field, path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, list) or not all(isinstance(r, list) for r in doc):
        raise ModelFormatError("output block must be a JSON 2-D array")
    try:
        return [[field.encode_signed(int(v)) for v in row] for row in doc]
    except OutOfRange as e:
        raise ModelFormatError(str(e)) from e


# --------------------------------------------------------------------------
# commands


def _cmd_quantize(args) -> int:
    fm = load_float_model(args.model)
    field = FIELDS[args.prime]
    calib = load_input_matrix(args.input) if args.input else None
    alphas = [float(v) for v in str(args.alpha).split(",")]
    betas = [float(v) for v in str(args.beta).split(",")]

    if len(alphas) > 1 or len(betas) > 1:
        # Table-style sweep: rows alpha, columns beta, max |value| per cell.
        print(f"max |value| during calibration (limit {field.half})")
        header = "alpha\\beta" + "".join(f"{b:>14g}" for b in betas)
        print(header)
        for a in alphas:
            cells = []
            for b in betas:
                try:
                    _, report = quantize_model(fm, a, b, field, calib, strict=False)
                except Overflow as e:
                    # Parameters themselves do not fit at this scale pair;
                    # mark the cell rather than aborting the grid.
                    report = e.report
                mark = "" if report.feasible else "!"
                cells.append(f"{report.max_abs:>13.3e}{mark or ' '}")
            print(f"{a:>10g} " + "".join(cells))
        print("cells marked ! exceed the signed range (infeasible)")
        return EXIT_OK

    try:
        model, report = quantize_model(fm, alphas[0], betas[0], field, calib)
    except Overflow as e:
        print(f"overflow: {e}")
        if e.report is not None:
            for name, val in e.report.per_stage:
                print(f"  {name}: {val}")
        return EXIT_RANGE
    for name, val in report.per_stage:
        print(f"  {name}: max |value| {val}")
    print(f"feasible: max {report.max_abs} <= {report.limit}")
    if args.out:
        save_field_model(model, args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_infer(args) -> int:
    model, x = _load_prepared(args)
    t0 = time.perf_counter()
    trace = forward_infer(model, x)
    dt = time.perf_counter() - t0
    preds = decode_output(model, trace.z_last)
    n_real = len(load_input_matrix(args.input)[0])
    print(f"inference: {dt:.3f}s")
    print("predictions:", " ".join(str(c) for c in preds[:n_real]))
    if args.out:
        _write_signed_block(model.field, trace.z_last, args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_prove(args) -> int:
    model, x = _load_prepared(args)
    if args.listen:
        host, port = _parse_hostport(args.listen)
        print(f"serving one proof session on {host}:{port}")
        z_last, transcript = serve_prover(model, x, host, port)
        print("session complete")
    else:
        rng = random.Random(args.seed) if args.mode == "interactive" else None
        t0 = time.perf_counter()
        trace = forward_infer(model, x)
        t_inf = time.perf_counter() - t0
        t0 = time.perf_counter()
        z_last, transcript = prove(model, x, mode=args.mode, rng=rng, trace=trace)
        t_prove = time.perf_counter() - t0
        overhead = t_prove / t_inf if t_inf > 0 else float("inf")
        print(f"inference: {t_inf:.3f}s  proof generation: {t_prove:.3f}s "
              f"(overhead ratio {overhead:.2f})")
    blob = transcript.to_bytes()
    print(f"transcript: {transcript.element_count()} elements, {len(blob)} bytes")
    if args.out:
        _write_signed_block(model.field, z_last, args.out)
        print(f"wrote {args.out}")
    if args.transcript:
        with open(args.transcript, "wb") as fh:
            fh.write(blob)
        print(f"wrote {args.transcript}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    model, x = _load_prepared(args)
    if args.connect:
        host, port = _parse_hostport(args.connect)
        rng = random.Random(args.seed)
        t0 = time.perf_counter()
        result, _z = drive_verifier(model, x, host, port, rng)
        dt = time.perf_counter() - t0
        print(f"verify: {dt:.3f}s (live TCP session)")
        print(str(result))
        return EXIT_OK if result.accepted else EXIT_REJECT

    if not args.out or not args.transcript:
        print("verify needs --out and --transcript (or --connect)", file=sys.stderr)
        return EXIT_USAGE
    z_last = _read_signed_block(model.field, args.out)
    with open(args.transcript, "rb") as fh:
        raw = fh.read()
    try:
        transcript = ProofTranscript.from_bytes(raw)
    except Exception as e:
        print(f"REJECT: malformed transcript ({e})")
        return EXIT_REJECT
    rng = random.Random(args.seed) if transcript.mode == "interactive" else None
    t0 = time.perf_counter()
    result = verify(model, x, z_last, transcript, rng=rng)
    dt = time.perf_counter() - t0
    batch = len(x[0])
    print(f"verify: {dt:.3f}s  transcript: {len(raw)} bytes "
          f"(closed form {transcript_size_bytes(model, batch)})")
    print(str(result))
    return EXIT_OK if result.accepted else EXIT_REJECT


def _cmd_bound(args) -> int:
    widths = [int(v) for v in args.shapes.split(",")]
    field = FIELDS[args.prime]
    eps = soundness_bound(widths, args.batch, field)
    threshold = 2 ** -30
    print(f"epsilon = {eps.numerator}/{eps.denominator} ≈ {float(eps):.3e}")
    print(f"< 2^-30: {'yes' if eps < threshold else 'no'}")
    return EXIT_OK


def _cmd_selftest(args) -> int:
    rng = random.Random(args.seed)
    failures = 0

    def check(name, ok):
        nonlocal failures
        print(f"{'ok' if ok else 'FAIL'}: {name}")
        if not ok:
            failures += 1

    for fname, field in sorted(FIELDS.items()):
        good = True
        for _ in range(2000):
            a = rng.randrange(field.p)
            b = rng.randrange(field.p)
            if field.mul(a, b) != a * b % field.p or field.add(a, b) != (a + b) % field.p:
                good = False
                break
        inv_good = all(
            field.mul(v, field.inv(v)) == 1
            for v in (rng.randrange(1, field.p) for _ in range(200))
        )
        check(f"{fname} arithmetic vs big-int oracle", good and inv_good)

    field = FIELDS["m61"]
    tab = [[rng.randrange(field.p) for _ in range(8)] for _ in range(4)]
    et = EvalTable.from_matrix(tab)
    t = tuple(rng.randrange(field.p) for _ in range(2))
    u = tuple(rng.randrange(field.p) for _ in range(3))
    direct = 0
    from .mle import eq_evaluate

    for a in range(4):
        abits = tuple((a >> (1 - i)) & 1 for i in range(2))
        for b in range(8):
            bbits = tuple((b >> (2 - i)) & 1 for i in range(3))
            direct += (
                tab[a][b]
                * eq_evaluate(field, t, abits)
                % field.p
                * eq_evaluate(field, u, bbits)
            ) % field.p
    check("mle_evaluate vs direct sum", mle_evaluate(field, et, t, u) == direct % field.p)

    for fname, field in sorted(FIELDS.items()):
        model, x = _random_toy_model(field, rng)
        z_last, transcript = prove(model, x)
        res = verify(model, x, z_last, transcript)
        check(f"{fname} honest prove→verify accepts", res.accepted)

        bad_z = [list(row) for row in z_last]
        bad_z[0][0] = (bad_z[0][0] + 1) % field.p
        check(
            f"{fname} corrupted output rejected",
            not verify(model, x, bad_z, transcript).accepted,
        )
        ph = rng.randrange(len(transcript.phases))
        el = rng.randrange(len(transcript.phases[ph]))
        phases = [list(p) for p in transcript.phases]
        phases[ph][el] = (phases[ph][el] + 1) % field.p
        tampered = ProofTranscript(field, transcript.mode, transcript.shape_digest, phases)
        check(
            f"{fname} corrupted transcript rejected",
            not verify(model, x, z_last, tampered).accepted,
        )
        check(
            f"{fname} transcript size matches closed form",
            len(transcript.to_bytes()) == transcript_size_bytes(model, len(x[0])),
        )
    print("selftest: all passed" if not failures else f"selftest: {failures} failures")
    return EXIT_OK if not failures else EXIT_REJECT


def _random_toy_model(field, rng):
    """Small random two-layer model plus a padded input batch."""
    fm = FloatModel(
        [
            FloatLayer(
                [[rng.uniform(-1, 1) for _ in range(4)] for _ in range(4)],
                [rng.uniform(-1, 1) for _ in range(4)],
            ),
            FloatLayer(
                [[rng.uniform(-1, 1) for _ in range(4)] for _ in range(2)],
                [rng.uniform(-1, 1) for _ in range(2)],
            ),
        ]
    )
    model, _ = quantize_model(fm, 8, 8, field)
    model = pad_to_pow2(model)
    x_real = [[rng.uniform(-1, 1) for _ in range(4)] for _ in range(4)]
    x = quantize_input(model, x_real)
    x = pad_input(x, model.layers[0].cols, 4)
    return model, x


# --------------------------------------------------------------------------


def run_cli(argv=None) -> int:
    level = os.environ.get("SAFETYNETS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK

    handlers = {
        "quantize": _cmd_quantize,
        "infer": _cmd_infer,
        "prove": _cmd_prove,
        "verify": _cmd_verify,
        "bound": _cmd_bound,
        "selftest": _cmd_selftest,
    }
    try:
        return handlers[args.command](args)
    except (OSError, json.JSONDecodeError) as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except ModelFormatError as e:
        print(f"format error: {e}", file=sys.stderr)
        return EXIT_IO
    except (Overflow, OutOfRange) as e:
        print(f"overflow: {e}", file=sys.stderr)
        return EXIT_RANGE
    except ValueError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
