"""Acceptance gate: one test per release criterion, in order.

Each test prints a single summary line (visible on failure or with -rA)
and encodes its criterion's stated tolerance exactly; nothing here is
allowed to loosen a threshold to pass.
"""

import random
import statistics
import time
from fractions import Fraction

from conftest import bits_of, eq_oracle, mle_oracle
from safetynets import (
    M61,
    M127,
    EvalTable,
    FieldLayer,
    FieldModel,
    FloatLayer,
    FloatModel,
    Overflow,
    forward_infer,
    interpolate_at,
    mle_evaluate,
    phase_counts_for_shapes,
    prove,
    quantize_model,
    soundness_bound,
    transcript_size_for_shapes,
    verify,
)
from safetynets.session import ProofTranscript, transcript_size_bytes
from safetynets.sumcheck import ProductOracle

# magnitude/support guardrails per depth keep worst-case big-integer
# traces inside ±(p−1)/2 for m61 (exact bounds worked out by hand):
#   depth 2, |w| ≤ 3 dense  -> max < 2^27
#   depth 3, |w| ≤ 2 dense  -> max < 2^40
#   depth 4, |w| = 1, ≤ 8 nonzeros/row -> max < 2^47
_DEPTH_RULES = {2: (3, None), 3: (2, None), 4: (1, 8)}


def _random_network(field, rng, depth, widths, batch):
    mag, support = _DEPTH_RULES[depth]
    layers = []
    for i in range(depth):
        rows, cols = widths[i + 1], widths[i]
        if support is None:
            w = [
                [field.encode_signed(rng.randint(-mag, mag)) for _ in range(cols)]
                for _ in range(rows)
            ]
        else:
            w = [[0] * cols for _ in range(rows)]
            for r in range(rows):
                for c in rng.sample(range(cols), min(support, cols)):
                    w[r][c] = field.encode_signed(rng.choice((-1, 1)))
        b = [field.encode_signed(rng.randint(-1, 1)) for _ in range(rows)]
        layers.append(FieldLayer(w, b, rows, cols))
    model = FieldModel(field, Fraction(1), Fraction(1), layers)
    x = [
        [field.encode_signed(rng.randint(-1, 1)) for _ in range(batch)]
        for _ in range(widths[0])
    ]
    return model, x


def _sparse_wide_model(field, widths, rng, support=8):
    layers = []
    for i in range(len(widths) - 1):
        rows, cols = widths[i + 1], widths[i]
        w = [[0] * cols for _ in range(rows)]
        for r in range(rows):
            for c in rng.sample(range(cols), support):
                w[r][c] = field.encode_signed(rng.choice((-1, 1)))
        b = [field.encode_signed(rng.choice((-1, 0, 1))) for _ in range(rows)]
        layers.append(FieldLayer(w, b, rows, cols))
    model = FieldModel(field, Fraction(1), Fraction(1), layers)
    x = [
        [field.encode_signed(rng.choice((-1, 0, 1))) for _ in range(2048)]
        for _ in range(widths[0])
    ]
    return model, x


def test_completeness_randomized_networks():
    rng = random.Random(0xACCE97)
    t0 = time.perf_counter()
    accepted = 0
    trials = 100
    for trial in range(trials):
        field = M61 if trial % 2 == 0 else M127
        depth = rng.choice([2, 3, 4])
        widths = [rng.choice([1, 2, 4, 8, 16]) for _ in range(depth + 1)]
        batch = rng.choice([1, 4, 64, 256])
        model, x = _random_network(field, rng, depth, widths, batch)
        z_last, transcript = prove(model, x)
        result = verify(model, x, z_last, transcript)
        assert result.accepted, (
            f"trial {trial}: {field.name} depth {depth} widths {widths} "
            f"batch {batch}: {result}"
        )
        accepted += 1
    elapsed = time.perf_counter() - t0
    assert accepted == trials
    assert elapsed < 60.0, f"completeness suite took {elapsed:.1f}s"
    print(f"[PASS] completeness: {accepted}/{trials} honest sessions accepted "
          f"in {elapsed:.1f}s (< 60s)")


def test_soundness_tamper_trials_and_bound():
    rng = random.Random(0x50FD)
    trials = 1000
    rejected = 0
    for trial in range(trials):
        field = M61 if trial % 2 == 0 else M127
        model, x = _random_network(field, rng, 2, [4, 4, 4], 4)
        kind = trial % 4
        if kind == 0:  # corrupted output block
            z_last, transcript = prove(model, x)
            z_last = [list(row) for row in z_last]
            r = rng.randrange(len(z_last))
            c = rng.randrange(len(z_last[0]))
            z_last[r][c] = (z_last[r][c] + rng.randrange(1, field.p)) % field.p
        elif kind == 1:  # corrupted intermediate value, reproved faithfully
            trace = forward_infer(model, x)
            block = rng.choice([trace.z[0], trace.y[1]])
            r = rng.randrange(len(block))
            c = rng.randrange(len(block[0]))
            block[r][c] = (block[r][c] + rng.randrange(1, field.p)) % field.p
            z_last, transcript = prove(model, x, trace=trace, check_overflow=False)
        elif kind == 2:  # corrupted transcript element
            z_last, transcript = prove(model, x)
            phases = [list(p) for p in transcript.phases]
            ph = rng.randrange(len(phases))
            el = rng.randrange(len(phases[ph]))
            phases[ph][el] = (phases[ph][el] + rng.randrange(1, field.p)) % field.p
            transcript = ProofTranscript(
                field, transcript.mode, transcript.shape_digest, phases
            )
        else:  # lazy prover: drops one connection from the network
            lazy_layers = [
                FieldLayer(
                    [list(row) for row in l.weights],
                    list(l.bias),
                    l.orig_rows,
                    l.orig_cols,
                )
                for l in model.layers
            ]
            nonzero = [
                (i, r, c)
                for i, l in enumerate(lazy_layers)
                for r in range(l.rows)
                for c in range(l.cols)
                if l.weights[r][c]
            ]
            if nonzero:
                i, r, c = rng.choice(nonzero)
                lazy_layers[i].weights[r][c] = 0
            else:
                lazy_layers[0].weights[0][0] = 1
            lazy = FieldModel(field, model.alpha, model.beta, lazy_layers)
            z_last, transcript = prove(lazy, x)
        if not verify(model, x, z_last, transcript).accepted:
            rejected += 1
    assert rejected >= 999, f"only {rejected}/1000 tampered sessions rejected"

    eps = soundness_bound((1845, 2000, 2000, 2000, 183), 2048, M61)
    assert eps == Fraction(3 * 2048 * 8028, 2**61 - 1)
    assert eps < Fraction(1, 2**30)
    print(f"[PASS] soundness: {rejected}/1000 tampered sessions rejected; "
          f"bound {float(eps):.3e} < 2^-30 (exact rational)")


def test_bandwidth_closed_form_and_actual():
    # full-size shape chain: 2048 -> 2048 -> 2048 -> 2048 -> 256, all biased
    full = [(2048, 2048, True)] * 3 + [(256, 2048, True)]
    counts = phase_counts_for_shapes(full, 2048)
    full_bytes = transcript_size_for_shapes(full, 2048, M61)
    assert len(counts) == 11
    assert sum(counts) == 538
    assert full_bytes == 4388
    assert full_bytes < 8192

    # same chain at width 256: generate a real transcript and compare
    rng = random.Random(0xBA4D)
    model, x = _sparse_wide_model(M61, [256] * 5, rng)
    t0 = time.perf_counter()
    trace = forward_infer(model, x)
    z_last, transcript = prove(model, x, trace=trace)
    elapsed = time.perf_counter() - t0
    blob = transcript.to_bytes()
    assert elapsed < 30.0, f"transcript generation took {elapsed:.1f}s"
    assert len(blob) == transcript_size_bytes(model, 2048)
    assert len(blob) < 8192
    assert verify(model, x, z_last, transcript).accepted
    print(f"[PASS] bandwidth: closed form == actual == {len(blob)} bytes at "
          f"width 256; full-size closed form {full_bytes} bytes < 8192; "
          f"generation {elapsed:.1f}s < 30s")


def test_verifier_sublinear_timing():
    rng = random.Random(0x71ED)
    model, x = _sparse_wide_model(M61, [256] * 4, rng)

    def one_run():
        t0 = time.perf_counter()
        trace = forward_infer(model, x)
        t_inf = time.perf_counter() - t0
        t0 = time.perf_counter()
        z_last, transcript = prove(model, x, trace=trace)
        t_prove = time.perf_counter() - t0
        t0 = time.perf_counter()
        result = verify(model, x, z_last, transcript)
        t_verify = time.perf_counter() - t0
        assert result.accepted
        return t_inf, t_prove, t_verify

    one_run()  # warm-up: first run pays cache/allocator setup
    runs = [one_run() for _ in range(5)]
    ratios = [tv / (ti + tp) for ti, tp, tv in runs]
    overheads = [tp / ti for ti, tp, tv in runs]
    med_ratio = statistics.median(ratios)
    med_overhead = statistics.median(overheads)
    assert med_ratio <= 0.2, f"verify/(infer+prove) median {med_ratio:.3f}"
    assert all(o > 0 for o in overheads)
    for o in overheads:
        assert abs(o - med_overhead) <= 0.2 * med_overhead, (
            f"overhead ratios unstable: {[f'{v:.2f}' for v in overheads]}"
        )
    print(f"[PASS] verifier sublinearity: median verify/(infer+prove) "
          f"{med_ratio:.3f} <= 0.2; prover overhead {med_overhead:.2f}x "
          f"stable within ±20%")


def test_oracle_equivalences():
    rng = random.Random(0x04AC1E)

    # (a) fast MLE evaluation vs brute-force Lagrange sum, exhaustive shapes
    checked = 0
    for field in (M61, M127):
        shapes = (
            [(r, c) for r in (1, 2, 4, 8) for c in (1, 2, 4, 8)]
            if field is M61
            else [(2, 4), (8, 8)]
        )
        for rows, cols in shapes:
            table = [
                [rng.randrange(field.p) for _ in range(cols)] for _ in range(rows)
            ]
            et = EvalTable.from_matrix(table)
            rv, cv = (rows - 1).bit_length(), (cols - 1).bit_length()
            for _ in range(100):
                t = tuple(rng.randrange(field.p) for _ in range(rv))
                u = tuple(rng.randrange(field.p) for _ in range(cv))
                assert mle_evaluate(field, et, t, u) == mle_oracle(
                    field.p, table, t, u
                )
                checked += 1

    # (b) field-domain inference vs big-integer (no modulus) inference
    for trial in range(100):
        field = M61 if trial % 2 == 0 else M127
        depth = rng.choice([2, 3, 4])
        widths = [rng.choice([1, 2, 4, 8]) for _ in range(depth + 1)]
        model, x = _random_network(field, rng, depth, widths, rng.choice([1, 2, 4]))
        dec = field.decode_signed
        int_layers = [
            ([[dec(v) for v in row] for row in l.weights], [dec(v) for v in l.bias])
            for l in model.layers
        ]
        y_int = [[dec(v) for v in row] for row in x]
        trace = forward_infer(model, x)
        for i, (w, b) in enumerate(int_layers):
            z_int = [
                [
                    sum(w[r][k] * y_int[k][c] for k in range(len(y_int))) + b[r]
                    for c in range(len(y_int[0]))
                ]
                for r in range(len(w))
            ]
            assert [[dec(v) for v in row] for row in trace.z[i]] == z_int
            if i + 1 < depth:
                y_int = [[v * v for v in row] for row in z_int]

    # (c) round-polynomial interpolation vs direct oracle evaluation
    for trial in range(50):
        field = M61 if trial % 2 == 0 else M127
        num_vars = rng.choice([1, 2, 3])
        tables = [
            [rng.randrange(field.p) for _ in range(1 << num_vars)]
            for _ in range(rng.choice([1, 2, 3]))
        ]
        oracle = ProductOracle(field, [list(t) for t in tables])
        evals = oracle.round_evals()
        q = rng.randrange(field.p)
        h_q = interpolate_at(field, evals, q)
        direct = 0
        for tail in range(1 << (num_vars - 1)):
            point = (q,) + bits_of(tail, num_vars - 1)
            prod = 1
            for t in tables:
                prod = prod * mle_oracle(field.p, [t], (), point) % field.p
            direct = (direct + prod) % field.p
        assert h_q == direct

    print(f"[PASS] oracle equivalences: {checked} MLE points, 100 forward "
          f"traces, 50 interpolated round polynomials — all exact")


def test_quantization_methodology():
    rng = random.Random(0x5CA1E)
    w0 = [[rng.uniform(0.1, 1.0) for _ in range(3)] for _ in range(3)]
    b0 = [rng.uniform(0.0, 0.5) for _ in range(3)]
    w1 = [[rng.uniform(0.1, 1.0) for _ in range(3)] for _ in range(2)]
    b1 = [rng.uniform(0.0, 0.5) for _ in range(2)]
    fm = FloatModel([FloatLayer(w0, b0), FloatLayer(w1, b1)])
    calib = [[rng.uniform(0.0, 1.0) for _ in range(4)] for _ in range(3)]

    scales = [1, 2, 4, 8, 16]
    grid = [
        [
            quantize_model(fm, a, b, M61, calibration=calib, strict=False)[1].max_abs
            for b in scales
        ]
        for a in scales
    ]
    for row in grid:
        assert all(row[i] <= row[i + 1] for i in range(4)), grid
    for col in zip(*grid):
        assert all(col[i] <= col[i + 1] for i in range(4)), grid

    # overflow fires exactly when the exact maximum passes (p-1)/2
    half = M61.half
    at_limit = FloatModel([FloatLayer([[1.0]], [0.0])])
    _, report = quantize_model(at_limit, 1, half, M61, calibration=[[1.0]])
    assert report.feasible and report.max_abs == half

    over_param = FloatModel([FloatLayer([[1.0]], [0.0])])
    try:
        quantize_model(over_param, 1, half + 1, M61)
        raised = False
    except Overflow as e:
        raised = True
        assert e.report is not None and e.report.max_abs == half + 1
    assert raised

    tiny = 1.0 / float(half)  # quantizes to exactly 1 at bias scale = half
    over_trace = FloatModel([FloatLayer([[1.0]], [tiny])])
    try:
        quantize_model(over_trace, 1, half, M61, calibration=[[1.0]])
        raised = False
    except Overflow as e:
        raised = True
        assert e.report.max_abs == half + 1
    assert raised

    print("[PASS] quantization: 5x5 max-value sweep monotone in both scales; "
          "overflow at exactly (p-1)/2 + 1 and not at (p-1)/2")
