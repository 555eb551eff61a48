import random

import pytest

from conftest import scripted_pair
from safetynets import M61, Claim, MalformedRound, interpolate_at
from safetynets.sumcheck import (
    ProductOracle,
    sumcheck_prove,
    sumcheck_verify,
    verify_rounds,
)


def _cube_sum(field, tables):
    p = field.p
    total = 0
    for i in range(len(tables[0])):
        prod = 1
        for t in tables:
            prod = prod * t[i] % p
        total += prod
    return total % p


def _run(field, tables, script, claim_value=None, tamper=None):
    """Drive prove then verify over a scripted challenge list."""
    oracle = ProductOracle(field, [list(t) for t in tables])
    degree = oracle.degree
    num_vars = (len(tables[0]) - 1).bit_length()
    prover, replay = scripted_pair(field, script)
    prover.begin_phase()
    point, final = sumcheck_prove(field, oracle, num_vars, prover)
    prover.send_elements(oracle.final_table_values())
    if tamper is not None:
        ph, el, delta = tamper
        prover.phases[ph][el] = (prover.phases[ph][el] + delta) % field.p

    channel = replay()
    channel.begin_phase()
    claim = Claim(
        claim_value if claim_value is not None else _cube_sum(field, tables),
        (),
        "output",
    )

    def final_check(pt, running):
        finals = channel.recv_elements(degree)
        prod = 1
        for v in finals:
            prod = prod * v % field.p
        return prod == running

    ok, v_point, v_value = sumcheck_verify(
        field, claim, num_vars, degree, channel, final_check
    )
    return ok, point, final, v_point, v_value


def test_two_variable_product_by_hand():
    # g(x1,x2) = x1·x2 over {0,1}²: sum = 1; round 1 polynomial is x1.
    f = M61
    x1 = [0, 0, 1, 1]  # big-endian: index = x1x2
    x2 = [0, 1, 0, 1]
    oracle = ProductOracle(f, [x1, x2])
    assert oracle.round_evals() == [0, 1, 2]  # h(0), h(1), h(2) of h(x)=x
    ok, point, final, _, v_value = _run(f, [x1, x2], script=[5, 9])
    assert ok
    assert point == (5, 9)
    assert final == 5 * 9 % f.p == v_value


def test_zero_polynomial_accepts():
    f = M61
    tables = [[0] * 8, [0] * 8]
    oracle = ProductOracle(f, tables)
    assert oracle.round_evals() == [0, 0, 0]
    ok, *_ = _run(f, tables, script=[3, 1, 4])
    assert ok


def test_single_variable_identity():
    f = M61
    oracle = ProductOracle(f, [[0, 1]])
    assert oracle.round_evals() == [0, 1]  # h(0)=0, h(1)=1
    ok, *_ = _run(f, [[0, 1]], script=[7])
    assert ok


def test_wrong_claim_rejected_in_round_one():
    f = M61
    ok, *_ = _run(f, [[0, 0, 1, 1], [0, 1, 0, 1]], script=[5, 9], claim_value=2)
    assert not ok


def test_tampered_final_value_rejected():
    f = M61
    rng = random.Random(1)
    tables = [[rng.randrange(f.p) for _ in range(8)] for _ in range(2)]
    # last two elements of the phase are the final table values
    ok, *_ = _run(f, tables, script=[rng.randrange(f.p) for _ in range(3)],
                  tamper=(0, -1, 3))
    assert not ok


def test_zero_variable_instance():
    f = M61
    oracle = ProductOracle(f, [[4], [6]])
    point, final = sumcheck_prove(f, oracle, 0, None)  # channel untouched
    assert point == () and final == 24


def test_completeness_1000_random_instances():
    rng = random.Random(0xC0FE)
    f = M61
    for trial in range(1000):
        num_vars = rng.randrange(1, 7)
        k = rng.randrange(1, 4)
        size = 1 << num_vars
        tables = [[rng.randrange(f.p) for _ in range(size)] for _ in range(k)]
        script = [rng.randrange(f.p) for _ in range(num_vars)]
        ok, _, final, _, v_value = _run(f, tables, script)
        assert ok, f"trial {trial} rejected an honest run"
        assert final == v_value


def test_soundness_lying_prover():
    # The cheating prover fixes up each round so h(0)+h(1) matches the
    # (false) running claim; only the final check can catch it.
    rng = random.Random(0xBAD)
    f = M61
    rejected = 0
    trials = 1000
    for _ in range(trials):
        num_vars = rng.randrange(1, 6)
        k = rng.randrange(1, 4)
        size = 1 << num_vars
        tables = [[rng.randrange(f.p) for _ in range(size)] for _ in range(k)]
        honest = _cube_sum(f, tables)
        lie = (honest + rng.randrange(1, f.p)) % f.p
        script = [rng.randrange(f.p) for _ in range(num_vars)]

        oracle = ProductOracle(f, [list(t) for t in tables])
        prover, replay = scripted_pair(f, script)
        prover.begin_phase()
        running = lie
        for c in script:
            evals = oracle.round_evals()
            diff = (running - (evals[0] + evals[1])) % f.p
            evals[0] = (evals[0] + diff) % f.p
            prover.send_elements(evals)
            running = interpolate_at(f, evals, c)
            oracle.bind(c)
        prover.send_elements(oracle.final_table_values())

        channel = replay()
        channel.begin_phase()

        def final_check(pt, run):
            finals = channel.recv_elements(k)
            prod = 1
            for v in finals:
                prod = prod * v % f.p
            return prod == run

        ok, _, _ = sumcheck_verify(
            f, Claim(lie, (), "output"), num_vars, k, channel, final_check
        )
        if not ok:
            rejected += 1
    assert rejected >= 999, f"only {rejected}/{trials} lies rejected"


def test_interpolation_matches_direct_evaluation():
    rng = random.Random(17)
    f = M61
    for _ in range(200):
        d = rng.randrange(1, 4)
        coeffs = [rng.randrange(f.p) for _ in range(d + 1)]

        def poly(x):
            acc = 0
            for c in reversed(coeffs):
                acc = (acc * x + c) % f.p
            return acc

        evals = [poly(i) for i in range(d + 1)]
        x = rng.randrange(f.p)
        assert interpolate_at(f, evals, x) == poly(x)
        # nodes shortcut
        assert interpolate_at(f, evals, d) == evals[d]


def test_round_poly_interpolation_equals_oracle_poly():
    # h(q) from the transmitted evaluations equals the real round
    # polynomial at q: binding q and re-summing gives the same value.
    rng = random.Random(18)
    f = M61
    for _ in range(50):
        num_vars = rng.randrange(1, 5)
        size = 1 << num_vars
        tables = [[rng.randrange(f.p) for _ in range(size)] for _ in range(2)]
        oracle = ProductOracle(f, [list(t) for t in tables])
        evals = oracle.round_evals()
        q = rng.randrange(f.p)
        oracle.bind(q)
        bound_sum = _cube_sum(f, oracle.tables)
        assert interpolate_at(f, evals, q) == bound_sum


def test_malformed_round_raises():
    f = M61

    class ShortChannel:
        def recv_elements(self, n):
            return [1, 2]  # always too short for degree 2

        def challenge(self):
            return 1

    with pytest.raises(MalformedRound):
        verify_rounds(f, 3, 1, 2, ShortChannel())


def test_claim_is_frozen():
    c = Claim(5, (1, 2), "output")
    with pytest.raises(Exception):
        c.value = 6
