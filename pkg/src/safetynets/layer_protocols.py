"""Per-layer reductions composed into a full network proof.

Three phases, each a specialization of the sum-check engine:

* matmul: a claim about one entry of the multilinear extension of W·Y is
  reduced to one claim on W̃ and one on Ỹ (degree 2 per variable).
* activation: a claim about the elementwise-square layer Ỹ = (Z∘Z)~ is
  reduced to a single claim on Z̃, using equality indicators to pick the
  row/column point out of the double sum (degree 3 per variable).
* bias: a claim about Z = Z' + b·1ᵀ is reduced to a claim on Z̃' and a
  claim on the bias vector's extension (degree 2 per variable).

All points follow the row-major convention of the MLE module: a matrix
claim point is the row sub-point followed by the column sub-point, and
row variables bind before column variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .mle import (
    DimensionMismatch,
    EvalTable,
    eq_evaluate,
    eq_table,
    fold_cols,
    fold_values,
    log2_exact,
)
from .sumcheck import Claim, ProductOracle, sumcheck_prove, verify_rounds


class RoundCheckFailed(Exception):
    """A round or final-value check came out false: reject the proof."""


@dataclass(frozen=True)
class LayerShape:
    """Padded dimensions of one linear layer: W is n_out×n_in, batch b columns."""

    n_in: int
    n_out: int
    batch: int
    log_in: int = dc_field(init=False)
    log_out: int = dc_field(init=False)
    log_batch: int = dc_field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "log_in", log2_exact(self.n_in))
        object.__setattr__(self, "log_out", log2_exact(self.n_out))
        object.__setattr__(self, "log_batch", log2_exact(self.batch))


# Transcript accounting: field elements the prover writes per phase.
# Each sum-check round carries degree+1 evaluations; finals follow.


def matmul_element_count(log_in: int) -> int:
    return 3 * log_in + 2


def activation_element_count(log_rows: int, log_batch: int) -> int:
    return 4 * (log_rows + log_batch) + 1


def bias_element_count(log_rows: int) -> int:
    return 3 * log_rows + 2


# matrix multiplication ----------------------------------------------------


def matmul_reduce_prove(field, w, y, claim: Claim, channel, y_tag: str = "activation-output"):
    """Prove Z̃(q,r) = Σ_j W̃(q,j)·Ỹ(j,r) where Z = W·Y.

    Pre-folds W by the row point and Y by the column point, then sum-checks
    the length-n_in product.  Returns (s, weight_claim, y_claim).
    """
    wt = EvalTable.from_matrix(w)
    yt = EvalTable.from_matrix(y)
    if wt.col_vars != yt.row_vars:
        raise DimensionMismatch("inner dimensions of W and Y differ")
    if len(claim.point) != wt.row_vars + yt.col_vars:
        raise DimensionMismatch("claim point does not match W·Y shape")
    q = claim.point[: wt.row_vars]
    r = claim.point[wt.row_vars :]

    wq = wt.values
    for c in q:
        wq = fold_values(field, wq, c)
    yr = fold_cols(field, yt.values, len(y), r)

    oracle = ProductOracle(field, [wq, yr])
    s, _ = sumcheck_prove(field, oracle, wt.col_vars, channel)
    vw, vy = oracle.final_table_values()
    channel.send_elements([vw, vy])
    return s, Claim(vw, q + s, "weight"), Claim(vy, s + r, y_tag)


def matmul_reduce_verify(field, shape: LayerShape, claim: Claim, channel,
                         y_tag: str = "activation-output"):
    """Verifier half of the matmul reduction; raises RoundCheckFailed to reject."""
    if len(claim.point) != shape.log_out + shape.log_batch:
        raise DimensionMismatch("claim point does not match layer shape")
    q = claim.point[: shape.log_out]
    r = claim.point[shape.log_out :]
    out = verify_rounds(field, claim.value, shape.log_in, 2, channel)
    if not out.ok:
        raise RoundCheckFailed(f"matmul round {out.failed_round}: {out.reason}")
    vw, vy = channel.recv_elements(2)
    if vw * vy % field.p != out.value:
        raise RoundCheckFailed("matmul final product does not match running claim")
    s = out.point
    return s, Claim(vw, q + s, "weight"), Claim(vy, s + r, y_tag)


# quadratic activation ------------------------------------------------------


class _ActivationOracle:
    """Sum over (j,k) of eq(s,j)·eq(r,k)·Z(j,k)², row variables first.

    During the row phase the inner column sums are collapsed per row pair
    into three coefficients (lo·lo, lo·hi, hi·hi weighted by eq(r,·)), so a
    round costs one pass over the live table.  Once rows are bound the
    remainder is a plain three-table product over the columns.
    """

    degree = 3

    def __init__(self, field, z_rows, eq_s, eq_r):
        self.field = field
        self.rows = [list(row) for row in z_rows]
        self.eq_s = eq_s
        self.eq_r = eq_r
        self._k_oracle = None
        if len(self.rows) == 1:
            self._enter_k_phase()

    def _enter_k_phase(self):
        p = self.field.p
        a_star = self.eq_s[0]
        row = self.rows[0]
        scaled = [a_star * e % p for e in self.eq_r]
        self._k_oracle = ProductOracle(self.field, [scaled, row, list(row)])

    def round_evals(self):
        if self._k_oracle is not None:
            return self._k_oracle.round_evals()
        p = self.field.p
        half = len(self.rows) // 2
        eq = self.eq_s
        er = self.eq_r
        h0 = h1 = h2 = h3 = 0
        for j in range(half):
            lo = self.rows[j]
            hi = self.rows[j + half]
            s0 = sx = s1 = 0
            for k in range(len(lo)):
                e = er[k]
                a = lo[k]
                b = hi[k]
                ea = e * a % p
                s0 += ea * a
                sx += ea * b
                s1 += e * b % p * b
            s0 %= p
            sx %= p
            s1 %= p
            e0 = eq[j]
            e1 = eq[j + half]
            de = e1 - e0
            # square at t: (1-t)²·s0 + 2t(1-t)·sx + t²·s1
            h0 += e0 * s0
            h1 += e1 * s1
            h2 += (e0 + 2 * de) % p * ((s0 - 4 * sx + 4 * s1) % p)
            h3 += (e0 + 3 * de) % p * ((4 * s0 - 12 * sx + 9 * s1) % p)
        return [h0 % p, h1 % p, h2 % p, h3 % p]

    def bind(self, challenge: int):
        if self._k_oracle is not None:
            self._k_oracle.bind(challenge)
            return
        p = self.field.p
        self.eq_s = fold_values(self.field, self.eq_s, challenge)
        half = len(self.rows) // 2
        self.rows = [
            [(lo[k] + challenge * (hi[k] - lo[k])) % p for k in range(len(lo))]
            for lo, hi in zip(self.rows[:half], self.rows[half:])
        ]
        if len(self.rows) == 1:
            self._enter_k_phase()

    def final_value(self):
        return self._k_oracle.final_value()

    def z_final(self) -> int:
        return self._k_oracle.tables[1][0]


def activation_reduce_prove(field, z_prev, claim: Claim, channel):
    """Prove Ỹ(s,r) where Y is the elementwise square of z_prev.

    Returns the claim Z̃(j*,k*) = v that the next reduction consumes.
    """
    zt = EvalTable.from_matrix(z_prev)
    if len(claim.point) != zt.num_vars:
        raise DimensionMismatch("claim point does not match table shape")
    s_pt = claim.point[: zt.row_vars]
    r_pt = claim.point[zt.row_vars :]
    oracle = _ActivationOracle(
        field, z_prev, eq_table(field, s_pt), eq_table(field, r_pt)
    )
    point, _ = sumcheck_prove(field, oracle, zt.num_vars, channel)
    v = oracle.z_final()
    channel.send_elements([v])
    return Claim(v, point, "output")


def activation_reduce_verify(field, log_rows: int, log_batch: int, claim: Claim, channel):
    """Verifier half of the activation reduction; raises RoundCheckFailed to reject."""
    if len(claim.point) != log_rows + log_batch:
        raise DimensionMismatch("claim point does not match shape")
    s_pt = claim.point[:log_rows]
    r_pt = claim.point[log_rows:]
    out = verify_rounds(field, claim.value, log_rows + log_batch, 3, channel)
    if not out.ok:
        raise RoundCheckFailed(f"activation round {out.failed_round}: {out.reason}")
    (v,) = channel.recv_elements(1)
    j_star = out.point[:log_rows]
    k_star = out.point[log_rows:]
    expected = (
        eq_evaluate(field, s_pt, j_star)
        * eq_evaluate(field, r_pt, k_star)
        % field.p
        * (v * v % field.p)
        % field.p
    )
    if expected != out.value:
        raise RoundCheckFailed("activation final value does not match eq·eq·v²")
    return Claim(v, out.point, "output")


# bias ----------------------------------------------------------------------


class _BiasOracle(ProductOracle):
    """Product oracle for eq(·,q)·(Z̃'+B̃) that shadows the bias fold.

    The combined table is what the sum ranges over, but the prover must
    report Z̃'(j*,r) and B̃(j*) separately at the end, so the bias vector
    is folded in lockstep.
    """

    def __init__(self, field, tables, bias_vals):
        super().__init__(field, tables)
        self.bias_vals = list(bias_vals)

    def bind(self, challenge: int):
        super().bind(challenge)
        self.bias_vals = fold_values(self.field, self.bias_vals, challenge)


def bias_reduce_prove(field, z_prime, bias, claim: Claim, channel):
    """Prove Z̃(q,r) where Z = z_prime + bias·1ᵀ.

    Returns (z'_claim at (j*, r), b_claim at j*); the bias claim is for the
    verifier to settle against the model it already holds.
    """
    zt = EvalTable.from_matrix(z_prime)
    if len(bias) != 1 << zt.row_vars:
        raise DimensionMismatch("bias length does not match row count")
    if len(claim.point) != zt.num_vars:
        raise DimensionMismatch("claim point does not match table shape")
    q = claim.point[: zt.row_vars]
    r = claim.point[zt.row_vars :]
    p = field.p

    zr = fold_cols(field, zt.values, len(z_prime), r)
    combined = [(a + b) % p for a, b in zip(zr, bias)]
    oracle = _BiasOracle(field, [eq_table(field, q), combined], bias)
    j_star, _ = sumcheck_prove(field, oracle, zt.row_vars, channel)
    vb = oracle.bias_vals[0]
    vzp = (oracle.tables[1][0] - vb) % p
    channel.send_elements([vzp, vb])
    return Claim(vzp, j_star + r, "matmul-output"), Claim(vb, j_star, "bias")


def bias_reduce_verify(field, log_rows: int, claim: Claim, channel):
    """Verifier half of the bias reduction; raises RoundCheckFailed to reject."""
    if len(claim.point) < log_rows:
        raise DimensionMismatch("claim point shorter than row variables")
    q = claim.point[:log_rows]
    r = claim.point[log_rows:]
    out = verify_rounds(field, claim.value, log_rows, 2, channel)
    if not out.ok:
        raise RoundCheckFailed(f"bias round {out.failed_round}: {out.reason}")
    vzp, vb = channel.recv_elements(2)
    if eq_evaluate(field, out.point, q) * ((vzp + vb) % field.p) % field.p != out.value:
        raise RoundCheckFailed("bias final value does not match eq·(z'+b)")
    return Claim(vzp, out.point + r, "matmul-output"), Claim(vb, out.point, "bias")
