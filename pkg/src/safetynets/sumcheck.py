"""The generic sum-check engine.

One round per variable: the prover sends the round polynomial as its
evaluations at x = 0..d, the verifier checks h(0)+h(1) against the running
claim, samples a challenge q from the channel, and folds the claim to h(q)
by Lagrange interpolation.  Challenges come from the channel abstraction —
the engine neither knows nor cares whether they are interactive randomness
or a Fiat–Shamir hash chain.
"""

from __future__ import annotations

from dataclasses import dataclass

from .mle import fold_values


class MalformedRound(Exception):
    """Round message with the wrong number of evaluations."""


class ChannelClosed(Exception):
    """The peer (or the transcript) ran out mid-protocol."""


@dataclass(frozen=True)
class Claim:
    """An assertion that the tagged MLE evaluates to `value` at `point`."""

    value: int
    point: tuple[int, ...]
    tag: str  # output / weight / activation-output / input / bias


# Lagrange interpolation over the nodes 0..d ------------------------------

_DENOM_CACHE: dict[tuple[int, int], list[int]] = {}


def _denominator_inverses(field, d: int) -> list[int]:
    """inv(Π_{m≠i}(i−m)) for nodes i = 0..d."""
    key = (field.p, d)
    cached = _DENOM_CACHE.get(key)
    if cached is None:
        cached = []
        for i in range(d + 1):
            den = 1
            for m in range(d + 1):
                if m != i:
                    den *= i - m
            cached.append(field.inv(den % field.p))
        _DENOM_CACHE[key] = cached
    return cached


def interpolate_at(field, evals: list[int], x: int) -> int:
    """Value at x of the unique degree-(len−1) polynomial through (i, evals[i])."""
    d = len(evals) - 1
    if 0 <= x <= d:
        return evals[x]
    p = field.p
    inv_den = _denominator_inverses(field, d)
    # prefix[i] = Π_{m<i}(x−m), suffix[i] = Π_{m>i}(x−m)
    prefix = [1] * (d + 2)
    for m in range(d + 1):
        prefix[m + 1] = prefix[m] * (x - m) % p
    suffix = [1] * (d + 2)
    for m in range(d, -1, -1):
        suffix[m] = suffix[m + 1] * (x - m) % p
    acc = 0
    for i in range(d + 1):
        acc += evals[i] * inv_den[i] % p * (prefix[i] * suffix[i + 1] % p)
    return acc % p


# prover -------------------------------------------------------------------


class ProductOracle:
    """Honest prover state for g = Π tables, each table multilinear.

    Degree per variable equals the number of tables.  Tables are folded in
    lockstep as challenges bind variables.
    """

    def __init__(self, field, tables: list[list[int]]):
        size = len(tables[0])
        if any(len(t) != size for t in tables):
            raise ValueError("product tables must share a size")
        self.field = field
        self.tables = [list(t) for t in tables]

    @property
    def degree(self) -> int:
        return len(self.tables)

    def round_evals(self) -> list[int]:
        p = self.field.p
        half = len(self.tables[0]) // 2
        evals = []
        for t in range(self.degree + 1):
            total = 0
            for x in range(half):
                prod = 1
                for tab in self.tables:
                    lo = tab[x]
                    prod = prod * ((lo + t * (tab[x + half] - lo)) % p) % p
                total += prod
            evals.append(total % p)
        return evals

    def bind(self, challenge: int) -> None:
        self.tables = [fold_values(self.field, t, challenge) for t in self.tables]

    def final_table_values(self) -> list[int]:
        return [t[0] for t in self.tables]

    def final_value(self) -> int:
        acc = 1
        for t in self.tables:
            acc = acc * t[0] % self.field.p
        return acc


def sumcheck_prove(field, oracle, num_vars: int, channel) -> tuple[tuple[int, ...], int]:
    """Run the prover side; returns (fully bound point, g(point))."""
    point = []
    for _ in range(num_vars):
        channel.send_elements(oracle.round_evals())
        c = channel.challenge()
        oracle.bind(c)
        point.append(c)
    return tuple(point), oracle.final_value()


# verifier -----------------------------------------------------------------


@dataclass
class RoundsOutcome:
    ok: bool
    point: tuple[int, ...]
    value: int | None  # running claim after the last round
    failed_round: int | None = None
    reason: str | None = None


def verify_rounds(field, claim_value: int, num_vars: int, degree: int, channel) -> RoundsOutcome:
    """Check h(0)+h(1) per round and fold the claim; no final check here."""
    p = field.p
    running = claim_value
    point: list[int] = []
    for rnd in range(num_vars):
        evals = channel.recv_elements(degree + 1)
        if len(evals) != degree + 1:
            raise MalformedRound(f"round {rnd}: expected {degree + 1} evaluations")
        if (evals[0] + evals[1]) % p != running:
            return RoundsOutcome(
                False, tuple(point), None, rnd, "h(0)+h(1) != running claim"
            )
        c = channel.challenge()
        running = interpolate_at(field, evals, c)
        point.append(c)
    return RoundsOutcome(True, tuple(point), running)


def sumcheck_verify(field, claim: Claim, num_vars: int, degree: int, channel, final_check):
    """Full verifier: rounds plus the caller-supplied final-point check.

    Returns (accepted, point, final_value).
    """
    out = verify_rounds(field, claim.value, num_vars, degree, channel)
    if not out.ok:
        return False, out.point, None
    return bool(final_check(out.point, out.value)), out.point, out.value
