"""Probabilistic small-step semantics: exact one-step distributions,
finite-depth trace distributions, and seeded Monte Carlo sampling.

Each step of a definition either emits one output symbol or silently unfolds
the recursion; even when several constructors are exposed at once only the
head constructor is emitted and the rest persist in the term.  Internally a
term is kept in (destructor-context, core) form: the context is the word of
pending destructors wrapping the core, and constructor/destructor pairs
cancel inside a single step.

Trees additionally need a direction policy saying which child to follow at
each output: `UNIFORM` flips a fair coin per output, `PeriodicWord` follows a
fixed ultimately-periodic word over {L, R}.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Union

from .terms import (
    Choice,
    Cons,
    Definition,
    InvalidDefinition,
    Kind,
    Left,
    Mk,
    RecVar,
    Right,
    Tail,
    Term,
    check_kind,
)

# An observed event: the emitted label, or None for a silent unfold step.
Event = Optional[str]

DEFAULT_MAX_DEPTH = 16


class DepthLimitError(ValueError):
    """Requested expansion depth exceeds the configured bound."""


# ---------------------------------------------------------------------------
# direction policies for trees


class UniformPolicy:
    """Choose the next direction uniformly at each output."""

    def __repr__(self) -> str:
        return "UNIFORM"


UNIFORM = UniformPolicy()


@dataclass(frozen=True)
class PeriodicWord:
    """Ultimately periodic direction word: `prefix` then `period` repeated."""

    period: str
    prefix: str = ""

    def __post_init__(self) -> None:
        if not self.period or set(self.period + self.prefix) - {"L", "R"}:
            raise ValueError("direction words use the alphabet {L, R}, period nonempty")

    def direction(self, n: int) -> str:
        if n < len(self.prefix):
            return self.prefix[n]
        return self.period[(n - len(self.prefix)) % len(self.period)]

    def canon(self, n: int) -> int:
        """Collapse a position into one period, so memo keys stay bounded."""
        if n < len(self.prefix):
            return n
        return len(self.prefix) + (n - len(self.prefix)) % len(self.period)


Policy = Union[UniformPolicy, PeriodicWord]


def parse_policy(text: str) -> Policy:
    """Parse 'uniform', a period word like 'LR', or 'prefix|period'."""
    if text.lower() == "uniform":
        return UNIFORM
    if "|" in text:
        prefix, period = text.split("|", 1)
        return PeriodicWord(period=period, prefix=prefix)
    return PeriodicWord(period=text)


# ---------------------------------------------------------------------------
# one-step distributions


@dataclass(frozen=True)
class Out:
    """Stream output: emit `label`, continue as `tail`."""

    label: str
    tail: Term


@dataclass(frozen=True)
class OutNode:
    """Tree output: emit `label`, spawning two child terms."""

    label: str
    left: Term
    right: Term


@dataclass(frozen=True)
class Unfold:
    """Silent step: the recursion variable was replaced by the body."""

    term: Term


StepOutcome = Union[Out, OutNode, Unfold]
StepDist = dict  # StepOutcome -> Fraction, summing to exactly 1


def _split(t: Term) -> tuple[list[str], Term]:
    """Strip the destructor context; entries are 'T', 'L', 'R', outermost first."""
    ds: list[str] = []
    while True:
        if isinstance(t, Tail):
            ds.append("T")
            t = t.arg
        elif isinstance(t, Left):
            ds.append("L")
            t = t.arg
        elif isinstance(t, Right):
            ds.append("R")
            t = t.arg
        else:
            return ds, t


def _wrap(ds: list[str], t: Term) -> Term:
    for d in reversed(ds):
        t = Tail(t) if d == "T" else (Left(t) if d == "L" else Right(t))
    return t


def step(d: Definition, t: Term) -> StepDist:
    """Exact distribution over one-step outcomes of `t` under definition `d`.

    Choices mix the outcomes of their branches; a destructor applied to a
    constructor cancels against it within the same step; a bare constructor
    emits; everything else unfolds the recursion variable into the body.
    """
    try:
        check_kind(t, d.kind)
    except InvalidDefinition as exc:
        raise InvalidDefinition(f"kind mismatch: {exc}") from exc
    acc: StepDist = {}
    _step_term(d, [], t, Fraction(1), acc)
    return acc


def _step_term(d: Definition, ds: list[str], t: Term, w: Fraction, acc: StepDist) -> None:
    ds2, core = _split(t)
    _step_core(d, ds + ds2, core, w, acc)


def _step_core(d: Definition, ds: list[str], core: Term, w: Fraction, acc: StepDist) -> None:
    if isinstance(core, Choice):
        # the pending destructor context distributes over the choice
        _step_term(d, ds, core.left, w * core.prob, acc)
        _step_term(d, ds, core.right, w * (1 - core.prob), acc)
    elif isinstance(core, Cons):
        if ds:
            _step_term(d, ds[:-1], core.tail, w, acc)
        else:
            _add(acc, Out(core.label, core.tail), w)
    elif isinstance(core, Mk):
        if ds:
            child = core.left if ds[-1] == "L" else core.right
            _step_term(d, ds[:-1], child, w, acc)
        else:
            _add(acc, OutNode(core.label, core.left, core.right), w)
    else:  # RecVar
        _add(acc, Unfold(_wrap(ds, d.body)), w)


def _add(acc: StepDist, outcome: StepOutcome, w: Fraction) -> None:
    acc[outcome] = acc.get(outcome, Fraction(0)) + w


# ---------------------------------------------------------------------------
# exact finite-depth trace distributions


def prefix_distribution(
    d: Definition,
    depth: int,
    policy: Policy | None = None,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> dict[tuple[Event, ...], Fraction]:
    """Exact distribution over the first `depth` observed events.

    Keys are event tuples of length `depth` (labels and None for silent
    steps); values are exact rationals summing to 1.  Tree definitions
    require a direction policy.
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    if depth > max_depth:
        raise DepthLimitError(f"depth {depth} exceeds bound {max_depth}")
    if d.kind is Kind.TREE and policy is None:
        raise ValueError("a direction policy is required for tree definitions")

    memo: dict = {}

    def expand(t: Term, pol_state: int | None, k: int) -> dict[tuple[Event, ...], Fraction]:
        if k == 0:
            return {(): Fraction(1)}
        key = (t, pol_state, k)
        cached = memo.get(key)
        if cached is not None:
            return cached
        res: dict[tuple[Event, ...], Fraction] = {}
        for outcome, pr in step(d, t).items():
            if isinstance(outcome, Unfold):
                _merge(res, None, pr, expand(outcome.term, pol_state, k - 1))
            elif isinstance(outcome, Out):
                _merge(res, outcome.label, pr, expand(outcome.tail, pol_state, k - 1))
            else:
                if isinstance(policy, PeriodicWord):
                    child = (
                        outcome.left
                        if policy.direction(pol_state) == "L"
                        else outcome.right
                    )
                    nxt = policy.canon(pol_state + 1)
                    _merge(res, outcome.label, pr, expand(child, nxt, k - 1))
                else:  # uniform: split half-half over the children
                    half = pr / 2
                    _merge(res, outcome.label, half, expand(outcome.left, pol_state, k - 1))
                    _merge(res, outcome.label, half, expand(outcome.right, pol_state, k - 1))
        memo[key] = res
        return res

    start_state = 0 if isinstance(policy, PeriodicWord) else None
    return expand(d.body, start_state, depth)


def _merge(
    res: dict[tuple[Event, ...], Fraction],
    event: Event,
    pr: Fraction,
    sub: dict[tuple[Event, ...], Fraction],
) -> None:
    for seq, q in sub.items():
        key = (event,) + seq
        res[key] = res.get(key, Fraction(0)) + pr * q


# ---------------------------------------------------------------------------
# seeded sampling


@dataclass(frozen=True)
class Trace:
    """One sampled run: per-step events, and the directions consumed at tree
    outputs."""

    events: tuple[Event, ...]
    directions: tuple[str, ...] = ()

    @property
    def output_count(self) -> int:
        return sum(1 for e in self.events if e is not None)


def sample_run(
    d: Definition,
    horizon: int,
    seed: int,
    policy: Policy | None = None,
) -> Trace:
    """Deterministically sample `horizon` steps; trees default to UNIFORM."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if d.kind is Kind.TREE and policy is None:
        policy = UNIFORM
    rng = random.Random(seed)
    body_ds, body_core = _split(d.body)
    ds = list(body_ds)
    core = body_core
    events: list[Event] = []
    dirs: list[str] = []
    out_i = 0
    for _ in range(horizon):
        while True:
            if isinstance(core, Choice):
                # float < Fraction compares exactly
                branch = core.left if rng.random() < core.prob else core.right
                sub_ds, core = _split(branch)
                ds.extend(sub_ds)
            elif isinstance(core, Cons):
                if ds:
                    ds.pop()
                    sub_ds, core = _split(core.tail)
                    ds.extend(sub_ds)
                else:
                    events.append(core.label)
                    sub_ds, core = _split(core.tail)
                    ds.extend(sub_ds)
                    break
            elif isinstance(core, Mk):
                if ds:
                    child = core.left if ds.pop() == "L" else core.right
                    sub_ds, core = _split(child)
                    ds.extend(sub_ds)
                else:
                    if isinstance(policy, PeriodicWord):
                        direction = policy.direction(out_i)
                    else:
                        direction = "L" if rng.random() < 0.5 else "R"
                    dirs.append(direction)
                    out_i += 1
                    events.append(core.label)
                    child = core.left if direction == "L" else core.right
                    sub_ds, core = _split(child)
                    ds.extend(sub_ds)
                    break
            else:  # RecVar: unfold silently, keeping the pending context
                events.append(None)
                ds.extend(body_ds)
                core = body_core
                break
    return Trace(tuple(events), tuple(dirs))


# ---------------------------------------------------------------------------
# Monte Carlo falsifier


class McHint(Enum):
    NO_EVIDENCE_AGAINST_ASP = "no_evidence_against_asp"
    EVIDENCE_AGAINST_ASP = "evidence_against_asp"


@dataclass(frozen=True)
class McReport:
    """Aggregate statistics over seeded runs.

    The hint is a falsifier only: EVIDENCE_AGAINST_ASP means outputs appear
    to dry up (some runs are silent over the whole second half, or the mean
    cumulative-output curve flattens), never a proof either way.
    """

    runs: int
    horizon: int
    seed: int
    output_counts: tuple[int, ...]
    mean_rate: float
    tail_silence: float
    cum_slope: float
    hint: McHint


def monte_carlo(
    d: Definition,
    runs: int,
    horizon: int,
    seed: int,
    policy: Policy | None = None,
    tail_threshold: float = 0.05,
    slope_threshold: float = 1e-3,
    backend: str = "vector",
) -> McReport:
    """Run `runs` independent simulations of `horizon` steps each.

    Runs use split seeds (seed + run index in the reference backend, one
    numpy generator in the vector backend), so reports are deterministic per
    seed and backend.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    if horizon < 100:
        raise ValueError("horizon must be at least 100")
    if d.kind is Kind.TREE and policy is None:
        policy = UNIFORM

    half = horizon // 2
    if backend == "vector":
        from .simulate import CompiledDefinition

        counts, tail_counts, step_totals = CompiledDefinition(d).run_batch(
            runs, horizon, seed, policy
        )
        output_counts = tuple(int(c) for c in counts)
        silent_tails = int((tail_counts == 0).sum())
        totals = step_totals
    elif backend == "reference":
        output_counts_l: list[int] = []
        silent_tails = 0
        totals = [0.0] * horizon
        for i in range(runs):
            trace = sample_run(d, horizon, seed + i, policy)
            output_counts_l.append(trace.output_count)
            if all(e is None for e in trace.events[half:]):
                silent_tails += 1
            for j, e in enumerate(trace.events):
                if e is not None:
                    totals[j] += 1.0
        output_counts = tuple(output_counts_l)
    else:
        raise ValueError(f"unknown backend {backend!r}")

    mean_rate = sum(output_counts) / (runs * horizon)
    tail_silence = silent_tails / runs
    cum_slope = _tail_slope(totals, runs, half)
    evidence = tail_silence > tail_threshold or cum_slope < slope_threshold
    hint = McHint.EVIDENCE_AGAINST_ASP if evidence else McHint.NO_EVIDENCE_AGAINST_ASP
    return McReport(
        runs=runs,
        horizon=horizon,
        seed=seed,
        output_counts=output_counts,
        mean_rate=mean_rate,
        tail_silence=tail_silence,
        cum_slope=cum_slope,
        hint=hint,
    )


def _tail_slope(step_totals, runs: int, half: int) -> float:
    """Least-squares slope of the mean cumulative-output curve, second half."""
    import numpy as np

    curve = np.cumsum(np.asarray(step_totals, dtype=float) / runs)[half:]
    if curve.size < 2:
        return 0.0
    x = np.arange(curve.size, dtype=float)
    x -= x.mean()
    denom = float((x * x).sum())
    if denom == 0.0:
        return 0.0
    return float((x * (curve - curve.mean())).sum() / denom)
