"""Pop-probability equation systems of translated pushdown models.

For every control state q, stack symbol X and state q', the variable
[q, X, q'] denotes the probability that a run started in q with the single
symbol X on the stack eventually pops it, ending in q'.  These probabilities
form the least fixed point of a monotone polynomial system with positive
rational coefficients: pops contribute constants, symbol-preserving moves
linear terms, pushes quadratic products of an inner excursion and the
continuation.

The exact classification decides, per excursion head (q, X), whether the
return probability equals one (AlmostSureReturn), is provably below one
(SubReturn, where possible with a machine-checked pre-fixed-point
certificate), or is not determined by the implemented criteria (Unknown,
with numeric lower-bound evidence attached).  All classification logic is
exact rational arithmetic; floating point is used only for reported values.
"""

from __future__ import annotations

import subprocess
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .graphs import strongly_connected_components
from .ppda import Ppda
from .simplex import nonnegative_contraction_feasible

VarKey = tuple[int, str, int]  # (state, symbol, landing state)
Head = tuple[int, str]

ZERO = Fraction(0)
ONE = Fraction(1)

DEFAULT_EPSILON = 1e-9
DEFAULT_MAX_ITER = 100_000
NEWTON_MAX_ITER = 200
CERT_BUMPS = (Fraction(1, 2**20), Fraction(1, 2**10))
CERT_REFINE = 6


@dataclass(frozen=True)
class Monomial:
    coef: Fraction
    factors: tuple[int, ...]  # one or two variable indices


@dataclass(frozen=True)
class Equation:
    const: Fraction
    monomials: tuple[Monomial, ...]

    def mass_at_one(self) -> Fraction:
        return self.const + sum((m.coef for m in self.monomials), ZERO)


@dataclass(frozen=True, eq=False)
class EqSystem:
    variables: tuple[VarKey, ...]
    equations: tuple[Equation, ...]
    heads: tuple[Head, ...]
    state_names: tuple[str, ...]
    alphabet: tuple[str, ...]

    def index(self) -> dict[VarKey, int]:
        return {v: i for i, v in enumerate(self.variables)}

    def head_vars(self) -> dict[Head, list[int]]:
        out: dict[Head, list[int]] = {h: [] for h in self.heads}
        for i, (q, x, _) in enumerate(self.variables):
            out.setdefault((q, x), []).append(i)
        return out

    def var_name(self, i: int) -> str:
        q, x, q2 = self.variables[i]
        return f"[{self.state_names[q]}, {x}, {self.state_names[q2]}]"


def build_system(p: Ppda) -> EqSystem:
    """Assemble the pop-probability system of a translated automaton.

    Variables [q, X, q'] are created only for landing states q' that some
    pop on X can produce; all omitted variables are identically zero.
    """
    pop_targets: dict[str, list[int]] = {x: [] for x in p.alphabet}
    for x in p.alphabet:
        seen: set[int] = set()
        for q in range(len(p.states)):
            for m in p.rows[(q, x)]:
                if not m.push and m.target not in seen:
                    seen.add(m.target)
                    pop_targets[x].append(m.target)

    variables: list[VarKey] = []
    for q in range(len(p.states)):
        for x in p.alphabet:
            for q2 in pop_targets[x]:
                variables.append((q, x, q2))
    index = {v: i for i, v in enumerate(variables)}

    equations: list[Equation] = []
    for q, x, q2 in variables:
        const = ZERO
        monomials: list[Monomial] = []
        for m in p.rows[(q, x)]:
            if not m.push:  # pop
                if m.target == q2:
                    const += m.prob
            elif len(m.push) == 1:  # keep: the read symbol is pushed back
                monomials.append(Monomial(m.prob, (index[(m.target, x, q2)],)))
            else:  # push over the re-pushed read symbol
                y = m.push[0]
                for s in pop_targets[y]:
                    monomials.append(
                        Monomial(m.prob, (index[(m.target, y, s)], index[(s, x, q2)]))
                    )
        equations.append(Equation(const, tuple(monomials)))

    heads = tuple((q, x) for q in range(len(p.states)) for x in p.alphabet)
    return EqSystem(
        variables=tuple(variables),
        equations=tuple(equations),
        heads=heads,
        state_names=p.state_names,
        alphabet=p.alphabet,
    )


# ---------------------------------------------------------------------------
# evaluation helpers


def evaluate(eq: Equation, values: Sequence) -> object:
    acc = eq.const
    for m in eq.monomials:
        term = m.coef
        for f in m.factors:
            term = term * values[f]
        acc = acc + term
    return acc


def evaluate_exact(eq: Equation, values: Sequence[Fraction]) -> Fraction:
    return evaluate(eq, values)


def _compiled(s: EqSystem):
    return [
        (float(eq.const), [(float(m.coef), m.factors) for m in eq.monomials])
        for eq in s.equations
    ]


# ---------------------------------------------------------------------------
# positivity cleaning


def clean(s: EqSystem) -> tuple[EqSystem, dict[VarKey, bool]]:
    """Remove variables whose least-fixed-point value is zero.

    Positivity is the least boolean fixed point: a variable is positive iff
    its constant is positive or some monomial has all factors positive.
    Monomials mentioning removed variables are dropped; the least fixed
    point of the surviving variables is unchanged.
    """
    n = len(s.variables)
    positive = [eq.const > 0 for eq in s.equations]
    changed = True
    while changed:
        changed = False
        for i, eq in enumerate(s.equations):
            if positive[i]:
                continue
            for m in eq.monomials:
                if all(positive[f] for f in m.factors):
                    positive[i] = True
                    changed = True
                    break

    keep = [i for i in range(n) if positive[i]]
    remap = {old: new for new, old in enumerate(keep)}
    new_eqs = []
    for i in keep:
        eq = s.equations[i]
        monos = tuple(
            Monomial(m.coef, tuple(remap[f] for f in m.factors))
            for m in eq.monomials
            if all(positive[f] for f in m.factors)
        )
        new_eqs.append(Equation(eq.const, monos))
    cleaned = EqSystem(
        variables=tuple(s.variables[i] for i in keep),
        equations=tuple(new_eqs),
        heads=s.heads,
        state_names=s.state_names,
        alphabet=s.alphabet,
    )
    positivity = {s.variables[i]: positive[i] for i in range(n)}
    return cleaned, positivity


# ---------------------------------------------------------------------------
# numeric solvers (reporting only; decisions never rest on these values)


def kleene_solve(
    s: EqSystem, epsilon: float = DEFAULT_EPSILON, max_iter: int = DEFAULT_MAX_ITER
) -> tuple[list[float], int]:
    """Iterate x <- F(x) from zero; monotone nondecreasing lower bounds."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    eqs = _compiled(s)
    x = [0.0] * len(eqs)
    for it in range(1, max_iter + 1):
        delta = 0.0
        y = x[:]
        for i, (const, monos) in enumerate(eqs):
            v = const
            for coef, factors in monos:
                t = coef
                for f in factors:
                    t *= x[f]
                v += t
            v = min(v, 1.0)
            if v - x[i] > delta:
                delta = v - x[i]
            y[i] = v
        x = y
        if delta < epsilon:
            return x, it
    return x, max_iter


def _dependencies(s: EqSystem) -> list[set[int]]:
    return [
        {f for m in eq.monomials for f in m.factors} for eq in s.equations
    ]


def newton_solve(
    s: EqSystem,
    epsilon: float = DEFAULT_EPSILON,
    max_iter: int = NEWTON_MAX_ITER,
) -> list[float]:
    """Decomposed Newton iteration, one strongly connected block at a time.

    Blocks are solved bottom-up in dependency order, starting from zero, so
    iterates approach the least fixed point from below.  A singular Newton
    matrix falls back to plain value iteration for that block.
    """
    n = len(s.variables)
    deps = _dependencies(s)
    values = [0.0] * n
    for comp in strongly_connected_components(list(range(n)), lambda v: deps[v]):
        members = set(comp)
        local = {v: k for k, v in enumerate(comp)}
        x = np.zeros(len(comp))

        def f_and_jac(xv, with_jac=True):
            fv = np.zeros(len(comp))
            jac = np.zeros((len(comp), len(comp))) if with_jac else None
            for v in comp:
                eq = s.equations[v]
                total = float(eq.const)
                row = local[v]
                for m in eq.monomials:
                    coef = float(m.coef)
                    vals = [
                        xv[local[f]] if f in members else values[f] for f in m.factors
                    ]
                    prod = coef
                    for value in vals:
                        prod *= value
                    total += prod
                    if with_jac:
                        for pos, f in enumerate(m.factors):
                            if f in members:
                                partial = coef
                                for pos2, other in enumerate(vals):
                                    if pos2 != pos:
                                        partial *= other
                                jac[row, local[f]] += partial
                fv[row] = total
            return fv, jac

        converged = False
        for _ in range(max_iter):
            fv, jac = f_and_jac(x)
            try:
                dx = np.linalg.solve(np.eye(len(comp)) - jac, fv - x)
            except np.linalg.LinAlgError:
                dx = None
            if dx is None or not np.all(np.isfinite(dx)):
                # damping fallback: plain value iteration for this block
                for _ in range(DEFAULT_MAX_ITER):
                    fv, _ = f_and_jac(x, with_jac=False)
                    step = float(np.max(np.abs(fv - x)))
                    x = np.clip(fv, 0.0, 1.0)
                    if step < epsilon:
                        break
                converged = True
                break
            x = np.clip(x + dx, 0.0, 1.0)
            if float(np.max(np.abs(dx))) < epsilon:
                converged = True
                break
        if not converged:
            x = np.clip(x, 0.0, 1.0)
        for v in comp:
            values[v] = float(x[local[v]])
    return values


# ---------------------------------------------------------------------------
# certificates


def certify_subreturn(s: EqSystem, head: Head, candidate: Sequence[Fraction]) -> bool:
    """Exact check that `candidate` witnesses a sub-one return probability.

    True iff F(candidate) <= candidate componentwise and the candidate's
    return mass at `head` is strictly below one; then the least fixed point
    lies below the candidate and the head is SubReturn.
    """
    cand = [Fraction(c) for c in candidate]
    if len(cand) != len(s.variables):
        raise ValueError("candidate length does not match the system")
    if any(not (0 <= c <= 1) for c in cand):
        raise ValueError("candidate must lie in [0, 1]^n")
    for i, eq in enumerate(s.equations):
        if evaluate_exact(eq, cand) > cand[i]:
            return False
    head_sum = sum(
        (cand[i] for i, (q, x, _) in enumerate(s.variables) if (q, x) == head), ZERO
    )
    return head_sum < 1


def subreturn_candidate(
    s: EqSystem,
    head: Head,
    newton_values: Sequence[float],
    bumps: tuple[Fraction, ...] = CERT_BUMPS,
    refine: int = CERT_REFINE,
) -> Optional[tuple[Fraction, ...]]:
    """Round a Newton approximant up into a verifiable certificate.

    Bumped candidates sit just above the least fixed point; if the bumped
    vector is not yet a pre-fixed point, applying the system map a few times
    contracts it toward one.  Returns None when no attempt verifies.
    """
    for bump in bumps:
        cand = [min(ONE, Fraction(v) + bump) for v in newton_values]
        for _ in range(refine + 1):
            if certify_subreturn(s, head, cand):
                return tuple(cand)
            cand = [min(ONE, evaluate_exact(eq, cand)) for eq in s.equations]
    return None


# ---------------------------------------------------------------------------
# exact head classification


@dataclass(frozen=True)
class AlmostSureReturn:
    """Return probability exactly one."""


@dataclass(frozen=True)
class SubReturn:
    """Return probability strictly below one.

    The certificate, when present, is a verified pre-fixed point of the
    cleaned system; the empty tuple marks the trivial case of a head with no
    surviving variables (return probability zero).
    """

    certificate: Optional[tuple[Fraction, ...]] = None


@dataclass(frozen=True)
class Unknown:
    """Not determined by the implemented exact criteria."""

    kleene_lower: float
    iterations: int


HeadClass = Union[AlmostSureReturn, SubReturn, Unknown]


def spectral_le_one(b: Sequence[Sequence[Fraction]], irreducible: bool = True) -> bool:
    """Exactly decide whether a nonnegative rational matrix has spectral
    radius at most one.

    Decided as rational feasibility of {B v <= v, v >= 1}: a positive vector
    contracted by B bounds the spectral radius by one, and for irreducible B
    the converse holds as well.  Reducible inputs must be SCC-decomposed by
    the caller, otherwise only the feasible direction is conclusive.
    """
    for row in b:
        for entry in row:
            if entry < 0:
                raise ValueError("matrix must be nonnegative")
    return nonnegative_contraction_feasible(b)


def _internal_jacobian_at_one(
    s: EqSystem, comp: list[int]
) -> list[list[Fraction]]:
    """Jacobian of the block at the all-ones point, internal columns only."""
    local = {v: k for k, v in enumerate(comp)}
    jac = [[ZERO] * len(comp) for _ in comp]
    for v in comp:
        row = jac[local[v]]
        for m in s.equations[v].monomials:
            for f in m.factors:
                if f in local:
                    row[local[f]] += m.coef
    return jac


def classify_heads(
    s: EqSystem,
    epsilon: float = DEFAULT_EPSILON,
    max_iter: int = DEFAULT_MAX_ITER,
    smt_solver: Optional[str] = None,
) -> dict[Head, HeadClass]:
    """Three-valued, exact classification of every excursion head.

    Heads with no surviving variables return with probability zero.  When
    every head has at most one surviving landing state and every surviving
    equation has total coefficient mass one (verified, not assumed), the
    dependency blocks are classified exactly bottom-up: a block touching a
    sub-one block is sub-one, and a self-contained block is almost-sure
    exactly when the Jacobian at the all-ones fixed point has spectral
    radius at most one.  Outside that regime, heads get certified SubReturn
    where a certificate verifies, an optional SMT query otherwise, and
    honest Unknown as the fallback.
    """
    head_vars = s.head_vars()
    result: dict[Head, HeadClass] = {}
    live: list[Head] = []
    for h in s.heads:
        if head_vars.get(h):
            live.append(h)
        else:
            result[h] = SubReturn(certificate=())
    if not live:
        return result

    single_exit = all(len(head_vars[h]) <= 1 for h in live)
    mass_one = all(eq.mass_at_one() == 1 for eq in s.equations)

    newton_cache: list[float] | None = None

    def newton() -> list[float]:
        nonlocal newton_cache
        if newton_cache is None:
            newton_cache = newton_solve(s, epsilon)
        return newton_cache

    if single_exit and mass_one:
        n = len(s.variables)
        deps = _dependencies(s)
        almost_sure = [False] * n
        for comp in strongly_connected_components(
            list(range(n)), lambda v: deps[v]
        ):
            members = set(comp)
            external_sub = any(
                f not in members and not almost_sure[f]
                for v in comp
                for m in s.equations[v].monomials
                for f in m.factors
            )
            if external_sub:
                verdict = False
            elif len(comp) == 1 and comp[0] not in deps[comp[0]]:
                verdict = True  # no self-dependency: value is F(1) = 1
            else:
                jac = _internal_jacobian_at_one(s, comp)
                verdict = spectral_le_one(jac, irreducible=True)
            for v in comp:
                almost_sure[v] = verdict

        for h in live:
            v = head_vars[h][0]
            if almost_sure[v]:
                result[h] = AlmostSureReturn()
            else:
                result[h] = SubReturn(certificate=subreturn_candidate(s, h, newton()))
        return result

    # genuine multi-exit (or mass lost to cleaning): certificates, then the
    # optional SMT backend, then Unknown with Kleene evidence
    kleene, iterations = kleene_solve(s, epsilon, max_iter)
    for h in live:
        cert = subreturn_candidate(s, h, newton())
        if cert is not None:
            result[h] = SubReturn(certificate=cert)
            continue
        if smt_solver:
            answer = run_smt_solver(smt_export(s, h), smt_solver)
            if answer == "sat":
                result[h] = SubReturn(certificate=None)
                continue
            if answer == "unsat":
                result[h] = AlmostSureReturn()
                continue
        lower = sum(kleene[i] for i in head_vars[h])
        result[h] = Unknown(kleene_lower=lower, iterations=iterations)
    return result


# ---------------------------------------------------------------------------
# SMT export


def _smt_frac(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator) if x >= 0 else f"(- {-x.numerator})"
    return f"(/ {x.numerator} {x.denominator})"


def smt_var(key: VarKey) -> str:
    q, x, q2 = key
    return f"v_{q}_{x}_{q2}"


def smt_export(s: EqSystem, head: Head) -> str:
    """SMT-LIB2 sentence: some fixed point in [0,1]^n has return mass below
    one at `head`.  Satisfiable iff the head is SubReturn, because the least
    fixed point is bounded by every fixed point."""
    hv = [i for i, (q, x, _) in enumerate(s.variables) if (q, x) == head]
    if not hv:
        raise ValueError(f"head {head} has no surviving variables; nothing to export")
    lines = ["(set-logic QF_NRA)"]
    names = [smt_var(v) for v in s.variables]
    for name in names:
        lines.append(f"(declare-const {name} Real)")
    for name in names:
        lines.append(f"(assert (and (>= {name} 0) (<= {name} 1)))")
    for i, eq in enumerate(s.equations):
        terms = [_smt_frac(eq.const)] if eq.const != 0 else []
        for m in eq.monomials:
            factors = " ".join(names[f] for f in m.factors)
            terms.append(f"(* {_smt_frac(m.coef)} {factors})")
        if not terms:
            rhs = "0"
        elif len(terms) == 1:
            rhs = terms[0]
        else:
            rhs = f"(+ {' '.join(terms)})"
        lines.append(f"(assert (= {names[i]} {rhs}))")
    if len(hv) == 1:
        head_sum = names[hv[0]]
    else:
        head_sum = f"(+ {' '.join(names[i] for i in hv)})"
    lines.append(f"(assert (< {head_sum} 1))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def run_smt_solver(script: str, solver_cmd: str, timeout: float = 60.0) -> str:
    """Invoke an external SMT-LIB2 solver; returns 'sat', 'unsat' or 'unknown'."""
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "query.smt2"
        path.write_text(script, encoding="utf-8")
        try:
            proc = subprocess.run(
                [solver_cmd, str(path)],
                capture_output=True,
                text=True,
                timeout=timeout,
            )
        except (OSError, subprocess.TimeoutExpired):
            return "unknown"
    for line in proc.stdout.splitlines():
        word = line.strip()
        if word in ("sat", "unsat"):
            return word
    return "unknown"
