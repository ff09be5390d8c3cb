"""Moment-matrix relaxations for untrusted-device guessing probabilities.

For each guess c of the target outcome pair, a block Gamma_c holds the
moments <w_i' w_j> of monomials in Alice's and Bob's +-1 observables,
evaluated on the adversary's subnormalized branch rho_c.  Positivity of
every block plus linear constraints tying the summed moments to the
observed data (or to a Bell-functional value) yields an upper bound on the
guessing probability; more constraints -- here, algebraic relations among
Bob's operators when his device is trusted -- tighten it.

Moments are kept real throughout: for real constraint and objective
coefficients, conjugating a feasible complex moment matrix gives another
feasible one with the same objective, so their average -- the entrywise
real part -- loses nothing.  Words equal to minus their own adjoint (such
as B1 B2 for anticommuting B1, B2) then carry moment zero.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .quantum import BellFunctional, Measurement, Scenario, _PAULI
from .sdp import BlockSDP, SdpInfeasibleError, SolverOptions, solve

logger = logging.getLogger(__name__)

OUTCOME_PAIRS = ((+1, +1), (+1, -1), (-1, +1), (-1, -1))

_ZERO = -1  # entry identically zero in the real moment model


def _cancel_adjacent(word):
    out = []
    for g in word:
        if out and out[-1] == g:
            out.pop()
        else:
            out.append(g)
    return tuple(out)


class BobAlgebra:
    """Relations among Bob's dichotomic observables.

    ``derived`` maps a setting index to its expansion over primitive
    settings, e.g. {3: {1: 0.707.., 2: 0.707..}} for B3 = (B1+B2)/sqrt(2).
    ``anticommuting`` lists setting pairs with B_i B_j = -B_j B_i; pairs of
    derived settings are checked against their expansions rather than used
    directly.  With no relations the algebra is free and reduction only
    cancels repeated adjacent generators.
    """

    def __init__(self, n_settings, derived=None, anticommuting=()):
        self.n_settings = int(n_settings)
        if self.n_settings < 0:
            raise ValueError("negative setting count")
        derived = dict(derived or {})
        for y, expansion in derived.items():
            if not 1 <= y <= self.n_settings:
                raise ValueError(f"derived setting {y} out of range")
        self.primitives = tuple(
            y for y in range(1, self.n_settings + 1) if y not in derived
        )
        self.derived = {
            int(y): {int(i): float(c) for i, c in exp.items() if abs(c) > 1e-14}
            for y, exp in derived.items()
        }
        for y, exp in self.derived.items():
            for i in exp:
                if i not in self.primitives:
                    raise ValueError(
                        f"setting {y} expands over setting {i}, which is not primitive"
                    )
        declared = []
        prim_pairs = set()
        for g, h in anticommuting:
            if g == h:
                raise ValueError(f"setting {g} cannot anticommute with itself")
            declared.append((int(g), int(h)))
            if g in self.primitives and h in self.primitives:
                prim_pairs.add(frozenset((int(g), int(h))))
        self._anticommuting = prim_pairs
        self.declared_anticommuting = tuple(declared)
        self._validate()

    def is_free(self):
        return not self.derived and not self._anticommuting

    def fingerprint(self):
        return (
            self.n_settings,
            tuple(sorted((y, tuple(sorted(e.items()))) for y, e in self.derived.items())),
            tuple(sorted(tuple(sorted(p)) for p in self._anticommuting)),
        )

    def reduce(self, word):
        """Canonical form of a product of primitive generators: +-1 sign and
        the sorted-where-possible, square-free word."""
        sign = 1
        w = list(word)
        while True:
            cancelled = _cancel_adjacent(w)
            if len(cancelled) != len(w):
                w = list(cancelled)
                continue
            swapped = False
            for k in range(len(w) - 1):
                if w[k] > w[k + 1] and frozenset((w[k], w[k + 1])) in self._anticommuting:
                    w[k], w[k + 1] = w[k + 1], w[k]
                    sign = -sign
                    swapped = True
            if not swapped:
                return sign, tuple(w)

    def expand_setting(self, y):
        if not 1 <= y <= self.n_settings:
            raise ValueError(f"setting {y} out of range")
        if y in self.derived:
            return {(i,): c for i, c in self.derived[y].items()}
        return {(y,): 1.0}

    def expand_word(self, word):
        """Linear combination of canonical primitive words for a product of
        (possibly derived) generators."""
        terms = {(): 1.0}
        for g in word:
            new = {}
            for w, c in terms.items():
                for gw, gc in self.expand_setting(g).items():
                    s, ww = self.reduce(w + gw)
                    new[ww] = new.get(ww, 0.0) + c * gc * s
            terms = {w: c for w, c in new.items() if abs(c) > 1e-14}
        return terms

    def _validate(self):
        for y in self.derived:
            sq = self.expand_word((y, y))
            residual = dict(sq)
            residual[()] = residual.get((), 0.0) - 1.0
            bad = {w: c for w, c in residual.items() if abs(c) > 1e-10}
            if bad:
                culprit = next(w for w in bad if w != ())
                raise ValueError(
                    f"setting {y} does not square to the identity under the "
                    f"declared relations; offending pair {culprit[:2]} "
                    "(missing anticommutation?)"
                )
        for g, h in self.declared_anticommuting:
            if g in self.primitives and h in self.primitives:
                continue
            anti = self.expand_word((g, h))
            for w, c in self.expand_word((h, g)).items():
                anti[w] = anti.get(w, 0.0) + c
            bad = {w: c for w, c in anti.items() if abs(c) > 1e-10}
            if bad:
                raise ValueError(
                    f"declared anticommutation of settings ({g},{h}) is "
                    f"inconsistent with their expansions (residual on {next(iter(bad))})"
                )

    def basis_words(self, max_len):
        """Distinct canonical primitive words of length <= max_len."""
        words = [()]
        seen = {()}
        for length in range(1, max_len + 1):
            for combo in itertools.product(self.primitives, repeat=length):
                _, w = self.reduce(combo)
                if len(w) == length and w not in seen:
                    seen.add(w)
                    words.append(w)
        return words


@dataclass(frozen=True, order=True)
class Monomial:
    """Canonical word: Alice generators (which commute with Bob's but not
    with each other) always precede Bob's."""

    alice: tuple
    bob: tuple

    def __str__(self):
        parts = [f"A{x}" for x in self.alice] + [f"B{y}" for y in self.bob]
        return " ".join(parts) if parts else "1"


class MomentMatrixStructure:
    """Symbolic layout of one moment block: rows, the variable attached to
    each entry, and the anchor entry that represents each variable."""

    def __init__(self, n_alice, n_bob, level, algebra=None):
        if level not in (1, 2):
            raise ValueError("hierarchy level must be 1 or 2")
        self.level = level
        self.n_alice = int(n_alice)
        self.n_bob = int(n_bob)
        self.algebra = algebra if algebra is not None else BobAlgebra(n_bob)
        if self.algebra.n_settings != self.n_bob:
            raise ValueError("algebra covers a different number of Bob settings")
        self.rows = self._enumerate_rows()
        n = len(self.rows)
        self.variable_words: list[Monomial] = []
        self._var_ids: dict[Monomial, int] = {}
        self.entry_var = np.full((n, n), _ZERO, dtype=int)
        self.entry_sign = np.zeros((n, n))
        self.anchor: list[tuple[int, int]] = []
        for i in range(n):
            for j in range(i, n):
                vid, sign = self._classify(self.rows[i], self.rows[j])
                if vid == _ZERO:
                    continue
                self.entry_var[i, j] = self.entry_var[j, i] = vid
                self.entry_sign[i, j] = self.entry_sign[j, i] = sign
                if vid == len(self.anchor):
                    self.anchor.append((i, j))
        assert len(self.anchor) == len(self.variable_words)
        if self.entry_var[0, 0] != 0 or self.variable_words[0] != Monomial((), ()):
            raise AssertionError("identity moment must anchor at the corner")
        for i in range(n):
            if self.entry_var[i, i] != 0 or self.entry_sign[i, i] != 1.0:
                raise AssertionError(f"diagonal entry {i} does not reduce to the identity")

    @property
    def n_rows(self):
        return len(self.rows)

    @property
    def n_variables(self):
        return len(self.variable_words)

    def _enumerate_rows(self):
        singles_a = [(x,) for x in range(1, self.n_alice + 1)]
        bob_words = self.algebra.basis_words(self.level)
        bob_singles = [w for w in bob_words if len(w) == 1]
        rows = [Monomial((), ())]
        rows += [Monomial(a, ()) for a in singles_a]
        rows += [Monomial((), b) for b in bob_singles]
        if self.level >= 2:
            rows += [
                Monomial((x1, x2), ())
                for x1, x2 in itertools.product(range(1, self.n_alice + 1), repeat=2)
                if x1 != x2
            ]
            rows += [
                Monomial(a, b) for a in singles_a for b in bob_singles
            ]
            rows += [Monomial((), b) for b in bob_words if len(b) == 2]
        return rows

    def _varkey(self, alice, bob_signed):
        """Identify the real moment variable for op(alice) (x) op(bob).

        ``bob_signed`` is (sign, canonical primitive word).  Returns
        (variable id, sign) and registers new variables; id _ZERO flags a
        word whose real moment vanishes identically.
        """
        sign, bob = bob_signed
        alice = _cancel_adjacent(alice)
        u = Monomial(alice, bob)
        s2, bob_adj = self.algebra.reduce(tuple(reversed(bob)))
        v = Monomial(_cancel_adjacent(tuple(reversed(alice))), bob_adj)
        if v == u and s2 == -1:
            return _ZERO, 0.0
        if v < u:
            rep, rep_sign = v, sign * s2
        else:
            rep, rep_sign = u, sign
        vid = self._var_ids.get(rep)
        if vid is None:
            vid = len(self.variable_words)
            self._var_ids[rep] = vid
            self.variable_words.append(rep)
        return vid, rep_sign

    def _classify(self, row_i, row_j):
        alice = tuple(reversed(row_i.alice)) + row_j.alice
        bob = self.algebra.reduce(tuple(reversed(row_i.bob)) + row_j.bob)
        return self._varkey(alice, bob)

    def moment_terms(self, alice_word, bob_word):
        """Expand op(alice) (x) op(bob) -- Bob indices in the scenario's own
        labeling, derived settings allowed -- into structure variables.

        Returns a list of (variable id, coefficient); raises if a needed
        word has no anchor at this level.
        """
        out = {}
        for bw, c in self.algebra.expand_word(bob_word).items():
            vid, sign = self._varkey(alice_word, (1, bw))
            if vid == _ZERO:
                continue
            if vid >= len(self.anchor):
                raise ValueError(
                    f"moment of {Monomial(_cancel_adjacent(alice_word), bw)} is not "
                    f"representable in a level-{self.level} structure"
                )
            out[vid] = out.get(vid, 0.0) + c * sign
        return [(vid, c) for vid, c in out.items() if abs(c) > 1e-14]


_STRUCTURE_CACHE: dict = {}


def _structure(n_alice, n_bob, level, algebra=None) -> MomentMatrixStructure:
    key = (n_alice, n_bob, level, algebra.fingerprint() if algebra else None)
    if key not in _STRUCTURE_CACHE:
        _STRUCTURE_CACHE[key] = MomentMatrixStructure(n_alice, n_bob, level, algebra)
    return _STRUCTURE_CACHE[key]


def build_structure(scenario: Scenario, level: int,
                    algebra: BobAlgebra | None = None) -> MomentMatrixStructure:
    """Moment-matrix layout for a two-party scenario."""
    if scenario.parties != 2:
        raise ValueError("moment relaxations cover two-party scenarios")
    return _structure(
        scenario.n_alice_settings, scenario.n_bob_settings, level, algebra
    )


def _sym_entry(n, i, j):
    e = np.zeros((n, n))
    if i == j:
        e[i, i] = 1.0
    else:
        e[i, j] = e[j, i] = 0.5
    return e


def _anchor_matrix(structure, terms):
    """Symmetric coefficient matrix K with tr(K Gamma) = sum c_v m(v)."""
    n = structure.n_rows
    mat = np.zeros((n, n))
    for vid, coeff in terms:
        i, j = structure.anchor[vid]
        s = structure.entry_sign[i, j]
        if i == j:
            mat[i, i] += coeff / s
        else:
            mat[i, j] += 0.5 * coeff / s
            mat[j, i] += 0.5 * coeff / s
    return mat


def _structural_constraints(structure, n_blocks):
    """Equalities forcing every non-anchor entry to match its variable."""
    n = structure.n_rows
    cons = []
    for b in range(n_blocks):
        for i in range(n):
            for j in range(i, n):
                vid = structure.entry_var[i, j]
                if vid == _ZERO:
                    cons.append(({b: _sym_entry(n, i, j)}, 0.0))
                    continue
                ai, aj = structure.anchor[vid]
                if (ai, aj) == (i, j):
                    continue
                rel = structure.entry_sign[i, j] / structure.entry_sign[ai, aj]
                mat = _sym_entry(n, i, j) - rel * _sym_entry(n, ai, aj)
                cons.append(({b: mat}, 0.0))
    return cons


def _shared_constraint(structure, n_blocks, terms, rhs):
    mat = _anchor_matrix(structure, terms)
    return ({b: mat for b in range(n_blocks)}, float(rhs))


def _objective_blocks(structure, target):
    """One matrix per guessed outcome pair: tr(C_c Gamma_c) = P_c(a,b|x*,y*)."""
    x, y = target
    blocks = []
    for a, b in OUTCOME_PAIRS:
        terms = [(0, 0.25)]
        terms += [(vid, 0.25 * a * c) for vid, c in structure.moment_terms((x,), ())]
        terms += [(vid, 0.25 * b * c) for vid, c in structure.moment_terms((), (y,))]
        terms += [(vid, 0.25 * a * b * c) for vid, c in structure.moment_terms((x,), (y,))]
        blocks.append(_anchor_matrix(structure, terms))
    return blocks


def _validate_target(structure, target):
    x, y = target
    if not 1 <= x <= structure.n_alice:
        raise ValueError(f"target Alice setting {x} out of range")
    if not 1 <= y <= structure.n_bob:
        raise ValueError(f"target Bob setting {y} out of range")


def _observed_correlators(stats):
    """(<A_x>, <B_y>, <A_x B_y>) tables from a dichotomic [a,b,x,y] table."""
    signs = np.array([1.0, -1.0])
    ea = np.einsum("a,abxy->xy", signs, stats).mean(axis=1)
    eb = np.einsum("b,abxy->xy", signs, stats).mean(axis=0)
    eab = np.einsum("a,b,abxy->xy", signs, signs, stats)
    return ea, eb, eab


def _solve_blocks(structure, constraints, objective, options):
    n = structure.n_rows
    problem = BlockSDP(
        [n] * len(objective), objective, constraints, sense="max"
    )
    sol = solve(problem, options)
    if sol.status != "optimal" and sol.duality_gap > 1e-5:
        logger.warning(
            "moment relaxation ended with status %s (gap %.2e)",
            sol.status, sol.duality_gap,
        )
    # conservative side of the bracket: the dual certifies the relaxation
    # optimum from above, so on imperfect convergence report the larger value
    value = max(float(sol.primal_value), float(sol.dual_value))
    return min(value, 1.0), sol


def _statistics_constraints(structure, scenario):
    stats = scenario.observed_statistics
    if stats.shape[0] != 2 or stats.shape[1] != 2:
        raise ValueError("moment relaxations cover dichotomic outcomes")
    nb = len(OUTCOME_PAIRS)
    ea, eb, eab = _observed_correlators(stats)
    cons = [_shared_constraint(structure, nb, [(0, 1.0)], 1.0)]
    for x in range(1, structure.n_alice + 1):
        cons.append(_shared_constraint(
            structure, nb, structure.moment_terms((x,), ()), ea[x - 1]))
    for y in range(1, structure.n_bob + 1):
        cons.append(_shared_constraint(
            structure, nb, structure.moment_terms((), (y,)), eb[y - 1]))
    for x in range(1, structure.n_alice + 1):
        for y in range(1, structure.n_bob + 1):
            cons.append(_shared_constraint(
                structure, nb, structure.moment_terms((x,), (y,)), eab[x - 1, y - 1]))
    return cons


def di_guessing_probability(scenario: Scenario, target, level: int = 2,
                            options: SolverOptions | None = None,
                            return_solution: bool = False):
    """Upper bound on the probability of guessing the outcome pair of the
    target settings, from the observed table alone."""
    structure = build_structure(scenario, level)
    _validate_target(structure, target)
    cons = _structural_constraints(structure, len(OUTCOME_PAIRS))
    cons += _statistics_constraints(structure, scenario)
    value, sol = _solve_blocks(
        structure, cons, _objective_blocks(structure, target), options
    )
    return (value, sol) if return_solution else value


def steering_guessing_probability(scenario: Scenario, target, level: int = 2,
                                  options: SolverOptions | None = None,
                                  return_solution: bool = False):
    """Upper bound on the guessing probability when Bob's measurement
    operators are characterized (one-sided scenario).

    The algebra of Bob's observables -- which settings are linear
    combinations of others, and which anticommute -- is derived from
    ``scenario.known_side`` and imposed on the moment structure.
    """
    if scenario.known_side is None:
        raise ValueError("one-sided bound needs scenario.known_side")
    algebra = bob_algebra_from_measurements(scenario.known_side)
    structure = _structure(
        scenario.n_alice_settings, scenario.n_bob_settings, level, algebra
    )
    _validate_target(structure, target)
    cons = _structural_constraints(structure, len(OUTCOME_PAIRS))
    cons += _statistics_constraints(structure, scenario)
    value, sol = _solve_blocks(
        structure, cons, _objective_blocks(structure, target), options
    )
    return (value, sol) if return_solution else value


_FUNCTIONAL_RANGE_CACHE: dict = {}


def _functional_terms(structure, f: BellFunctional):
    terms = {}
    for (x, y), c in f.coefficients.items():
        for vid, cc in structure.moment_terms((x,), (y,)):
            terms[vid] = terms.get(vid, 0.0) + c * cc
    return list(terms.items())


def _functional_range(f: BellFunctional, n_alice, n_bob, level, options):
    """Largest and smallest functional values the one-block relaxation
    admits; used to certify infeasible requests before solving."""
    key = (tuple(sorted(f.coefficients.items())), n_alice, n_bob, level)
    if key in _FUNCTIONAL_RANGE_CACHE:
        return _FUNCTIONAL_RANGE_CACHE[key]
    structure = _structure(n_alice, n_bob, level)
    terms = _functional_terms(structure, f)
    cons = _structural_constraints(structure, 1)
    cons.append(({0: _sym_entry(structure.n_rows, 0, 0)}, 1.0))
    objective = _anchor_matrix(structure, terms)
    hi = _raw_extremum(structure, cons, objective, options)
    lo = -_raw_extremum(structure, cons, -objective, options)
    _FUNCTIONAL_RANGE_CACHE[key] = (lo, hi)
    return _FUNCTIONAL_RANGE_CACHE[key]


def _raw_extremum(structure, cons, objective, options):
    problem = BlockSDP([structure.n_rows], [objective], cons, sense="max")
    sol = solve(problem, options)
    return max(float(sol.primal_value), float(sol.dual_value))


def di_guessing_from_functional(f: BellFunctional, value: float, target,
                                level: int = 2,
                                options: SolverOptions | None = None,
                                return_solution: bool = False):
    """Upper bound on the guessing probability when only the value of a
    Bell functional is certified, not the full table.

    Raises :class:`SdpInfeasibleError` when ``value`` lies outside the
    range the relaxation admits (e.g. CHSH above 2*sqrt(2))."""
    n_alice = max(f.n_alice, target[0])
    n_bob = max(f.n_bob, target[1])
    lo, hi = _functional_range(f, n_alice, n_bob, level, options)
    margin = 1e-7 * max(1.0, abs(hi), abs(lo))
    if value > hi + margin or value < lo - margin:
        raise SdpInfeasibleError(
            f"functional value {value:g} lies outside the level-{level} "
            f"quantum range [{lo:.9f}, {hi:.9f}]"
        )
    structure = _structure(n_alice, n_bob, level)
    _validate_target(structure, target)
    nb = len(OUTCOME_PAIRS)
    cons = _structural_constraints(structure, nb)
    cons.append(_shared_constraint(structure, nb, [(0, 1.0)], 1.0))
    cons.append(_shared_constraint(
        structure, nb, _functional_terms(structure, f), value))
    value_g, sol = _solve_blocks(
        structure, cons, _objective_blocks(structure, target), options
    )
    return (value_g, sol) if return_solution else value_g


def bob_algebra_from_measurements(measurements) -> BobAlgebra:
    """Read off the observable algebra of trusted qubit measurements.

    Settings whose Bloch directions are mutually orthogonal become
    primitive generators (orthogonal directions anticommute); the rest are
    expanded linearly over the primitives.  Non-orthogonal independent
    directions have no representation in this reduced form and are
    rejected.
    """
    dirs = []
    for i, m in enumerate(measurements):
        if not isinstance(m, Measurement):
            raise ValueError(f"known_side entry {i} is not a Measurement")
        if m.dim != 2 or m.n_outcomes != 2:
            raise ValueError("algebra derivation covers dichotomic qubit settings")
        obs = m.observable()
        dirs.append(np.array([float(np.trace(obs @ p).real) / 2.0 for p in _PAULI]))
    primitives = []
    prim_idx = []
    derived = {}
    for y, n in enumerate(dirs, start=1):
        coeffs = [float(n @ e) for e in primitives]
        residual = n - sum(c * e for c, e in zip(coeffs, primitives))
        if np.linalg.norm(residual) > 1e-9:
            for k, e in enumerate(primitives):
                if abs(n @ e) > 1e-9:
                    raise ValueError(
                        f"settings {prim_idx[k]} and {y} are independent but not "
                        "orthogonal; no anticommuting reduction exists"
                    )
            primitives.append(n)
            prim_idx.append(y)
        else:
            derived[y] = {
                prim_idx[k]: c for k, c in enumerate(coeffs) if abs(c) > 1e-12
            }
    anticommuting = list(itertools.combinations(prim_idx, 2))
    # renumber nothing: primitive indices keep their original setting labels
    return BobAlgebra(len(dirs), derived, anticommuting)
