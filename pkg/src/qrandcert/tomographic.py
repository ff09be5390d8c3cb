"""Guessing probability under full state and measurement knowledge.

The adversary prepares the state as a mixture rho = sum_C rho_C (one
subnormalized branch per outcome string C) and guesses the branch label.
Her best strategy solves

    G = max sum_C tr(rho_C M_C)   over rho_C >= 0, sum_C rho_C = rho,

with M_C = sum_z q_z Pi^z_{c_z} the effective operator of answering c_z on
setting z.  For a single setting this reduces to one operator per outcome.
The remaining freedom, the choice of measurement settings themselves, is
not convex and is handled by a multistart derivative-free search.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .quantum import DensityMatrix, Measurement, pauli_measurement, product_measurement
from .sdp import ComplexBlockSDP, SolverOptions, solve_complex

logger = logging.getLogger(__name__)

DEFAULT_STRING_CAP = 256


def _hermitian_basis(d):
    basis = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = 1.0
            basis.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0j
            e[j, i] = -1.0j
            basis.append(e)
    return basis


def _decomposition_value(rho: DensityMatrix, operators, options=None) -> float:
    """Optimal value of max sum_c tr(rho_c K_c) over decompositions of rho.

    Every branch rho_c is dominated by rho, so the problem is first
    restricted to rho's support; this keeps the feasible set full-
    dimensional even for singular states, where the unreduced problem has
    no interior and interior-point iterations stall.
    """
    w, u = np.linalg.eigh(rho.matrix)
    keep = w > 1e-12 * max(1.0, float(w[-1]))
    basis = u[:, keep]
    r = int(np.sum(keep))
    rho_r = basis.conj().T @ rho.matrix @ basis
    ops_r = [basis.conj().T @ np.asarray(k, dtype=complex) @ basis for k in operators]
    if r == 1:
        # decomposition is trivial on a one-dimensional support
        return min(max(float((rho_r[0, 0] * k[0, 0]).real) for k in ops_r), 1.0)
    n = len(operators)
    constraints = []
    for bmat in _hermitian_basis(r):
        rhs = float(np.trace(bmat @ rho_r).real)
        constraints.append(({c: bmat for c in range(n)}, rhs))
    problem = ComplexBlockSDP([r] * n, ops_r, constraints)
    sol = solve_complex(problem, options)
    if sol.status != "optimal":
        logger.warning(
            "decomposition SDP ended with status %s (gap %.2e)",
            sol.status, sol.duality_gap,
        )
    return min(float(sol.primal_value), 1.0)


def guessing_probability_single(rho: DensityMatrix, m: Measurement,
                                options: SolverOptions | None = None) -> float:
    """Adversarial guessing probability for one measurement on rho."""
    if m.dim != rho.dim:
        raise ValueError(f"measurement dimension {m.dim} != state dimension {rho.dim}")
    value = _decomposition_value(rho, m.effects, options)
    trivial = max(float(np.trace(rho.matrix @ e).real) for e in m.effects)
    if value < trivial - 1e-6:
        raise RuntimeError(
            f"decomposition SDP returned {value:.9f} below the feasible "
            f"no-decomposition value {trivial:.9f}"
        )
    return value


@dataclass
class DecompositionProblem:
    """A state with a weighted collection of measurement settings."""

    state: DensityMatrix
    settings: list  # of (Measurement, weight)

    def __post_init__(self):
        if not self.settings:
            raise ValueError("at least one setting required")
        weights = np.array([float(w) for _, w in self.settings])
        if np.any(weights < -1e-12):
            raise ValueError("negative setting weight")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError(f"setting weights sum to {weights.sum():.12g}, expected 1")
        d = self.state.dim
        for i, (m, _) in enumerate(self.settings):
            if m.dim != d:
                raise ValueError(f"setting {i} has dimension {m.dim}, state has {d}")

    @property
    def n_strings(self):
        out = 1
        for m, _ in self.settings:
            out *= m.n_outcomes
        return out

    def outcome_strings(self):
        return itertools.product(*(range(m.n_outcomes) for m, _ in self.settings))

    def effective_operator(self, string):
        """M_C = sum_z q_z Pi^z_{c_z} for the outcome string C."""
        d = self.state.dim
        op = np.zeros((d, d), dtype=complex)
        for (m, q), c in zip(self.settings, string):
            op += q * m.effects[c]
        return op


def guessing_probability_multi(problem: DecompositionProblem,
                               options: SolverOptions | None = None,
                               string_cap: int = DEFAULT_STRING_CAP) -> float:
    """Guessing probability for a weighted set of settings (one SDP).

    The number of outcome strings (SDP blocks) is capped; with m dichotomic
    settings it is 2^m.
    """
    n = problem.n_strings
    if n > string_cap:
        raise ValueError(
            f"{n} outcome strings exceed the cap {string_cap}; "
            f"raise string_cap to at least {n} to proceed"
        )
    operators = [problem.effective_operator(s) for s in problem.outcome_strings()]
    return _decomposition_value(problem.state, operators, options)


def _bloch(theta, phi):
    st = np.sin(theta)
    return np.array([st * np.cos(phi), st * np.sin(phi), np.cos(theta)])


def _ensemble_from_params(rho_dim, n_settings, params, weights):
    per = 2 if rho_dim == 2 else 4
    settings = []
    for z in range(n_settings):
        block = params[per * z: per * (z + 1)]
        if rho_dim == 2:
            m = pauli_measurement(_bloch(block[0], block[1]))
        else:
            m = product_measurement(
                pauli_measurement(_bloch(block[0], block[1])),
                pauli_measurement(_bloch(block[2], block[3])),
            )
        settings.append((m, weights[z]))
    return settings


def _softmax(logits):
    e = np.exp(logits - np.max(logits))
    return e / e.sum()


def minimize_over_measurements(rho: DensityMatrix, n_settings: int,
                               weights=None, co_optimize_weights: bool = False,
                               restarts: int = 32, seed: int = 0,
                               options: SolverOptions | None = None):
    """Search for the measurement choice minimizing the guessing probability.

    Settings are rank-1 projective for a qubit state and products of such
    for two qubits.  The inner problem is the exact decomposition SDP; the
    outer layer is a Nelder-Mead multistart, so the result is an upper
    bound on the true minimum.  Returns (best G, settings list).
    """
    if n_settings < 1:
        raise ValueError("need at least one setting")
    if rho.dim not in (2, 4):
        raise ValueError("measurement search covers qubit and two-qubit states")
    if weights is None:
        base_weights = np.full(n_settings, 1.0 / n_settings)
    else:
        base_weights = np.asarray(weights, dtype=float)
        if base_weights.shape != (n_settings,):
            raise ValueError("one weight per setting required")
        if np.any(base_weights < 0) or abs(base_weights.sum() - 1.0) > 1e-9:
            raise ValueError("weights must lie on the probability simplex")
    per = 2 if rho.dim == 2 else 4
    n_angles = per * n_settings

    def objective(x):
        angles = x[:n_angles]
        w = _softmax(x[n_angles:]) if co_optimize_weights else base_weights
        settings = _ensemble_from_params(rho.dim, n_settings, angles, w)
        return guessing_probability_multi(DecompositionProblem(rho, settings), options)

    best_val = np.inf
    best_x = None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        x0 = np.empty(n_angles + (n_settings if co_optimize_weights else 0))
        for z in range(n_angles // 2):
            x0[2 * z] = np.arccos(rng.uniform(-1.0, 1.0))
            x0[2 * z + 1] = rng.uniform(0.0, 2.0 * np.pi)
        if co_optimize_weights:
            x0[n_angles:] = rng.normal(scale=0.5, size=n_settings)
        res = scipy.optimize.minimize(
            objective, x0, method="Nelder-Mead",
            options={"xatol": 1e-5, "fatol": 1e-9, "maxiter": 400 * len(x0)},
        )
        if res.fun < best_val:
            best_val = float(res.fun)
            best_x = res.x
        logger.debug("restart value %.9f (best %.9f)", res.fun, best_val)
    w = _softmax(best_x[n_angles:]) if co_optimize_weights else base_weights
    settings = _ensemble_from_params(rho.dim, n_settings, best_x[:n_angles], w)
    return best_val, settings
