"""Randomness of projective measurements on the maximally mixed qubit.

For directions n_k with weights q_k the adversary's best strategy picks a
sign string C and splits 1/2 along +-n_C, n_C = sum_k q_k c_k n_k, giving
G = (1 + max_C |n_C|)/2 exactly.  The interesting quantity is therefore
g_N, the smallest achievable max_C |n_C| over N-setting ensembles.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .quantum import _PAULI, min_entropy, pauli_measurement

logger = logging.getLogger(__name__)

ENUMERATION_CAP = 24
HEMISPHERE_CAP = 2000


@dataclass(frozen=True)
class SignString:
    """One outcome assignment c_k = +-1 per setting."""

    values: tuple

    def __post_init__(self):
        if not all(c in (-1, 1) for c in self.values):
            raise ValueError("sign strings take values in {-1,+1}")

    def __len__(self):
        return len(self.values)


class MeasurementEnsemble:
    """Weighted projective qubit settings given by Bloch directions."""

    def __init__(self, directions, weights=None):
        dirs = np.atleast_2d(np.asarray(directions, dtype=float))
        if dirs.ndim != 2 or dirs.shape[1] != 3:
            raise ValueError("directions must be Bloch 3-vectors")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("directions must be unit vectors")
        n = dirs.shape[0]
        if weights is None:
            weights = np.full(n, 1.0 / n)
        w = np.asarray(weights, dtype=float)
        if w.shape != (n,):
            raise ValueError("one weight per direction required")
        if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must lie on the probability simplex")
        self.directions = dirs
        self.weights = np.clip(w, 0.0, None)

    @property
    def n_settings(self):
        return self.directions.shape[0]

    def as_settings(self):
        """(Measurement, weight) pairs, e.g. for the SDP cross-check."""
        return [
            (pauli_measurement(n), float(q))
            for n, q in zip(self.directions, self.weights)
        ]


def _sign_matrix(n):
    """All 2^(n-1) sign strings with c_1 = +1, in lexicographic order of the
    full +-1 tuples they represent (antipodal strings share the norm)."""
    if n == 1:
        return np.array([[1.0]])
    rest = np.array(list(itertools.product((-1.0, 1.0), repeat=n - 1)))
    return np.hstack([np.ones((rest.shape[0], 1)), rest])


def max_bloch_norm(ensemble: MeasurementEnsemble):
    """Exact max_C |sum_k q_k c_k n_k| and the lexicographically smallest
    maximizing sign string."""
    n = ensemble.n_settings
    if n > ENUMERATION_CAP:
        raise ValueError(
            f"{n} settings exceed the exhaustive enumeration cap {ENUMERATION_CAP}"
        )
    signs = _sign_matrix(n)
    vectors = signs @ (ensemble.weights[:, None] * ensemble.directions)
    norms = np.linalg.norm(vectors, axis=1)
    best = float(norms.max())
    # the lexicographically smallest overall string has c_1 = -1: antipodes
    # of the enumerated half, scanned from all-(+1) downward
    for row in signs[::-1]:
        if np.linalg.norm(row @ (ensemble.weights[:, None] * ensemble.directions)) \
                >= best - 1e-12:
            return best, SignString(tuple(int(-c) for c in row))
    raise AssertionError("maximum not found in enumeration")


def guessing_white_noise(ensemble: MeasurementEnsemble) -> float:
    """G(1/2, ensemble) = (1 + max_C |n_C|)/2."""
    value, _ = max_bloch_norm(ensemble)
    return (1.0 + value) / 2.0


def _softmax(logits):
    z = np.exp(logits - logits.max())
    return z / z.sum()


def _unpack(params, n, co_optimize_weights):
    theta, phi = params[:n], params[n:2 * n]
    st = np.sin(theta)
    dirs = np.column_stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)])
    if co_optimize_weights:
        weights = _softmax(params[2 * n:3 * n])
    else:
        weights = np.full(n, 1.0 / n)
    return dirs, weights


def _enumerated_max(params, n, co_optimize_weights, signs):
    dirs, weights = _unpack(params, n, co_optimize_weights)
    vectors = signs @ (weights[:, None] * dirs)
    return float(np.linalg.norm(vectors, axis=1).max())


def _polish(params, n, co_optimize_weights, signs):
    """Epigraph reformulation: minimize t subject to t^2 >= |n_C|^2; smooth
    everywhere, so a sequential quadratic step sharpens the minimax point."""

    def constraints(y):
        dirs, weights = _unpack(y[:-1], n, co_optimize_weights)
        vectors = signs @ (weights[:, None] * dirs)
        return y[-1] ** 2 - np.einsum("ij,ij->i", vectors, vectors)

    t0 = _enumerated_max(params, n, co_optimize_weights, signs)
    y0 = np.append(params, t0 + 1e-9)
    res = minimize(
        lambda y: y[-1],
        y0,
        method="SLSQP",
        constraints=[{"type": "ineq", "fun": constraints}],
        bounds=[(None, None)] * len(params) + [(0.0, 1.0)],
        options={"maxiter": 200, "ftol": 1e-12},
    )
    return res.x[:-1] if res.success else params


def optimize_gN(n_settings: int, restarts: int = 64,
                co_optimize_weights: bool = True, seed: int = 0):
    """Numerical upper bound on g_N = min over ensembles of max_C |n_C|.

    Multistart direct search over spherical angles (and weight logits),
    followed by a constrained polish of the best point.  Returns the value
    and the achieving ensemble.
    """
    if not 2 <= n_settings <= 12:
        raise ValueError("setting count must lie in [2, 12]")
    if restarts < 1:
        raise ValueError("at least one restart required")
    n = n_settings
    signs = _sign_matrix(n)
    dim = 3 * n if co_optimize_weights else 2 * n
    best_val, best_params = np.inf, None
    for child in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(child)
        x0 = np.concatenate([
            np.arccos(rng.uniform(-1.0, 1.0, size=n)),
            rng.uniform(0.0, 2.0 * np.pi, size=n),
            rng.normal(scale=0.5, size=n) if co_optimize_weights else [],
        ])
        res = minimize(
            _enumerated_max, x0, args=(n, co_optimize_weights, signs),
            method="Nelder-Mead",
            options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": 400 * dim},
        )
        if res.fun < best_val:
            best_val, best_params = float(res.fun), res.x
    polished = _polish(best_params, n, co_optimize_weights, signs)
    if _enumerated_max(polished, n, co_optimize_weights, signs) < best_val:
        best_params = polished
    dirs, weights = _unpack(best_params, n, co_optimize_weights)
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    ensemble = MeasurementEnsemble(dirs, weights / weights.sum())
    value, _ = max_bloch_norm(ensemble)
    return value, ensemble


def _fibonacci_sphere(n, hemisphere=False):
    k = np.arange(n)
    golden = (1.0 + np.sqrt(5.0)) / 2.0
    phi = 2.0 * np.pi * k / golden
    if hemisphere:
        z = (k + 0.5) / n
    else:
        z = 1.0 - (2.0 * k + 1.0) / n
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def hemisphere_limit_estimate(n_settings: int, probe_points: int = 2048) -> float:
    """max_C |n_C| for N settings spread evenly over the upper half-sphere
    with uniform weights.

    Uses the identity max_C |n_C| = max over unit u of sum_k q_k |n_k . u|:
    probe axes on a full-sphere lattice, then alternate between the induced
    sign string and its resultant until stable.  Heuristic for large N (the
    exact enumeration is out of reach), trending to 1/2.
    """
    if not 1 <= n_settings <= HEMISPHERE_CAP:
        raise ValueError(f"setting count must lie in [1, {HEMISPHERE_CAP}]")
    dirs = _fibonacci_sphere(n_settings, hemisphere=True)
    weights = np.full(n_settings, 1.0 / n_settings)
    probes = _fibonacci_sphere(probe_points)
    scores = np.abs(probes @ dirs.T) @ weights
    u = probes[int(np.argmax(scores))]
    prev = None
    for _ in range(64):
        signs = np.where(dirs @ u >= 0.0, 1.0, -1.0)
        if prev is not None and np.array_equal(signs, prev):
            break
        prev = signs
        resultant = (signs * weights) @ dirs
        norm = np.linalg.norm(resultant)
        if norm == 0.0:
            break
        u = resultant / norm
    return float(np.linalg.norm((prev * weights) @ dirs))


@dataclass(frozen=True)
class UncertaintyReport:
    """Two complementary settings on 1/2: the entropy sum meets the
    min-entropy uncertainty bound with equality."""

    g2: float
    per_setting_bits: tuple
    sum_bits: float
    bound_bits: float
    optimal_bloch_directions: tuple
    saturated: bool


def check_uncertainty_saturation() -> UncertaintyReport:
    """Evaluate the optimal two-setting decomposition explicitly.

    The adversary splits 1/2 along +-(x+z)/sqrt(2); both settings then give
    guessing probability (1+1/sqrt(2))/2, and the min-entropy sum equals
    the complementarity bound -2 log2((1+c)/2) with overlap c = 1/sqrt(2).
    """
    ensemble = MeasurementEnsemble([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    g2, string = max_bloch_norm(ensemble)
    resultant = (np.array(string.values) * ensemble.weights) @ ensemble.directions
    axis = resultant / np.linalg.norm(resultant)
    if axis[int(np.argmax(np.abs(axis) > 1e-12))] < 0:
        axis = -axis
    branch_states = [
        (np.eye(2, dtype=complex) + np.tensordot(sgn * axis, _PAULI, axes=1)) / 2
        for sgn in (+1.0, -1.0)
    ]
    per_setting = []
    for direction in ensemble.directions:
        m = pauli_measurement(direction)
        g = sum(
            0.5 * max(float(np.trace(rho @ e).real) for e in m.effects)
            for rho in branch_states
        )
        per_setting.append(min_entropy(g))
    overlap = 1.0 / np.sqrt(2.0)
    bound = -2.0 * np.log2((1.0 + overlap) / 2.0)
    total = float(sum(per_setting))
    return UncertaintyReport(
        g2=g2,
        per_setting_bits=tuple(per_setting),
        sum_bits=total,
        bound_bits=float(bound),
        optimal_bloch_directions=(axis, -axis),
        saturated=bool(abs(total - bound) < 1e-9),
    )
