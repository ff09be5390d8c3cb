"""Rank bounds for POVMs on the maximally mixed state.

A POVM with effect ranks r_c satisfies G >= d_s / sum_c r_c, so its
min-entropy is at most log2(sum r_c) - log2(d_s): the randomness never
exceeds what the implementing ancilla can carry.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .quantum import DensityMatrix, Measurement
from .tomographic import guessing_probability_single

logger = logging.getLogger(__name__)

RANK_THRESHOLD = 1e-9


@dataclass(frozen=True)
class PovmAnalysis:
    """Rank data of a POVM and the bounds they imply on 1/d_s."""

    d_s: int
    ranks: tuple
    eigenvalues: tuple  # one sorted array per effect
    sum_ranks: int
    guessing_lower_bound: float
    min_entropy_upper_bound: float
    decomposition_value: float  # sum_c tr(Pi_c^2)/d_s, explicitly feasible
    ancilla_dim: int | None  # d_a when sum_ranks = d_s * d_a exactly
    hidden_dim: int  # direct-sum attribution sum_ranks - d_s


def analyze_povm(povm: Measurement, d_s: int | None = None) -> PovmAnalysis:
    """Ranks, eigenvalues, and the induced guessing/min-entropy bounds."""
    if d_s is None:
        d_s = povm.dim
    if d_s != povm.dim:
        raise ValueError(f"system dimension {d_s} != effect dimension {povm.dim}")
    ranks = []
    eigenvalues = []
    mass = 0.0
    for i, effect in enumerate(povm.effects):
        w = np.linalg.eigvalsh(effect)
        eigenvalues.append(w)
        mass += float(w.sum())
        borderline = np.sum((w > RANK_THRESHOLD / 100) & (w < RANK_THRESHOLD * 100))
        if borderline:
            logger.warning(
                "effect %d has %d eigenvalue(s) near the rank threshold %.0e; "
                "the rank bound is sensitive to them", i, int(borderline),
                RANK_THRESHOLD,
            )
        ranks.append(int(np.sum(w > RANK_THRESHOLD)))
    if abs(mass - d_s) > 1e-8:
        raise ValueError(
            f"effect eigenvalue mass {mass:.12g} != system dimension {d_s}"
        )
    sum_ranks = int(sum(ranks))
    decomposition = sum(
        float(np.trace(e @ e).real) for e in povm.effects
    ) / d_s
    lower = d_s / sum_ranks
    if decomposition < lower - 1e-12:
        raise AssertionError(
            "explicit decomposition fell below the rank bound; rank threshold "
            "is misclassifying an effect"
        )
    ancilla = sum_ranks // d_s if sum_ranks % d_s == 0 else None
    return PovmAnalysis(
        d_s=d_s,
        ranks=tuple(ranks),
        eigenvalues=tuple(eigenvalues),
        sum_ranks=sum_ranks,
        guessing_lower_bound=lower,
        min_entropy_upper_bound=float(np.log2(sum_ranks) - np.log2(d_s)),
        decomposition_value=float(decomposition),
        ancilla_dim=ancilla,
        hidden_dim=sum_ranks - d_s,
    )


@dataclass(frozen=True)
class PovmSdpReport:
    """Rank bound versus the decomposition SDP on the same POVM."""

    analysis: PovmAnalysis
    sdp_guessing: float
    sdp_min_entropy: float
    bound_respected: bool


def verify_povm_vs_sdp(povm: Measurement, d_s: int | None = None) -> PovmSdpReport:
    """Cross-check: the SDP optimum must sit above the rank lower bound."""
    analysis = analyze_povm(povm, d_s)
    if analysis.d_s > 4:
        raise ValueError("SDP cross-check covers system dimension <= 4")
    if len(povm.effects) > 6:
        raise ValueError("SDP cross-check covers at most 6 outcomes")
    rho = DensityMatrix.maximally_mixed(analysis.d_s)
    g = guessing_probability_single(rho, povm)
    entropy = float(-np.log2(g)) if g > 0 else np.inf
    respected = (
        g >= analysis.guessing_lower_bound - 1e-7
        and entropy <= analysis.min_entropy_upper_bound + 1e-6
    )
    return PovmSdpReport(
        analysis=analysis,
        sdp_guessing=g,
        sdp_min_entropy=entropy,
        bound_respected=bool(respected),
    )


def _bloch_projector(v):
    x, y, z = v
    return 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]])


def sic_povm() -> Measurement:
    """Four rank-1 qubit effects on tetrahedral Bloch directions."""
    vertices = np.array([
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ]) / np.sqrt(3.0)
    effects = [0.5 * _bloch_projector(v) for v in vertices]
    return Measurement(effects, kind="povm", label="sic",
                       outcome_labels=tuple(range(4)))


def trine_povm() -> Measurement:
    """Three rank-1 qubit effects 120 degrees apart in the x-z plane."""
    angles = [2.0 * np.pi * k / 3.0 for k in range(3)]
    effects = [
        (2.0 / 3.0) * _bloch_projector([np.sin(a), 0.0, np.cos(a)])
        for a in angles
    ]
    return Measurement(effects, kind="povm", label="trine",
                       outcome_labels=tuple(range(3)))


def tensor_povm(composite: Measurement, d_s: int, d_a: int,
                ancilla_state=None) -> Measurement:
    """POVM induced on the system by measuring system (x) ancilla.

    Pi_c = tr_ancilla[(1 (x) sigma) P_c] for the composite effects P_c; a
    pure ancilla and rank-1 projective P_c give sum_ranks = d_s * d_a, so
    the min-entropy bound becomes exactly log2(d_a).
    """
    if composite.dim != d_s * d_a:
        raise ValueError(
            f"composite dimension {composite.dim} != d_s*d_a = {d_s * d_a}"
        )
    if ancilla_state is None:
        sigma = np.zeros((d_a, d_a), dtype=complex)
        sigma[0, 0] = 1.0
    else:
        sigma = np.asarray(ancilla_state, dtype=complex)
        if sigma.ndim == 1:
            sigma = np.outer(sigma, sigma.conj())
    effects = []
    for p in composite.effects:
        # Pi_ij = sum_{a,b} sigma[b,a] P[(i,a),(j,b)]  (trace over the ancilla)
        tensor = p.reshape(d_s, d_a, d_s, d_a)
        effects.append(np.einsum("iajb,ba->ij", tensor, sigma))
    effects = [e for e in effects if np.abs(e).max() > 1e-14]
    return Measurement(effects, kind="povm",
                       label=f"{composite.label or 'composite'}-reduced",
                       outcome_labels=tuple(range(len(effects))))


def random_povm(rng, d: int, n_outcomes: int, rank: int | None = None) -> Measurement:
    """Random POVM: Wishart pieces normalized by the inverse square root of
    their sum.  Redraws when the sum is too ill-conditioned to normalize at
    working precision."""
    r = rank or d
    if n_outcomes * r < d:
        raise ValueError(
            f"{n_outcomes} effects of rank {r} cannot sum to a rank-{d} identity"
        )
    for _ in range(100):
        pieces = []
        for _ in range(n_outcomes):
            g = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
            pieces.append(g @ g.conj().T)
        total = sum(pieces)
        w, u = np.linalg.eigh(total)
        if w[0] < 1e-6 * w[-1]:
            continue
        inv_sqrt = (u * (1.0 / np.sqrt(w))) @ u.conj().T
        effects = [inv_sqrt @ p @ inv_sqrt for p in pieces]
        effects = [0.5 * (e + e.conj().T) for e in effects]
        return Measurement(effects, kind="povm",
                           outcome_labels=tuple(range(n_outcomes)))
    raise RuntimeError("failed to draw a well-conditioned POVM")
