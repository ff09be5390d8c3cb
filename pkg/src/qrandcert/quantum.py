"""States, measurements, scenarios, and Bell functionals.

Conventions used throughout the package: tensor order is Alice (x) Bob;
dichotomic outcomes are labeled +1 and -1 with outcome index 0 holding +1,
so projective qubit effects are (1 +- n.sigma)/2 in that order; statistics
tables are indexed [a, b, x, y] with 0-based setting indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_PAULI = np.stack([PAULI_X, PAULI_Y, PAULI_Z])


class DensityMatrix:
    """A quantum state: Hermitian, positive semidefinite, unit trace.

    Subnormalized instances (trace <= 1) appear only inside decomposition
    solvers and must be flagged explicitly.
    """

    def __init__(self, matrix, subnormalized=False):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("state matrix must be square")
        scale = max(1.0, float(np.max(np.abs(matrix))))
        if np.max(np.abs(matrix - matrix.conj().T)) > 1e-12 * scale:
            raise ValueError("state matrix is not Hermitian")
        matrix = 0.5 * (matrix + matrix.conj().T)
        w = np.linalg.eigvalsh(matrix)
        if w[0] < -1e-10:
            raise ValueError(f"state has negative eigenvalue {w[0]:g}")
        tr = float(np.trace(matrix).real)
        if subnormalized:
            if tr > 1.0 + 1e-10:
                raise ValueError(f"subnormalized state has trace {tr:g} > 1")
        elif abs(tr - 1.0) > 1e-10:
            raise ValueError(f"state has trace {tr:g}, expected 1")
        self.matrix = matrix
        self.subnormalized = bool(subnormalized)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, vector):
        v = np.asarray(vector, dtype=complex).ravel()
        n = np.linalg.norm(v)
        if n < 1e-12:
            raise ValueError("zero vector")
        v = v / n
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, d):
        return cls(np.eye(d, dtype=complex) / d)

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)

    def bloch_vector(self):
        if self.dim != 2:
            raise ValueError("Bloch vector is defined for qubits only")
        return np.array([float(np.trace(self.matrix @ p).real) for p in _PAULI])


class Measurement:
    """An ordered POVM; ``kind='projective'`` additionally requires
    idempotent, mutually orthogonal effects."""

    def __init__(self, effects, kind="povm", label="", outcome_labels=None):
        effects = [np.asarray(e, dtype=complex) for e in effects]
        if not effects:
            raise ValueError("measurement needs at least one effect")
        d = effects[0].shape[0]
        for i, e in enumerate(effects):
            if e.shape != (d, d):
                raise ValueError(f"effect {i} has shape {e.shape}, expected {(d, d)}")
            if np.max(np.abs(e - e.conj().T)) > 1e-10 * max(1.0, np.max(np.abs(e))):
                raise ValueError(f"effect {i} is not Hermitian")
            if np.linalg.eigvalsh(0.5 * (e + e.conj().T))[0] < -1e-10:
                raise ValueError(f"effect {i} is not positive semidefinite")
        total = sum(effects)
        if np.max(np.abs(total - np.eye(d))) > 1e-10:
            raise ValueError("effects do not sum to the identity")
        if kind not in ("projective", "povm"):
            raise ValueError(f"unknown measurement kind {kind!r}")
        if kind == "projective":
            for i, e in enumerate(effects):
                if np.max(np.abs(e @ e - e)) > 1e-10:
                    raise ValueError(f"effect {i} is not a projector")
            for i in range(len(effects)):
                for j in range(i + 1, len(effects)):
                    if np.max(np.abs(effects[i] @ effects[j])) > 1e-10:
                        raise ValueError(f"effects {i},{j} are not orthogonal")
        self.effects = [0.5 * (e + e.conj().T) for e in effects]
        self.kind = kind
        self.label = label
        self.outcome_labels = (
            tuple(outcome_labels) if outcome_labels is not None
            else tuple(range(len(effects)))
        )
        if len(self.outcome_labels) != len(effects):
            raise ValueError("one outcome label per effect required")

    @property
    def dim(self):
        return self.effects[0].shape[0]

    @property
    def n_outcomes(self):
        return len(self.effects)

    def observable(self):
        """Sum of (+1/-1)-weighted effects; defined for two outcomes."""
        if self.n_outcomes != 2:
            raise ValueError("observable form needs a dichotomic measurement")
        return self.effects[0] - self.effects[1]


def pauli_measurement(direction, label=None) -> Measurement:
    """Projective qubit measurement along a unit Bloch direction.

    Outcome +1 carries the effect (1 + n.sigma)/2 and sits at index 0.
    """
    n = np.asarray(direction, dtype=float).ravel()
    if n.shape != (3,):
        raise ValueError("direction must be a 3-vector")
    if abs(np.linalg.norm(n) - 1.0) > 1e-12:
        raise ValueError(f"direction must be a unit vector, |n| = {np.linalg.norm(n):.12g}")
    obs = np.tensordot(n, _PAULI, axes=1)
    plus = 0.5 * (np.eye(2, dtype=complex) + obs)
    minus = 0.5 * (np.eye(2, dtype=complex) - obs)
    if label is None:
        label = "n=({:+.3f},{:+.3f},{:+.3f})".format(*n)
    return Measurement([plus, minus], kind="projective", label=label,
                       outcome_labels=(+1, -1))


def product_measurement(ma: Measurement, mb: Measurement) -> Measurement:
    """Joint measurement Pi_a (x) Pi_b with outcome index a * n_b + b."""
    effects = [np.kron(ea, eb) for ea in ma.effects for eb in mb.effects]
    labels = [(la, lb) for la in ma.outcome_labels for lb in mb.outcome_labels]
    kind = "projective" if ma.kind == mb.kind == "projective" else "povm"
    label = f"{ma.label}(x){mb.label}" if ma.label or mb.label else ""
    return Measurement(effects, kind=kind, label=label, outcome_labels=labels)


def werner_state(V) -> DensityMatrix:
    """V |Phi+><Phi+| + (1-V) 1/4 on two qubits."""
    V = float(V)
    if not 0.0 <= V <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {V:g}")
    phi = np.zeros(4, dtype=complex)
    phi[0] = phi[3] = 1.0 / np.sqrt(2.0)
    return DensityMatrix(V * np.outer(phi, phi.conj()) + (1.0 - V) * np.eye(4) / 4.0)


def partial_trace(matrix, dims, keep):
    """Trace out one subsystem of a bipartite operator.

    ``dims = (dA, dB)``; ``keep`` is 0 for Alice's side, 1 for Bob's.
    """
    dA, dB = dims
    m = np.asarray(matrix).reshape(dA, dB, dA, dB)
    if keep == 0:
        return np.einsum("ibjb->ij", m)
    if keep == 1:
        return np.einsum("aiaj->ij", m)
    raise ValueError("keep must be 0 or 1")


def born_statistics(state: DensityMatrix, alice, bob) -> np.ndarray:
    """Outcome table p[a, b, x, y] = tr(rho Pi_a^x (x) Pi_b^y)."""
    if not alice or not bob:
        raise ValueError("need at least one measurement per party")
    dA = alice[0].dim
    dB = bob[0].dim
    if any(m.dim != dA for m in alice) or any(m.dim != dB for m in bob):
        raise ValueError("mixed dimensions within a party's measurement list")
    if state.dim != dA * dB:
        raise ValueError(
            f"state dimension {state.dim} != {dA}*{dB} for the given measurements"
        )
    nA = alice[0].n_outcomes
    nB = bob[0].n_outcomes
    if any(m.n_outcomes != nA for m in alice) or any(m.n_outcomes != nB for m in bob):
        raise ValueError("outcome counts must match within each party")
    table = np.empty((nA, nB, len(alice), len(bob)))
    for x, mx in enumerate(alice):
        for y, my in enumerate(bob):
            for a, ea in enumerate(mx.effects):
                for b, eb in enumerate(my.effects):
                    table[a, b, x, y] = float(
                        np.trace(state.matrix @ np.kron(ea, eb)).real
                    )
    return table


def correlator(stats, x, y):
    """<A_x B_y> from a dichotomic table (1-based setting indices)."""
    p = stats[:, :, x - 1, y - 1]
    return float(p[0, 0] + p[1, 1] - p[0, 1] - p[1, 0])


@dataclass(frozen=True)
class BellFunctional:
    """Linear combination of correlators sum c_xy <A_x B_y> with 1-based keys."""

    coefficients: dict
    classical_bound: float

    def __post_init__(self):
        for (x, y), c in self.coefficients.items():
            if x < 1 or y < 1:
                raise ValueError("setting indices are 1-based")
            if not np.isfinite(c):
                raise ValueError(f"non-finite coefficient at {(x, y)}")
        if not np.isfinite(self.classical_bound):
            raise ValueError("non-finite classical bound")

    @property
    def n_alice(self):
        return max(x for x, _ in self.coefficients)

    @property
    def n_bob(self):
        return max(y for _, y in self.coefficients)


def chsh() -> BellFunctional:
    """<A1 B1> + <A1 B2> + <A2 B1> - <A2 B2> <= 2."""
    return BellFunctional(
        {(1, 1): 1.0, (1, 2): 1.0, (2, 1): 1.0, (2, 2): -1.0}, classical_bound=2.0
    )


def chsh3() -> BellFunctional:
    """CHSH plus <A1 B3> for a third Bob setting, bounded by 3 classically."""
    f = chsh().coefficients | {(1, 3): 1.0}
    return BellFunctional(f, classical_bound=3.0)


def evaluate_functional(f: BellFunctional, stats) -> float:
    """Linear evaluation of a functional on a statistics table."""
    _, _, mA, mB = stats.shape
    value = 0.0
    for (x, y), c in f.coefficients.items():
        if x > mA or y > mB:
            raise ValueError(f"functional touches setting {(x, y)} missing from the table")
        value += c * correlator(stats, x, y)
    return value


def min_entropy(G) -> float:
    """Bits extractable against the guessing probability G: -log2 G."""
    G = float(G)
    if G <= 0.0 or G > 1.0 + 1e-9:
        raise ValueError(f"guessing probability must lie in (0, 1], got {G:g}")
    return float(-np.log2(min(G, 1.0)))


@dataclass
class Scenario:
    """Observed data plus the level of trust placed in the devices.

    ``observed_statistics`` is [a, b, x, y] for two parties or [c, z] for
    one.  ``known_side`` optionally carries Bob's actual measurement
    operators (the one-sided scenario).
    """

    parties: int
    observed_statistics: np.ndarray
    characterization: str
    known_side: list | None = None

    def __post_init__(self):
        if self.parties not in (1, 2):
            raise ValueError("parties must be 1 or 2")
        if self.characterization not in ("tomographic", "one_sided", "device_independent"):
            raise ValueError(f"unknown characterization {self.characterization!r}")
        p = np.asarray(self.observed_statistics, dtype=float)
        self.observed_statistics = p
        if self.parties == 1:
            if p.ndim != 2:
                raise ValueError("one-party table must be [c, z]")
            if np.min(p) < -1e-9:
                raise ValueError("negative probabilities")
            if np.max(np.abs(p.sum(axis=0) - 1.0)) > 1e-9:
                raise ValueError("outcome distributions must sum to 1")
            return
        if p.ndim != 4:
            raise ValueError("two-party table must be [a, b, x, y]")
        if np.min(p) < -1e-9:
            raise ValueError("negative probabilities")
        if np.max(np.abs(p.sum(axis=(0, 1)) - 1.0)) > 1e-9:
            raise ValueError("outcome distributions must sum to 1")
        pa = p.sum(axis=1)  # [a, x, y]
        if np.max(np.abs(pa - pa.mean(axis=2, keepdims=True))) > 1e-9:
            raise ValueError("table signals from Bob to Alice")
        pb = p.sum(axis=0)  # [b, x, y]
        if np.max(np.abs(pb - pb.mean(axis=1, keepdims=True))) > 1e-9:
            raise ValueError("table signals from Alice to Bob")

    @property
    def n_alice_settings(self):
        return self.observed_statistics.shape[2] if self.parties == 2 else 1

    @property
    def n_bob_settings(self):
        return self.observed_statistics.shape[3] if self.parties == 2 else 0


def werner_settings():
    """The fixed comparison settings: Alice (sigma_x, sigma_z); Bob
    (sigma_x, sigma_z, sigma_+, sigma_-) with sigma_pm = (sigma_x +- sigma_z)/sqrt(2)."""
    ex = np.array([1.0, 0.0, 0.0])
    ez = np.array([0.0, 0.0, 1.0])
    s2 = 1.0 / np.sqrt(2.0)
    alice = [pauli_measurement(ex, "A1=sx"), pauli_measurement(ez, "A2=sz")]
    bob = [
        pauli_measurement(ex, "B1=sx"),
        pauli_measurement(ez, "B2=sz"),
        pauli_measurement(s2 * (ex + ez), "B3=s+"),
        pauli_measurement(s2 * (ex - ez), "B4=s-"),
    ]
    return alice, bob
