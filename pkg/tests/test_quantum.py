"""State/measurement/functional construction and Born-rule evaluation."""

import numpy as np
import pytest

from qrandcert.quantum import (
    BellFunctional,
    DensityMatrix,
    Measurement,
    Scenario,
    born_statistics,
    chsh,
    chsh3,
    correlator,
    evaluate_functional,
    min_entropy,
    partial_trace,
    pauli_measurement,
    werner_settings,
    werner_state,
)

EX = np.array([1.0, 0.0, 0.0])
EZ = np.array([0.0, 0.0, 1.0])
S2 = 1.0 / np.sqrt(2.0)


def chsh_settings():
    alice = [pauli_measurement(EX), pauli_measurement(EZ)]
    bob = [pauli_measurement(S2 * (EX + EZ)), pauli_measurement(S2 * (EX - EZ))]
    return alice, bob


def test_werner_endpoints():
    phi = np.zeros(4)
    phi[0] = phi[3] = S2
    assert np.allclose(werner_state(1.0).matrix, np.outer(phi, phi), atol=1e-14)
    assert np.allclose(werner_state(0.0).matrix, np.eye(4) / 4, atol=1e-14)
    with pytest.raises(ValueError):
        werner_state(1.2)
    with pytest.raises(ValueError):
        werner_state(-0.1)


def test_werner_spectrum_at_critical_visibility():
    w = werner_state(S2)
    eig = np.sort(w.eigenvalues())
    assert np.allclose(eig[:3], 0.0732233, atol=1e-6)
    assert abs(eig[3] - 0.7803301) < 1e-6


def test_pauli_measurement_axes():
    mz = pauli_measurement(EZ)
    assert np.allclose(mz.effects[0], np.diag([1.0, 0.0]), atol=1e-14)
    assert np.allclose(mz.effects[1], np.diag([0.0, 1.0]), atol=1e-14)
    mx = pauli_measurement(EX)
    plus = 0.5 * np.ones((2, 2))
    assert np.allclose(mx.effects[0], plus, atol=1e-14)
    mp = pauli_measurement(S2 * (EX + EZ))
    obs = mp.effects[0] - mp.effects[1]
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    assert np.allclose(obs, S2 * (sx + sz), atol=1e-14)
    with pytest.raises(ValueError):
        pauli_measurement([1.0, 1.0, 0.0])


def test_measurement_validation():
    p0 = np.diag([1.0, 0.0])
    with pytest.raises(ValueError):
        Measurement([p0, p0])  # sums to diag(2, 0)
    with pytest.raises(ValueError):
        Measurement([np.array([[0.5, 0.5], [0.5, 0.5]]), np.diag([0.5, 0.5])],
                    kind="projective")  # not projectors
    povm = Measurement([0.5 * np.eye(2), 0.5 * np.eye(2)])
    assert povm.n_outcomes == 2 and povm.kind == "povm"


def test_born_statistics_perfect_z_correlation():
    mz = pauli_measurement(EZ)
    p = born_statistics(werner_state(1.0), [mz], [mz])
    assert abs(p[0, 0, 0, 0] - 0.5) < 1e-12
    assert abs(p[1, 1, 0, 0] - 0.5) < 1e-12
    assert abs(p[0, 1, 0, 0]) < 1e-12 and abs(p[1, 0, 0, 0]) < 1e-12


def test_born_statistics_correlator_scales_with_visibility():
    mx = pauli_measurement(EX)
    for V in (0.0, 0.3, 0.7071, 1.0):
        p = born_statistics(werner_state(V), [mx], [mx])
        assert abs(correlator(p, 1, 1) - V) < 1e-12


def test_born_statistics_complementary_bases_uniform():
    p = born_statistics(werner_state(1.0), [pauli_measurement(EZ)], [pauli_measurement(EX)])
    assert np.allclose(p[:, :, 0, 0], 0.25, atol=1e-12)


def test_born_statistics_reduced_state_marginal():
    rng = np.random.default_rng(5)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    rho = DensityMatrix(rho / np.trace(rho).real)
    alice = [pauli_measurement(EX), pauli_measurement(EZ)]
    bob = [pauli_measurement(EZ)]
    p = born_statistics(rho, alice, bob)
    rho_a = DensityMatrix(partial_trace(rho.matrix, (2, 2), 0))
    for x, m in enumerate(alice):
        marg = p[:, :, x, 0].sum(axis=1)
        direct = [float(np.trace(rho_a.matrix @ e).real) for e in m.effects]
        assert np.allclose(marg, direct, atol=1e-12)


def test_chsh_values_on_werner():
    alice, bob = chsh_settings()
    f = chsh()
    for V in (1.0, S2, 0.4):
        stats = born_statistics(werner_state(V), alice, bob)
        assert abs(evaluate_functional(f, stats) - 2.0 * np.sqrt(2.0) * V) < 1e-12
    # violation strictly above V = 1/sqrt(2), none below
    lo = evaluate_functional(f, born_statistics(werner_state(S2 - 1e-3), alice, bob))
    hi = evaluate_functional(f, born_statistics(werner_state(S2 + 1e-3), alice, bob))
    assert lo < 2.0 < hi


def test_chsh3_value_on_werner():
    alice, bob = chsh_settings()
    bob3 = bob + [pauli_measurement(EX)]
    stats = born_statistics(werner_state(1.0), alice, bob3)
    assert abs(evaluate_functional(chsh3(), stats) - (2.0 * np.sqrt(2.0) + 1.0)) < 1e-12
    assert chsh3().classical_bound == 3.0


def test_functional_missing_setting_rejected():
    alice, bob = chsh_settings()
    stats = born_statistics(werner_state(1.0), alice, bob)
    with pytest.raises(ValueError):
        evaluate_functional(chsh3(), stats)
    with pytest.raises(ValueError):
        BellFunctional({(0, 1): 1.0}, 2.0)


def test_min_entropy_values():
    assert min_entropy(1.0) == 0.0
    assert abs(min_entropy(0.25) - 2.0) < 1e-12
    g2 = (1.0 + S2) / 2.0
    assert abs(min_entropy(g2) - 0.2284467) < 1e-6
    with pytest.raises(ValueError):
        min_entropy(0.0)
    with pytest.raises(ValueError):
        min_entropy(1.1)


def test_scenario_validation_catches_signaling():
    alice, bob = werner_settings()
    p = born_statistics(werner_state(0.8), alice, bob)
    Scenario(2, p, "device_independent")  # fine
    bad = p.copy()
    bad[0, 0, 0, 0] += 0.05
    bad[1, 0, 0, 0] -= 0.05
    with pytest.raises(ValueError):
        Scenario(2, bad, "device_independent")
    with pytest.raises(ValueError):
        Scenario(2, p, "telepathic")


def test_one_party_scenario():
    p = np.array([[0.5, 1.0], [0.5, 0.0]])
    s = Scenario(1, p, "tomographic")
    assert s.n_alice_settings == 1
    with pytest.raises(ValueError):
        Scenario(1, np.array([[0.5, 0.2], [0.4, 0.2]]), "tomographic")


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([0.5, 0.6]))
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 0.5], [-0.5, 0.5]]))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5]))
    sub = DensityMatrix(np.diag([0.3, 0.2]), subnormalized=True)
    assert sub.subnormalized
