import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_state
from pulseqml.core import DensityMatrix, GateMatrix, StateVector, apply_unitary, gate_matrix, make_rng
from pulseqml.model import Model
from pulseqml.state_metrics import (
    EntanglementConfig,
    ExpressibilityConfig,
    bell_measurement_batch,
    bell_measurement_entanglement,
    concentratable,
    entangling_capability,
    entanglement_of_formation,
    expressibility_kl,
    fidelity_histogram,
    haar_bin_probabilities,
    kl_divergence,
    meyer_wallach,
    meyer_wallach_batch,
    pair_fidelities,
)

seeds = st.integers(0, 2**31 - 1)

BELL = StateVector(2, np.array([1, 0, 0, 1]) / np.sqrt(2))
GHZ3 = StateVector(3, np.eye(8)[0] / np.sqrt(2) + np.eye(8)[7] / np.sqrt(2))
W3 = StateVector(3, (np.eye(8)[1] + np.eye(8)[2] + np.eye(8)[4]) / np.sqrt(3))


def _mw_oracle(psi: np.ndarray, n: int) -> float:
    # explicit reduced densities from the full projector
    rho = np.outer(psi, psi.conj()).reshape((2,) * (2 * n))
    total = 0.0
    for k in range(n):
        axes = [i for i in range(n) if i != k]
        red = np.trace(np.moveaxis(rho, axes + [n + i for i in axes], list(range(2 * len(axes)))).reshape(2 ** len(axes), 2 ** len(axes), 2, 2), axis1=0, axis2=1)
        total += np.trace(red @ red).real
    return 2 * (1 - total / n)


def test_gold_values():
    assert meyer_wallach(BELL) == pytest.approx(1.0, abs=1e-9)
    assert meyer_wallach(StateVector(2, [0, 1, 0, 0])) == pytest.approx(0.0, abs=1e-9)
    assert meyer_wallach(W3) == pytest.approx(8 / 9, abs=1e-9)
    assert concentratable(BELL) == pytest.approx(0.25, abs=1e-9)
    assert concentratable(GHZ3) == pytest.approx(0.375, abs=1e-9)
    assert entanglement_of_formation(DensityMatrix(2, np.eye(4) / 4)) == pytest.approx(0.0, abs=1e-9)


@given(seeds, st.integers(2, 5))
def test_meyer_wallach_matches_oracle(seed, n):
    psi = random_state(np.random.default_rng(seed), n)
    assert meyer_wallach_batch(psi[None], n)[0] == pytest.approx(_mw_oracle(psi, n), abs=1e-12)


@given(seeds, st.integers(2, 4))
def test_bell_measurement_equals_mw_on_pure_states(seed, n):
    psi = random_state(np.random.default_rng(seed), n)
    assert bell_measurement_batch(psi[None], n)[0] == pytest.approx(meyer_wallach_batch(psi[None], n)[0], abs=1e-10)


def test_bell_measurement_dense_path_matches_pure_path():
    rng = np.random.default_rng(0)
    psi = np.stack([random_state(rng, 3) for _ in range(5)])
    rho = np.einsum("bi,bj->bij", psi, psi.conj())
    assert np.allclose(bell_measurement_batch(rho, 3, dense=True), bell_measurement_batch(psi, 3), atol=1e-12)


def test_bell_measurement_shots_converge():
    est = bell_measurement_entanglement(BELL, shots=20000, rng=make_rng(0, "bm"))
    assert est == pytest.approx(1.0, abs=0.05)
    with pytest.raises(ValueError):
        bell_measurement_entanglement(BELL, exact=False)


@given(seeds, st.integers(2, 4))
def test_ef_of_pure_projector_is_mw(seed, n):
    s = StateVector(n, random_state(np.random.default_rng(seed), n))
    assert entanglement_of_formation(s.to_density()) == pytest.approx(meyer_wallach(s), abs=1e-10)


def test_ef_of_mixture_is_upper_bound_combination():
    rho = 0.5 * BELL.to_density().matrix + 0.5 * np.diag([0, 1, 0, 0])
    assert entanglement_of_formation(DensityMatrix(2, rho)) == pytest.approx(0.5, abs=1e-10)
    with pytest.raises(ValueError):
        entanglement_of_formation(DensityMatrix(1, np.eye(2) / 2))


@pytest.mark.parametrize("seed", range(20))
def test_concentratable_invariant_under_local_unitaries(seed):
    rng = np.random.default_rng(seed)
    s = StateVector(3, random_state(rng, 3))
    before = concentratable(s)
    for q in range(3):
        for name in ("RZ", "RY", "RZ"):
            s = apply_unitary(s, GateMatrix((q,), gate_matrix(name, rng.uniform(0, 2 * np.pi))))
    assert concentratable(s) == pytest.approx(before, abs=1e-9)


def test_concentratable_subsets_and_shots():
    assert concentratable(GHZ3, subset=[0]) == pytest.approx(0.25, abs=1e-12)
    assert concentratable(StateVector.zero(3)) == pytest.approx(0.0, abs=1e-12)
    est = concentratable(GHZ3, shots=20000, rng=make_rng(1, "ce"))
    assert est == pytest.approx(0.375, abs=0.03)
    dense = concentratable(GHZ3.to_density())
    assert dense == pytest.approx(0.375, abs=1e-12)
    with pytest.raises(ValueError):
        concentratable(GHZ3, subset=[5])
    with pytest.raises(ValueError):
        concentratable(GHZ3, subset=[])


def test_haar_bins_sum_to_one_and_single_qubit_is_uniform():
    for n in (1, 2, 4):
        assert haar_bin_probabilities(n, 75).sum() == pytest.approx(1.0)
    assert np.allclose(haar_bin_probabilities(1, 10), 0.1)


def test_haar_bins_match_monte_carlo():
    rng = make_rng(3, "haar")
    a = rng.normal(size=(40000, 4)) + 1j * rng.normal(size=(40000, 4))
    b = rng.normal(size=(40000, 4)) + 1j * rng.normal(size=(40000, 4))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    fid = np.abs(np.einsum("bi,bi->b", a.conj(), b)) ** 2
    assert np.allclose(fidelity_histogram(fid, 10), haar_bin_probabilities(2, 10), atol=0.01)


def test_histogram_includes_unit_fidelity_in_the_last_bin():
    h = fidelity_histogram(np.ones(5), 75)
    assert h[-1] == 1.0


def test_kl_divergence_basics():
    p = np.array([0.5, 0.5, 0.0])
    assert kl_divergence(p, p + [0, 0, 0.1]) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        kl_divergence([1.0, 0.0], [0.0, 1.0])


def test_idle_circuit_kl_is_log_bins():
    m = Model(1, 1, "IDLE")
    assert expressibility_kl(m, ExpressibilityConfig(200, 75)) == pytest.approx(np.log(75), abs=1e-12)


def test_expressibility_is_seeded():
    m = Model(2, 1, "HEA")
    cfg = ExpressibilityConfig(500, 75, seed=5)
    assert np.array_equal(pair_fidelities(m, cfg), pair_fidelities(m, cfg))
    assert expressibility_kl(m, cfg) != expressibility_kl(m, ExpressibilityConfig(500, 75, seed=6))


def test_config_validation():
    with pytest.raises(ValueError):
        EntanglementConfig("xx")
    with pytest.raises(ValueError):
        EntanglementConfig("mw", noise_p=0.01)
    with pytest.raises(ValueError):
        EntanglementConfig("ef", shots=10)
    with pytest.raises(ValueError):
        ExpressibilityConfig(0)


def test_entangling_capability_of_product_ansatz_is_zero():
    mean, std, vals = entangling_capability(Model(3, 1, "NEA"), EntanglementConfig("mw", 50))
    assert mean == pytest.approx(0.0, abs=1e-12) and len(vals) == 50


def test_entangling_capability_shares_parameter_draws_across_measures():
    m = Model(3, 1, "HEA")
    mw = entangling_capability(m, EntanglementConfig("mw", 30, seed=2))[2]
    bm = entangling_capability(m, EntanglementConfig("bm", 30, seed=2))[2]
    ef = entangling_capability(m, EntanglementConfig("ef", 30, seed=2))[2]
    assert np.allclose(mw, bm, atol=1e-10)
    assert np.allclose(mw, ef, atol=1e-10)


def test_entangling_capability_chunking_is_invisible():
    m = Model(3, 1, "SEA")
    cfg = EntanglementConfig("ce", 40, noise_p=0.01, seed=1)
    a = entangling_capability(m, cfg, chunk=7)
    b = entangling_capability(m, cfg, chunk=256)
    assert np.allclose(a[2], b[2], atol=1e-14)
