import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import sqrtm
from scipy.stats import unitary_group

from confpoly.errors import DimensionMismatch, DomainError
from confpoly.fom import (
    FomSpec, fidelity, fom_interval, log_likelihood, mle_estimate, negativity,
    partial_transpose, trace_distance,
)
from confpoly.geometry import SamplerOptions
from confpoly.polytope import build_polytope
from confpoly.quantum import is_psd
from confpoly.simulation import (
    axis_povm, bell_state, mixed_state, noisy_bell, pure_state, sample_counts, sic_qubit,
    standard_povm, tensor_povm,
)

from conftest import random_density


def ket_proj(v):
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def test_fidelity_examples(rng):
    rho = random_density(3, rng)
    assert fidelity(rho, rho) == pytest.approx(1, abs=1e-9)
    assert fidelity(ket_proj([1, 0]), ket_proj([1, 1])) == pytest.approx(0.5, abs=1e-12)
    assert fidelity(mixed_state(4), bell_state()) == pytest.approx(0.25, abs=1e-12)
    with pytest.raises(DimensionMismatch):
        fidelity(mixed_state(2), mixed_state(3))


def _uhlmann_sqrtm(rho, sigma):
    s = sqrtm(rho)
    return np.trace(sqrtm(s @ sigma @ s)).real ** 2


def test_fidelity_matches_sqrtm_oracle(rng):
    rho, sigma = random_density(3, rng), random_density(3, rng)
    assert fidelity(rho, sigma) == pytest.approx(_uhlmann_sqrtm(rho, sigma), abs=1e-8)
    psi = ket_proj(rng.standard_normal(3) + 1j * rng.standard_normal(3))
    assert fidelity(rho, psi) == pytest.approx(_uhlmann_sqrtm(rho, psi), abs=1e-6)


def test_fidelity_symmetric(rng):
    a, b = random_density(4, rng), random_density(4, rng)
    assert fidelity(a, b) == pytest.approx(fidelity(b, a), abs=1e-10)


def test_trace_distance_examples(rng):
    rho = random_density(2, rng)
    assert trace_distance(rho, rho) == pytest.approx(0, abs=1e-12)
    assert trace_distance(ket_proj([1, 0]), ket_proj([0, 1])) == pytest.approx(1, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(1, 4))
def test_fuchs_van_de_graaf(seed, d, rank):
    rng = np.random.default_rng(seed)
    a, b = random_density(d, rng, min(rank, d)), random_density(d, rng)
    f, t = fidelity(a, b), trace_distance(a, b)
    assert 1 - np.sqrt(f) - 1e-10 <= t <= np.sqrt(1 - f) + 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_trace_distance_triangle(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_density(3, rng) for _ in range(3))
    assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-10


def _pt_bruteforce(rho, da, db):
    out = np.zeros_like(rho)
    for i in range(da):
        for j in range(db):
            for k in range(da):
                for l in range(db):
                    out[i * db + j, k * db + l] = rho[i * db + l, k * db + j]
    return out


def test_negativity_bell_and_products(rng):
    assert negativity(bell_state(), (2, 2)) == pytest.approx(0.5, abs=1e-12)
    prod = np.kron(random_density(2, rng), random_density(3, rng))
    assert negativity(prod, (2, 3)) == pytest.approx(0, abs=1e-12)


def test_negativity_depolarised_bell_oracle():
    rho = noisy_bell(0.5)
    w = np.linalg.eigvalsh(_pt_bruteforce(rho, 2, 2))
    expected = (np.abs(w).sum() - 1) / 2
    assert expected == pytest.approx(0.125, abs=1e-12)
    assert negativity(rho, (2, 2)) == pytest.approx(expected, abs=1e-12)


def test_partial_transpose_matches_loops(rng):
    rho = random_density(6, rng)
    np.testing.assert_allclose(partial_transpose(rho, (2, 3), 1), _pt_bruteforce(rho, 2, 3),
                               atol=1e-15)


def test_negativity_local_unitary_invariance(rng):
    rho = random_density(4, rng)
    u = np.kron(unitary_group.rvs(2, random_state=1), unitary_group.rvs(2, random_state=2))
    assert negativity(u @ rho @ u.conj().T, (2, 2)) == pytest.approx(negativity(rho, (2, 2)),
                                                                     abs=1e-10)


def test_negativity_bad_dims(rng):
    with pytest.raises(DimensionMismatch):
        negativity(random_density(4, rng), (2, 3))
    with pytest.raises(DimensionMismatch):
        negativity(random_density(4, rng), (2, 2), cut=2)


def test_mle_uniform_sic():
    res = mle_estimate(sic_qubit(), [250, 250, 250, 250])
    np.testing.assert_allclose(res.state, np.eye(2) / 2, atol=1e-8)


def test_mle_monotone_and_stationary():
    povm = standard_povm("sic*sic")
    counts = sample_counts(noisy_bell(0.1), povm, 5000, 3)
    res = mle_estimate(povm, counts, history=True)
    assert np.all(np.diff(res.history) >= -1e-12)
    assert res.converged
    freqs = counts / counts.sum()
    p = povm.probabilities(res.state)
    R = np.tensordot(freqs / p, povm.elements, axes=1)
    np.testing.assert_allclose(R @ res.state @ R, res.state, atol=1e-6)


def test_mle_iterates_are_states():
    povm = sic_qubit()
    counts = np.array([400, 5, 0, 95])
    for iters in (1, 3, 10, 50):
        rho = mle_estimate(povm, counts, max_iter=iters).state
        assert is_psd(rho)
        assert np.trace(rho).real == pytest.approx(1, abs=1e-12)


def test_mle_boundary_data_does_not_decrease_likelihood():
    povm = sic_qubit()
    counts = np.array([0, 0, 0, 100])
    res = mle_estimate(povm, counts, history=True)
    assert np.all(np.diff(res.history) >= -1e-12)
    assert res.log_likelihood >= log_likelihood(np.eye(2) / 2, povm, counts)


def test_mle_warns_for_incomplete_povm():
    with pytest.warns(UserWarning):
        mle_estimate(axis_povm("z"), [30, 70])


def test_fom_spec_validation():
    with pytest.raises(DomainError):
        FomSpec("purity", mixed_state(2))
    with pytest.raises(DomainError):
        FomSpec("negativity")
    with pytest.raises(DomainError):
        FomSpec("fidelity")


def test_fom_interval_pinned_region():
    povm = standard_povm("mub")
    rho = pure_state([1, 0])
    # huge n on a MUB box around the mixed state: every sample is almost the same state
    poly = build_polytope(povm, [10**9] * 6, 0.001)
    res = fom_interval(poly, FomSpec("fidelity", rho), count=200, seed=1,
                       opts=SamplerOptions(burn_in=50, thinning=1))
    assert res.lower <= res.upper
    assert res.lower == pytest.approx(0.5, abs=1e-3) and res.upper == pytest.approx(0.5, abs=1e-3)
    assert res.sample_count == 200 and res.seed == 1


def test_fom_interval_attained_by_samples():
    povm = sic_qubit()
    poly = build_polytope(povm, [30, 20, 25, 25], 0.01)
    from confpoly.geometry import hit_and_run_sample
    samples = hit_and_run_sample(poly, 300, 4, SamplerOptions(burn_in=50, thinning=2))
    spec = FomSpec("trace_distance", mixed_state(2))
    res = fom_interval(poly, spec, samples=samples)
    assert res.lower == pytest.approx(spec.evaluate(samples.states[res.argmin]))
    assert res.upper == pytest.approx(spec.evaluate(samples.states[res.argmax]))


@pytest.fixture(scope="module")
def noisy_bell_region():
    povm = tensor_povm(sic_qubit(), sic_qubit())
    rho = noisy_bell(0.2)
    counts = sample_counts(rho, povm, 10_000, 2024)
    return rho, build_polytope(povm, counts, 0.001)


def test_fidelity_interval_noisy_bell(noisy_bell_region):
    rho, poly = noisy_bell_region
    spec = FomSpec("fidelity", bell_state())
    res = fom_interval(poly, spec, count=10_000, seed=11)
    truth = fidelity(rho, bell_state())
    assert truth == pytest.approx(0.85, abs=1e-12)
    assert 0.0 < res.lower <= truth <= res.upper < 1.0
    again = fom_interval(poly, spec, count=10_000, seed=12)
    assert again.lower <= truth <= again.upper


def test_resampling_stability():
    povm = sic_qubit()
    poly = build_polytope(povm, sample_counts(pure_state([1, 1j]) * 0.8 + mixed_state(2) * 0.2,
                                              povm, 2000, 8), 0.001)
    spec = FomSpec("fidelity", pure_state([1, 1j]))
    a = fom_interval(poly, spec, count=10_000, seed=21)
    b = fom_interval(poly, spec, count=10_000, seed=22)
    assert abs(a.upper - b.upper) <= 0.01
    assert abs(a.lower - b.lower) <= 0.01
