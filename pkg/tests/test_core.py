import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rydlink.core import (
    CollapseOperator,
    DensityMatrix,
    DimensionMismatchError,
    HermitianOperator,
    NonConvergenceError,
    NotHermitianError,
    StateVector,
    evolve_unitary,
    expectation,
    lindblad_evolve,
)


def random_hermitian(rng, dim, scale=1.0):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return HermitianOperator(scale * (m + m.conj().T) / 2.0)


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(v / np.linalg.norm(v))


class TestStateVector:
    def test_freezes_amplitudes(self):
        s = 1.0 / np.sqrt(2.0)
        psi = StateVector([s, s])
        assert np.allclose(np.abs(psi.amplitudes) ** 2, 0.5)
        with pytest.raises(ValueError):
            psi.amplitudes[0] = 0.0

    def test_rejects_far_from_normalized(self):
        with pytest.raises(ValueError):
            StateVector([2.0, 0.0])

    def test_fidelity_ignores_global_phase(self):
        psi = StateVector([0.6, 0.8])
        phi = StateVector(np.exp(1j * 1.3) * psi.amplitudes)
        assert psi.fidelity(phi) == pytest.approx(1.0, abs=1e-12)

    def test_basis_and_density_matrix(self):
        psi = StateVector.basis(3, 1)
        rho = psi.to_density_matrix()
        assert rho.population(1) == pytest.approx(1.0)
        assert rho.population(0) == pytest.approx(0.0)


class TestDensityMatrix:
    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitianError):
            DensityMatrix([[0.5, 1.0], [0.0, 0.5]])

    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.eye(2))

    def test_rejects_negative_eigenvalue(self):
        m = np.array([[1.5, 0.0], [0.0, -0.5]])
        with pytest.raises(ValueError):
            DensityMatrix(m)


class TestUnitaryEvolution:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.0, 10.0))
    def test_norm_preserved(self, seed, t):
        rng = np.random.default_rng(seed)
        H = random_hermitian(rng, 4)
        psi = random_state(rng, 4)
        out = evolve_unitary(H, psi, t)
        assert np.linalg.norm(out.amplitudes) == pytest.approx(1.0, abs=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_composition(self, seed):
        # U(t1+t2) = U(t2) U(t1) for time-independent H
        rng = np.random.default_rng(seed)
        H = random_hermitian(rng, 3)
        psi = random_state(rng, 3)
        a = evolve_unitary(H, psi, 0.7)
        b = evolve_unitary(H, a, 1.1)
        c = evolve_unitary(H, psi, 1.8)
        assert b.fidelity(c) == pytest.approx(1.0, abs=1e-10)

    def test_two_level_rabi(self):
        omega = 2.0 * np.pi * 1e6
        H = HermitianOperator(np.array([[0.0, omega / 2.0], [omega / 2.0, 0.0]]))
        psi = StateVector.basis(2, 0)
        t = np.pi / omega  # pi pulse
        out = evolve_unitary(H, psi, t)
        assert abs(out.amplitudes[1]) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_dimension_mismatch(self):
        H = HermitianOperator(np.zeros((3, 3)))
        with pytest.raises(DimensionMismatchError):
            evolve_unitary(H, StateVector.basis(2, 0), 1.0)


class TestLindblad:
    def test_pure_decay_rate(self):
        # single collapse sqrt(gamma)|0><1| empties the excited state as e^{-gamma t}
        gamma = 3.0e5
        L = np.zeros((2, 2))
        L[0, 1] = np.sqrt(gamma)
        t_grid = np.linspace(0.0, 5.0 / gamma, 6)
        rhos = lindblad_evolve(
            DensityMatrix.pure([0.0, 1.0]),
            HermitianOperator(np.zeros((2, 2))),
            [CollapseOperator(L)],
            t_grid,
        )
        for t, rho in zip(t_grid, rhos):
            assert rho.population(1) == pytest.approx(np.exp(-gamma * t), abs=1e-6)

    def test_trace_and_positivity_preserved(self):
        rng = np.random.default_rng(5)
        H = random_hermitian(rng, 3, scale=1e6)
        L = CollapseOperator(np.sqrt(2e5) * rng.normal(size=(3, 3)))
        rhos = lindblad_evolve(
            DensityMatrix.pure([1.0, 0.0, 0.0]), H, [L], np.linspace(0.0, 5e-6, 4)
        )
        for rho in rhos:
            # DensityMatrix construction re-checks trace/positivity
            assert np.trace(rho.entries).real == pytest.approx(1.0, abs=1e-7)

    def test_unitary_limit_matches_eigendecomposition(self):
        rng = np.random.default_rng(11)
        H = random_hermitian(rng, 2, scale=1e6)
        psi = random_state(rng, 2)
        t = 2.3e-6
        rhos = lindblad_evolve(psi.to_density_matrix(), H, [], [0.0, t])
        ref = evolve_unitary(H, psi, t).to_density_matrix()
        assert np.max(np.abs(rhos[-1].entries - ref.entries)) < 1e-7

    def test_nonconvergence_raises(self):
        # zero refinement budget with accumulated phase error above the
        # tolerance must fail loudly, not silently return
        H = HermitianOperator(np.diag([0.0, 2.0 * np.pi * 1e9]))
        s = 1.0 / np.sqrt(2.0)
        with pytest.raises(NonConvergenceError):
            lindblad_evolve(
                DensityMatrix.pure([s, s]),
                H,
                [],
                [0.0, 0.3e-6],
                max_refinements=0,
            )

    def test_grid_validation(self):
        rho = DensityMatrix.pure([1.0, 0.0])
        H = HermitianOperator(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            lindblad_evolve(rho, H, [], [1.0, 2.0])  # must start at 0
        with pytest.raises(ValueError):
            lindblad_evolve(rho, H, [], [0.0, 2.0, 1.0])


class TestExpectation:
    def test_population_operator(self):
        rho = DensityMatrix.pure([0.6, 0.8])
        P1 = HermitianOperator(np.diag([0.0, 1.0]))
        assert expectation(P1, rho) == pytest.approx(0.64)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            expectation(HermitianOperator(np.eye(3)), DensityMatrix.pure([1.0, 0.0]))
