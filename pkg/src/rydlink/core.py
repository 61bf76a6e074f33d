"""Dense complex linear algebra and time evolution for small Hilbert spaces.

Everything here targets dimensions of a few tens at most, so exact
eigendecomposition is used for unitary evolution and a fixed-step RK4
integrator (with a step-halving convergence check) for Lindblad dynamics.
All frequencies are angular (rad/s), times are seconds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITICITY_TOL = 1e-12
NORM_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-8
CONVERGENCE_TOL = 1e-8

MAX_DIM = 64


class DimensionMismatchError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


class NonConvergenceError(RuntimeError):
    """Raised when halving the integrator step still changes the output."""


def _as_complex_matrix(entries, dim=None):
    m = np.asarray(entries, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise DimensionMismatchError(f"expected dim {dim}, got {m.shape[0]}")
    if m.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {m.shape[0]} exceeds supported maximum {MAX_DIM}")
    if not np.all(np.isfinite(m.view(float))):
        raise ValueError("matrix entries must be finite")
    return m


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state. Amplitudes are copied and frozen."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"state vector norm {norm} is not 1")
        amps = amps / norm
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @classmethod
    def basis(cls, dim: int, index: int) -> "StateVector":
        amps = np.zeros(dim, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    def overlap(self, other: "StateVector") -> complex:
        return np.vdot(self.amplitudes, other.amplitudes)

    def fidelity(self, other: "StateVector") -> float:
        """|<a|b>|^2 -- the global-phase-free comparison."""
        return abs(self.overlap(other)) ** 2

    def to_density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix."""

    entries: np.ndarray

    def __post_init__(self):
        m = _as_complex_matrix(self.entries)
        if np.max(np.abs(m - m.conj().T)) > 1e-9:
            raise NotHermitianError("density matrix is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-8:
            raise ValueError(f"density matrix trace {tr} is not 1")
        evals = np.linalg.eigvalsh(m)
        if evals.min() < -POSITIVITY_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {evals.min()}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def pure(cls, amplitudes) -> "DensityMatrix":
        return StateVector(amplitudes).to_density_matrix()

    def population(self, index: int) -> float:
        return self.entries[index, index].real


@dataclass(frozen=True)
class HermitianOperator:
    """Hamiltonian-like operator; entries in rad/s."""

    entries: np.ndarray

    def __post_init__(self):
        m = _as_complex_matrix(self.entries)
        scale = max(np.max(np.abs(m)), 1.0)
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL * scale:
            raise NotHermitianError("operator is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class CollapseOperator:
    """Jump operator with the sqrt-rate prefactor absorbed into the entries."""

    entries: np.ndarray

    def __post_init__(self):
        m = _as_complex_matrix(self.entries)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def evolve_unitary(H: HermitianOperator, psi: StateVector, t: float) -> StateVector:
    """Apply exp(-iHt) via exact eigendecomposition."""
    if H.dim != psi.dim:
        raise DimensionMismatchError(f"H dim {H.dim} != state dim {psi.dim}")
    if t < 0:
        raise ValueError("t must be >= 0")
    evals, evecs = np.linalg.eigh(H.entries)
    phases = np.exp(-1j * evals * t)
    amps = evecs @ (phases * (evecs.conj().T @ psi.amplitudes))
    return StateVector(amps)


def _lindblad_rhs(rho, H, ops):
    out = -1j * (H @ rho - rho @ H)
    for L, LdL in ops:
        out += L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL)
    return out


def _rk4_run(rho0, H, ops, t_grid, n_sub):
    """Fixed-step RK4 between consecutive grid points, n_sub substeps each."""
    rhos = [rho0]
    rho = rho0
    for t0, t1 in zip(t_grid[:-1], t_grid[1:]):
        dt = (t1 - t0) / n_sub
        for _ in range(n_sub):
            k1 = _lindblad_rhs(rho, H, ops)
            k2 = _lindblad_rhs(rho + 0.5 * dt * k1, H, ops)
            k3 = _lindblad_rhs(rho + 0.5 * dt * k2, H, ops)
            k4 = _lindblad_rhs(rho + dt * k3, H, ops)
            rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        rhos.append(rho)
    return rhos


def lindblad_evolve(
    rho0: DensityMatrix,
    H: HermitianOperator,
    collapse_ops: list[CollapseOperator],
    t_grid,
    max_refinements: int = 8,
) -> list[DensityMatrix]:
    """Integrate the Lindblad master equation on a strictly increasing grid.

    The internal step is halved until a further halving changes no output
    entry by more than CONVERGENCE_TOL; failing that raises
    NonConvergenceError.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 1:
        raise ValueError("t_grid must be a 1-d list of times")
    if t_grid[0] != 0.0:
        raise ValueError("t_grid must start at 0")
    if len(t_grid) > 1 and np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    for L in collapse_ops:
        if L.dim != rho0.dim:
            raise DimensionMismatchError("collapse operator dimension mismatch")
    if H.dim != rho0.dim:
        raise DimensionMismatchError("Hamiltonian dimension mismatch")
    if len(t_grid) == 1:
        return [rho0]

    ops = [(L.entries, L.entries.conj().T @ L.entries) for L in collapse_ops]

    # initial substep count: resolve the fastest scale in H and the rates
    rate = max(np.max(np.abs(H.entries)), max((np.max(np.abs(LdL)) for _, LdL in ops), default=0.0), 1e-300)
    dt_max = np.max(np.diff(t_grid))
    n_sub = max(1, int(np.ceil(dt_max * rate / 0.05)))

    prev = _rk4_run(rho0.entries, H.entries, ops, t_grid, n_sub)
    err = float("inf")
    for _ in range(max_refinements):
        cur = _rk4_run(rho0.entries, H.entries, ops, t_grid, 2 * n_sub)
        err = max(np.max(np.abs(a - b)) for a, b in zip(prev, cur))
        if err < CONVERGENCE_TOL:
            return [DensityMatrix(r) for r in cur]
        prev = cur
        n_sub *= 2
    raise NonConvergenceError(
        f"Lindblad step halving did not converge below {CONVERGENCE_TOL} "
        f"(last change {err:.3e} at {2 * n_sub} substeps)"
    )


def expectation(A: HermitianOperator, rho: DensityMatrix) -> float:
    """tr(A rho), with the (numerically tiny) imaginary residue checked."""
    if A.dim != rho.dim:
        raise DimensionMismatchError(f"operator dim {A.dim} != state dim {rho.dim}")
    val = np.trace(A.entries @ rho.entries)
    if abs(val.imag) > 1e-10:
        raise ValueError(f"expectation has imaginary residue {val.imag}")
    return float(val.real)
