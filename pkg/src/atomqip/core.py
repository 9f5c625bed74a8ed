"""
Dense quantum-dynamics engine shared by every other module.

States and density matrices live on a labelled composite space
(ion qubits, atomic levels, truncated Fock ladders). Hamiltonians are
expressed in angular-frequency units (H/hbar, rad/s) and times in seconds.

Closed-system propagation uses the fourth-order Magnus expansion
(two Gauss-Legendre nodes, one commutator), unitary by construction.
Open-system propagation integrates the Lindblad master equation

    d rho/dt = -i[H, rho] + sum_k rate_k (L rho L^+ - 1/2 {L^+ L, rho})

with classical RK4. Time-independent segments are exponentiated exactly
in both cases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
from scipy import linalg

HERMITIAN_TOL = 1e-12
DEFAULT_FOCK_CUTOFF = 5
BATCH_SIZE = 4096


class PhysicsError(RuntimeError):
    """Base class for simulation failures that are not caller input errors."""


class IntegrationError(PhysicsError):
    """Raised when a propagation drifts (trace, positivity) beyond tolerance."""


class FockTruncationError(PhysicsError):
    """Raised when population reaches the top of a truncated ladder."""


class SteadyStateError(PhysicsError):
    """Raised when a steady-state solve does not converge."""


# ---------------------------------------------------------------------------
# Spaces, states, operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered tensor-product space, one ``(label, dimension)`` per factor."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(label), int(dim)) for label, dim in self.factors)
        labels = [label for label, _ in factors]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate factor labels in {labels}")
        for label, dim in factors:
            if dim < 1:
                raise ValueError(f"factor {label!r} has non-positive dimension {dim}")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def of(cls, **dims: int) -> "HilbertSpace":
        return cls(tuple(dims.items()))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.factors else 1

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no factor {label!r} in space {self.labels}") from None

    def concat(self, other: "HilbertSpace") -> "HilbertSpace":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise ValueError(f"factor labels collide: {sorted(clash)}")
        return HilbertSpace(self.factors + other.factors)

    def index(self, **levels: int) -> int:
        """Flat index of a product basis state; every factor must be given."""
        missing = set(self.labels) - set(levels)
        if missing:
            raise KeyError(f"levels missing for factors {sorted(missing)}")
        return int(np.ravel_multi_index([levels[label] for label in self.labels], self.dims))


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=complex, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class QuantumState:
    space: HilbertSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(np.asarray(self.amplitudes).reshape(-1))
        if amps.size != self.space.dim:
            raise ValueError(f"{amps.size} amplitudes for a space of dimension {self.space.dim}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, space: HilbertSpace, **levels: int) -> "QuantumState":
        amps = np.zeros(space.dim, dtype=complex)
        amps[space.index(**levels)] = 1.0
        return cls(space, amps)

    @classmethod
    def from_vector(cls, label: str, vector: Sequence[complex]) -> "QuantumState":
        vec = np.asarray(vector, dtype=complex)
        return cls(HilbertSpace(((label, vec.size),)), vec)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def to_density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "QuantumState") -> complex:
        _same_space(self.space, other.space)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        mat = _frozen(self.matrix)
        d = self.space.dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match space dimension {d}")
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def maximally_mixed(cls, space: HilbertSpace) -> "DensityMatrix":
        return cls(space, np.eye(space.dim) / space.dim)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def validate(self, herm_tol: float = 1e-12, trace_tol: float = 1e-12, eig_tol: float = 1e-10):
        if self.hermiticity_error() > herm_tol:
            raise ValueError(f"density matrix not Hermitian (error {self.hermiticity_error():.3e})")
        if abs(self.trace() - 1.0) > trace_tol:
            raise ValueError(f"density matrix trace {self.trace():.15g} differs from 1")
        if self.min_eigenvalue() < -eig_tol:
            raise ValueError(f"density matrix has negative eigenvalue {self.min_eigenvalue():.3e}")
        return self

    def expect(self, operator: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ operator))

    def partial_trace(self, keep: Iterable[str]) -> "DensityMatrix":
        keep = list(keep)
        pos = [self.space.position(label) for label in keep]
        n = len(self.space.dims)
        tensor = self.matrix.reshape(self.space.dims * 2)
        traced = [i for i in range(n) if i not in pos]
        # einsum subscripts: kept factors carry independent bra/ket indices
        letters = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
        ket = [next(letters) for _ in range(n)]
        bra = [ket[i] if i in traced else next(letters) for i in range(n)]
        out = "".join(ket[i] for i in pos) + "".join(bra[i] for i in pos)
        reduced = np.einsum("".join(ket) + "".join(bra) + "->" + out, tensor)
        sub = HilbertSpace(tuple(self.space.factors[i] for i in pos))
        return DensityMatrix(sub, reduced.reshape(sub.dim, sub.dim))

    def populations(self, label: str) -> np.ndarray:
        """Diagonal of the reduced state of one factor."""
        return np.real(np.diag(self.partial_trace([label]).matrix))


def _same_space(a: HilbertSpace, b: HilbertSpace):
    if a.dims != b.dims:
        raise ValueError(f"dimension mismatch: {a.dims} vs {b.dims}")


def tensor_product(a: QuantumState, b: QuantumState) -> QuantumState:
    space = a.space.concat(b.space)
    return QuantumState(space, np.kron(a.amplitudes, b.amplitudes))


def tensor_density(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    return DensityMatrix(a.space.concat(b.space), np.kron(a.matrix, b.matrix))


def embed(space: HilbertSpace, label: str, operator: np.ndarray) -> np.ndarray:
    """Lift a single-factor operator to the full space (identity elsewhere)."""
    operator = np.asarray(operator, dtype=complex)
    out = np.eye(1, dtype=complex)
    for name, dim in space.factors:
        if name == label:
            if operator.shape != (dim, dim):
                raise ValueError(f"operator shape {operator.shape} for factor {label!r} of dim {dim}")
            out = np.kron(out, operator)
        else:
            out = np.kron(out, np.eye(dim))
    space.position(label)
    return out


def operator_product(space: HilbertSpace, **local: np.ndarray) -> np.ndarray:
    """Kronecker product of per-factor operators, identity for omitted factors."""
    out = np.eye(1, dtype=complex)
    for name, dim in space.factors:
        out = np.kron(out, local.get(name, np.eye(dim)))
    unknown = set(local) - set(space.labels)
    if unknown:
        raise KeyError(f"unknown factors {sorted(unknown)}")
    return out


def ket(dim: int, level: int) -> np.ndarray:
    vec = np.zeros(dim, dtype=complex)
    vec[level] = 1.0
    return vec


def projector(dim: int, level: int) -> np.ndarray:
    return np.outer(ket(dim, level), ket(dim, level))


def transition(dim: int, to: int, frm: int) -> np.ndarray:
    """|to><frm| on a single factor."""
    op = np.zeros((dim, dim), dtype=complex)
    op[to, frm] = 1.0
    return op


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)


def dagger(op: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(op))


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _vector_eval(fn: Callable, times: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(fn(times))
        if out.shape == times.shape:
            return out
    except Exception:
        pass
    return np.array([fn(float(t)) for t in times])


@dataclass(frozen=True)
class HamiltonianGenerator:
    """Time-dependent Hamiltonian ``H(t) = static + sum_k f_k(t) H_k``.

    Each ``H_k`` must be Hermitian and each envelope ``f_k`` real, so every
    sample is Hermitian by construction. ``function`` may instead supply an
    arbitrary ``t -> matrix`` map; its samples are checked as they are used.
    """

    space: HilbertSpace
    static: np.ndarray | None = None
    drives: tuple[tuple[Callable[[float], float], np.ndarray], ...] = ()
    function: Callable[[float], np.ndarray] | None = None

    def __post_init__(self):
        d = self.space.dim
        static = np.zeros((d, d), dtype=complex) if self.static is None else _frozen(self.static)
        if static.shape != (d, d):
            raise ValueError(f"static term has shape {static.shape}, expected {(d, d)}")
        _require_hermitian(static, "static term")
        drives = []
        for k, (fn, op) in enumerate(self.drives):
            op = _frozen(op)
            if op.shape != (d, d):
                raise ValueError(f"drive {k} has shape {op.shape}, expected {(d, d)}")
            _require_hermitian(op, f"drive operator {k}")
            drives.append((fn, op))
        object.__setattr__(self, "static", static)
        object.__setattr__(self, "drives", tuple(drives))

    @classmethod
    def constant(cls, space: HilbertSpace, matrix: np.ndarray) -> "HamiltonianGenerator":
        return cls(space, static=matrix)

    @classmethod
    def from_function(cls, space: HilbertSpace, fn: Callable[[float], np.ndarray]) -> "HamiltonianGenerator":
        return cls(space, function=fn)

    @property
    def is_constant(self) -> bool:
        return not self.drives and self.function is None

    def coefficients(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        if not self.drives:
            return np.zeros((0, times.size))
        coeffs = np.array([_vector_eval(fn, times) for fn, _ in self.drives])
        if np.iscomplexobj(coeffs):
            if np.max(np.abs(coeffs.imag)) > 0:
                raise ValueError("drive envelopes must be real; a complex envelope makes H non-Hermitian")
            coeffs = coeffs.real
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("drive envelope returned a non-finite value")
        return coeffs.astype(float)

    def _assemble(self, coeffs: np.ndarray) -> np.ndarray:
        out = np.array(self.static)
        for c, (_, op) in zip(coeffs, self.drives):
            out = out + c * op
        return out

    def __call__(self, t: float) -> np.ndarray:
        if self.function is not None:
            H = np.asarray(self.function(t), dtype=complex) + self.static
            _require_hermitian(H, f"H(t={t:g})")
            return H
        return self._assemble(self.coefficients(np.array([t]))[:, 0])

    evaluate = __call__

    def sample(self, times: np.ndarray) -> np.ndarray:
        """Stack of H(t) for each t (shape ``(n, d, d)``)."""
        times = np.asarray(times, dtype=float)
        if self.function is not None:
            return np.array([self(t) for t in times])
        coeffs = self.coefficients(times)
        out = np.broadcast_to(self.static, (times.size,) + self.static.shape).copy()
        for c, (_, op) in zip(coeffs, self.drives):
            out += c[:, None, None] * op
        return out


def _require_hermitian(H: np.ndarray, what: str):
    err = float(np.max(np.abs(H - H.conj().T), initial=0.0))
    scale = max(1.0, float(np.max(np.abs(H), initial=0.0)))
    if err > HERMITIAN_TOL * scale:
        raise ValueError(f"{what} is not Hermitian (max |H - H^+| = {err:.3e})")


@dataclass(frozen=True)
class CollapseOperator:
    space: HilbertSpace
    operator: np.ndarray
    rate: float

    def __post_init__(self):
        if not self.rate >= 0:
            raise ValueError(f"collapse rate must be non-negative, got {self.rate}")
        op = _frozen(self.operator)
        if op.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"collapse operator shape {op.shape} does not match space")
        object.__setattr__(self, "operator", op)

    @property
    def scaled(self) -> np.ndarray:
        return math.sqrt(self.rate) * self.operator


# ---------------------------------------------------------------------------
# Closed-system evolution
# ---------------------------------------------------------------------------


def expm_hermitian(H: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i H dt) by eigendecomposition of a Hermitian matrix."""
    w, v = np.linalg.eigh(0.5 * (H + H.conj().T))
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


_GL_OFFSET = math.sqrt(3.0) / 6.0


def _grid(t0: float, t1: float, step: float) -> tuple[int, float]:
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    if t1 < t0:
        raise ValueError(f"t1 ({t1}) precedes t0 ({t0})")
    n = max(1, math.ceil((t1 - t0) / step - 1e-9))
    return n, (t1 - t0) / n


def propagator(gen: HamiltonianGenerator, t0: float, t1: float, step: float) -> np.ndarray:
    """Time-ordered exponential U(t1, t0) of -iH(t)."""
    if t1 == t0:
        return np.eye(gen.space.dim, dtype=complex)
    if gen.is_constant:
        _grid(t0, t1, step)
        return expm_hermitian(gen.static, t1 - t0)
    n, h = _grid(t0, t1, step)
    starts = t0 + h * np.arange(n)
    H1 = gen.sample(starts + (0.5 - _GL_OFFSET) * h)
    H2 = gen.sample(starts + (0.5 + _GL_OFFSET) * h)
    U = np.eye(gen.space.dim, dtype=complex)
    c = math.sqrt(3.0) / 12.0 * h
    for A, B in zip(H1, H2):
        # fourth-order Magnus with Gauss nodes: H_eff = (A+B)/2 + i sqrt(3) h/12 [A, B]
        comm = A @ B - B @ A
        effective = 0.5 * (A + B) + 1j * c * comm
        U = expm_hermitian(effective, h) @ U
    return U


def evolve_unitary(state: QuantumState, gen: HamiltonianGenerator, t0: float, t1: float, step: float) -> QuantumState:
    _same_space(state.space, gen.space)
    U = propagator(gen, t0, t1, step)
    return QuantumState(state.space, U @ state.amplitudes)


@dataclass(frozen=True)
class PulseSegment:
    generator: HamiltonianGenerator
    duration: float
    step: float | None = None
    label: str = ""


@dataclass(frozen=True)
class PulseSchedule:
    """Ordered segments, each evolving under its own generator from local t=0."""

    space: HilbertSpace
    segments: tuple[PulseSegment, ...] = field(default_factory=tuple)

    def then(self, segment: PulseSegment) -> "PulseSchedule":
        _same_space(self.space, segment.generator.space)
        return PulseSchedule(self.space, self.segments + (segment,))

    def propagators(self) -> list[np.ndarray]:
        out = []
        for seg in self.segments:
            step = seg.step or max(seg.duration, 1e-300)
            out.append(propagator(seg.generator, 0.0, seg.duration, step))
        return out

    def propagator(self) -> np.ndarray:
        U = np.eye(self.space.dim, dtype=complex)
        for P in self.propagators():
            U = P @ U
        return U

    @property
    def duration(self) -> float:
        return float(sum(seg.duration for seg in self.segments))


def align_global_phase(U: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Multiply ``U`` by the phase that maximizes Re Tr(target^+ U)."""
    overlap = np.vdot(target, U)
    if abs(overlap) == 0:
        return np.array(U)
    return U * np.exp(-1j * np.angle(overlap))


# ---------------------------------------------------------------------------
# Open-system evolution
# ---------------------------------------------------------------------------


def liouvillian(H: np.ndarray, collapses: Sequence[CollapseOperator]) -> np.ndarray:
    """Superoperator acting on row-major ``rho.reshape(-1)``."""
    d = H.shape[0]
    eye = np.eye(d)
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for c in collapses:
        A = c.scaled
        AdA = A.conj().T @ A
        L += np.kron(A, A.conj()) - 0.5 * np.kron(AdA, eye) - 0.5 * np.kron(eye, AdA.T)
    return L


class Trajectory(NamedTuple):
    times: np.ndarray
    observations: np.ndarray
    final: DensityMatrix


def _check_drift(rho: np.ndarray, trace0: complex, where: str):
    if not np.all(np.isfinite(rho)):
        raise IntegrationError(f"non-finite density matrix at {where}; refine the step")
    drift = abs(np.trace(rho) - trace0)
    if drift > 1e-6:
        raise IntegrationError(f"trace drift {drift:.3e} at {where}; refine the step")


def lindblad_trajectory(
    rho: DensityMatrix,
    gen: HamiltonianGenerator,
    collapses: Sequence[CollapseOperator],
    t0: float,
    t1: float,
    step: float,
    observe: Callable[[np.ndarray], np.ndarray] | None = None,
) -> Trajectory:
    """RK4 integration of the master equation, recording ``observe(rho)`` on the grid."""
    _same_space(rho.space, gen.space)
    for c in collapses:
        _same_space(rho.space, c.space)
    if gen.function is not None:
        raise ValueError("lindblad_trajectory needs a drive-decomposed generator")
    n, h = _grid(t0, t1, step)
    times = t0 + h * np.arange(n + 1)
    half = t0 + 0.5 * h * np.arange(2 * n + 1)
    coeffs = gen.coefficients(half)

    ops = [c.scaled for c in collapses if c.rate > 0]
    ops_dag = [A.conj().T for A in ops]
    damping = sum((Ad @ A for A, Ad in zip(ops, ops_dag)), np.zeros_like(gen.static))
    K0 = -1j * gen.static - 0.5 * damping
    Kd = [-1j * op for _, op in gen.drives]

    def K_at(j: int) -> np.ndarray:
        K = K0
        for c, op in zip(coeffs[:, j], Kd):
            if c != 0.0:
                K = K + c * op
        return K

    def rhs(r: np.ndarray, K: np.ndarray) -> np.ndarray:
        out = K @ r
        out = out + out.conj().T
        for A, Ad in zip(ops, ops_dag):
            out += A @ r @ Ad
        return out

    r = np.array(rho.matrix)
    trace0 = np.trace(r)
    obs = [] if observe is None else [np.asarray(observe(r))]
    K_next = K_at(0)
    for i in range(n):
        Ka, Km, Kb = K_next, K_at(2 * i + 1), K_at(2 * i + 2)
        k1 = rhs(r, Ka)
        k2 = rhs(r + 0.5 * h * k1, Km)
        k3 = rhs(r + 0.5 * h * k2, Km)
        k4 = rhs(r + h * k3, Kb)
        r = r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        K_next = Kb
        if observe is not None:
            obs.append(np.asarray(observe(r)))
        if i % 256 == 255:
            _check_drift(r, trace0, f"t={times[i + 1]:.6g}")
    _check_drift(r, trace0, f"t={t1:.6g}")
    final = DensityMatrix(rho.space, 0.5 * (r + r.conj().T))
    if final.min_eigenvalue() < -1e-6:
        raise IntegrationError(
            f"positivity lost (min eigenvalue {final.min_eigenvalue():.3e}); refine the step"
        )
    observations = np.array(obs) if observe is not None else np.empty((0,))
    return Trajectory(times, observations, final)


def evolve_dissipative(
    rho: DensityMatrix,
    gen: HamiltonianGenerator,
    collapses: Sequence[CollapseOperator],
    t0: float,
    t1: float,
    step: float,
) -> DensityMatrix:
    _same_space(rho.space, gen.space)
    if gen.is_constant:
        _grid(t0, t1, step)
        L = liouvillian(gen.static, collapses)
        vec = linalg.expm(L * (t1 - t0)) @ rho.matrix.reshape(-1)
        r = vec.reshape(rho.matrix.shape)
        _check_drift(r, np.trace(rho.matrix), f"t={t1:.6g}")
        return DensityMatrix(rho.space, 0.5 * (r + r.conj().T))
    if gen.function is not None:
        raise ValueError("evolve_dissipative requires a drive-decomposed HamiltonianGenerator")
    return lindblad_trajectory(rho, gen, collapses, t0, t1, step).final


def steady_state(H: np.ndarray, collapses: Sequence[CollapseOperator]) -> np.ndarray:
    """Null vector of the Liouvillian normalized to unit trace."""
    d = H.shape[0]
    L = liouvillian(H, collapses)
    A = np.vstack([L, np.eye(d).reshape(1, -1)])
    b = np.zeros(d * d + 1, dtype=complex)
    b[-1] = 1.0
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = np.linalg.norm(A @ sol - b)
    if resid > 1e-8:
        raise SteadyStateError(f"steady state did not converge (residual {resid:.3e})")
    return sol.reshape(d, d)


# ---------------------------------------------------------------------------
# Fidelity functionals
# ---------------------------------------------------------------------------


def fidelity(rho_in: DensityMatrix, rho_out: DensityMatrix) -> float:
    """F = Tr(rho_in rho_out), exactly symmetric in its arguments."""
    _same_space(rho_in.space, rho_out.space)
    products = rho_in.matrix * rho_out.matrix.T
    return float(np.real(0.5 * np.sum(products + products.T)))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    _same_space(a.space, b.space)
    diff = a.matrix - b.matrix
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def check_fock_truncation(rho: DensityMatrix | QuantumState, label: str, levels: int = 1, tol: float = 1e-8):
    """Fail loudly if the top ``levels`` Fock states of ``label`` hold population."""
    if isinstance(rho, QuantumState):
        rho = rho.to_density_matrix()
    pops = rho.populations(label)
    top = float(np.sum(pops[-levels:]))
    if top >= tol:
        raise FockTruncationError(
            f"population {top:.3e} in the top {levels} levels of {label!r} "
            f"(cutoff {pops.size - 1}); raise the cutoff"
        )
    return top


class AverageFidelity(NamedTuple):
    mean: float
    stderr: float
    samples: int


QUBIT = HilbertSpace((("qubit", 2),))

# octahedron of Bloch vectors: a spherical 2-design, exact for qubit channels
_AXIS_STATES = [
    np.array([1, 0], dtype=complex),
    np.array([0, 1], dtype=complex),
    np.array([1, 1], dtype=complex) / math.sqrt(2),
    np.array([1, -1], dtype=complex) / math.sqrt(2),
    np.array([1, 1j], dtype=complex) / math.sqrt(2),
    np.array([1, -1j], dtype=complex) / math.sqrt(2),
]


def haar_qubits(count: int, seed: int | np.random.SeedSequence) -> np.ndarray:
    """Haar-random pure qubit states, drawn in fixed-size seeded batches."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    n_batches = math.ceil(count / BATCH_SIZE)
    chunks = []
    for b, child in enumerate(ss.spawn(n_batches)):
        size = min(BATCH_SIZE, count - b * BATCH_SIZE)
        rng = np.random.default_rng(child)
        z = rng.standard_normal((size, 2)) + 1j * rng.standard_normal((size, 2))
        chunks.append(z / np.linalg.norm(z, axis=1, keepdims=True))
    return np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=complex)


def average_fidelity(
    channel: Callable[[DensityMatrix], DensityMatrix],
    samples: int = 20000,
    seed: int = 0,
    method: str = "monte_carlo",
) -> AverageFidelity:
    """Average of Tr(rho_in rho_out) over pure qubit inputs.

    ``method="monte_carlo"`` samples Haar states and reports the standard
    error; ``method="exact"`` uses the six Pauli eigenstates, which integrate
    any linear qubit channel exactly.
    """
    if method == "exact":
        states = np.array(_AXIS_STATES)
    elif method == "monte_carlo":
        if samples < 2:
            raise ValueError("need at least two samples for a standard error")
        states = haar_qubits(samples, seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    values = np.empty(len(states))
    for i, psi in enumerate(states):
        rho_in = QuantumState(QUBIT, psi).to_density_matrix()
        values[i] = fidelity(rho_in, channel(rho_in))
    if method == "exact":
        return AverageFidelity(float(values.mean()), 0.0, len(values))
    return AverageFidelity(float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values))), len(values))


def apply_kraus(rho: DensityMatrix, kraus: Sequence[np.ndarray], label: str | None = None) -> DensityMatrix:
    """Apply a channel given by Kraus operators, optionally to one factor."""
    out = np.zeros_like(rho.matrix)
    for K in kraus:
        full = K if label is None else embed(rho.space, label, K)
        out = out + full @ rho.matrix @ full.conj().T
    return DensityMatrix(rho.space, out)
