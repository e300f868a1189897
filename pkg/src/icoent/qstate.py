"""Dense operator algebra for small systems of labeled qubits.

Basis layout used everywhere in this package: site 1 is the MOST significant
bit, so the basis index of a spin configuration is b = sum_i bit_i * 2^(n-i),
and bit 0 means spin-up (sigma^z eigenvalue +1).  For a 3-site system the
matrix indices 1..8 (1-based) therefore run over |000>, |001>, ..., |111>.
The 3-party witness formula in :mod:`icoent.measures` is written against this
layout and is wrong in any other one, which is why the convention is pinned
here once and reused by every module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, NumericalError

HERMITICITY_ATOL = 1e-12
TRACE_ATOL = 1e-12
PSD_EIGENVALUE_FLOOR = -1e-10
NORM_ATOL = 1e-12

IDENTITY_2 = np.eye(2, dtype=np.complex128)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

# Ordered site labels defining the tensor-factor order of a reduced state.
SubsystemSpec = Sequence[int]


@dataclass(frozen=True)
class BasisConvention:
    """Bit layout of the computational basis for ``n_sites`` qubits.

    Site 1 is the most significant bit; bit 0 encodes spin-up.
    """

    n_sites: int

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def index_of(self, bits: Sequence[int]) -> int:
        if len(bits) != self.n_sites:
            raise DomainError(f"expected {self.n_sites} bits, got {len(bits)}")
        idx = 0
        for b in bits:
            if b not in (0, 1):
                raise DomainError(f"bits must be 0 or 1, got {b!r}")
            idx = (idx << 1) | b
        return idx

    def bits_of(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.dim:
            raise DomainError(f"basis index {index} out of range for {self.n_sites} sites")
        return tuple((index >> (self.n_sites - i)) & 1 for i in range(1, self.n_sites + 1))


@dataclass(frozen=True)
class PureState:
    """Normalized state vector on ``n_sites`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        n = amps.size.bit_length() - 1
        if amps.ndim != 1 or amps.size != (1 << n):
            raise DomainError("amplitudes must be a vector of length 2^n")
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > NORM_ATOL:
            raise DomainError(f"state norm {nrm!r} deviates from 1 beyond {NORM_ATOL}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_sites(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite operator on labeled qubits."""

    matrix: np.ndarray
    sites: tuple[int, ...] = field(default=())

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DomainError("density matrix must be square")
        n = mat.shape[0].bit_length() - 1
        if mat.shape[0] != (1 << n):
            raise DomainError("density matrix dimension must be a power of 2")
        sites = tuple(self.sites) if self.sites else tuple(range(1, n + 1))
        if len(sites) != n or len(set(sites)) != n:
            raise DomainError(f"need {n} distinct site labels, got {sites}")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITICITY_ATOL:
            raise DomainError("matrix is not Hermitian within tolerance")
        if abs(mat.trace().real - 1.0) > TRACE_ATOL or abs(mat.trace().imag) > TRACE_ATOL:
            raise DomainError(f"trace {mat.trace()!r} deviates from 1 beyond {TRACE_ATOL}")
        lam_min = float(np.linalg.eigvalsh(mat)[0])
        if lam_min < PSD_EIGENVALUE_FLOOR:
            raise DomainError(f"smallest eigenvalue {lam_min} below {PSD_EIGENVALUE_FLOOR}")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "sites", sites)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


@dataclass(frozen=True)
class HermitianEigensystem:
    """Full eigendecomposition of a Hermitian matrix, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _check_subsystem(labels: SubsystemSpec, available: Sequence[int]) -> list[int]:
    """Validate subsystem labels and return their positions in ``available``."""
    labels = list(labels)
    if not labels:
        raise DomainError("subsystem must contain at least one site")
    if len(set(labels)) != len(labels):
        raise DomainError(f"duplicate site labels in {labels}")
    positions = []
    for lab in labels:
        try:
            positions.append(list(available).index(lab))
        except ValueError:
            raise DomainError(f"site label {lab} not in {tuple(available)}") from None
    return positions


def _ptrace_pure(amps: np.ndarray, keep_pos: list[int], n: int) -> np.ndarray:
    """Rank-1 partial trace: O(2^n * 2^m) instead of forming the projector."""
    rest = [p for p in range(n) if p not in keep_pos]
    m = len(keep_pos)
    psi = amps.reshape((2,) * n).transpose(keep_pos + rest).reshape(1 << m, -1)
    return psi @ psi.conj().T


def _ptrace_dm(mat: np.ndarray, keep_pos: list[int], n: int) -> np.ndarray:
    rest = [p for p in range(n) if p not in keep_pos]
    m = len(keep_pos)
    perm = keep_pos + rest + [n + p for p in keep_pos] + [n + p for p in rest]
    t = mat.reshape((2,) * (2 * n)).transpose(perm)
    t = t.reshape(1 << m, 1 << (n - m), 1 << m, 1 << (n - m))
    return np.einsum("arbr->ab", t)


def partial_trace(
    state: Union[PureState, DensityMatrix, np.ndarray],
    keep: SubsystemSpec,
    convention: BasisConvention | None = None,
) -> DensityMatrix:
    """Reduce ``state`` to the sites in ``keep``.

    The factor order of the result follows the order of ``keep``.  Pure states
    take a rank-1 shortcut that never forms the full projector, which is what
    makes sweeping reduced states over thousands of eigenvectors affordable.
    """
    if isinstance(state, PureState):
        n = state.n_sites
        labels = tuple(range(1, n + 1))
        pos = _check_subsystem(keep, labels)
        reduced = _ptrace_pure(state.amplitudes, pos, n)
    elif isinstance(state, DensityMatrix):
        n = state.n_sites
        pos = _check_subsystem(keep, state.sites)
        reduced = _ptrace_dm(state.matrix, pos, n)
    else:
        arr = np.asarray(state, dtype=np.complex128)
        if arr.ndim == 1:
            return partial_trace(PureState(arr), keep, convention)
        return partial_trace(DensityMatrix(arr), keep, convention)
    if convention is not None and convention.n_sites != n:
        raise DomainError(f"convention is for {convention.n_sites} sites, state has {n}")
    reduced = 0.5 * (reduced + reduced.conj().T)
    return DensityMatrix(reduced, sites=tuple(keep))


def partial_transpose(rho: Union[DensityMatrix, np.ndarray], transposed: SubsystemSpec) -> np.ndarray:
    """Transpose the tensor factors named in ``transposed``; involutive, trace preserving.

    Returns a plain Hermitian ndarray because the result is in general not
    positive semidefinite.
    """
    if isinstance(rho, DensityMatrix):
        sites = rho.sites
        mat = rho.matrix
    else:
        mat = np.asarray(rho, dtype=np.complex128)
        n = mat.shape[0].bit_length() - 1
        sites = tuple(range(1, n + 1))
    n = len(sites)
    pos = _check_subsystem(transposed, sites)
    perm = list(range(2 * n))
    for p in pos:
        perm[p], perm[n + p] = perm[n + p], perm[p]
    dim = 1 << n
    return mat.reshape((2,) * (2 * n)).transpose(perm).reshape(dim, dim)


def reorder_sites(
    matrix: np.ndarray, current_order: Sequence[int], target_order: Sequence[int] | None = None
) -> np.ndarray:
    """Permute the tensor factors of ``matrix`` from ``current_order`` to ``target_order``.

    ``target_order`` defaults to the sorted labels.  Used to embed operator
    blocks that were assembled in bipartition order back into canonical site
    order.
    """
    current = list(current_order)
    target = sorted(current) if target_order is None else list(target_order)
    if sorted(current) != sorted(target):
        raise DomainError(f"orders {current} and {target} are not permutations of each other")
    n = len(current)
    src = [current.index(lab) for lab in target]
    perm = src + [n + p for p in src]
    dim = 1 << n
    return np.asarray(matrix).reshape((2,) * (2 * n)).transpose(perm).reshape(dim, dim)


def frobenius_distance(a: Union[DensityMatrix, np.ndarray], b: Union[DensityMatrix, np.ndarray]) -> float:
    """d(a, b) = sqrt(Tr (a-b)^2) for Hermitian arguments."""
    am = a.matrix if isinstance(a, DensityMatrix) else np.asarray(a)
    bm = b.matrix if isinstance(b, DensityMatrix) else np.asarray(b)
    if am.shape != bm.shape:
        raise DomainError(f"dimension mismatch: {am.shape} vs {bm.shape}")
    return float(np.linalg.norm(am - bm))


def trace_norm(x: Union[DensityMatrix, np.ndarray], hermiticity_atol: float = 1e-10) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    mat = x.matrix if isinstance(x, DensityMatrix) else np.asarray(x)
    if np.max(np.abs(mat - mat.conj().T)) > hermiticity_atol:
        raise DomainError("trace_norm requires a Hermitian matrix")
    return float(np.sum(np.abs(np.linalg.eigvalsh(mat))))


def eigh(h: np.ndarray, hermiticity_atol: float = 1e-10) -> HermitianEigensystem:
    """Full eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    mat = np.asarray(h)
    if np.max(np.abs(mat - mat.conj().T)) > hermiticity_atol:
        raise DomainError("eigh requires a Hermitian matrix")
    try:
        vals, vecs = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed on {mat.shape}: {exc}") from exc
    return HermitianEigensystem(eigenvalues=vals, eigenvectors=vecs)


def kron(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Tensor product of a nonempty list of matrices, site 1 leftmost."""
    if len(factors) == 0:
        raise DomainError("kron needs at least one factor")
    out = np.asarray(factors[0])
    for f in factors[1:]:
        out = np.kron(out, np.asarray(f))
    return out
