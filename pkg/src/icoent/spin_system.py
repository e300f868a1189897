"""The icosahedral antiferromagnetic transverse-field Ising model.

H = J * sum_bonds sigma^x_i sigma^x_j - h * sum_sites sigma^z_i, with J = 1
as the unit of energy, k_B = 1 and hbar = 1.  The 12-vertex icosahedron is
built from golden-ratio coordinates with a deterministic lexicographic
labeling so site indices are reproducible across runs and platforms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGroundStateError, DomainError
from .qstate import (
    DensityMatrix,
    HermitianEigensystem,
    PureState,
    eigh,
    partial_trace,
)

N_SITES = 12
GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0
DEGENERACY_ATOL = 1e-10


@dataclass(frozen=True)
class IcosahedronGraph:
    """Vertices 1..12, 30 edges, 20 triangular faces, all-pairs graph distances."""

    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    faces: tuple[tuple[int, int, int], ...]
    distance: np.ndarray
    coordinates: np.ndarray

    def neighbors(self, v: int) -> tuple[int, ...]:
        return tuple(j for i, j in self.edges if i == v) + tuple(i for i, j in self.edges if j == v)

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def graph_distance(self, i: int, j: int) -> int:
        return int(self.distance[i - 1, j - 1])


def build_icosahedron() -> IcosahedronGraph:
    """Construct the icosahedron from cyclic permutations of (0, +-1, +-phi).

    Vertices are labeled 1..12 in lexicographic order of their coordinates;
    edges join pairs at the minimal Euclidean distance; faces are the mutually
    adjacent triples.
    """
    pts = []
    for s1 in (1.0, -1.0):
        for s2 in (GOLDEN, -GOLDEN):
            base = (0.0, s1, s2)
            for shift in range(3):
                pts.append(tuple(base[(k - shift) % 3] for k in range(3)))
    coords = np.array(sorted(pts))
    dist2 = np.sum((coords[:, None, :] - coords[None, :, :]) ** 2, axis=-1)
    min_d2 = np.min(dist2[dist2 > 1e-9])
    edges = tuple(
        (i + 1, j + 1)
        for i in range(N_SITES)
        for j in range(i + 1, N_SITES)
        if abs(dist2[i, j] - min_d2) < 1e-9
    )
    adj = {v: set() for v in range(1, N_SITES + 1)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    faces = tuple(
        (a, b, c)
        for a, b, c in itertools.combinations(range(1, N_SITES + 1), 3)
        if b in adj[a] and c in adj[a] and c in adj[b]
    )
    distance = np.full((N_SITES, N_SITES), -1, dtype=int)
    for v in range(1, N_SITES + 1):
        distance[v - 1, v - 1] = 0
        frontier = [v]
        d = 0
        while frontier:
            d += 1
            frontier = [
                w
                for u in frontier
                for w in adj[u]
                if distance[v - 1, w - 1] < 0
            ]
            for w in frontier:
                distance[v - 1, w - 1] = d
    return IcosahedronGraph(
        vertices=tuple(range(1, N_SITES + 1)),
        edges=edges,
        faces=faces,
        distance=distance,
        coordinates=coords,
    )


def graph_automorphisms(graph: IcosahedronGraph, limit: int | None = None) -> list[tuple[int, ...]]:
    """Adjacency-preserving vertex permutations, found by backtracking.

    Each permutation ``p`` maps vertex ``v`` to ``p[v-1]``.  ``limit`` stops
    the search early; a handful of non-identity automorphisms is enough to
    exercise symmetry invariance.
    """
    n = len(graph.vertices)
    adj = [set() for _ in range(n)]
    for i, j in graph.edges:
        adj[i - 1].add(j - 1)
        adj[j - 1].add(i - 1)
    found: list[tuple[int, ...]] = []

    def extend(mapping: list[int], used: set[int]) -> bool:
        if limit is not None and len(found) >= limit:
            return True
        v = len(mapping)
        if v == n:
            found.append(tuple(m + 1 for m in mapping))
            return limit is not None and len(found) >= limit
        for cand in range(n):
            if cand in used:
                continue
            ok = all((u in adj[v]) == (mapping[u] in adj[cand]) for u in range(v))
            if ok and extend(mapping + [cand], used | {cand}):
                return True
        return False

    extend([], set())
    return found


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the transverse-field Ising Hamiltonian; J is the energy unit."""

    j: float = 1.0
    h: float = 0.0

    def __post_init__(self):
        if self.h < 0:
            raise DomainError(f"transverse field must be nonnegative, got {self.h}")


@dataclass(frozen=True)
class SpectrumCache:
    """Immutable full eigensystem of the Hamiltonian, shared by all drivers."""

    params: ModelParams
    eigensystem: HermitianEigensystem
    ground_degeneracy: int
    n_sites: int = N_SITES

    @property
    def energies(self) -> np.ndarray:
        return self.eigensystem.eigenvalues

    @property
    def vectors(self) -> np.ndarray:
        return self.eigensystem.eigenvectors

    @property
    def dim(self) -> int:
        return self.energies.size


def _site_bit_masks(n: int) -> np.ndarray:
    # site i occupies bit n - i (site 1 is the most significant bit)
    return np.array([1 << (n - i) for i in range(1, n + 1)], dtype=np.int64)


def build_hamiltonian(graph: IcosahedronGraph, params: ModelParams) -> np.ndarray:
    """Assemble the dense real symmetric Hamiltonian matrix.

    sigma^x sigma^x on a bond flips the two bits of the basis index, so the
    exchange term is a sum of permutation matrices; the field term is diagonal
    with sigma^z eigenvalue +1 on bit 0 (spin-up).
    """
    n = len(graph.vertices)
    dim = 1 << n
    masks = _site_bit_masks(n)
    idx = np.arange(dim, dtype=np.int64)
    bits = (idx[:, None] >> (n - np.arange(1, n + 1))) & 1
    z = 1 - 2 * bits
    ham = np.zeros((dim, dim))
    for i, j in graph.edges:
        ham[idx, idx ^ (masks[i - 1] | masks[j - 1])] += params.j
    ham[idx, idx] += -params.h * z.sum(axis=1)
    return ham


def diagonalize(hamiltonian: np.ndarray, params: ModelParams) -> SpectrumCache:
    """Full exact diagonalization; counts the ground-manifold degeneracy."""
    system = eigh(hamiltonian)
    vals = system.eigenvalues
    degeneracy = int(np.sum(vals - vals[0] <= DEGENERACY_ATOL))
    n = vals.size.bit_length() - 1
    return SpectrumCache(params=params, eigensystem=system, ground_degeneracy=degeneracy, n_sites=n)


def ground_state(cache: SpectrumCache) -> PureState:
    """Eigenvector of the smallest eigenvalue; raises if the manifold is degenerate."""
    if cache.ground_degeneracy > 1:
        raise DegenerateGroundStateError(
            f"ground manifold is {cache.ground_degeneracy}-fold degenerate at "
            f"h={cache.params.h}; use thermal_state_rdm at small T instead"
        )
    return PureState(cache.vectors[:, 0].astype(np.complex128))


def ground_energy(cache: SpectrumCache) -> float:
    return float(cache.energies[0])


def _kept_factor_view(vectors: np.ndarray, keep: list[int], n: int) -> np.ndarray:
    """Reshape eigenvector columns into (n_states, 2^m, 2^(n-m)) with kept sites first."""
    n_states = vectors.shape[1]
    rest = [s for s in range(1, n + 1) if s not in keep]
    perm = (0,) + tuple(keep) + tuple(rest)
    tensor = vectors.T.reshape((n_states,) + (2,) * n)
    return tensor.transpose(perm).reshape(n_states, 1 << len(keep), -1)


def boltzmann_weights(energies: np.ndarray, temperature: float) -> np.ndarray:
    """Normalized e^(-(E_n - E_0)/T); shifting by E_0 avoids underflow at small T."""
    if temperature <= 0:
        raise DomainError(f"temperature must be positive, got {temperature}")
    w = np.exp(-(energies - energies[0]) / temperature)
    return w / w.sum()


def thermal_state_rdm(cache: SpectrumCache, temperature: float, keep) -> DensityMatrix:
    """Reduced Gibbs state sum_n p_n Tr_rest |E_n><E_n| on the sites in ``keep``.

    Works eigenstate by eigenstate (rank-1 traces) so the full 2^n x 2^n Gibbs
    matrix is never formed.
    """
    keep = list(keep)
    if not keep or any(s < 1 or s > cache.n_sites for s in keep) or len(set(keep)) != len(keep):
        raise DomainError(f"invalid subsystem {keep} for {cache.n_sites} sites")
    p = boltzmann_weights(cache.energies, temperature)
    m = _kept_factor_view(cache.vectors, keep, cache.n_sites)
    dk = m.shape[1]
    weighted = (m * p[:, None, None]).transpose(1, 0, 2).reshape(dk, -1)
    plain = m.transpose(1, 0, 2).reshape(dk, -1)
    rho = weighted @ plain.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho.astype(np.complex128), sites=tuple(keep))


def quench_state(cache: SpectrumCache, psi0: PureState, t: float) -> PureState:
    """Evolve psi0 under the diagonalized Hamiltonian for time ``t``."""
    c = cache.vectors.conj().T @ psi0.amplitudes
    amps = cache.vectors @ (np.exp(-1j * cache.energies * t) * c)
    return PureState(amps)


def quench_series(cache: SpectrumCache, psi0: PureState, times: np.ndarray) -> np.ndarray:
    """Columns are the evolved states at each time; one matmul for the whole grid."""
    c = cache.vectors.conj().T @ psi0.amplitudes
    phases = np.exp(-1j * np.outer(cache.energies, np.asarray(times, dtype=float)))
    return cache.vectors @ (phases * c[:, None])


def product_basis_state(pattern: str, n_sites: int = N_SITES) -> PureState:
    """Computational-basis product state from an up/down string; '0' is spin-up."""
    if len(pattern) != n_sites:
        raise DomainError(f"pattern must have length {n_sites}, got {len(pattern)}")
    if any(ch not in "01" for ch in pattern):
        raise DomainError(f"pattern must contain only 0 and 1, got {pattern!r}")
    amps = np.zeros(1 << n_sites, dtype=np.complex128)
    amps[int(pattern, 2)] = 1.0
    return PureState(amps)


_PAULI_REAL = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]]),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]]),
}


def _expectations_from_rdm(rdm: np.ndarray, axis: str, pair: bool) -> float:
    op = _PAULI_REAL[axis]
    full = np.kron(op, op) if pair else op
    return float(np.real(np.trace(rdm @ full)))


def _observables_from_rdm_fn(rdm_fn, graph: IcosahedronGraph) -> dict[str, float]:
    singles = {v: rdm_fn((v,)) for v in graph.vertices}
    out: dict[str, float] = {}
    for axis in "xyz":
        out[f"s{axis}"] = float(
            np.mean([_expectations_from_rdm(singles[v], axis, pair=False) for v in graph.vertices])
        )
    for axis in "xyz":
        conns = []
        for i, j in graph.edges:
            pair_rdm = rdm_fn((i, j))
            si = _expectations_from_rdm(singles[i], axis, pair=False)
            sj = _expectations_from_rdm(singles[j], axis, pair=False)
            conns.append(_expectations_from_rdm(pair_rdm, axis, pair=True) - si * sj)
        out[f"s{axis}s{axis}_conn"] = float(np.mean(conns))
    return out


def observables(state: PureState, graph: IcosahedronGraph) -> dict[str, float]:
    """Site-averaged <sigma^a> and bond-averaged connected <sigma^a sigma^a>.

    All 12 sites and all 30 bonds are symmetry equivalent on the icosahedron,
    so averaging over them is averaging over one orbit.
    """
    return _observables_from_rdm_fn(lambda keep: partial_trace(state, keep).matrix, graph)


def thermal_observables(cache: SpectrumCache, temperature: float, graph: IcosahedronGraph) -> dict[str, float]:
    """Same observables as :func:`observables`, for the Gibbs ensemble."""
    return _observables_from_rdm_fn(
        lambda keep: thermal_state_rdm(cache, temperature, keep).matrix, graph
    )


def frh_sweep(cache: SpectrumCache, keep) -> list[tuple[float, float]]:
    """(E_n, lambda_min of the reduced state) for every eigenstate, energy ascending."""
    keep = list(keep)
    if len(keep) not in (1, 2, 3):
        raise DomainError(f"frh sweep supports 1..3 kept sites, got {len(keep)}")
    m = _kept_factor_view(cache.vectors, keep, cache.n_sites)
    rhos = np.matmul(m, m.conj().transpose(0, 2, 1))
    lam_min = np.linalg.eigvalsh(rhos)[:, 0]
    return [(float(e), float(l)) for e, l in zip(cache.energies, lam_min)]


def pair_at_distance(graph: IcosahedronGraph, d: int) -> tuple[int, int]:
    """Lexicographically smallest vertex pair at graph distance ``d``."""
    for i, j in itertools.combinations(graph.vertices, 2):
        if graph.graph_distance(i, j) == d:
            return (i, j)
    raise DomainError(f"no vertex pair at distance {d}")


def triangle_scaled(graph: IcosahedronGraph, scale: int) -> tuple[int, int, int]:
    """Lexicographically smallest triple with all pairwise graph distances ``scale``.

    scale=1 returns a face; scale=2 returns the minimal triangle blown up to
    bond-length two.
    """
    for trip in itertools.combinations(graph.vertices, 3):
        if all(graph.graph_distance(a, b) == scale for a, b in itertools.combinations(trip, 2)):
            return trip
    raise DomainError(f"no triangle with pairwise distance {scale}")


def parity_operator_diagonal(n: int = N_SITES) -> np.ndarray:
    """Diagonal of the global parity P = prod_i sigma^z_i in the computational basis."""
    idx = np.arange(1 << n, dtype=np.int64)
    bits = (idx[:, None] >> (n - np.arange(1, n + 1))) & 1
    return np.where(bits.sum(axis=1) % 2 == 0, 1.0, -1.0)
