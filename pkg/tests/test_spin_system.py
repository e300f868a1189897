import itertools

import numpy as np
import pytest

from icoent import spin_system as ss
from icoent.errors import DegenerateGroundStateError, DomainError
from icoent.qstate import DensityMatrix, partial_trace


def classical_x_energies(graph):
    """Diagonal of the exchange term in the sigma^x product basis, by brute force."""
    n = len(graph.vertices)
    bits = (np.arange(1 << n)[:, None] >> (n - np.arange(1, n + 1))) & 1
    signs = 1 - 2 * bits
    energies = np.zeros(1 << n)
    for i, j in graph.edges:
        energies += signs[:, i - 1] * signs[:, j - 1]
    return energies


def test_graph_combinatorics(graph):
    assert len(graph.edges) == 30
    assert len(graph.faces) == 20
    assert all(graph.degree(v) == 5 for v in graph.vertices)
    for i, j in graph.edges:
        shared = [f for f in graph.faces if i in f and j in f]
        assert len(shared) == 2


def test_graph_distances_against_bfs(graph):
    adj = {v: set(graph.neighbors(v)) for v in graph.vertices}
    for src in graph.vertices:
        dist = {src: 0}
        frontier = [src]
        while frontier:
            nxt = []
            for u in frontier:
                for w in adj[u]:
                    if w not in dist:
                        dist[w] = dist[u] + 1
                        nxt.append(w)
            frontier = nxt
        for dst in graph.vertices:
            assert graph.graph_distance(src, dst) == dist[dst]
    histogram = {}
    for i, j in itertools.combinations(graph.vertices, 2):
        histogram[graph.graph_distance(i, j)] = histogram.get(graph.graph_distance(i, j), 0) + 1
    assert histogram == {1: 30, 2: 30, 3: 6}
    for v in graph.vertices:
        antipodes = [w for w in graph.vertices if graph.graph_distance(v, w) == 3]
        assert len(antipodes) == 1


def test_subsystem_selections(graph):
    for d in (1, 2, 3):
        pair = ss.pair_at_distance(graph, d)
        assert graph.graph_distance(*pair) == d
        earlier = [
            p
            for p in itertools.combinations(graph.vertices, 2)
            if p < pair and graph.graph_distance(*p) == d
        ]
        assert earlier == []
    face = ss.triangle_scaled(graph, 1)
    assert face in graph.faces
    tri2 = ss.triangle_scaled(graph, 2)
    assert all(graph.graph_distance(a, b) == 2 for a, b in itertools.combinations(tri2, 2))
    with pytest.raises(DomainError):
        ss.pair_at_distance(graph, 4)
    with pytest.raises(DomainError):
        ss.triangle_scaled(graph, 3)


def test_automorphisms_preserve_adjacency(graph):
    autos = ss.graph_automorphisms(graph, limit=6)
    assert len(autos) >= 2
    edge_set = {frozenset(e) for e in graph.edges}
    for perm in autos:
        mapped = {frozenset((perm[i - 1], perm[j - 1])) for i, j in graph.edges}
        assert mapped == edge_set


def test_hamiltonian_basics(graph):
    ham = ss.build_hamiltonian(graph, ss.ModelParams(j=1.0, h=3.0))
    assert ham[0, 0] == -36.0
    assert np.array_equal(ham, ham.T)
    parity = ss.parity_operator_diagonal(12)
    commutator = ham * parity[None, :] - parity[:, None] * ham
    assert np.max(np.abs(commutator)) == 0.0


def test_hamiltonian_field_only_variant(graph):
    ham = ss.build_hamiltonian(graph, ss.ModelParams(j=0.0, h=2.0))
    diag = np.diag(ham)
    assert np.count_nonzero(ham - np.diag(diag)) == 0
    assert diag[0] == -24.0
    assert diag.min() == -24.0 and np.argmin(diag) == 0


def test_hamiltonian_automorphism_invariance(graph):
    ham = ss.build_hamiltonian(graph, ss.ModelParams(h=1.7))
    perm = next(p for p in ss.graph_automorphisms(graph, limit=4) if p != tuple(graph.vertices))
    n = 12
    idx = np.arange(1 << n)
    mapped = np.zeros_like(idx)
    for site in range(1, n + 1):
        bit = (idx >> (n - site)) & 1
        mapped |= bit << (n - perm[site - 1])
    permuted = ham[np.ix_(mapped, mapped)]
    assert np.array_equal(permuted, ham)


def test_classical_ground_energy(graph, cache_h0):
    oracle = classical_x_energies(graph)
    assert abs(cache_h0.energies[0] - oracle.min()) <= 1e-9
    assert cache_h0.ground_degeneracy == int(np.sum(oracle == oracle.min()))
    with pytest.raises(DegenerateGroundStateError):
        ss.ground_state(cache_h0)


def test_spectrum_cache_structure(cache_h3):
    assert cache_h3.dim == 4096
    assert np.all(np.diff(cache_h3.energies) >= -1e-12)
    assert abs(cache_h3.energies.sum()) <= 1e-7  # traceless Hamiltonian
    assert cache_h3.ground_degeneracy == 1


def test_ground_state_properties(graph, store, cache_h3):
    psi = ss.ground_state(cache_h3)
    assert abs(np.linalg.norm(psi.amplitudes) - 1.0) <= 1e-12
    obs = ss.observables(psi, graph)
    assert abs(obs["sx"]) <= 1e-10
    assert abs(obs["sy"]) <= 1e-10
    cache_high = store.get(ss.ModelParams(h=100.0))
    polarized = ss.ground_state(cache_high)
    assert abs(polarized.amplitudes[0]) ** 2 > 0.99


def test_thermal_state_limits(graph, cache_h3):
    for keep in [(1,), (1, 2), (1, 2, 3)]:
        hot = ss.thermal_state_rdm(cache_h3, 1e6, keep)
        dim = 1 << len(keep)
        assert np.max(np.abs(hot.matrix - np.eye(dim) / dim)) <= 1e-4
    cold = ss.thermal_state_rdm(cache_h3, 0.005, (1, 2))
    ground_rdm = partial_trace(ss.ground_state(cache_h3), (1, 2))
    assert np.max(np.abs(cold.matrix - ground_rdm.matrix)) <= 1e-10
    with pytest.raises(DomainError):
        ss.thermal_state_rdm(cache_h3, 0.0, (1,))


def _tiny_chain_graph():
    distance = np.array(
        [[0, 1, 2, 3], [1, 0, 1, 2], [2, 1, 0, 1], [3, 2, 1, 0]], dtype=int
    )
    return ss.IcosahedronGraph(
        vertices=(1, 2, 3, 4),
        edges=((1, 2), (2, 3), (3, 4)),
        faces=(),
        distance=distance,
        coordinates=np.zeros((4, 3)),
    )


def test_thermal_rdm_against_full_gibbs():
    graph = _tiny_chain_graph()
    params = ss.ModelParams(j=1.0, h=0.7)
    cache = ss.diagonalize(ss.build_hamiltonian(graph, params), params)
    for temperature in (0.3, 1.0, 5.0):
        weights = np.exp(-(cache.energies - cache.energies[0]) / temperature)
        weights /= weights.sum()
        gibbs = (cache.vectors * weights[None, :]) @ cache.vectors.T
        expected = partial_trace(DensityMatrix(gibbs.astype(complex)), (2, 3)).matrix
        got = ss.thermal_state_rdm(cache, temperature, (2, 3)).matrix
        assert np.max(np.abs(got - expected)) <= 1e-12


def test_quench_basics(graph, cache_h3):
    psi0 = ss.product_basis_state("101010101010")
    assert np.max(np.abs(ss.quench_state(cache_h3, psi0, 0.0).amplitudes - psi0.amplitudes)) <= 1e-12
    for t in (0.7, 2.3):
        assert abs(np.linalg.norm(ss.quench_state(cache_h3, psi0, t).amplitudes) - 1.0) <= 1e-12
    # an eigenstate only picks up a global phase: all reduced states stationary
    excited = ss.PureState(cache_h3.vectors[:, 5].astype(complex))
    before = partial_trace(excited, (1, 2)).matrix
    after = partial_trace(ss.quench_state(cache_h3, excited, 1.3), (1, 2)).matrix
    assert np.max(np.abs(after - before)) <= 1e-10


def test_quench_energy_conservation(graph, cache_h3):
    ham = ss.build_hamiltonian(graph, cache_h3.params)
    psi0 = ss.product_basis_state("110010011010")
    e0 = None
    for t in np.linspace(0.0, 10.0, 6):
        amps = ss.quench_state(cache_h3, psi0, float(t)).amplitudes
        energy = float(np.real(amps.conj() @ (ham @ amps)))
        e0 = energy if e0 is None else e0
        assert abs(energy - e0) <= 1e-10


def test_quench_series_matches_single_calls(cache_h3):
    psi0 = ss.product_basis_state("001100110011")
    times = np.array([0.0, 0.4, 1.1])
    series = ss.quench_series(cache_h3, psi0, times)
    for k, t in enumerate(times):
        single = ss.quench_state(cache_h3, psi0, float(t)).amplitudes
        assert np.max(np.abs(series[:, k] - single)) <= 1e-12


def test_product_basis_state_indexing():
    assert np.argmax(np.abs(ss.product_basis_state("0" * 12).amplitudes)) == 0
    assert np.argmax(np.abs(ss.product_basis_state("1" * 12).amplitudes)) == 4095
    assert np.argmax(np.abs(ss.product_basis_state("101010101010").amplitudes)) == 2730
    with pytest.raises(DomainError):
        ss.product_basis_state("0101")
    with pytest.raises(DomainError):
        ss.product_basis_state("2x1010101010")


def test_observables_polarized(graph):
    obs = ss.observables(ss.product_basis_state("0" * 12), graph)
    assert abs(obs["sz"] - 1.0) <= 1e-12
    for key in ("sxsx_conn", "sysy_conn", "szsz_conn"):
        assert abs(obs[key]) <= 1e-12


def test_observables_h0_antiferromagnetic(graph, cache_h0):
    obs = ss.thermal_observables(cache_h0, 1e-6, graph)
    # T -> 0+ equal-weights the classical manifold; x magnetization cancels
    assert abs(obs["sx"]) <= 1e-8
    oracle = classical_x_energies(graph)
    manifold = np.where(oracle == oracle.min())[0]
    n = 12
    bits = (manifold[:, None] >> (n - np.arange(1, n + 1))) & 1
    signs = 1 - 2 * bits
    bond_corr = np.mean(
        [np.mean(signs[:, i - 1] * signs[:, j - 1]) for i, j in graph.edges]
    )
    assert bond_corr < 0
    assert abs(obs["sxsx_conn"] - bond_corr) <= 1e-6


def test_frh_sweep(cache_h3):
    single = ss.frh_sweep(cache_h3, (1,))
    pair = ss.frh_sweep(cache_h3, (1, 2))
    face = ss.frh_sweep(cache_h3, (1, 2, 3))
    for sweep in (single, pair, face):
        assert len(sweep) == 4096
        lam = np.array([l for _, l in sweep])
        assert lam.min() > 0
    lam_single = np.array([l for _, l in single])
    assert np.all(lam_single <= 0.5 + 1e-12)
    lam_face = np.array([l for _, l in face])
    assert int(np.argmin(lam_face)) == 0
    energies = np.array([e for e, _ in face])
    assert np.all(np.diff(energies) >= -1e-12)
    with pytest.raises(DomainError):
        ss.frh_sweep(cache_h3, (1, 2, 3, 4))
