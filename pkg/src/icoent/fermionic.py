"""Constructive biseparable decompositions for parity-superselected modes.

A fermionic separable state is a mixture of products of single-mode states
that commute with the local parity, i.e. (I/2 + a sigma^z) in the occupation
basis.  Perturbing each factor by eps * (b sigma^x + c sigma^y) breaks local
parity; pairing every perturbed term with its sign-flipped mirror cancels all
odd powers of eps, so the assembled state keeps exact even total parity.  The
resulting state admits an explicit biseparable decomposition for 3 and 4
modes, valid up to a computable eps threshold.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .qstate import SIGMA_X, SIGMA_Y, DensityMatrix, kron, reorder_sites

PSD_FLOOR = -1e-12
PARITY_COMMUTATOR_TOL = 1e-13
RECONSTRUCTION_TOL = 1e-12
AMPLITUDE_ATOL = 1e-9


@dataclass(frozen=True)
class EvenModeState:
    """Single-mode state I/2 + a sigma^z; commutes with the mode parity."""

    a: float

    def __post_init__(self):
        if abs(self.a) > 0.5:
            raise DomainError(f"mode amplitude must satisfy |a| <= 1/2, got {self.a}")

    def matrix(self) -> np.ndarray:
        return np.array([[0.5 + self.a, 0.0], [0.0, 0.5 - self.a]], dtype=np.complex128)


@dataclass(frozen=True)
class ParityBreakingPerturbation:
    """Traceless Hermitian b sigma^x + c sigma^y; anticommutes with the mode parity."""

    b: float
    c: float

    def matrix(self) -> np.ndarray:
        return self.b * SIGMA_X + self.c * SIGMA_Y

    def negated(self) -> "ParityBreakingPerturbation":
        return ParityBreakingPerturbation(-self.b, -self.c)

    @property
    def is_zero(self) -> bool:
        return self.b == 0.0 and self.c == 0.0

    @property
    def magnitude_sq(self) -> float:
        return self.b * self.b + self.c * self.c


@dataclass(frozen=True)
class EnsembleTerm:
    weight: float
    modes: tuple[EvenModeState, ...]
    perturbations: tuple[ParityBreakingPerturbation, ...]


@dataclass(frozen=True)
class FermionicEnsemble:
    """Mirrored-pair ensemble; consecutive terms carry opposite perturbations.

    The mirror structure makes every odd power of the perturbation cancel
    term by term, which is what keeps the assembled state commuting with the
    total parity exactly.
    """

    n_modes: int
    terms: tuple[EnsembleTerm, ...]

    def __post_init__(self):
        if self.n_modes not in (3, 4):
            raise DomainError(f"supported mode counts are 3 and 4, got {self.n_modes}")
        if len(self.terms) == 0 or len(self.terms) % 2 != 0:
            raise DomainError("ensemble must consist of mirrored term pairs")
        total = 0.0
        for term in self.terms:
            if term.weight <= 0:
                raise DomainError(f"weights must be positive, got {term.weight}")
            if len(term.modes) != self.n_modes or len(term.perturbations) != self.n_modes:
                raise DomainError(f"terms must carry {self.n_modes} modes")
            for mode, pert in zip(term.modes, term.perturbations):
                if abs(mode.a) == 0.5 and not pert.is_zero:
                    raise DomainError(
                        "no parity-breaking perturbation is allowed on a pure mode (a = +-1/2)"
                    )
            total += term.weight
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"weights must sum to 1, got {total!r}")
        for plus, minus in zip(self.terms[0::2], self.terms[1::2]):
            same_modes = all(p.a == q.a for p, q in zip(plus.modes, minus.modes))
            mirrored = all(
                q.b == -p.b and q.c == -p.c
                for p, q in zip(plus.perturbations, minus.perturbations)
            )
            if plus.weight != minus.weight or not same_modes or not mirrored:
                raise DomainError("terms must come in (+omega, -omega) mirror pairs")

    def base_pairs(self) -> list[tuple[float, tuple[EvenModeState, ...], tuple[ParityBreakingPerturbation, ...]]]:
        """One representative per mirror pair, carrying the combined weight."""
        return [(2.0 * t.weight, t.modes, t.perturbations) for t in self.terms[0::2]]


def build_mirrored_ensemble(
    base: Iterable[tuple[float, Sequence[float], Sequence[tuple[float, float]]]],
    n_modes: int,
) -> FermionicEnsemble:
    """Split each base term (weight, {a_j}, {(b_j, c_j)}) into a +-omega mirror pair.

    Base weights must be positive; they are normalized to sum 1.  A pure mode
    (a = +-1/2) admits no perturbation and is rejected if one is requested.
    """
    base = list(base)
    if not base:
        raise DomainError("ensemble needs at least one base term")
    total = sum(w for w, _, _ in base)
    if any(w <= 0 for w, _, _ in base) or total <= 0:
        raise DomainError("base weights must be positive")
    terms: list[EnsembleTerm] = []
    for weight, amps, omegas in base:
        if len(amps) != n_modes or len(omegas) != n_modes:
            raise DomainError(f"each base term must list {n_modes} modes")
        modes = tuple(EvenModeState(float(a)) for a in amps)
        perts = tuple(ParityBreakingPerturbation(float(b), float(c)) for b, c in omegas)
        for mode, pert in zip(modes, perts):
            if abs(mode.a) == 0.5 and not pert.is_zero:
                raise DomainError(
                    f"mode with a={mode.a} is pure; its perturbation must vanish"
                )
        half = 0.5 * weight / total
        terms.append(EnsembleTerm(half, modes, perts))
        terms.append(EnsembleTerm(half, modes, tuple(p.negated() for p in perts)))
    return FermionicEnsemble(n_modes=n_modes, terms=tuple(terms))


def random_ensemble(rng: np.random.Generator, n_modes: int, max_base_terms: int = 3) -> FermionicEnsemble:
    """Fuzzing distribution: a uniform in [-0.45, 0.45], omega uniform on the unit disk."""
    k = int(rng.integers(1, max_base_terms + 1))
    weights = rng.dirichlet(np.ones(k))
    base = []
    for i in range(k):
        amps = rng.uniform(-0.45, 0.45, n_modes)
        radii = np.sqrt(rng.uniform(0.0, 1.0, n_modes))
        angles = rng.uniform(0.0, 2.0 * math.pi, n_modes)
        omegas = [(r * math.cos(t), r * math.sin(t)) for r, t in zip(radii, angles)]
        base.append((float(weights[i]), amps.tolist(), omegas))
    return build_mirrored_ensemble(base, n_modes)


def amplitude_bound_satisfied(ensemble: FermionicEnsemble, eps: float) -> bool:
    """Per-mode positivity budget a^2 + eps^2 (b^2 + c^2) <= 1/4 for every term."""
    for term in ensemble.terms:
        for mode, pert in zip(term.modes, term.perturbations):
            if mode.a**2 + eps**2 * pert.magnitude_sq > 0.25 + AMPLITUDE_ATOL:
                return False
    return True


def amplitude_bound_max_eps(ensemble: FermionicEnsemble) -> float:
    """Largest eps allowed by the per-mode budget; inf when every omega vanishes."""
    bounds = [
        math.sqrt((0.25 - mode.a**2) / pert.magnitude_sq)
        for term in ensemble.terms
        for mode, pert in zip(term.modes, term.perturbations)
        if not pert.is_zero
    ]
    return min(bounds) if bounds else math.inf


def assemble_rho_eps(ensemble: FermionicEnsemble, eps: float) -> DensityMatrix:
    """Assemble the mirrored-pair state at perturbation strength ``eps``.

    Mirroring kills every odd power of eps, so only even subsets of perturbed
    modes survive: for each base term the state is the sum over even-size mode
    subsets S of eps^|S| * (omega on S, rho elsewhere).
    """
    if eps < 0:
        raise DomainError(f"eps must be nonnegative, got {eps}")
    if not amplitude_bound_satisfied(ensemble, eps):
        raise DomainError(f"amplitude bound violated at eps={eps}")
    m = ensemble.n_modes
    dim = 1 << m
    total = np.zeros((dim, dim), dtype=np.complex128)
    for weight, modes, perts in ensemble.base_pairs():
        rho_mats = [mode.matrix() for mode in modes]
        omega_mats = [pert.matrix() for pert in perts]
        for size in range(0, m + 1, 2):
            for subset in itertools.combinations(range(m), size):
                factors = [omega_mats[j] if j in subset else rho_mats[j] for j in range(m)]
                total += weight * eps**size * kron(factors)
    return DensityMatrix(total, sites=tuple(range(1, m + 1)))


def _block_parity_signs(n_modes: int) -> np.ndarray:
    idx = np.arange(1 << n_modes)
    bits = np.array([bin(i).count("1") for i in idx])
    return np.where(bits % 2 == 0, 1.0, -1.0)


@dataclass(frozen=True)
class DecompositionComponent:
    """One bipartition-product term: weight * (left block) x (right block)."""

    weight: float
    left_sites: tuple[int, ...]
    right_sites: tuple[int, ...]
    left: np.ndarray
    right: np.ndarray

    @property
    def label(self) -> str:
        return "".join(map(str, self.left_sites)) + "|" + "".join(map(str, self.right_sites))

    def min_eigenvalue(self) -> float:
        return float(
            min(np.linalg.eigvalsh(self.left)[0], np.linalg.eigvalsh(self.right)[0])
        )

    def parity_commutator(self) -> float:
        worst = 0.0
        for block, sites in ((self.left, self.left_sites), (self.right, self.right_sites)):
            signs = _block_parity_signs(len(sites))
            worst = max(worst, float(np.max(np.abs(block * np.outer(signs, signs) - block))))
        return worst

    def full_matrix(self, n_modes: int) -> np.ndarray:
        order = self.left_sites + self.right_sites
        return reorder_sites(np.kron(self.left, self.right), order, tuple(range(1, n_modes + 1)))


@dataclass(frozen=True)
class BiseparableDecomposition:
    """Convex combination of bipartition products reconstructing the target state."""

    n_modes: int
    eps: float
    components: tuple[DecompositionComponent, ...]
    valid: bool

    def reconstruct(self) -> np.ndarray:
        dim = 1 << self.n_modes
        out = np.zeros((dim, dim), dtype=np.complex128)
        for comp in self.components:
            out += comp.weight * comp.full_matrix(self.n_modes)
        return out


def _components_valid(components: Sequence[DecompositionComponent]) -> bool:
    return all(comp.min_eigenvalue() >= PSD_FLOOR for comp in components)


def biseparable_decomposition_m3(ensemble: FermionicEnsemble, eps: float) -> BiseparableDecomposition:
    """Three-mode split: weight/3 on each bipartition i|jk with pair blocks
    rho_j x rho_k + 3 eps^2 omega_j x omega_k.

    Beyond the positivity threshold the decomposition is still returned, with
    ``valid`` set to False.
    """
    if ensemble.n_modes != 3:
        raise DomainError(f"three-mode decomposition needs n_modes=3, got {ensemble.n_modes}")
    if eps < 0 or not amplitude_bound_satisfied(ensemble, eps):
        raise DomainError(f"amplitude bound violated at eps={eps}")
    comps: list[DecompositionComponent] = []
    for weight, modes, perts in ensemble.base_pairs():
        rho = [mode.matrix() for mode in modes]
        omega = [pert.matrix() for pert in perts]
        for i in range(3):
            j, k = (x for x in range(3) if x != i)
            pair_block = np.kron(rho[j], rho[k]) + 3.0 * eps**2 * np.kron(omega[j], omega[k])
            comps.append(
                DecompositionComponent(
                    weight=weight / 3.0,
                    left_sites=(i + 1,),
                    right_sites=(j + 1, k + 1),
                    left=rho[i],
                    right=pair_block,
                )
            )
    components = tuple(comps)
    return BiseparableDecomposition(3, eps, components, _components_valid(components))


def biseparable_decomposition_m4(ensemble: FermionicEnsemble, eps: float) -> BiseparableDecomposition:
    """Four-mode split: two (rho rho +- sqrt(7) eps^2 omega omega) halves on the
    fixed bipartition 12|34 plus six pair components rho rho x (rho rho +
    7 eps^2 omega omega), one per mode pair."""
    if ensemble.n_modes != 4:
        raise DomainError(f"four-mode decomposition needs n_modes=4, got {ensemble.n_modes}")
    if eps < 0 or not amplitude_bound_satisfied(ensemble, eps):
        raise DomainError(f"amplitude bound violated at eps={eps}")
    root7 = math.sqrt(7.0)
    comps: list[DecompositionComponent] = []
    for weight, modes, perts in ensemble.base_pairs():
        rho = [mode.matrix() for mode in modes]
        omega = [pert.matrix() for pert in perts]
        for sign in (1.0, -1.0):
            left = np.kron(rho[0], rho[1]) + sign * root7 * eps**2 * np.kron(omega[0], omega[1])
            right = np.kron(rho[2], rho[3]) + sign * root7 * eps**2 * np.kron(omega[2], omega[3])
            comps.append(
                DecompositionComponent(
                    weight=weight / 14.0,
                    left_sites=(1, 2),
                    right_sites=(3, 4),
                    left=left,
                    right=right,
                )
            )
        for pair in itertools.combinations(range(4), 2):
            plain = tuple(x for x in range(4) if x not in pair)
            left = np.kron(rho[plain[0]], rho[plain[1]])
            right = np.kron(rho[pair[0]], rho[pair[1]]) + 7.0 * eps**2 * np.kron(
                omega[pair[0]], omega[pair[1]]
            )
            comps.append(
                DecompositionComponent(
                    weight=weight / 7.0,
                    left_sites=(plain[0] + 1, plain[1] + 1),
                    right_sites=(pair[0] + 1, pair[1] + 1),
                    left=left,
                    right=right,
                )
            )
    components = tuple(comps)
    return BiseparableDecomposition(4, eps, components, _components_valid(components))


def biseparable_decomposition(ensemble: FermionicEnsemble, eps: float) -> BiseparableDecomposition:
    if ensemble.n_modes == 3:
        return biseparable_decomposition_m3(ensemble, eps)
    return biseparable_decomposition_m4(ensemble, eps)


@dataclass(frozen=True)
class VerificationReport:
    """Numerical audit of a decomposition against its target state."""

    min_component_eigenvalue: float
    max_parity_commutator: float
    reconstruction_error: float
    n_components: int
    passed: bool


def verify_decomposition(decomp: BiseparableDecomposition, target: DensityMatrix) -> VerificationReport:
    """Check component positivity, block parity symmetry and reconstruction.

    Report-only: thresholds are PSD >= -1e-12, commutators <= 1e-13 and
    reconstruction error <= 1e-12.
    """
    min_eig = min(comp.min_eigenvalue() for comp in decomp.components)
    max_comm = max(comp.parity_commutator() for comp in decomp.components)
    recon_err = float(np.linalg.norm(decomp.reconstruct() - target.matrix))
    passed = (
        min_eig >= PSD_FLOOR
        and max_comm <= PARITY_COMMUTATOR_TOL
        and recon_err <= RECONSTRUCTION_TOL
    )
    return VerificationReport(
        min_component_eigenvalue=min_eig,
        max_parity_commutator=max_comm,
        reconstruction_error=recon_err,
        n_components=len(decomp.components),
        passed=passed,
    )


def epsilon_star(ensemble: FermionicEnsemble, precision: float = 1e-8) -> float:
    """Largest eps with every decomposition component positive semidefinite.

    Jointly bounded by the per-mode amplitude budget and component positivity;
    bisected to ``precision`` and returned from the certified-valid side.
    When every perturbation vanishes eps is irrelevant and inf is returned.
    """
    eps_amp = amplitude_bound_max_eps(ensemble)
    if math.isinf(eps_amp):
        return math.inf

    def components_ok(eps: float) -> bool:
        return _components_valid(biseparable_decomposition(ensemble, eps).components)

    if components_ok(eps_amp):
        return eps_amp
    lo, hi = 0.0, eps_amp
    while hi - lo > precision:
        mid = 0.5 * (lo + hi)
        if components_ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def local_parity_twirl(mat: np.ndarray, n_modes: int) -> np.ndarray:
    """Average of conjugations by every product of single-mode parities.

    The twirl projects onto the per-mode parity-symmetric sector, so it leaves
    a state invariant exactly when no local parity structure is broken.
    """
    dim = 1 << n_modes
    out = np.zeros((dim, dim), dtype=np.complex128)
    idx = np.arange(dim)
    for subset_bits in range(1 << n_modes):
        signs = np.where(np.array([bin(i & subset_bits).count("1") for i in idx]) % 2 == 0, 1.0, -1.0)
        out += mat * np.outer(signs, signs)
    return out / (1 << n_modes)
