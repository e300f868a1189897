"""Entanglement detectors, separability certificates and threshold solvers.

Three detectors are provided: the logarithmic negativity (natural log; the
zero crossings used for thresholds are base independent), an optimized
Frobenius distance to mixtures of product states, and a genuine 3-party
witness evaluated after maximization over local unitaries.  Certificates go
the other way: a ball of guaranteed-separable states around a full-rank
product center, with radius 2^(1-m/2) times its smallest eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

import numpy as np
from scipy.optimize import minimize

from .errors import BracketingError, DomainError, MonotonicityError, NumericalError
from .qstate import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityMatrix,
    frobenius_distance,
    kron,
    partial_transpose,
    trace_norm,
)
from .spin_system import SpectrumCache, thermal_state_rdm

LOG_NEGATIVITY_FLOOR = 1e-12
ZERO_CROSSING_FLOOR = 1e-8
# distances below this are declared effectively separable in reports
SEPARABLE_DISTANCE_FLOOR = 1e-4
FINITE_DIFF_STEP = 1e-6
MAX_PRODUCT_TERMS = 7

_PAULI_STACK = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])


@dataclass(frozen=True)
class OptimizerConfig:
    """Restart count, iteration budget, objective tolerance and RNG seed."""

    restarts: int = 20
    max_iter: int = 300
    tol: float = 1e-14
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise DomainError(f"restarts must be >= 1, got {self.restarts}")
        if self.tol <= 0:
            raise DomainError(f"tolerance must be positive, got {self.tol}")


DEFAULT_DISTANCE_CONFIG = OptimizerConfig(restarts=20, max_iter=1500, tol=1e-14, seed=0)
DEFAULT_WITNESS_CONFIG = OptimizerConfig(restarts=50, max_iter=600, tol=1e-12, seed=0)


def _as_matrix(rho: Union[DensityMatrix, np.ndarray]) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)


def log_negativity(rho: DensityMatrix, partition: Sequence[int]) -> float:
    """Natural log of the trace norm of the partial transpose.

    Values below 1e-12 are clipped to exactly 0.  For two qubits a zero result
    certifies separability; a positive one always certifies entanglement.
    """
    if len(partition) == 0 or len(partition) >= rho.n_sites:
        raise DomainError(f"partition {tuple(partition)} must be a nontrivial subset of {rho.sites}")
    val = float(np.log(trace_norm(partial_transpose(rho, partition))))
    return 0.0 if val < LOG_NEGATIVITY_FLOOR else val


# ---------------------------------------------------------------------------
# distance to the separable set, by multi-start quasi-Newton descent
# ---------------------------------------------------------------------------


def _softmax(theta: np.ndarray) -> np.ndarray:
    shifted = theta - theta.max(axis=-1, keepdims=True)
    w = np.exp(shifted)
    return w / w.sum(axis=-1, keepdims=True)


def _bloch_vectors(u: np.ndarray) -> np.ndarray:
    # r = u * tanh(|u|)/|u| keeps |r| < 1 for every unconstrained u, smoothly
    norm = np.linalg.norm(u, axis=-1)
    small = norm < 1e-8
    safe = np.where(small, 1.0, norm)
    scale = np.where(small, 1.0 - norm * norm / 3.0, np.tanh(safe) / safe)
    return u * scale[..., None]


def _mixture_matrices(x: np.ndarray, n_terms: int, n_parties: int) -> np.ndarray:
    """Map flat parameters (possibly batched) to the represented mixed state."""
    x = np.asarray(x, dtype=float)
    lead = x.shape[:-1]
    k, m = n_terms, n_parties
    w = _softmax(x[..., :k])
    u = x[..., k:].reshape(lead + (k, m, 3))
    r = _bloch_vectors(u)
    mats = 0.5 * (np.eye(2, dtype=np.complex128) + np.einsum("...c,cij->...ij", r, _PAULI_STACK))
    prod = mats[..., 0, :, :]
    for site in range(1, m):
        d1 = prod.shape[-1]
        prod = np.einsum("...ij,...kl->...ikjl", prod, mats[..., site, :, :]).reshape(
            lead + (k, 2 * d1, 2 * d1)
        )
    return np.einsum("...k,...kij->...ij", w, prod)


@dataclass(frozen=True)
class ProductMixtureAnsatz:
    """Convex mixture of Bloch-vector product states, in unconstrained coordinates.

    Weights are the softmax of the first ``n_terms`` parameters; each site's
    Bloch vector is a 3-vector squashed to the open unit ball, so every
    parameter value represents a valid full-rank separable state.
    """

    n_parties: int
    n_terms: int
    params: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_terms <= MAX_PRODUCT_TERMS:
            raise DomainError(f"n_terms must be in 1..{MAX_PRODUCT_TERMS}, got {self.n_terms}")
        expected = self.n_terms + 3 * self.n_terms * self.n_parties
        params = np.asarray(self.params, dtype=float)
        if params.shape != (expected,):
            raise DomainError(f"expected {expected} parameters, got shape {params.shape}")
        object.__setattr__(self, "params", params)

    @classmethod
    def random(cls, n_parties: int, n_terms: int, rng: np.random.Generator) -> "ProductMixtureAnsatz":
        size = n_terms + 3 * n_terms * n_parties
        return cls(n_parties=n_parties, n_terms=n_terms, params=rng.standard_normal(size))

    def weights(self) -> np.ndarray:
        return _softmax(self.params[: self.n_terms])

    def bloch_vectors(self) -> np.ndarray:
        u = self.params[self.n_terms :].reshape(self.n_terms, self.n_parties, 3)
        return _bloch_vectors(u)

    def density_matrix(self) -> DensityMatrix:
        return DensityMatrix(_mixture_matrices(self.params, self.n_terms, self.n_parties))


def _central_difference_grad(batch_fn, x: np.ndarray, step: float = FINITE_DIFF_STEP) -> np.ndarray:
    p = x.size
    probes = np.tile(x, (2 * p, 1))
    probes[np.arange(p), np.arange(p)] += step
    probes[p + np.arange(p), np.arange(p)] -= step
    vals = batch_fn(probes)
    return (vals[:p] - vals[p:]) / (2.0 * step)


# mutation step sizes cycled through while hopping around the incumbent
_HOP_SIGMAS = (0.01, 0.03, 0.1, 0.3, 1.0)
_EXPLORE_STARTS_PER_K = 3


def geometric_entanglement(
    rho: DensityMatrix,
    n_parties: int | None = None,
    config: OptimizerConfig | None = None,
) -> tuple[float, ProductMixtureAnsatz]:
    """Upper bound on the Frobenius distance from ``rho`` to the separable set.

    Quasi-Newton descent (L-BFGS on central-finite-difference gradients) over
    the mixture ansatz, multi-started in three seeded stages: an exploration
    sweep over K = 1..7 term counts (each warm-started from the best K-1
    solution plus fresh random starts), then ``restarts`` mutation hops around
    the incumbent, then one deep final polish.  Every start derives from the
    config seed, so results are reproducible, and the best value can only
    improve when the restart budget grows.  The returned value is an upper
    bound on the true distance; the certificate reproduces it exactly.
    """
    cfg = config or DEFAULT_DISTANCE_CONFIG
    m = rho.n_sites if n_parties is None else n_parties
    if m != rho.n_sites:
        raise DomainError(f"state lives on {rho.n_sites} sites, not {m}")
    if m not in (2, 3):
        raise DomainError(f"supported party counts are 2 and 3, got {m}")
    target = rho.matrix

    def batch_obj(x, k):
        diff = _mixture_matrices(x, k, m) - target
        return np.sum(diff.real**2 + diff.imag**2, axis=(-2, -1))

    def descend(x0, k, maxiter):
        res = minimize(
            lambda x: float(batch_obj(x, k)),
            x0,
            jac=lambda x: _central_difference_grad(lambda b: batch_obj(b, k), x),
            method="L-BFGS-B",
            options={"maxiter": maxiter, "ftol": 1e-18, "gtol": 1e-13},
        )
        if not np.isfinite(res.fun):
            raise NumericalError(f"distance objective became non-finite (K={k})")
        return float(res.fun), res.x

    best_obj = math.inf
    best_x: np.ndarray | None = None
    best_k = 0

    # stage 1: sweep term counts, warm-starting each from the previous best
    for k in range(1, MAX_PRODUCT_TERMS + 1):
        n_params = k + 3 * k * m
        starts = []
        rng_warm = np.random.default_rng([cfg.seed, k, 0])
        if best_k == k - 1 and best_x is not None:
            theta_old, u_old = best_x[: k - 1], best_x[k - 1 :]
            starts.append(
                np.concatenate(
                    [theta_old, [theta_old.min() - 8.0], u_old, 0.1 * rng_warm.standard_normal(3 * m)]
                )
            )
        for slot in range(1, _EXPLORE_STARTS_PER_K + 1):
            starts.append(np.random.default_rng([cfg.seed, k, slot]).standard_normal(n_params))
        for x0 in starts:
            obj, x = descend(x0, k, cfg.max_iter)
            if obj < best_obj:
                best_obj, best_x, best_k = obj, x, k
        if best_obj <= cfg.tol:
            break

    # stage 2: seeded mutation hops around the incumbent
    if best_obj > cfg.tol:
        for hop in range(cfg.restarts):
            sigma = _HOP_SIGMAS[hop % len(_HOP_SIGMAS)]
            noise = np.random.default_rng([cfg.seed, 97, hop]).standard_normal(best_x.size)
            obj, x = descend(best_x + sigma * noise, best_k, cfg.max_iter)
            if obj < best_obj:
                best_obj, best_x = obj, x
            if best_obj <= cfg.tol:
                break

    # stage 3: deep polish rounds on the best point, repeated while they help
    for _ in range(3):
        if best_obj <= cfg.tol:
            break
        obj, x = descend(best_x, best_k, min(25 * cfg.max_iter, 50_000))
        if obj >= best_obj * (1.0 - 1e-3):
            if obj < best_obj:
                best_obj, best_x = obj, x
            break
        best_obj, best_x = obj, x

    assert best_x is not None
    ansatz = ProductMixtureAnsatz(n_parties=m, n_terms=best_k, params=best_x)
    return math.sqrt(max(best_obj, 0.0)), ansatz


# ---------------------------------------------------------------------------
# genuine 3-party witness
# ---------------------------------------------------------------------------


def _w_raw(mat: np.ndarray) -> float:
    d = np.maximum(mat.diagonal().real, 0.0)
    off = abs(mat[1, 2]) + abs(mat[1, 4]) + abs(mat[2, 4])
    roots = math.sqrt(d[0] * d[3]) + math.sqrt(d[0] * d[5]) + math.sqrt(d[0] * d[6])
    pops = 0.5 * (mat[1, 1].real + mat[2, 2].real + mat[4, 4].real)
    return float(off - roots - pops)


def gme_W_raw(rho: Union[DensityMatrix, np.ndarray]) -> float:
    """Fixed-basis 3-party witness value; may be negative.

    Written against the pinned basis layout where 1-based matrix indices 1..8
    enumerate |000>..|111>:

        |rho_23| + |rho_25| + |rho_35|
        - sqrt(rho_11 rho_44) - sqrt(rho_11 rho_66) - sqrt(rho_11 rho_77)
        - (rho_22 + rho_33 + rho_55) / 2
    """
    mat = _as_matrix(rho)
    if mat.shape != (8, 8):
        raise DomainError(f"witness requires an 8x8 three-qubit state, got {mat.shape}")
    return _w_raw(mat)


def _zyz_unitary(alpha: float, beta: float, gamma: float) -> np.ndarray:
    cb, sb = math.cos(beta / 2.0), math.sin(beta / 2.0)
    ry = np.array([[cb, -sb], [sb, cb]], dtype=np.complex128)
    rz_a = np.array([[np.exp(-0.5j * alpha), 0.0], [0.0, np.exp(0.5j * alpha)]])
    rz_g = np.array([[np.exp(-0.5j * gamma), 0.0], [0.0, np.exp(0.5j * gamma)]])
    return rz_a @ ry @ rz_g


@dataclass(frozen=True)
class LocalUnitaryTriple:
    """One 2x2 unitary per site from ZYZ Euler angles, global phase dropped."""

    angles: np.ndarray  # shape (3, 3): rows are (alpha, beta, gamma) per site

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        if angles.shape != (3, 3):
            raise DomainError(f"expected a (3, 3) angle array, got {angles.shape}")
        object.__setattr__(self, "angles", angles)

    def unitaries(self) -> list[np.ndarray]:
        return [_zyz_unitary(*row) for row in self.angles]

    def matrix(self) -> np.ndarray:
        return kron(self.unitaries())


def gme_W(rho: Union[DensityMatrix, np.ndarray], config: OptimizerConfig | None = None) -> float:
    """Witness maximized over local unitaries; positive values certify 3-party GME.

    Gradient-free simplex search over the 9 Euler angles with seeded random
    restarts; restart 0 is the identity rotation, so the result never falls
    below the fixed-basis value.  Non-positive maxima are reported as 0.
    """
    cfg = config or DEFAULT_WITNESS_CONFIG
    mat = _as_matrix(rho)
    if mat.shape != (8, 8):
        raise DomainError(f"witness requires an 8x8 three-qubit state, got {mat.shape}")

    def negative_w(angles: np.ndarray) -> float:
        u = LocalUnitaryTriple(angles.reshape(3, 3)).matrix()
        return -_w_raw(u @ mat @ u.conj().T)

    best = _w_raw(mat)
    for restart in range(cfg.restarts):
        if restart == 0:
            x0 = np.zeros(9)
        else:
            x0 = np.random.default_rng([cfg.seed, restart]).uniform(0.0, 2.0 * math.pi, 9)
        res = minimize(
            negative_w,
            x0,
            method="Nelder-Mead",
            options={"maxiter": cfg.max_iter, "xatol": 1e-6, "fatol": 1e-12},
        )
        if np.isfinite(res.fun):
            best = max(best, float(-res.fun))
    return max(0.0, best)


# ---------------------------------------------------------------------------
# separable-ball certificates and thresholds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeparableBall:
    """Frobenius ball around a full-rank product state; everything inside is separable."""

    center: DensityMatrix
    n_parties: int
    radius: float


def separable_ball(center: DensityMatrix, n_parties: int | None = None) -> SeparableBall:
    """Certificate ball of radius 2^(1-m/2) * lambda_min around a product center.

    The center must be an explicitly constructed product of single-site states;
    product-ness of an arbitrary matrix is not verified here.  Rank-deficient
    centers sit on the boundary of the separable set and carry no ball.
    """
    m = center.n_sites if n_parties is None else n_parties
    if m != center.n_sites:
        raise DomainError(f"center lives on {center.n_sites} sites, not {m}")
    lam_min = center.min_eigenvalue()
    if lam_min <= 1e-12:
        raise DomainError(f"center is rank deficient (lambda_min={lam_min:.3e}); no ball exists")
    return SeparableBall(center=center, n_parties=m, radius=float(2.0 ** (1.0 - m / 2.0) * lam_min))


def in_separable_ball(ball: SeparableBall, rho: DensityMatrix) -> bool:
    """True certifies separability of ``rho``; False is inconclusive."""
    if rho.dim != ball.center.dim:
        raise DomainError(f"dimension mismatch: {rho.dim} vs {ball.center.dim}")
    return frobenius_distance(rho, ball.center) <= ball.radius


def temperature_threshold(
    cache: SpectrumCache,
    keep: Sequence[int],
    ball: SeparableBall,
    t_range: tuple[float, float],
    precision: float = 1e-3,
    scan_points: int = 16,
) -> float:
    """Temperature above which the reduced Gibbs state is inside the ball.

    Requires the gap g(T) = distance(rho_A(T), center) - radius to be monotone
    decreasing on a coarse scan of ``t_range``; then bisects the sign change to
    ``precision`` and returns the certified (inside) end of the final bracket.
    """
    lo, hi = t_range
    if not (0 < lo < hi):
        raise DomainError(f"invalid temperature range {t_range}")

    def gap(t: float) -> float:
        return frobenius_distance(thermal_state_rdm(cache, t, keep), ball.center) - ball.radius

    ts = np.linspace(lo, hi, scan_points)
    gaps = [gap(t) for t in ts]
    for a, b in zip(gaps, gaps[1:]):
        if b > a + 1e-12:
            table = ", ".join(f"g({t:.4g})={v:.4g}" for t, v in zip(ts, gaps))
            raise MonotonicityError(f"ball gap is not monotone decreasing on scan: {table}")
    if not (gaps[0] > 0 and gaps[-1] <= 0):
        raise BracketingError(
            f"no sign change in [{lo}, {hi}]: g({lo})={gaps[0]:.4g}, g({hi})={gaps[-1]:.4g}"
        )
    idx = next(i for i in range(len(ts) - 1) if gaps[i + 1] <= 0)
    t_out, t_in = float(ts[idx]), float(ts[idx + 1])
    while t_in - t_out > precision:
        mid = 0.5 * (t_out + t_in)
        if gap(mid) > 0:
            t_out = mid
        else:
            t_in = mid
    return t_in


def zero_crossing(
    curve: Iterable[tuple[float, float]], floor: float = ZERO_CROSSING_FLOOR
) -> float | None:
    """Largest s with value above ``floor``, interpolated against the next grid point.

    Returns None when the whole curve sits at or below the floor, and
    ``math.inf`` when the last point is still above it (crossing beyond range).
    """
    pts = [(float(s), float(v)) for s, v in curve]
    if any(s1 <= s0 for (s0, _), (s1, _) in zip(pts, pts[1:])):
        raise DomainError("curve must be sorted strictly ascending in s")
    above = [i for i, (_, v) in enumerate(pts) if v > floor]
    if not above:
        return None
    i = above[-1]
    if i == len(pts) - 1:
        return math.inf
    s0, v0 = pts[i]
    s1, v1 = pts[i + 1]
    return s0 + (v0 - floor) * (s1 - s0) / (v0 - v1)


def refine_boundary(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    floor: float = ZERO_CROSSING_FLOOR,
    xtol: float = 1e-2,
    max_steps: int = 60,
) -> float:
    """Bisect the boundary of {s : fn(s) > floor} inside [lo, hi].

    Used to sharpen grid-level crossings once a bracketing interval is known.
    """
    above_lo = fn(lo) > floor
    above_hi = fn(hi) > floor
    if above_lo == above_hi:
        raise BracketingError(f"fn - floor does not change side on [{lo}, {hi}]")
    steps = 0
    while hi - lo > xtol and steps < max_steps:
        mid = 0.5 * (lo + hi)
        if (fn(mid) > floor) == above_lo:
            lo = mid
        else:
            hi = mid
        steps += 1
    return 0.5 * (lo + hi)
