"""Differential evolution over semi-unitary matrices.

Agents are real vectors of length 2*k*r holding the interleaved real and
imaginary parts of a k x r matrix.  Each generation every member is mutated
against three distinct partners, reshaped back to a matrix, projected onto
the semi-unitary set (QR by default, polar as an alternative) and kept only
if it strictly improves the cached objective value, so the per-generation
best is non-increasing by construction.

Randomness is drawn from streams derived per (seed, generation, member),
which makes runs bit-reproducible and independent of evaluation order.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import RankDeficientError, RankMismatchError
from .linalg import haar_random, project_polar, project_qr, project_qr_batch
from .roof import objective, objective_batch

_PROJECTIONS = {"qr": project_qr, "polar": project_polar}


def unitary_to_vector(u):
    """Flatten a complex matrix to the real agent encoding (row-major,
    real/imaginary interleaved per entry)."""
    u = np.asarray(u, dtype=complex)
    x = np.empty(2 * u.size)
    x[0::2] = u.real.ravel()
    x[1::2] = u.imag.ravel()
    return x


def vector_to_matrix(x, k, r):
    """Inverse of ``unitary_to_vector`` for a k x r matrix."""
    x = np.asarray(x, dtype=float)
    if x.size != 2 * k * r:
        raise ValueError(f"agent of length {x.size} does not reshape to {k} x {r}")
    return (x[0::2] + 1j * x[1::2]).reshape(k, r)


def derive_seed(master, *parts):
    """Deterministic 64-bit child seed from a master seed and index tuple."""
    ss = np.random.SeedSequence([int(master), *(int(p) for p in parts)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _stream(seed, generation, member):
    return np.random.default_rng([int(seed), generation, member])


@dataclass
class DEConfig:
    """Hyperparameters of the unitary differential evolution."""

    f_weight: float = 0.1
    crossover: float = 0.9
    n_pop: int = 30
    n_max: int = 1024
    k: int | None = None  # decomposition size; None means the state rank
    projection: str = "qr"
    seed: int = 0
    parallel_eval: bool = False
    # optional stall detector, off by default: stop when the best J improved
    # by less than stall_tol over the last stall_generations generations
    stall_generations: int | None = None
    stall_tol: float = 1e-12

    def validate(self):
        if not 0.0 <= self.f_weight < 2.0:
            raise ValueError(f"f_weight must lie in [0, 2), got {self.f_weight}")
        if not 0.0 < self.crossover < 1.0:
            raise ValueError(f"crossover must lie in (0, 1), got {self.crossover}")
        if self.n_pop < 4:
            raise ValueError("mutation needs at least 4 distinct members")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if self.projection not in _PROJECTIONS:
            raise ValueError(f"unknown projection {self.projection!r}")


@dataclass
class DEResult:
    """Best member found, its objective value, and the run trace."""

    best_u: np.ndarray
    best_j: float
    history: np.ndarray  # best J per generation; entry 0 is the initial population
    evaluations: int
    seed: int
    resampled: int = 0


def differential_mutation(a, b, c, d, f_weight, crossover, rng):
    """One mutation/crossover draw.

    Per component j: with probability ``crossover`` take a[j] + F*(b[j]-c[j]),
    otherwise keep d[j].  No component is forced to cross over.
    """
    u = rng.random(len(a))
    return np.where(u < crossover, a + f_weight * (b - c), d)


def _pick_partners(rng, n_pop, i):
    idx = rng.choice(n_pop - 1, size=3, replace=False)
    idx[idx >= i] += 1
    return idx


def evolve(state, config, monotone=None):
    """Minimize J over k x r semi-unitaries by differential evolution.

    The population starts Haar-random; members are replaced only on strict
    improvement, so ``history`` is non-increasing.  Rank-deficient mutations
    (vanishingly rare) are replaced by fresh Haar draws and counted in
    ``resampled``.
    """
    config.validate()
    r = state.rank
    k = config.k if config.k is not None else r
    if k < r:
        raise RankMismatchError(f"k = {k} must be at least the state rank {r}")
    n_pop = config.n_pop
    seed = config.seed
    batched = monotone is None and not config.parallel_eval and config.projection == "qr"

    def evaluate_stack(us):
        if batched:
            return objective_batch(state, np.stack(us))
        if config.parallel_eval and monotone is None:
            with ThreadPoolExecutor() as pool:
                return np.fromiter(
                    pool.map(lambda u: objective(state, u), us),
                    dtype=float,
                    count=len(us),
                )
        return np.array([objective(state, u, monotone) for u in us])

    pop_u = [haar_random(k, r, _stream(seed, 0, i)) for i in range(n_pop)]
    pop = np.stack([unitary_to_vector(u) for u in pop_u])
    pop_j = evaluate_stack(pop_u)
    evaluations = n_pop
    resampled = 0
    history = [float(pop_j.min())]

    project = _PROJECTIONS[config.projection]
    for gen in range(1, config.n_max + 1):
        trials = np.empty((n_pop, pop.shape[1]))
        rngs = []
        for i in range(n_pop):
            rng = _stream(seed, gen, i)
            rngs.append(rng)
            a, b, c = _pick_partners(rng, n_pop, i)
            trials[i] = differential_mutation(
                pop[a], pop[b], pop[c], pop[i],
                config.f_weight, config.crossover, rng,
            )
        raw = (trials[:, 0::2] + 1j * trials[:, 1::2]).reshape(n_pop, k, r)
        if batched:
            projected, ok = project_qr_batch(raw)
            candidates = list(projected)
        else:
            candidates = [None] * n_pop
            ok = np.ones(n_pop, dtype=bool)
            for i in range(n_pop):
                try:
                    candidates[i] = project(raw[i])
                except RankDeficientError:
                    ok[i] = False
        for i in np.flatnonzero(~ok):
            candidates[i] = haar_random(k, r, rngs[i])
            resampled += 1
        cand_j = evaluate_stack(candidates)
        evaluations += n_pop
        for i in range(n_pop):
            if cand_j[i] < pop_j[i]:
                pop[i] = unitary_to_vector(candidates[i])
                pop_j[i] = cand_j[i]
        history.append(float(pop_j.min()))
        if (
            config.stall_generations is not None
            and len(history) > config.stall_generations
            and history[-1 - config.stall_generations] - history[-1]
            <= config.stall_tol
        ):
            break

    best = int(np.argmin(pop_j))
    return DEResult(
        best_u=vector_to_matrix(pop[best], k, r),
        best_j=float(pop_j[best]),
        history=np.asarray(history),
        evaluations=evaluations,
        seed=seed,
        resampled=resampled,
    )


def sweep_k(state, config, k_max, monotone=None):
    """Brute-force search over the decomposition size k = r .. k_max.

    Each k runs with a seed derived from (config.seed, k).  Returns the list
    of (k, DEResult) pairs and the k attaining the smallest objective.
    """
    if k_max < state.rank:
        raise RankMismatchError(f"k_max = {k_max} below state rank {state.rank}")
    results = []
    for k in range(state.rank, k_max + 1):
        cfg = replace(config, k=k, seed=derive_seed(config.seed, k))
        results.append((k, evolve(state, cfg, monotone)))
    best_k = min(results, key=lambda pair: pair[1].best_j)[0]
    return results, best_k
