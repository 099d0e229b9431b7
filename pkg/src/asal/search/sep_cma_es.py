"""Separable CMA-ES: diagonal-covariance evolution strategy.

Keeps only per-dimension variances, so memory and per-generation cost
are linear in the dimension and the optimizer copes with genomes in the
thousands of dimensions. Uses the diagonal-specific learning rates for
the rank-1/rank-mu updates; step size adapts by cumulative path length.

Minimizes fitness. ask() and tell() are pure with respect to the state
object: tell() returns a fresh state, which is what checkpoints pickle.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

_VAR_FLOOR = 1e-30
_SIGMA_BOUNDS = (1e-20, 1e20)


@dataclass(frozen=True)
class SepCmaState:
    mean: np.ndarray
    sigma: float
    diag_cov: np.ndarray  # per-dimension variances
    path_sigma: np.ndarray
    path_c: np.ndarray
    generation: int

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def sep_cma_init(x0: np.ndarray, sigma0: float) -> SepCmaState:
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim != 1:
        raise ValueError("x0 must be a flat vector")
    if not sigma0 > 0:
        raise ValueError("sigma0 must be positive")
    d = x0.shape[0]
    return SepCmaState(
        mean=x0.copy(),
        sigma=float(sigma0),
        diag_cov=np.ones(d),
        path_sigma=np.zeros(d),
        path_c=np.zeros(d),
        generation=0,
    )


def _weights(pop: int) -> tuple[np.ndarray, float]:
    mu = pop // 2
    raw = np.log((pop + 1) / 2.0) - np.log(np.arange(1, mu + 1))
    w = raw / raw.sum()
    mu_eff = 1.0 / float(w @ w)
    return w, mu_eff


def sep_cma_ask(
    state: SepCmaState, rng: np.random.Generator, pop: int
) -> np.ndarray:
    """Sample pop candidates from N(mean, sigma^2 * diag_cov)."""
    if pop < 2:
        raise ValueError("population size must be >= 2")
    z = rng.standard_normal((pop, state.dim))
    return state.mean + state.sigma * np.sqrt(state.diag_cov) * z


def sep_cma_tell(
    state: SepCmaState, candidates: np.ndarray, fitnesses: np.ndarray
) -> SepCmaState:
    """Rank candidates by fitness (ascending, ties by candidate index)
    and apply the separable covariance / step-size updates."""
    candidates = np.asarray(candidates, dtype=np.float64)
    fitnesses = np.asarray(fitnesses, dtype=np.float64)
    if candidates.shape[0] != fitnesses.shape[0]:
        raise ValueError("candidates and fitnesses length mismatch")
    if not np.all(np.isfinite(fitnesses)):
        raise ValueError("non-finite fitness")

    d = state.dim
    pop = candidates.shape[0]
    w, mu_eff = _weights(pop)
    mu = w.shape[0]

    c_sigma = (mu_eff + 2.0) / (d + mu_eff + 3.0)
    d_sigma = 1.0 + 2.0 * max(0.0, np.sqrt((mu_eff - 1.0) / (d + 1.0)) - 1.0) + c_sigma
    c_c = (1.0 + 1.0 / d + mu_eff / d) / (np.sqrt(d) + 1.0 / d + 2.0 * mu_eff / d)
    c_1 = 1.0 / (d + 2.0 * np.sqrt(d) + mu_eff / d)
    c_mu = min(
        1.0 - c_1,
        (0.25 + mu_eff + 1.0 / mu_eff - 2.0) / (d + 4.0 * np.sqrt(d) + mu_eff / 2.0),
    )
    chi_n = np.sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d))

    order = np.argsort(fitnesses, kind="stable")
    selected = candidates[order[:mu]]

    scale = state.sigma * np.sqrt(state.diag_cov)
    y = (selected - state.mean) / state.sigma  # shaped displacements, N(0, C)
    z = (selected - state.mean) / scale  # isotropic displacements, N(0, I)
    dy = w @ y
    dz = w @ z

    mean = state.mean + state.sigma * dy

    path_sigma = (1.0 - c_sigma) * state.path_sigma + np.sqrt(
        c_sigma * (2.0 - c_sigma) * mu_eff
    ) * dz
    sigma = state.sigma * np.exp(
        (c_sigma / d_sigma) * (np.linalg.norm(path_sigma) / chi_n - 1.0)
    )
    sigma = float(np.clip(sigma, *_SIGMA_BOUNDS))

    gen = state.generation + 1
    h_sig = float(
        np.linalg.norm(path_sigma) / np.sqrt(1.0 - (1.0 - c_sigma) ** (2 * gen))
        < (1.4 + 2.0 / (d + 1.0)) * chi_n
    )
    path_c = (1.0 - c_c) * state.path_c + h_sig * np.sqrt(
        c_c * (2.0 - c_c) * mu_eff
    ) * dy

    rank_mu = w @ (y * y)
    stall = (1.0 - h_sig) * c_c * (2.0 - c_c)  # variance make-up when the path is stalled
    diag_cov = (
        (1.0 - c_1 - c_mu) * state.diag_cov
        + c_1 * (path_c * path_c + stall * state.diag_cov)
        + c_mu * rank_mu
    )
    diag_cov = np.maximum(diag_cov, _VAR_FLOOR)

    return replace(
        state,
        mean=mean,
        sigma=sigma,
        diag_cov=diag_cov,
        path_sigma=path_sigma,
        path_c=path_c,
        generation=gen,
    )


def sep_cma_minimize(
    fn,
    x0: np.ndarray,
    sigma0: float,
    pop: int,
    max_evals: int,
    rng: np.random.Generator,
    f_target: float | None = None,
):
    """Small driver loop. Returns (best_x, best_f, evals_used)."""
    state = sep_cma_init(x0, sigma0)
    best_x = np.asarray(x0, dtype=np.float64).copy()
    best_f = np.inf
    evals = 0
    while evals < max_evals:
        cands = sep_cma_ask(state, rng, pop)
        fits = np.array([fn(c) for c in cands])
        evals += pop
        i = int(np.argmin(fits))
        if fits[i] < best_f:
            best_f = float(fits[i])
            best_x = cands[i].copy()
        state = sep_cma_tell(state, cands, fits)
        if f_target is not None and best_f <= f_target:
            break
    return best_x, best_f, evals
