"""Sample-and-test check of Babe's honesty.

Babe sends ``N`` pairs, ``m`` of them illegal. Adam keeps ``n`` untested and
checks the other ``N - n``; each tested illegal state is caught independently
with probability ``delta``. Babe's cheating goes unnoticed when nothing is
caught, even if an illegal state also sits in the untested group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import hypergeom

from .protocol import DEFAULT_FAMILY, UnitaryFamily, pair_state
from .quantum import StateVector


@dataclass(frozen=True)
class EnsembleParams:
    N: int
    n: int
    m: int
    delta: float

    def __post_init__(self):
        if not 0 < self.n < self.N:
            raise ValueError(f"need 0 < n < N, got n={self.n}, N={self.N}")
        if not 0 <= self.m <= self.N:
            raise ValueError(f"need 0 <= m <= N, got m={self.m}")
        if not 0 <= self.delta <= 1:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")

    @property
    def alpha(self) -> float:
        return self.n / self.N

    @property
    def tested(self) -> int:
        return self.N - self.n


def delta_of(psi_prime: StateVector, legal) -> float:
    """Smallest chance that testing ``psi_prime`` against a legal state fails it."""
    legal = list(legal)
    if not legal:
        raise ValueError("legal set is empty")
    for s in legal:
        if s.amplitudes.shape != psi_prime.amplitudes.shape:
            raise ValueError("states differ in dimension")
    return float(min(1 - abs(np.vdot(s.amplitudes, psi_prime.amplitudes)) ** 2 for s in legal))


def detection_fail_exact(p: EnsembleParams) -> float:
    """E[(1 - delta)^T] with T ~ Hypergeometric(N, m, N - n), summed exactly."""
    dist = hypergeom(p.N, p.m, p.tested)
    lo, hi = dist.support()
    t = np.arange(lo, hi + 1)
    return float(np.sum(dist.pmf(t) * (1 - p.delta) ** t))


def detection_fail_bound(alpha: float, delta: float) -> float:
    """(1 - delta)^((1 - alpha) / alpha), the stated bound when m alpha >= 1."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    return (1 - delta) ** ((1 - alpha) / alpha)


def mean_field(p: EnsembleParams) -> float:
    """(1 - delta)^(m (1 - alpha)): the exact value with T replaced by its mean."""
    return (1 - p.delta) ** (p.m * (1 - p.alpha))


def simulate_ensemble(p: EnsembleParams, trials: int, rng, chunk: int = 20_000) -> tuple[float, float]:
    """Fraction of trials with zero detections, and its standard error.

    Each trial places the ``m`` illegal states and the tested subset
    independently at random among the ``N`` positions.
    """
    fails = 0
    done = 0
    while done < trials:
        c = min(chunk, trials - done)
        illegal = np.zeros((c, p.N), dtype=bool)
        if p.m:
            idx = np.argpartition(rng.random((c, p.N)), p.m - 1, axis=1)[:, :p.m]
            np.put_along_axis(illegal, idx, True, axis=1)
        tested = np.zeros((c, p.N), dtype=bool)
        idx = np.argpartition(rng.random((c, p.N)), p.tested - 1, axis=1)[:, :p.tested]
        np.put_along_axis(tested, idx, True, axis=1)
        T = (illegal & tested).sum(axis=1)
        caught = rng.binomial(T, p.delta)
        fails += int((caught == 0).sum())
        done += c
    rate = fails / trials
    return rate, math.sqrt(rate * (1 - rate) / trials)


def legal_span_rank(family: UnitaryFamily = DEFAULT_FAMILY) -> tuple[int, int]:
    """(rank of the legal pair states, dimension of the pair space).

    A superposition over the legal states covers every pair state exactly
    when the rank equals the dimension.
    """
    vecs = np.array([pair_state(u, 1).amplitudes for u in family.unitaries])
    return int(np.linalg.matrix_rank(vecs, tol=1e-10)), vecs.shape[1]


def ensemble_grid(Ns=(100, 1000), alphas=(0.05, 0.1, 0.2), m_alphas=(1, 2, 4),
                  deltas=(0.1, 0.5, 0.9)) -> list[EnsembleParams]:
    """Parameter grid in the regime m alpha >= 1."""
    out = []
    for N in Ns:
        for a in alphas:
            n = round(a * N)
            for ma in m_alphas:
                m = math.ceil(ma * N / n - 1e-9)
                if m > N:
                    continue
                for d in deltas:
                    out.append(EnsembleParams(N, n, m, d))
    return out


def ensemble_row(p: EnsembleParams, trials: int = 0, rng=None) -> dict:
    row = {"N": p.N, "n": p.n, "m": p.m, "delta": p.delta, "alpha": p.alpha,
           "exact": detection_fail_exact(p), "bound": detection_fail_bound(p.alpha, p.delta),
           "mean_field": mean_field(p)}
    if trials:
        rate, se = simulate_ensemble(p, trials, rng)
        row.update(empirical=rate, band=4 * se)
    return row
