"""Repeated checking game between the state supplier B and the checker A.

Each trial A either accepts B's state without checking (probability p_a) or
checks it; B sends an illegal state with probability p_c, caught by a check
with probability p_d. The game stops at the first acceptance (a successful
cheat if the state was illegal) or detection.

Two per-trial event models are provided:

``paper``        cheat p_c p_a, legal (1-p_c) p_a, detect p_c p_d,
                 continue 1 - p_a - p_c p_d.
``partitioned``  same accept events; detect p_c (1-p_a) p_d,
                 continue (1-p_a)(1 - p_c p_d).

The absorbing-chain oracle is ground truth. :func:`closed_form` reproduces the
published n-trial formulas verbatim; for p_c < 1 they differ from the
geometric sum of the ``paper`` model's own per-trial terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

MODELS = ("paper", "partitioned")


@dataclass(frozen=True)
class GameParams:
    p_a: float
    p_c: float
    p_d: float
    n: int = 1
    n_c: int = 0

    def __post_init__(self):
        for name in ("p_a", "p_c", "p_d"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.n_c < 0:
            raise ValueError("n_c must be >= 0")

    def with_(self, **kw) -> "GameParams":
        d = dict(p_a=self.p_a, p_c=self.p_c, p_d=self.p_d, n=self.n, n_c=self.n_c)
        d.update(kw)
        return GameParams(**d)


@dataclass(frozen=True)
class GameOutcomeDist:
    P_C: float
    P_A: float
    P_D: float
    residual: float = 0.0

    @property
    def total(self) -> float:
        return self.P_C + self.P_A + self.P_D + self.residual

    def as_tuple(self) -> tuple:
        return (self.P_C, self.P_A, self.P_D, self.residual)


def closed_form(p: GameParams) -> GameOutcomeDist:
    """The published n-trial formulas, evaluated as written.

    ``residual`` is reported as 1 - P_C - P_A - P_D and need not lie in [0, 1].
    """
    if p.n_c != 0:
        raise ValueError("closed forms cover n_c = 0 only")
    a, c, d, n = p.p_a, p.p_c, p.p_d, p.n

    def geo(pref_num, pref_den, base):
        return 0.0 if pref_num == 0 else pref_num / pref_den * (1 - base ** n)

    P_C = geo(a, a + d, 1 - c * a - c * d)
    P_A = geo(a * (1 - c), a * (1 - c) + c * d, 1 - a + a * c - c * d)
    P_D = geo(c * d, a + c * d, 1 - a - c * d)
    return GameOutcomeDist(P_C, P_A, P_D, 1 - P_C - P_A - P_D)


def trial_events(p: GameParams, model: str = "paper") -> tuple[float, float, float, float]:
    """Per-trial (cheat, legal, detect, continue) probabilities.

    Raises:
        ValueError: unknown model, or the ``paper`` model's continue
            probability is negative (it needs p_a + p_c p_d <= 1).
    """
    a, c, d = p.p_a, p.p_c, p.p_d
    if model == "paper":
        cont = 1 - a - c * d
        if cont < -1e-15:
            raise ValueError(f"paper model needs p_a + p_c*p_d <= 1, got {a + c * d}")
        return c * a, (1 - c) * a, c * d, max(cont, 0.0)
    if model == "partitioned":
        return c * a, (1 - c) * a, c * (1 - a) * d, (1 - a) * (1 - c * d)
    raise ValueError(f"unknown model {model!r}; choose from {MODELS}")


def lose_at(p: GameParams) -> int:
    """Detection count that ends the game.

    With ``n_c`` allowed cheats, ``n_c - 1`` detections leave B in the
    ``n_c = 0`` situation, so the next detection ends it.
    """
    return max(p.n_c, 1)


def transition_matrix(p: GameParams, model: str = "paper") -> np.ndarray:
    """Row-stochastic chain over (cheat, legal, detected, playing_0..playing_{L-1}).

    ``playing_r`` means r detections survived so far; ``L = lose_at(p)``.
    """
    cheat, legal, detect, cont = trial_events(p, model)
    L = lose_at(p)
    T = np.zeros((L + 3, L + 3))
    T[0, 0] = T[1, 1] = T[2, 2] = 1.0
    for r in range(L):
        row = 3 + r
        T[row, 0], T[row, 1], T[row, row] = cheat, legal, cont
        T[row, 2 if r == L - 1 else row + 1] += detect
    return T


def _dist(v: np.ndarray) -> GameOutcomeDist:
    return GameOutcomeDist(float(v[0]), float(v[1]), float(v[2]), float(v[3:].sum()))


def markov_oracle(p: GameParams, model: str = "paper") -> GameOutcomeDist:
    """Exact absorption masses after ``p.n`` trials."""
    T = transition_matrix(p, model)
    return _dist(np.linalg.matrix_power(T, p.n)[3])


def history(p: GameParams, model: str = "paper") -> np.ndarray:
    """Masses after trials 1..n, stepping one trial at a time; shape (n, 4).

    Columns are (P_C, P_A, P_D, residual).
    """
    T = transition_matrix(p, model)
    v = np.zeros(len(T))
    v[3] = 1.0
    out = np.empty((p.n, 4))
    for t in range(p.n):
        v = v @ T
        out[t] = _dist(v).as_tuple()
    return out


def geometric_sum(p: GameParams, model: str = "paper") -> GameOutcomeDist:
    """Closed-form sum of a model's own per-trial terms: X (1 - q^n) / (1 - q)."""
    cheat, legal, detect, q = trial_events(p, model)
    if q >= 1:
        return GameOutcomeDist(0.0, 0.0, 0.0, 1.0)
    f = (1 - q ** p.n) / (1 - q)
    return GameOutcomeDist(cheat * f, legal * f, detect * f, q ** p.n)


def game_simulate(p: GameParams, trials: int, rng, model: str = "paper") -> GameOutcomeDist:
    """Monte Carlo of ``trials`` games of at most ``p.n`` trials each."""
    return _simulate(p, trials, rng, model, 1)[0]


def _simulate(p: GameParams, trials: int, rng, model: str, lose_count: int):
    cheat, legal, detect, _ = trial_events(p, model)
    cuts = np.cumsum([cheat, legal, detect])
    status = np.zeros(trials, dtype=np.int8)  # 0 playing, 1 cheat, 2 legal, 3 lost
    detections = np.zeros(trials, dtype=np.int64)
    for _ in range(p.n):
        live = np.flatnonzero(status == 0)
        if live.size == 0:
            break
        ev = np.searchsorted(cuts, rng.random(live.size), side="right")
        status[live[ev == 0]] = 1
        status[live[ev == 1]] = 2
        hit = live[ev == 2]
        detections[hit] += 1
        status[hit[detections[hit] >= lose_count]] = 3
    counts = np.bincount(status, minlength=4) / trials
    return GameOutcomeDist(counts[1], counts[2], counts[3], counts[0]), detections


@dataclass(frozen=True)
class MultiCheatResult:
    dist: GameOutcomeDist
    mean_detections: float
    lose_at: int


def multi_cheat_game(p: GameParams, trials: int, rng, model: str = "paper") -> MultiCheatResult:
    """Monte Carlo of the game where B survives detections until :func:`lose_at`."""
    L = lose_at(p)
    dist, det = _simulate(p, trials, rng, model, L)
    return MultiCheatResult(dist, float(det.mean()), L)


@dataclass(frozen=True)
class LimitReport:
    p_cs: tuple
    closed: tuple  # GameOutcomeDist per p_c
    oracle: tuple
    n: int

    def final(self, which: str = "oracle") -> GameOutcomeDist:
        return getattr(self, which)[-1]

    def monotone(self, which: str = "oracle") -> bool:
        seq = getattr(self, which)
        pc = [d.P_C for d in seq]
        pa = [d.P_A for d in seq]
        return (all(x >= y - 1e-15 for x, y in zip(pc, pc[1:]))
                and all(x <= y + 1e-15 for x, y in zip(pa, pa[1:])))


def limits(p_a: float, p_d: float, p_cs=tuple(10.0 ** -k for k in range(1, 13)), n: int = 10 ** 6,
           model: str = "paper") -> LimitReport:
    """P_C, P_A, P_D at horizon ``n`` along a decreasing sequence of p_c."""
    if p_d <= 0:
        raise ValueError("limits need p_d > 0")
    p_cs = tuple(sorted(p_cs, reverse=True))
    closed = tuple(closed_form(GameParams(p_a, pc, p_d, n)) for pc in p_cs)
    oracle = tuple(markov_oracle(GameParams(p_a, pc, p_d, n), model) for pc in p_cs)
    return LimitReport(p_cs, closed, oracle, n)


def max_cheat_rate(eps_d: float, p_a: float, p_d: float, n: int = 10 ** 4, model: str = "paper") -> float:
    """Largest p_c keeping the oracle's P_D(n) at or below ``eps_d``."""
    if p_d <= 0:
        raise ValueError("need p_d > 0")

    def excess(pc):
        return markov_oracle(GameParams(p_a, pc, p_d, n), model).P_D - eps_d

    hi = 1.0
    if model == "paper" and p_a + p_d > 1:
        hi = (1 - p_a) / p_d
    if excess(hi) <= 0:
        return hi
    return brentq(excess, 0.0, hi, xtol=1e-15, rtol=1e-13)


def discrepancy_table(p_as=(0.1, 0.5), p_cs=(0.01, 0.2, 0.5, 1.0), p_ds=(0.1, 0.5),
                      ns=(1, 10, 100), model: str = "paper") -> list[dict]:
    """Published closed forms vs the oracle, one row per parameter point."""
    rows = []
    for a in p_as:
        for c in p_cs:
            for d in p_ds:
                for n in ns:
                    p = GameParams(a, c, d, n)
                    try:
                        o = markov_oracle(p, model)
                    except ValueError:
                        continue
                    cf = closed_form(p)
                    rows.append({"p_a": a, "p_c": c, "p_d": d, "n": n,
                                 "P_C_closed": cf.P_C, "P_C_oracle": o.P_C, "dP_C": cf.P_C - o.P_C,
                                 "P_A_closed": cf.P_A, "P_A_oracle": o.P_A, "dP_A": cf.P_A - o.P_A,
                                 "P_D_closed": cf.P_D, "P_D_oracle": o.P_D, "dP_D": cf.P_D - o.P_D})
    return rows


def game_rows(p: GameParams, model: str = "paper", trials: int = 0, rng=None) -> list[dict]:
    """CSV rows {model, p_a, p_c, p_d, n, P_C, P_A, P_D, source}."""
    base = {"model": model, "p_a": p.p_a, "p_c": p.p_c, "p_d": p.p_d, "n": p.n}
    out = [{**base, **_masses(markov_oracle(p, model)), "source": "oracle"}]
    if p.n_c == 0:
        out.insert(0, {**base, **_masses(closed_form(p)), "source": "closed"})
    if trials:
        sim = multi_cheat_game(p, trials, rng, model).dist if p.n_c else game_simulate(p, trials, rng, model)
        out.append({**base, **_masses(sim), "source": "sim"})
    return out


def _masses(d: GameOutcomeDist) -> dict:
    return {"P_C": d.P_C, "P_A": d.P_A, "P_D": d.P_D}
