"""Babe's entanglement attack on concealment.

Instead of drawing ``k`` classically Babe prepares
``sum_k sqrt(lambda_k) |f_k> (U_k (x) I) Psi^-`` with a two-qubit ancilla
holding ``|f_k>``. After Adam's commitment her view is the ancilla plus the
classical Bell result ``i``; she cannot see which pair he used. Everything
she can learn is a Helstrom measurement on ``rho_b`` of that view.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .protocol import DEFAULT_FAMILY, UnitaryFamily, bit_state, pair_labels, pair_state
from .quantum import (
    DensityMatrix,
    StateVector,
    bell_basis,
    helstrom_guess_prob,
    helstrom_projector,
    measure_projective,
    partial_trace,
    tensor,
    trace_distance,
)
from .teleport import BELL_ORDER, OUTCOMES, teleport

MAX_JOINT_ANCILLAS = 5


def ancilla_labels(name: int) -> tuple:
    return (f"C{name}.a", f"C{name}.b")


@dataclass(frozen=True)
class EntangledPreparation:
    """Joint ancilla + pair state of one entangled pair."""

    state: StateVector
    family: UnitaryFamily
    name: int = 1

    @property
    def ancilla(self) -> tuple:
        return ancilla_labels(self.name)

    @property
    def pair(self) -> tuple:
        return pair_labels(self.name)


def entangled_prepare(family: UnitaryFamily = DEFAULT_FAMILY, name: int = 1) -> EntangledPreparation:
    """Coherent version of Babe's choice of ``k`` for pair ``name``.

    ``|f_k>`` is the computational basis state ``|k>`` of a two-qubit ancilla.

    Raises:
        ValueError: the family has more than four members.
    """
    if len(family) > 4:
        raise ValueError(f"a two-qubit ancilla holds at most 4 members, family has {len(family)}")
    amps = np.zeros(16, dtype=complex)
    for k, (u, w) in enumerate(family):
        f = np.zeros(4)
        f[k] = 1.0
        amps += math.sqrt(w) * np.kron(f, pair_state(u, name).amplitudes)
    return EntangledPreparation(StateVector(amps, ancilla_labels(name) + pair_labels(name)), family, name)


def babe_view(prep: EntangledPreparation, b: int, i: int) -> DensityMatrix:
    """Babe's ancilla after Adam teleports ``|b>`` through the pair with result ``i``."""
    name = prep.name
    joint = tensor(prep.state, bit_state(b, f"{name}.3"))
    basis = bell_basis((f"{name}.2", f"{name}.3"), BELL_ORDER)
    m = measure_projective(joint, basis, outcome=OUTCOMES.index(i))
    return partial_trace(m.remainder, prep.ancilla)


def untouched_view(prep: EntangledPreparation) -> DensityMatrix:
    """Babe's ancilla when Adam leaves the pair alone."""
    return partial_trace(prep.state, prep.ancilla)


@functools.lru_cache(maxsize=64)
def _views(family: UnitaryFamily) -> tuple:
    prep = entangled_prepare(family)
    rho = {(b, i): babe_view(prep, b, i).matrix for b in (0, 1) for i in OUTCOMES}
    return rho, untouched_view(prep).matrix


def _sample_rows(probs: np.ndarray, rng) -> np.ndarray:
    """One categorical draw per row of ``probs``."""
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(len(probs))[:, None] * cdf[:, -1:]
    return np.minimum((u >= cdf).sum(axis=1), probs.shape[1] - 1)


def single_pair_distinguishability(family: UnitaryFamily = DEFAULT_FAMILY, i: int = 1) -> float:
    """Helstrom guess probability of ``b`` from Babe's ancilla, Bell result ``i`` known."""
    rho, _ = _views(family)
    return helstrom_guess_prob(rho[0, i], rho[1, i])


def pair_guess_bound(n: int) -> float:
    if n < 1:
        raise ValueError("n must be positive")
    return 0.5 + 0.5 / n


def _kron_all(mats) -> np.ndarray:
    return functools.reduce(np.kron, mats, np.ones((1, 1)))


def subset_states(family: UnitaryFamily, n: int, subset_size: int, b: int, i: int) -> list:
    """Ancilla states on an entangled subset, one per possible used pair.

    Entry ``u`` (0-based) is the state when Adam used pair ``u``; pairs
    ``0..subset_size-1`` are the entangled ones, the rest share one state.
    Returns ``subset_size + 1`` matrices: the last one is "used pair not
    entangled".
    """
    if subset_size > MAX_JOINT_ANCILLAS:
        raise ValueError(f"joint ancilla register limited to {MAX_JOINT_ANCILLAS} pairs")
    rho, tau = _views(family)
    out = []
    for u in range(subset_size):
        out.append(_kron_all([rho[b, i] if q == u else tau for q in range(subset_size)]))
    out.append(_kron_all([tau] * subset_size))
    return out


def _mixture(states: list, n: int) -> np.ndarray:
    s = len(states) - 1
    return sum(states[:s]) / n + (n - s) / n * states[s]


def entangled_guess_value(family: UnitaryFamily, n: int, subset_size: int, i: int = 1) -> float:
    """Exact optimum of Babe's guess with ``subset_size`` of ``n`` pairs entangled."""
    if subset_size == 0:
        return 0.5
    m0 = _mixture(subset_states(family, n, subset_size, 0, i), n)
    m1 = _mixture(subset_states(family, n, subset_size, 1, i), n)
    return helstrom_guess_prob(m0, m1)


def honest_view_distance(family: UnitaryFamily = DEFAULT_FAMILY) -> float:
    """Trace distance between the distributions of (k, i) for b = 0 and b = 1.

    The Born weights come from simulating the teleportation.
    """
    dist = {}
    for b in (0, 1):
        p = []
        for k, (u, w) in enumerate(family):
            joint = tensor(pair_state(u, 1), bit_state(b, "1.3"))
            m = measure_projective(joint, bell_basis(("1.2", "1.3"), BELL_ORDER), outcome=0)
            p.extend(w * m.probabilities)
        dist[b] = np.array(p)
    return 0.5 * float(np.abs(dist[0] - dist[1]).sum())


@dataclass(frozen=True)
class BabeRun:
    n: int
    strategy: str
    rate: float
    band: float
    bound: float
    exact: float
    trials: int

    def row(self) -> dict:
        return {"n": self.n, "strategy": self.strategy, "rate": self.rate, "band": self.band,
                "bound": self.bound, "exact": self.exact, "trials": self.trials}


def _strategy_name(n: int, s: int) -> str:
    if s == 0:
        return "none"
    if s == 1:
        return "single"
    return "joint" if s == n else f"subset{s}"


def _run(n, s, trials, wins, exact) -> BabeRun:
    rate = wins / trials
    band = 4 * math.sqrt(max(rate * (1 - rate), 0.25 / trials) / trials)
    return BabeRun(n, _strategy_name(n, s), rate, band, pair_guess_bound(n), exact, trials)


def simulate_entangling_babe(n: int, entangled_subset, trials: int, rng,
                             family: UnitaryFamily = DEFAULT_FAMILY) -> BabeRun:
    """Monte Carlo of Babe's best guess when she entangles a subset of ``n`` pairs.

    Adam commits a uniform bit through one uniformly chosen pair. Babe sees the
    Bell result and her ancillas (pairs ``entangled_subset``) and applies the
    Helstrom measurement of her view. An empty subset is the honest Babe, who
    guesses from the classical ``(k, i)`` alone.

    Sampling is vectorized: each trial draws ``b``, the used pair and ``i``,
    then Babe's outcome with the Born probability of her measurement on the
    corresponding ancilla state (built from the teleportation simulation).
    See :func:`simulate_statevector` for the slow literal version.
    """
    subset = sorted(set(int(x) for x in entangled_subset))
    if any(not 1 <= x <= n for x in subset):
        raise ValueError("entangled pairs must be named 1..n")
    s = len(subset)
    b = rng.integers(0, 2, trials)
    if s == 0:
        # P(k, i | b) is flat for both b, so every rule is a coin flip; play MAP with ties random.
        p = {bb: _classical_view(family, bb) for bb in (0, 1)}
        joint = np.stack([p[0].ravel(), p[1].ravel()])  # P(k, i | b)
        ki = _sample_rows(joint[b], rng)
        k, i = ki // 4, ki % 4
        diff = p[0][k, i] - p[1][k, i]
        guess = np.where(np.abs(diff) > 1e-15, (diff < 0).astype(int), rng.integers(0, 2, trials))
        return _run(n, 0, trials, int((guess == b).sum()), 0.5)
    used = rng.integers(0, n, trials)
    # Which slot of the subset holds the used pair (s = not entangled).
    slot_of = np.full(n, s)
    slot_of[[x - 1 for x in subset]] = np.arange(s)
    slot = slot_of[used]
    # P(i | b) marginal of the joint (k, i) law, identical for entangled preparations.
    p_i = np.stack([_classical_view(family, bb).sum(axis=0) for bb in (0, 1)])
    i = _sample_rows(p_i[b], rng)
    p_zero = np.empty((2, 4, s + 1))
    for ii, iv in enumerate(OUTCOMES):
        states = {bb: subset_states(family, n, s, bb, iv) for bb in (0, 1)}
        proj = helstrom_projector(_mixture(states[0], n), _mixture(states[1], n))
        for bb in (0, 1):
            p_zero[bb, ii] = [np.trace(proj @ st).real for st in states[bb]]
    guess = (rng.random(trials) >= p_zero[b, i, slot]).astype(int)
    return _run(n, s, trials, int((guess == b).sum()), entangled_guess_value(family, n, s))


def _classical_view(family: UnitaryFamily, b: int) -> np.ndarray:
    out = np.empty((len(family), 4))
    for k, (u, w) in enumerate(family):
        joint = tensor(pair_state(u, 1), bit_state(b, "1.3"))
        out[k] = w * measure_projective(joint, bell_basis(("1.2", "1.3"), BELL_ORDER), outcome=0).probabilities
    return out


def simulate_statevector(n: int, entangled_subset, trials: int, rng,
                         family: UnitaryFamily = DEFAULT_FAMILY) -> BabeRun:
    """Literal per-trial simulation on the full register (small ``n`` only).

    Babe prepares every pair (entangled or classical), Adam teleports ``|b>``
    through a random pair by an actual Bell measurement, and Babe measures
    her ancillas with the Helstrom projector for the observed ``i``.
    """
    subset = sorted(set(int(x) for x in entangled_subset))
    s = len(subset)
    if not subset:
        raise ValueError("use simulate_entangling_babe for an unentangled Babe")
    projectors = {}
    for iv in OUTCOMES:
        m0 = _mixture(subset_states(family, n, s, 0, iv), n)
        m1 = _mixture(subset_states(family, n, s, 1, iv), n)
        projectors[iv] = helstrom_projector(m0, m1)
    preps = {x: entangled_prepare(family, x) for x in subset}
    anc = tuple(lab for x in subset for lab in ancilla_labels(x))
    wins = 0
    for _ in range(trials):
        b = int(rng.integers(0, 2))
        used = int(rng.integers(1, n + 1))
        if used in preps:
            joint = tensor(preps[used].state, bit_state(b, f"{used}.3"))
            basis = bell_basis((f"{used}.2", f"{used}.3"), BELL_ORDER)
            m = measure_projective(joint, basis, rng)
            i = OUTCOMES[m.outcome]
            regs = [m.remainder] + [preps[x].state for x in subset if x != used]
        else:
            k = family.sample(rng)
            rec = teleport(pair_state(family.unitaries[k], used), bit_state(b, f"{used}.3"), rng)
            i = rec.outcome
            regs = [preps[x].state for x in subset]
        view = partial_trace(functools.reduce(tensor, regs), anc).matrix
        p0 = float(np.trace(projectors[i] @ view).real)
        guess = 0 if rng.random() < p0 else 1
        wins += guess == b
    return _run(n, s, trials, wins, entangled_guess_value(family, n, s))


def concealment_table(ns=(1, 2, 4, 8), trials: int = 100_000, rng=None,
                      family: UnitaryFamily = DEFAULT_FAMILY, strategies=("none", "single")) -> list:
    """CSV rows {n, strategy, rate, band, bound} for each n and strategy."""
    rng = np.random.default_rng(0) if rng is None else rng
    rows = []
    for n in ns:
        for strat in strategies:
            if strat == "none":
                subset = ()
            elif strat == "single":
                subset = (1,)
            elif strat == "joint":
                if n > MAX_JOINT_ANCILLAS:
                    continue
                subset = tuple(range(1, n + 1))
            else:
                raise ValueError(f"unknown strategy {strat!r}")
            rows.append(simulate_entangling_babe(n, subset, trials, rng, family).row())
    return rows


def views_equal_check(family: UnitaryFamily = DEFAULT_FAMILY) -> float:
    """Largest trace distance between Babe's ancilla views over all ``i`` for b=0 vs b=1."""
    rho, _ = _views(family)
    return max(trace_distance(rho[0, i], rho[1, i]) for i in OUTCOMES)

