"""Teleportation of a qubit through a locally rotated singlet, without correction.

A pair prepared as ``(U (x) I) Psi^-`` on qubits (1, 2) plus an input ``phi`` on
qubit 3; Bell-measuring (2, 3) with result ``i`` leaves qubit 1 in
``U sigma_i phi`` (up to a global phase), each result with probability 1/4.

Outcome numbering (single source of truth)::

    i = 1  Psi^+   sigma_1 = -Z
    i = 2  Psi^-   sigma_2 = -I
    i = 3  Phi^+   sigma_3 = -iY
    i = 4  Phi^-   sigma_4 =  X

The Psi^- -> -I assignment holds with its sign; the other three agree up to a
global phase with the Bell-state phases used in :mod:`qbc5.quantum`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum import (
    I2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    StateVector,
    bell_basis,
    measure_projective,
    tensor,
)

BELL_ORDER = ("psi+", "psi-", "phi+", "phi-")
OUTCOMES = (1, 2, 3, 4)

_SIGMAS = {
    1: -SIGMA_Z,
    2: -I2,
    3: -1j * SIGMA_Y,
    4: SIGMA_X,
}
for _m in _SIGMAS.values():
    _m.setflags(write=False)


def sigma_of(i: int) -> np.ndarray:
    """Signed correction operator sigma_i for Bell result ``i`` in 1..4."""
    try:
        return _SIGMAS[int(i)]
    except (KeyError, ValueError, TypeError):
        raise ValueError(f"Bell outcome must be in 1..4, got {i!r}") from None


@dataclass(frozen=True)
class TeleportRecord:
    outcome: int
    post_state: StateVector
    born_probability: float


def teleport(pair: StateVector, phi: StateVector, rng=None, outcome: int | None = None,
             order=BELL_ORDER) -> TeleportRecord:
    """Bell-measure the second pair qubit together with ``phi``.

    Args:
        pair: two-qubit state; its first label is the receiving qubit.
        phi: one-qubit input state.
        rng: numpy Generator used to draw the Bell outcome.
        outcome: post-select this result (1..4) instead of sampling.
        order: Bell-state order defining outcome numbering. Only meant to be
            overridden for negative controls.

    Returns:
        The outcome, the receiving qubit's state and the outcome's Born weight.
    """
    if pair.num_qubits != 2 or phi.num_qubits != 1:
        raise ValueError("teleport needs a two-qubit pair and a one-qubit input")
    receiver, partner = pair.labels
    joint = tensor(pair, phi)
    basis = bell_basis((partner, phi.labels[0]), order)
    forced = None if outcome is None else OUTCOMES.index(outcome)
    m = measure_projective(joint, basis, rng, outcome=forced)
    if outcome is not None and abs(m.probability - 0.25) > 1e-12:
        raise AssertionError(f"Born weight {m.probability} != 1/4")
    return TeleportRecord(OUTCOMES[m.outcome], m.remainder, m.probability)


def teleport_formula(u: np.ndarray, i: int, phi: StateVector, label=None) -> StateVector:
    """Closed form ``u sigma_i phi`` of the receiving qubit."""
    if phi.num_qubits != 1:
        raise ValueError("phi must be a single qubit")
    amps = np.asarray(u) @ sigma_of(i) @ phi.amplitudes
    return StateVector(amps, (label if label is not None else phi.labels[0],))


# Order with Psi^- first; used only as a negative control.
MISORDERED = ("psi-", "psi+", "phi-", "phi+")


def identity_suite(unitaries, names, samples: int, rng, order=BELL_ORDER) -> list[dict]:
    """Simulated vs closed-form receiving qubit for every (U, i) pair.

    Each (U, i) is checked on ``samples`` random inputs by post-selecting
    outcome ``i`` of the simulated Bell measurement. Returns one row per
    (U, i) with the worst fidelity and the worst Born-weight error.
    """
    from .protocol import pair_state
    from .quantum import random_state

    basis = bell_basis(("1.2", "1.3"), order)
    rows = []
    for u, name in zip(unitaries, names):
        pair = pair_state(u, 1)
        phis = [random_state(("1.3",), rng) for _ in range(samples)]
        for i in OUTCOMES:
            worst_f, worst_p = 1.0, 0.0
            for phi in phis:
                m = measure_projective(tensor(pair, phi), basis, outcome=OUTCOMES.index(i))
                worst_f = min(worst_f, m.remainder.fidelity(teleport_formula(u, i, phi, "1.1")))
                worst_p = max(worst_p, abs(m.probability - 0.25))
            rows.append({"U": name, "i": i, "min_fidelity": worst_f, "max_born_error": worst_p})
    return rows
