"""Honest run of the teleportation bit-commitment protocol.

Babe hands Adam ``n*N`` rotated singlets ``(U_k (x) I) Psi^-``, each ``k``
secret. Adam teleports ``|b>`` into ``n`` randomly chosen pairs and commits
the ``n`` Bell results, unordered and without pair names. To open he returns
the ``n`` receiving qubits (with names and the commitment slot they belong to)
and every untouched pair; Babe checks each by a rank-one projection.

Qubits are never serialized: "sending" a qubit is a change of label ownership
recorded in the :class:`Transcript`.
"""

from __future__ import annotations

import functools
import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .quantum import I2, R_X, R_Y, R_Z, StateVector, apply_unitary, projection_test, psi_minus
from .teleport import OUTCOMES, sigma_of, teleport


class ProtocolError(RuntimeError):
    """Raised when a party is driven out of protocol order."""


@dataclass(frozen=True, eq=False)
class UnitaryFamily:
    """Weighted set of single-qubit unitaries {(U_k, lambda_k)}."""

    unitaries: tuple
    weights: tuple
    names: tuple = ()

    def __post_init__(self):
        us = tuple(np.asarray(u, dtype=complex) for u in self.unitaries)
        ws = tuple(float(w) for w in self.weights)
        if len(us) != len(ws) or not us:
            raise ValueError("need one weight per unitary")
        if any(w < 0 for w in ws) or abs(sum(ws) - 1) > 1e-12:
            raise ValueError(f"weights must be a probability vector, got {ws}")
        for u in us:
            if u.shape != (2, 2) or not np.allclose(u.conj().T @ u, I2, atol=1e-12):
                raise ValueError("family members must be 2x2 unitaries")
            u.setflags(write=False)
        names = tuple(self.names) or tuple(f"U{k}" for k in range(len(us)))
        object.__setattr__(self, "unitaries", us)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "_cdf", np.cumsum(ws))

    def __len__(self):
        return len(self.unitaries)

    def __iter__(self):
        return iter(zip(self.unitaries, self.weights))

    def sample(self, rng) -> int:
        return min(int(np.searchsorted(self._cdf, rng.random(), side="right")), len(self) - 1)

    def permuted(self, perm: Sequence[int]) -> "UnitaryFamily":
        return UnitaryFamily(tuple(self.unitaries[p] for p in perm),
                             tuple(self.weights[p] for p in perm),
                             tuple(self.names[p] for p in perm))

    @classmethod
    def uniform(cls, unitaries, names=()) -> "UnitaryFamily":
        return cls(tuple(unitaries), (1 / len(unitaries),) * len(unitaries), tuple(names))


DEFAULT_FAMILY = UnitaryFamily.uniform((I2, R_X, R_Y, R_Z), ("I", "Rx", "Ry", "Rz"))
IDENTITY_FAMILY = UnitaryFamily((I2,), (1.0,), ("I",))


@dataclass(frozen=True)
class ProtocolParams:
    n: int = 1
    N: int = 1
    family: UnitaryFamily = DEFAULT_FAMILY
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.N < 1:
            raise ValueError("n and N must be positive")

    @property
    def total_pairs(self) -> int:
        return self.n * self.N


def pair_labels(name: int) -> tuple:
    return (f"{name}.1", f"{name}.2")


def pair_state(u: np.ndarray, name: int) -> StateVector:
    """``(u (x) I) Psi^-`` on the qubits of pair ``name``."""
    return apply_unitary(psi_minus(pair_labels(name)), u, f"{name}.1")


@functools.lru_cache(maxsize=4096)
def _family_pair(family: "UnitaryFamily", k: int, name: int) -> StateVector:
    return pair_state(family.unitaries[k], name)


@dataclass(frozen=True)
class BabeSecret:
    family: UnitaryFamily
    choices: tuple  # choices[name - 1] = k

    def unitary(self, name: int) -> np.ndarray:
        return self.family.unitaries[self.choices[name - 1]]


@dataclass(frozen=True)
class Commitment:
    outcomes: tuple


@dataclass
class AdamPrivate:
    bit: int
    names: list  # names[m] = pair teleported into, for commitment slot m
    received: dict  # name -> receiving qubit (teleported pairs only)
    untouched: dict  # name -> pair state as received
    opened: bool = False


@dataclass(frozen=True)
class Opening:
    bit: int
    teleported: tuple  # (name, slot m, qubit StateVector)
    untouched: tuple  # (name, pair StateVector)


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    acceptance_probability: float
    overlaps: tuple = ()
    reason: str = ""


def babe_prepare(params: ProtocolParams, rng) -> tuple[list[StateVector], BabeSecret]:
    """Step (i): draw k for every pair and prepare the rotated singlets."""
    fam = params.family
    choices = tuple(fam.sample(rng) for _ in range(params.total_pairs))
    pairs = [_family_pair(fam, k, name + 1) for name, k in enumerate(choices)]
    return pairs, BabeSecret(fam, choices)


@functools.lru_cache(maxsize=4096)
def bit_state(b: int, label) -> StateVector:
    if b not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {b!r}")
    return StateVector.basis(str(b), (label,))


def adam_commit(pairs: Sequence[StateVector], b: int, params: ProtocolParams,
                rng) -> tuple[Commitment, AdamPrivate]:
    """Step (ii): teleport |b> into n random pairs; commit the shuffled results."""
    total = len(pairs)
    if params.n > total:
        raise ValueError(f"cannot pick {params.n} pairs out of {total}")
    chosen = sorted(int(x) + 1 for x in rng.permutation(total)[:params.n])
    slots = rng.permutation(params.n)
    names = [chosen[s] for s in slots]
    outcomes, received = [], {}
    for name in names:
        rec = teleport(pairs[name - 1], bit_state(b, f"{name}.3"), rng)
        outcomes.append(rec.outcome)
        received[name] = rec.post_state
    untouched = {name: pairs[name - 1] for name in range(1, total + 1) if name not in received}
    return Commitment(tuple(outcomes)), AdamPrivate(b, names, received, untouched)


def adam_open(private: AdamPrivate) -> Opening:
    """Step (iii): hand back the receiving qubits and all untouched pairs."""
    if private.opened:
        raise ProtocolError("commitment already opened")
    private.opened = True
    teleported = tuple((name, m, private.received[name]) for m, name in enumerate(private.names))
    untouched = tuple(sorted(private.untouched.items()))
    return Opening(private.bit, teleported, untouched)


def _malformed(secret: BabeSecret, commitment: Commitment, opening: Opening) -> str:
    total = len(secret.choices)
    names = [t[0] for t in opening.teleported] + [u[0] for u in opening.untouched]
    if sorted(names) != list(range(1, total + 1)):
        return "pair names do not partition the sent pairs"
    if sorted(t[1] for t in opening.teleported) != list(range(len(commitment.outcomes))):
        return "commitment slots not matched one-to-one"
    if opening.bit not in (0, 1):
        return "claimed bit is not 0 or 1"
    if any(o not in OUTCOMES for o in commitment.outcomes):
        return "commitment contains an invalid Bell result"
    for name, _, q in opening.teleported:
        if not isinstance(q, StateVector) or q.labels != (f"{name}.1",):
            return f"pair {name}: expected its receiving qubit"
    for name, st in opening.untouched:
        if not isinstance(st, StateVector) or set(st.labels) != set(pair_labels(name)):
            return f"pair {name}: expected both qubits back"
    return ""


def expected_qubit(secret: BabeSecret, name: int, i: int, b: int) -> StateVector:
    u = secret.unitary(name)
    return StateVector(u @ sigma_of(i) @ np.eye(2)[b], (f"{name}.1",))


def babe_verify(secret: BabeSecret, commitment: Commitment, opening: Opening, rng) -> Verdict:
    """Step (iii), Babe's side: one projection per returned system.

    A malformed opening is rejected rather than raising.
    """
    reason = _malformed(secret, commitment, opening)
    if reason:
        return Verdict(False, 0.0, (), reason)
    accepted, prob, overlaps = True, 1.0, []
    for name, m, qubit in opening.teleported:
        target = expected_qubit(secret, name, commitment.outcomes[m], opening.bit)
        ok, p = projection_test(qubit, target, rng)
        accepted &= ok
        prob *= p
        overlaps.append(p)
    for name, st in opening.untouched:
        ok, p = projection_test(st, _family_pair(secret.family, secret.choices[name - 1], name), rng)
        accepted &= ok
        prob *= p
        overlaps.append(p)
    return Verdict(bool(accepted), prob, tuple(overlaps), "" if accepted else "projection failed")


def _digest(payload) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _amps(s: StateVector) -> list:
    return [[float(a.real), float(a.imag)] for a in s.amplitudes]


@dataclass
class Transcript:
    params: ProtocolParams
    bit: int
    messages: list = field(default_factory=list)
    verdict: Verdict | None = None

    def to_jsonl(self) -> str:
        return "".join(json.dumps(m, sort_keys=True) + "\n" for m in self.messages)


def run_honest(params: ProtocolParams, b: int, rng=None) -> Transcript:
    """Full honest run; logs the three messages and Babe's verdict."""
    return run_protocol(params, b, rng)


CHEATS = ("none", "flip")


def run_protocol(params: ProtocolParams, b: int, rng=None, cheat: str = "none") -> Transcript:
    """Full run; ``cheat="flip"`` makes Adam claim ``1 - b`` at opening."""
    if cheat not in CHEATS:
        raise ValueError(f"unknown cheat {cheat!r}; choose from {CHEATS}")
    rng = np.random.default_rng(params.seed) if rng is None else rng
    tr = Transcript(params, b)
    pairs, secret = babe_prepare(params, rng)
    shipped = {str(i + 1): _amps(p) for i, p in enumerate(pairs)}
    tr.messages.append({
        "step": 1, "sender": "Babe", "receiver": "Adam", "message": "pairs",
        "payload_digest": _digest(shipped),
        "data": {"pairs": params.total_pairs,
                 "qubits": [lab for p in pairs for lab in p.labels]},
    })
    commitment, private = adam_commit(pairs, b, params, rng)
    tr.messages.append({
        "step": 2, "sender": "Adam", "receiver": "Babe", "message": "commitment",
        "payload_digest": _digest(list(commitment.outcomes)),
        "data": {"outcomes": list(commitment.outcomes)},
    })
    if cheat == "flip":
        private.bit = 1 - b
    opening = adam_open(private)
    verdict = babe_verify(secret, commitment, opening, rng)
    payload = {"bit": opening.bit,
               "teleported": [[n, m, _amps(q)] for n, m, q in opening.teleported],
               "untouched": [[n, _amps(s)] for n, s in opening.untouched]}
    tr.messages.append({
        "step": 3, "sender": "Adam", "receiver": "Babe", "message": "opening",
        "payload_digest": _digest(payload),
        "data": {"bit": opening.bit,
                 "teleported": [[n, m] for n, m, _ in opening.teleported],
                 "untouched": [n for n, _ in opening.untouched],
                 "verdict": "accept" if verdict.accepted else "reject",
                 "acceptance_probability": verdict.acceptance_probability},
    })
    tr.verdict = verdict
    return tr


def outcome_statistics(family: UnitaryFamily = DEFAULT_FAMILY) -> dict:
    """Likelihoods p(i | b) and posteriors p(b | i) of the committed Bell result.

    Born weights come from simulating the teleportation; the posterior uses a
    uniform prior on b.
    """
    like = np.zeros((2, 4))
    for b in (0, 1):
        for u, w in family:
            for i in OUTCOMES:
                rec = teleport(pair_state(u, 1), bit_state(b, "1.3"), outcome=i)
                like[b, i - 1] += w * rec.born_probability
    post = like / like.sum(axis=0, keepdims=True)
    return {"likelihood": like, "posterior": post}
