"""Exact linear algebra on small labelled qubit registers.

States carry an explicit, ordered tuple of qubit labels; the tensor order of
the amplitude vector is the label order. Everything here is an immutable value
and every operation is a pure function (randomness is passed in explicitly).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

ATOL = 1e-12
PSD_ATOL = 1e-10

Label = Hashable

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class CompositionError(ValueError):
    """Raised when registers cannot be combined (e.g. overlapping labels)."""


def rotation(axis: Sequence[float], angle: float) -> np.ndarray:
    """SU(2) matrix for a Bloch-sphere rotation by ``angle`` about ``axis``.

    Half-angle convention: ``exp(-i angle (n.sigma) / 2)``.
    """
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    gen = n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * gen


R_X = rotation((1, 0, 0), np.pi / 2)
R_Y = rotation((0, 1, 0), np.pi / 2)
R_Z = rotation((0, 0, 1), np.pi / 2)


def is_unitary(u: np.ndarray, atol: float = ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    g = u.conj().T @ u
    g[np.diag_indices_from(g)] -= 1
    return float(np.abs(g).max()) <= atol


def bloch_vector(psi: np.ndarray) -> np.ndarray:
    """Bloch vector (x, y, z) of a normalized single-qubit amplitude vector."""
    a, b = np.asarray(psi, dtype=complex)
    ab = np.conj(a) * b
    return np.array([2 * ab.real, 2 * ab.imag, abs(a) ** 2 - abs(b) ** 2])


def su2_to_so3(u: np.ndarray) -> np.ndarray:
    """Rotation matrix R with bloch(u psi) = R bloch(psi)."""
    paulis = (SIGMA_X, SIGMA_Y, SIGMA_Z)
    return np.array([[0.5 * np.trace(pa @ u @ pb @ u.conj().T).real
                      for pb in paulis] for pa in paulis])


def so3_to_su2(r: np.ndarray) -> np.ndarray:
    """One SU(2) preimage of a proper rotation matrix (sign is arbitrary)."""
    r = np.asarray(r, dtype=float)
    # Quaternion from rotation matrix, largest-component branch for stability.
    tr = np.trace(r)
    cands = [tr, r[0, 0], r[1, 1], r[2, 2]]
    j = int(np.argmax(cands))
    if j == 0:
        w = np.sqrt(max(1 + tr, 0)) / 2
        x, y, z = (r[2, 1] - r[1, 2]) / (4 * w), (r[0, 2] - r[2, 0]) / (4 * w), (r[1, 0] - r[0, 1]) / (4 * w)
    elif j == 1:
        x = np.sqrt(max(1 + r[0, 0] - r[1, 1] - r[2, 2], 0)) / 2
        w, y, z = (r[2, 1] - r[1, 2]) / (4 * x), (r[0, 1] + r[1, 0]) / (4 * x), (r[0, 2] + r[2, 0]) / (4 * x)
    elif j == 2:
        y = np.sqrt(max(1 - r[0, 0] + r[1, 1] - r[2, 2], 0)) / 2
        w, x, z = (r[0, 2] - r[2, 0]) / (4 * y), (r[0, 1] + r[1, 0]) / (4 * y), (r[1, 2] + r[2, 1]) / (4 * y)
    else:
        z = np.sqrt(max(1 - r[0, 0] - r[1, 1] + r[2, 2], 0)) / 2
        w, x, y = (r[1, 0] - r[0, 1]) / (4 * z), (r[0, 2] + r[2, 0]) / (4 * z), (r[1, 2] + r[2, 1]) / (4 * z)
    return w * I2 - 1j * (x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state of a labelled qubit register."""

    amplitudes: np.ndarray
    labels: tuple

    def __post_init__(self):
        amps = self.amplitudes
        if not (isinstance(amps, np.ndarray) and amps.dtype == complex and amps.ndim == 1):
            amps = np.asarray(amps, dtype=complex).reshape(-1)
        labels = self.labels if type(self.labels) is tuple else tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise CompositionError(f"duplicate qubit labels: {labels}")
        if amps.shape[0] != 1 << len(labels):
            raise ValueError(
                f"{amps.shape[0]} amplitudes for {len(labels)} qubits")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1) > ATOL:
            raise ValueError(f"state is not normalized (|psi|^2 = {norm})")
        if amps.flags.writeable:
            amps = amps.copy()
            amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def normalized(cls, amplitudes, labels) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(amps / np.linalg.norm(amps), labels)

    @classmethod
    def basis(cls, bits: str | Sequence[int], labels) -> "StateVector":
        """Computational basis state, e.g. ``StateVector.basis("01", "ab")``."""
        bits = [int(b) for b in bits]
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[int("".join(map(str, bits)) or "0", 2)] = 1
        return cls(amps, labels)

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    def reorder(self, labels) -> "StateVector":
        """Same state with the tensor factors permuted into ``labels`` order."""
        labels = tuple(labels)
        if labels == self.labels:
            return self
        if set(labels) != set(self.labels) or len(labels) != len(self.labels):
            raise CompositionError(f"cannot reorder {self.labels} as {labels}")
        perm = [self.labels.index(lab) for lab in labels]
        t = self.amplitudes.reshape([2] * self.num_qubits).transpose(perm)
        return StateVector(t.reshape(-1), labels)

    def relabel(self, labels) -> "StateVector":
        return StateVector(self.amplitudes, labels)

    def inner(self, other: "StateVector") -> complex:
        """<self|other>, after aligning other's label order to ours."""
        return complex(np.vdot(self.amplitudes, other.reorder(self.labels).amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        """Phase-insensitive overlap |<self|other>|^2."""
        return abs(self.inner(other)) ** 2

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()),
                             self.labels)

    def __repr__(self):
        return f"StateVector({np.round(self.amplitudes, 6).tolist()}, labels={self.labels})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Positive semidefinite, unit-trace operator on a labelled register."""

    matrix: np.ndarray
    labels: tuple

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        labels = tuple(self.labels)
        d = 2 ** len(labels)
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not fit {len(labels)} qubits")
        if len(set(labels)) != len(labels):
            raise CompositionError(f"duplicate qubit labels: {labels}")
        if not np.allclose(m, m.conj().T, atol=ATOL):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1) > ATOL:
            raise ValueError(f"density matrix trace is {np.trace(m).real}")
        if np.linalg.eigvalsh(m).min() < -PSD_ATOL:
            raise ValueError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", labels)

    @property
    def num_qubits(self) -> int:
        return len(self.labels)

    def reorder(self, labels) -> "DensityMatrix":
        labels = tuple(labels)
        if labels == self.labels:
            return self
        if set(labels) != set(self.labels) or len(labels) != len(self.labels):
            raise CompositionError(f"cannot reorder {self.labels} as {labels}")
        q = self.num_qubits
        perm = [self.labels.index(lab) for lab in labels]
        t = self.matrix.reshape([2] * (2 * q)).transpose(perm + [q + p for p in perm])
        return DensityMatrix(t.reshape(2 ** q, 2 ** q), labels)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Kronecker product ``a (x) b``; labels are concatenated."""
    if set(a.labels) & set(b.labels):
        raise CompositionError(
            f"overlapping labels {sorted(map(str, set(a.labels) & set(b.labels)))}")
    return StateVector(np.multiply.outer(a.amplitudes, b.amplitudes).ravel(),
                       a.labels + b.labels)


def tensor_all(states: Sequence[StateVector]) -> StateVector:
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def _label_index(labels: tuple, target) -> int:
    try:
        return labels.index(target)
    except ValueError:
        raise KeyError(f"qubit {target!r} not in register {labels}") from None


def apply_operator(s: StateVector, op: np.ndarray, targets: Sequence[Label]) -> np.ndarray:
    """Raw (unnormalized) amplitudes of ``op`` acting on ``targets`` of ``s``."""
    targets = tuple(targets)
    idx = [_label_index(s.labels, t) for t in targets]
    k, q = len(idx), s.num_qubits
    op = np.asarray(op, dtype=complex)
    if op.shape != (2 ** k, 2 ** k):
        raise ValueError(f"operator shape {op.shape} does not act on {k} qubits")
    t = s.amplitudes.reshape([2] * q)
    t = np.tensordot(op.reshape([2] * (2 * k)), t, axes=(list(range(k, 2 * k)), idx))
    # tensordot puts the acted-on axes first; move them back.
    rest = [ax for ax in range(q) if ax not in idx]
    order = np.argsort(idx + rest)
    return t.transpose(order).reshape(-1)


def apply_unitary(s: StateVector, u: np.ndarray, target: Label) -> StateVector:
    """Apply the single-qubit unitary ``u`` to qubit ``target``."""
    if not is_unitary(u):
        raise ValueError("operator is not unitary")
    return StateVector(apply_operator(s, u, [target]), s.labels)


def apply_gate(s: StateVector, u: np.ndarray, targets: Sequence[Label]) -> StateVector:
    """Apply a multi-qubit unitary to ``targets`` (in the given order)."""
    if not is_unitary(u):
        raise ValueError("operator is not unitary")
    return StateVector(apply_operator(s, u, targets), s.labels)


@dataclass(frozen=True)
class Measurement:
    outcome: int
    probability: float
    probabilities: np.ndarray
    remainder: StateVector | None
    measured: StateVector

    @property
    def post_state(self) -> StateVector:
        """Renormalized state of the whole register after the measurement."""
        if self.remainder is None:
            return self.measured
        return tensor(self.measured, self.remainder)


@functools.lru_cache(maxsize=256)
def _basis_matrix(basis: tuple) -> np.ndarray:
    meas_labels = basis[0].labels
    if any(b.labels != meas_labels for b in basis):
        raise ValueError("basis vectors must share one label order")
    if len(basis) != 2 ** len(meas_labels):
        raise ValueError("basis does not span the measured subspace")
    vecs = np.array([b.amplitudes for b in basis])
    gram = vecs.conj() @ vecs.T
    if np.abs(gram - np.eye(len(vecs))).max() > 1e-10:
        raise ValueError("measurement basis is not orthonormal")
    vecs.setflags(write=False)
    return vecs


def measure_projective(s: StateVector, basis: Sequence[StateVector], rng=None,
                       outcome: int | None = None) -> Measurement:
    """Projective measurement of a sub-register onto an orthonormal basis.

    All basis vectors must live on the same labels, which name the measured
    qubits. Either draws the outcome from the Born distribution with ``rng``
    or post-selects the given ``outcome``.

    Returns:
        The outcome index, its Born probability, all Born probabilities, the
        renormalized post-measurement state of the full register, and the
        state of the unmeasured qubits (None if everything was measured).
    """
    vecs = _basis_matrix(tuple(basis))
    meas_labels = basis[0].labels
    rest = tuple(lab for lab in s.labels if lab not in meas_labels)
    perm = [s.labels.index(lab) for lab in meas_labels + rest]
    m = s.amplitudes.reshape([2] * s.num_qubits).transpose(perm).reshape(len(basis), -1)
    comps = vecs.conj() @ m
    probs = np.einsum("ij,ij->i", comps.conj(), comps).real
    if outcome is None:
        if rng is None:
            raise ValueError("need an rng or a forced outcome")
        outcome = int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum()))
        outcome = min(outcome, len(probs) - 1)
    p = probs[outcome]
    if p <= 0:
        raise ValueError(f"outcome {outcome} has zero probability")
    remainder = StateVector(comps[outcome] / np.sqrt(p), rest) if rest else None
    return Measurement(outcome, float(p), probs, remainder, basis[outcome])


def projection_test(s: StateVector, target: StateVector, rng) -> tuple[bool, float]:
    """Two-outcome measurement {|t><t|, I - |t><t|} on a whole register.

    Returns (passed, Born probability of passing).
    """
    p = min(s.fidelity(target), 1.0)
    if p >= 1 - ATOL:
        return True, p
    return bool(rng.random() < p), p


def partial_trace(s: StateVector | DensityMatrix, keep: Sequence[Label]) -> DensityMatrix:
    """Reduced state on ``keep`` (returned in the order given)."""
    keep = tuple(keep)
    if not keep:
        raise ValueError("keep set is empty")
    for lab in keep:
        _label_index(s.labels, lab)
    drop = tuple(lab for lab in s.labels if lab not in keep)
    dk, dd = 2 ** len(keep), 2 ** len(drop)
    if isinstance(s, StateVector):
        m = s.reorder(keep + drop).amplitudes.reshape(dk, dd)
        rho = m @ m.conj().T
    else:
        t = s.reorder(keep + drop).matrix.reshape(dk, dd, dk, dd)
        rho = np.einsum("ajbj->ab", t)
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(rho, keep)


def _as_matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def trace_norm(m: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2)).sum())


def trace_distance(a, b) -> float:
    """(1/2) ||a - b||_1 for density matrices of equal dimension."""
    ma, mb = _as_matrix(a), _as_matrix(b)
    if ma.shape != mb.shape:
        raise ValueError(f"dimension mismatch {ma.shape} vs {mb.shape}")
    return 0.5 * trace_norm(ma - mb)


def helstrom_guess_prob(rho0, rho1, prior0: float = 0.5) -> float:
    """Optimal probability of identifying which of two states was prepared."""
    if not 0 <= prior0 <= 1:
        raise ValueError("prior must lie in [0, 1]")
    m0, m1 = _as_matrix(rho0), _as_matrix(rho1)
    if m0.shape != m1.shape:
        raise ValueError(f"dimension mismatch {m0.shape} vs {m1.shape}")
    return 0.5 * (1 + trace_norm(prior0 * m0 - (1 - prior0) * m1))


def helstrom_projector(rho0, rho1, prior0: float = 0.5) -> np.ndarray:
    """Projector onto the positive part of prior0*rho0 - prior1*rho1.

    Guessing "0" on this projector and "1" on its complement attains
    :func:`helstrom_guess_prob`.
    """
    gamma = prior0 * _as_matrix(rho0) - (1 - prior0) * _as_matrix(rho1)
    w, v = np.linalg.eigh((gamma + gamma.conj().T) / 2)
    pos = v[:, w > 0]
    return pos @ pos.conj().T


def min_error_povm(states: Sequence[np.ndarray], priors: Sequence[float],
                   iterations: int = 5000, tol: float = 1e-13) -> tuple[list[np.ndarray], float]:
    """Minimum-error POVM for discriminating several density matrices.

    Uses the fixed-point iteration Pi_j <- R^-1/2 (p_j rho_j Pi_j p_j rho_j) R^-1/2
    with R the sum of the numerators. Returns the POVM elements and the
    success probability sum_j p_j tr(rho_j Pi_j).
    """
    rhos = [np.asarray(r, dtype=complex) for r in states]
    if rhos[0].ndim == 1:
        rhos = [np.outer(r, r.conj()) for r in rhos]
    weighted = [p * r for p, r in zip(priors, rhos)]
    d = rhos[0].shape[0]
    povm = [np.eye(d, dtype=complex) / len(rhos) for _ in rhos]
    last = -1.0
    for _ in range(iterations):
        num = [w @ e @ w for w, e in zip(weighted, povm)]
        total = sum(num)
        vals, vecs = np.linalg.eigh((total + total.conj().T) / 2)
        keep = vals > 1e-14
        inv_sqrt = (vecs[:, keep] / np.sqrt(vals[keep])) @ vecs[:, keep].conj().T
        povm = [inv_sqrt @ x @ inv_sqrt for x in num]
        # Restore completeness on any kernel of R (only matters for rank-deficient sets).
        missing = np.eye(d) - sum(povm)
        if np.abs(missing).max() > 1e-12:
            povm[0] = povm[0] + missing
        success = sum(np.trace(w @ e).real for w, e in zip(weighted, povm))
        if abs(success - last) < tol:
            break
        last = success
    return povm, float(success)


def random_state(labels, rng) -> StateVector:
    """Haar-random pure state on the register ``labels``."""
    labels = tuple(labels)
    v = rng.normal(size=2 ** len(labels)) + 1j * rng.normal(size=2 ** len(labels))
    return StateVector.normalized(v, labels)


def random_unitary(dim: int, rng) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density(dim_qubits: int, rng, rank: int | None = None) -> DensityMatrix:
    d = 2 ** dim_qubits
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return DensityMatrix(rho / np.trace(rho).real, tuple(range(dim_qubits)))


# Bell basis, with |0> = spin up and |1> = spin down.
def _bell(sign: int, parallel: bool, labels) -> StateVector:
    if parallel:
        amps = np.array([1, 0, 0, sign], dtype=complex)
    else:
        amps = np.array([0, 1, sign, 0], dtype=complex)
    return StateVector(amps / np.sqrt(2), labels)


def psi_plus(labels=("a", "b")) -> StateVector:
    return _bell(+1, False, labels)


def psi_minus(labels=("a", "b")) -> StateVector:
    return _bell(-1, False, labels)


def phi_plus(labels=("a", "b")) -> StateVector:
    return _bell(+1, True, labels)


def phi_minus(labels=("a", "b")) -> StateVector:
    return _bell(-1, True, labels)


BELL_STATES = {"psi+": psi_plus, "psi-": psi_minus, "phi+": phi_plus, "phi-": phi_minus}


@functools.lru_cache(maxsize=1024)
def _bell_basis(labels: tuple, order: tuple) -> tuple:
    return tuple(BELL_STATES[name](labels) for name in order)


def bell_basis(labels, order: Sequence[str] = ("psi+", "psi-", "phi+", "phi-")) -> tuple:
    """The four Bell states on ``labels`` in the requested order."""
    return _bell_basis(tuple(labels), tuple(order))
