"""Adam's cheating strategies and the search for his best cheating probability.

Strategies (Adam honestly committed, or pretends to have committed, and now
wants Babe to accept an opening of bit ``b``):

``S1``  teleport ``|1-b>`` honestly, then rotate the received qubit by V.
``S2``  announce ``i`` without measuring; at opening teleport some ``phi``
        (getting a random ``j``) and rotate by a ``j``-dependent V.
``S3``  announce ``i`` and return a freshly prepared qubit ``V phi``.
``S4``  measure the pair to estimate ``k``, announce ``i``, and return the
        qubit best suited to the measured posterior over ``k``.

Every value is an average over Babe's secret ``k`` with weights ``lambda_k``.
Two independent searches over SU(2) (grid + Nelder-Mead, and random
restarts) are cross-checked; the rotation-only problems also have an exact
solution through the Bloch-sphere (Wahba/Kabsch) reduction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .protocol import (
    DEFAULT_FAMILY,
    Commitment,
    Opening,
    ProtocolParams,
    UnitaryFamily,
    adam_commit,
    adam_open,
    babe_prepare,
    babe_verify,
    bit_state,
)
from .quantum import (
    I2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    StateVector,
    bloch_vector,
    min_error_povm,
    so3_to_su2,
)
from .teleport import OUTCOMES, sigma_of, teleport

STRATEGIES = ("S1", "S2", "S3", "S4")

_KET = (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex))


def _ket(state) -> np.ndarray:
    if isinstance(state, StateVector):
        return state.amplitudes
    if isinstance(state, (int, np.integer)):
        return _KET[int(state)]
    return np.asarray(state, dtype=complex)


# Literal cheating-probability formulas.

def cheat_prob_s1(family: UnitaryFamily, i: int, V: np.ndarray, b: int = 1) -> float:
    """sum_k lambda_k |<b| s_i^+ U_k^+ V U_k s_i |1-b>|^2."""
    s = sigma_of(i)
    return float(sum(w * abs(_KET[b].conj() @ s.conj().T @ u.conj().T @ V @ u @ s @ _KET[1 - b]) ** 2
                     for u, w in family))


def cheat_prob_s2(family: UnitaryFamily, i: int, j: int, b: int, phi, V: np.ndarray) -> float:
    """sum_k lambda_k |<b| s_i^+ U_k^+ V U_k s_j |phi>|^2."""
    si, sj, ph = sigma_of(i), sigma_of(j), _ket(phi)
    return float(sum(w * abs(_KET[b].conj() @ si.conj().T @ u.conj().T @ V @ u @ sj @ ph) ** 2
                     for u, w in family))


def cheat_prob_s3(family: UnitaryFamily, i: int, b: int, phi, V: np.ndarray) -> float:
    """sum_k lambda_k |<b| s_i^+ U_k^+ V |phi>|^2."""
    si, ph = sigma_of(i), _ket(phi)
    return float(sum(w * abs(_KET[b].conj() @ si.conj().T @ u.conj().T @ V @ ph) ** 2
                     for u, w in family))


def s1_terms(family: UnitaryFamily, i: int, V: np.ndarray, b: int = 1) -> np.ndarray:
    """Unweighted per-k summands of the S1 probability."""
    s = sigma_of(i)
    return np.array([abs(_KET[b].conj() @ s.conj().T @ u.conj().T @ V @ u @ s @ _KET[1 - b]) ** 2
                     for u in family.unitaries])


# Every rotation-only problem is sum_k w_k |<a_k| V |c_k>|^2.

def transition_vectors(strategy: str, family: UnitaryFamily, i: int, b: int,
                       j: int | None = None, phi=None):
    """(a, c, w) with the objective sum_k w_k |<a_k|V|c_k>|^2."""
    us = family.unitaries
    w = np.array(family.weights)
    si = sigma_of(i)
    a = np.array([u @ si @ _KET[b] for u in us])
    if strategy == "S1":
        c = np.array([u @ si @ _KET[1 - b] for u in us])
    elif strategy == "S2":
        c = np.array([u @ sigma_of(j) @ _ket(phi) for u in us])
    elif strategy == "S3":
        c = np.tile(_ket(phi if phi is not None else 0), (len(us), 1))
    else:
        raise ValueError(f"no rotation objective for strategy {strategy!r}")
    return a, c, w


def transition_value(a, c, w, Vs: np.ndarray) -> np.ndarray:
    """Vectorized objective over a stack of 2x2 matrices ``Vs`` (m, 2, 2)."""
    amp = np.einsum("ka,mab,kb->mk", a.conj(), Vs, c)
    return (np.abs(amp) ** 2) @ w


def best_rotation(a, c, w) -> tuple[float, np.ndarray]:
    """Exact maximum over SU(2) of sum_k w_k |<a_k|V|c_k>|^2.

    |<a|V|c>|^2 = (1 + r_a . R r_c) / 2 for Bloch vectors r and the SO(3)
    image R of V, so the problem is max_R tr(R B) with B = sum w r_c r_a^T,
    solved by an SVD.
    """
    ra = np.array([bloch_vector(x) for x in a])
    rc = np.array([bloch_vector(x) for x in c])
    B = (rc * w[:, None]).T @ ra
    U, S, Vt = np.linalg.svd(B)
    d = np.sign(np.linalg.det(Vt.T @ U.T)) or 1.0
    D = np.diag([1.0, 1.0, d])
    R = Vt.T @ D @ U.T
    value = 0.5 * w.sum() + 0.5 * (S[0] + S[1] + d * S[2])
    return float(value), so3_to_su2(R)


def best_state(a, w) -> tuple[float, np.ndarray]:
    """Exact maximum over states psi of sum_k w_k |<a_k|psi>|^2."""
    rho = (a.T * w) @ a.conj()
    vals, vecs = np.linalg.eigh(rho)
    return float(vals[-1]), vecs[:, -1]


# SU(2) search machinery.

def fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    r = np.sqrt(1 - z * z)
    ang = np.pi * (1 + 5 ** 0.5) * k
    return np.stack([r * np.cos(ang), r * np.sin(ang), z], axis=1)


def su2_from_params(x) -> np.ndarray:
    """SU(2) element from (polar, azimuth, angle): axis in spherical coordinates."""
    beta, gamma, theta = x
    n = (math.sin(beta) * math.cos(gamma), math.sin(beta) * math.sin(gamma), math.cos(beta))
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c - 1j * s * n[2], -1j * s * (n[0] - 1j * n[1])],
                     [-1j * s * (n[0] + 1j * n[1]), c + 1j * s * n[2]]])


def su2_stack_from_params(x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`su2_from_params` over rows of ``x`` (m, 3)."""
    beta, gamma, theta = x[:, 0], x[:, 1], x[:, 2]
    nx, ny, nz = np.sin(beta) * np.cos(gamma), np.sin(beta) * np.sin(gamma), np.cos(beta)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    V = np.empty((len(x), 2, 2), dtype=complex)
    V[:, 0, 0] = c - 1j * s * nz
    V[:, 0, 1] = -1j * s * (nx - 1j * ny)
    V[:, 1, 0] = -1j * s * (nx + 1j * ny)
    V[:, 1, 1] = c + 1j * s * nz
    return V


def _axis_angle_stack(axes: np.ndarray, angles: np.ndarray) -> np.ndarray:
    c = np.cos(angles / 2)[None, :]
    s = np.sin(angles / 2)[None, :]
    nx, ny, nz = (axes[:, q:q + 1] for q in range(3))
    V = np.empty((len(axes), len(angles), 2, 2), dtype=complex)
    V[..., 0, 0] = c - 1j * s * nz
    V[..., 0, 1] = -1j * s * (nx - 1j * ny)
    V[..., 1, 0] = -1j * s * (nx + 1j * ny)
    V[..., 1, 1] = c + 1j * s * nz
    return V.reshape(-1, 2, 2)


def _axis_params(axes: np.ndarray) -> np.ndarray:
    return np.stack([np.arccos(np.clip(axes[:, 2], -1, 1)), np.arctan2(axes[:, 1], axes[:, 0])], axis=1)


def _state_from_params(x) -> np.ndarray:
    beta, gamma = x
    return np.array([math.cos(beta / 2), np.exp(1j * gamma) * math.sin(beta / 2)])


def _covering_radius(points: np.ndarray, samples: int = 20000, seed: int = 7) -> float:
    """Estimated chordal covering radius of a point set on the unit sphere."""
    rng = np.random.default_rng(seed)
    probe = rng.normal(size=(samples, 3))
    probe /= np.linalg.norm(probe, axis=1, keepdims=True)
    best = (probe @ points.T).max(axis=1)
    return float(np.sqrt(np.maximum(2 - 2 * best, 0)).max())


@dataclass(frozen=True)
class OptOptions:
    n_axes: int = 400
    n_angles: int = 64
    top: int = 10
    restarts: int = 20
    phi_points: int = 200
    seed: int = 0

    def doubled(self) -> "OptOptions":
        return OptOptions(2 * self.n_axes, 2 * self.n_angles, self.top, self.restarts,
                          2 * self.phi_points, self.seed)


@dataclass(frozen=True)
class SU2Grid:
    params: np.ndarray
    matrices: np.ndarray
    op_radius: float

    @classmethod
    def build(cls, n_axes: int, n_angles: int) -> "SU2Grid":
        axes = fibonacci_sphere(n_axes)
        angles = 2 * np.pi * np.arange(n_angles) / n_angles
        ap = _axis_params(axes)
        params = np.concatenate([np.repeat(ap, n_angles, axis=0),
                                 np.tile(angles, n_axes)[:, None]], axis=1)
        # ||V(n,t) - V(n',t')|| <= |t - t'| / 2 + |n - n'|
        radius = np.pi / (2 * n_angles) + _covering_radius(axes)
        return cls(params, _axis_angle_stack(axes, angles), radius)


_GRIDS: dict = {}


def _grid(opts: OptOptions) -> SU2Grid:
    key = (opts.n_axes, opts.n_angles)
    if key not in _GRIDS:
        _GRIDS[key] = SU2Grid.build(*key)
    return _GRIDS[key]


def _nelder_mead(fun, x0, maxiter=4000):
    r = minimize(fun, np.asarray(x0, dtype=float), method="Nelder-Mead",
                 options=dict(xatol=1e-10, fatol=1e-13, maxiter=maxiter, maxfev=maxiter * 2))
    return r.x, -r.fun, r.nfev


@dataclass(frozen=True)
class CheatObjective:
    """What Adam is trying to maximize.

    ``j`` and ``phi`` pin S2's teleported input and Bell result. Left unset,
    S2 is scored as Adam actually plays it: ``phi`` is his choice, ``j`` is
    random, and he picks V after seeing ``j``. S3 and S4 ignore ``j``; for S3
    only ``V phi`` matters so ``phi`` defaults to ``|0>``.
    """

    strategy: str
    family: UnitaryFamily = DEFAULT_FAMILY
    i: int = 1
    b: int = 1
    j: int | None = None
    phi: object = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        sigma_of(self.i)
        if self.j is not None:
            sigma_of(self.j)
        if self.b not in (0, 1):
            raise ValueError("target bit must be 0 or 1")
        if self.strategy == "S2" and (self.j is None) != (self.phi is None):
            raise ValueError("S2 pins j and phi together")

    @property
    def pinned(self) -> bool:
        return self.strategy != "S2" or self.j is not None


@dataclass
class OptResult:
    objective: CheatObjective
    value: float
    V: object  # 2x2 array, or {j: 2x2} for averaged S2, or None for S4
    phi: np.ndarray | None
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def arr(m):
            return None if m is None else np.round(np.asarray(m), 12).tolist()

        if isinstance(self.V, dict):
            V = {str(j): [[[z.real, z.imag] for z in row] for row in np.asarray(v)] for j, v in self.V.items()}
        elif self.V is None:
            V = None
        else:
            V = [[[z.real, z.imag] for z in row] for row in np.asarray(self.V)]
        phi = None if self.phi is None else [[z.real, z.imag] for z in np.asarray(self.phi)]
        return {"strategy": self.objective.strategy, "i": self.objective.i, "b": self.objective.b,
                "j": self.objective.j, "value": self.value, "argmax": {"V": V, "phi": phi},
                **{k: v for k, v in self.metadata.items() if k != "povm"},
                **({"povm": [arr(p) for p in self.metadata["povm"]]} if "povm" in self.metadata else {})}


def evaluate(result: OptResult) -> float:
    """Re-evaluate the literal formula at a result's argmax."""
    o = result.objective
    if o.strategy == "S1":
        return cheat_prob_s1(o.family, o.i, result.V, o.b)
    if o.strategy == "S3":
        return cheat_prob_s3(o.family, o.i, o.b, result.phi, result.V)
    if o.strategy == "S2" and o.pinned:
        return cheat_prob_s2(o.family, o.i, o.j, o.b, result.phi, result.V)
    if o.strategy == "S2":
        return float(np.mean([cheat_prob_s2(o.family, o.i, j, o.b, result.phi, result.V[j])
                              for j in OUTCOMES]))
    return discrimination_value(o.family, o.i, o.b, result.metadata["povm"])[0]


def _optimize_rotation(a, c, w, opts: OptOptions, rng) -> dict:
    """Grid+refine and random-restart searches of one rotation objective."""
    grid = _grid(opts)
    vals = transition_value(a, c, w, grid.matrices)

    def neg(x):
        return -float(transition_value(a, c, w, su2_from_params(x)[None])[0])

    best_a, xa, nfev = -1.0, None, len(vals)
    for idx in np.argsort(vals)[::-1][:opts.top]:
        x, v, n = _nelder_mead(neg, grid.params[idx])
        nfev += n
        if v > best_a:
            best_a, xa = v, x
    best_b, xb = -1.0, None
    for _ in range(opts.restarts):
        x0 = [math.acos(rng.uniform(-1, 1)), rng.uniform(-np.pi, np.pi), rng.uniform(0, 2 * np.pi)]
        x, v, n = _nelder_mead(neg, x0)
        nfev += n
        if v > best_b:
            best_b, xb = v, x
    # Bloch form f = W/2 + tr(R B)/2 with ||B||_1 <= W and ||R - R'|| <= 2 ||V - V'||.
    slack = w.sum() * grid.op_radius
    return {"grid_value": float(vals.max()), "grid_refined_value": best_a, "restart_value": best_b,
            "x": xa if best_a >= best_b else xb,
            "lipschitz_slack": float(slack), "grid_upper_bound": float(vals.max() + slack),
            "grid_resolution": [opts.n_axes, opts.n_angles], "restarts": opts.restarts,
            "evaluations": nfev}


def _optimize_s2_averaged(o: CheatObjective, opts: OptOptions, rng) -> OptResult:
    fam = o.family
    w = np.array(fam.weights)
    us = np.array(fam.unitaries)
    a = np.array([u @ sigma_of(o.i) @ _KET[o.b] for u in us])
    grid = _grid(opts)
    phis_xyz = fibonacci_sphere(opts.phi_points)
    phi_params = _axis_params(phis_xyz)
    phis = np.array([_state_from_params(p) for p in phi_params])

    # Method A: phi grid x V grid, then joint refinement of (phi, V_1..V_4).
    score = np.zeros(len(phis))
    best_grid_v = np.zeros((len(phis), 4), dtype=int)
    for jj, j in enumerate(OUTCOMES):
        G = np.einsum("ka,mab,kbc->mkc", a.conj(), grid.matrices, us @ sigma_of(j))
        for start in range(0, len(phis), 25):
            amp = G @ phis[start:start + 25].T  # (m, k, p)
            val = np.einsum("mkp,k->mp", np.abs(amp) ** 2, w)
            score[start:start + 25] += val.max(axis=0) / 4
            best_grid_v[start:start + 25, jj] = val.argmax(axis=0)

    def unpack(x):
        # Scalar math beats numpy broadcasting for four 2x2 matrices.
        Vs = []
        for q in range(4):
            bt, gm, th = x[2 + 3 * q: 5 + 3 * q]
            c, s, sb = math.cos(th / 2), math.sin(th / 2), math.sin(bt)
            nx, ny, nz = sb * math.cos(gm), sb * math.sin(gm), math.cos(bt)
            Vs.append(((complex(c, -s * nz), complex(-s * ny, -s * nx)),
                       (complex(s * ny, -s * nx), complex(c, s * nz))))
        return _state_from_params(x[:2]), np.array(Vs)

    us_sj = np.array([us @ sigma_of(j) for j in OUTCOMES])  # (j, k, 2, 2)
    ac = a.conj()

    def neg(x):
        phi, Vs = unpack(x)
        amp = np.einsum("ka,jab,jkb->jk", ac, Vs, us_sj @ phi)
        return -float((np.abs(amp) ** 2 @ w).sum() / 4)

    nfev = len(phis) * len(grid.matrices) * 4
    best_a, xa = -1.0, None
    for p in np.argsort(score)[::-1][:opts.top]:
        x0 = np.concatenate([phi_params[p]] + [grid.params[best_grid_v[p, q]] for q in range(4)])
        x, v, n = _nelder_mead(neg, x0, maxiter=20000)
        nfev += n
        if v > best_a:
            best_a, xa = v, x

    # Method B: random restarts in all 14 parameters.
    best_b, xb = -1.0, None
    for _ in range(opts.restarts):
        x0 = [math.acos(rng.uniform(-1, 1)), rng.uniform(-np.pi, np.pi)]
        for _q in range(4):
            x0 += [math.acos(rng.uniform(-1, 1)), rng.uniform(-np.pi, np.pi), rng.uniform(0, 2 * np.pi)]
        x, v, n = _nelder_mead(neg, x0, maxiter=20000)
        nfev += n
        if v > best_b:
            best_b, xb = v, x

    # Reference: exact inner maximization, numeric outer search over phi.
    def neg_exact(x):
        phi = _state_from_params(x)
        return -float(np.mean([best_rotation(*transition_vectors("S2", fam, o.i, o.b, j, phi))[0]
                               for j in OUTCOMES]))

    x_ref, ref, _ = _nelder_mead(neg_exact, phi_params[int(np.argmax(score))])

    x = xa if best_a >= best_b else xb
    phi, Vs = unpack(x)
    r = OptResult(o, max(best_a, best_b), dict(zip(OUTCOMES, Vs)), phi)
    slack = w.sum() * (grid.op_radius + _covering_radius(phis_xyz) / 2)
    r.metadata.update({"grid_value": float(score.max()), "grid_refined_value": best_a,
                       "restart_value": best_b, "exact_inner_value": ref,
                       "lipschitz_slack": float(slack),
                       "grid_upper_bound": float(score.max() + slack),
                       "grid_resolution": [opts.n_axes, opts.n_angles, opts.phi_points],
                       "restarts": opts.restarts, "evaluations": nfev})
    return r


def optimize_cheat(objective: CheatObjective, opts: OptOptions = OptOptions(), rng=None) -> OptResult:
    """Maximize one cheating objective over V (and phi where Adam chooses it).

    The returned value is the best of two independent searches; both, plus
    an exact reference where one exists, are recorded in ``metadata``.
    """
    o = objective
    rng = np.random.default_rng(opts.seed) if rng is None else rng
    if o.strategy == "S4":
        value, info = discrimination_strategy(o.family, o.i, o.b)
        return OptResult(o, value, None, None, info)
    if o.strategy == "S2" and not o.pinned:
        return _optimize_s2_averaged(o, opts, rng)
    phi = _KET[0] if o.strategy == "S3" and o.phi is None else o.phi
    a, c, w = transition_vectors(o.strategy, o.family, o.i, o.b, o.j, phi)
    found = _optimize_rotation(a, c, w, opts, rng)
    V = su2_from_params(found.pop("x"))
    exact, _ = best_rotation(a, c, w)
    value = max(found["grid_refined_value"], found["restart_value"])
    return OptResult(o, value, V, None if phi is None else _ket(phi),
                     {**found, "exact_value": exact})


# Discrimination strategy.

def pair_states(family: UnitaryFamily) -> list[np.ndarray]:
    """Amplitudes of (U_k (x) I) Psi^- for every family member."""
    singlet = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    return [np.kron(u, I2) @ singlet for u in family.unitaries]


def discrimination_value(family: UnitaryFamily, i: int, b: int, povm) -> tuple[float, list]:
    """Success of "measure the pair, then send the posterior-best qubit"."""
    psis = pair_states(family)
    w = np.array(family.weights)
    targets = np.array([u @ sigma_of(i) @ _KET[b] for u in family.unitaries])
    total, outputs = 0.0, []
    for E in povm:
        joint = w * np.array([np.vdot(p, E @ p).real for p in psis])
        v, psi = best_state(targets, joint)
        total += v
        outputs.append(psi)
    return float(total), outputs


def discrimination_strategy(family: UnitaryFamily, i: int, b: int) -> tuple[float, dict]:
    """S4: minimum-error measurement of k, then the best response per outcome."""
    psis = pair_states(family)
    povm, p_identify = min_error_povm(psis, family.weights)
    value, outputs = discrimination_value(family, i, b, povm)
    confusion = np.array([[np.vdot(p, E @ p).real for E in povm] for p in psis])
    guess = sum(family.weights[k] * confusion[k, kh]
                * abs(np.vdot(family.unitaries[k] @ sigma_of(i) @ _KET[b],
                              family.unitaries[kh] @ sigma_of(i) @ _KET[b])) ** 2
                for k in range(len(psis)) for kh in range(len(psis)))
    return value, {"identify_probability": p_identify, "best_guess_value": float(guess),
                   "confusion": confusion.round(12).tolist(), "povm": povm, "outputs": outputs}


def deferred_channel_bound(family: UnitaryFamily, i: int, b: int) -> float:
    """Best success over every channel from the untouched pair to the opened qubit.

    Covers any announce-first strategy (S2, S3, S4 and mixtures). Solved as a
    semidefinite program over Choi matrices; needs the optional ``cvxpy``.
    """
    import cvxpy as cp

    psis = pair_states(family)
    J = cp.Variable((8, 8), hermitian=True)
    obj = 0
    for (u, w), p in zip(family, psis):
        t = u @ sigma_of(i) @ _KET[b]
        obj += w * cp.real(cp.trace(np.kron(np.outer(t, t.conj()), np.outer(p, p.conj()).T) @ J))
    tr_out = J[0:4, 0:4] + J[4:8, 4:8]
    prob = cp.Problem(cp.Maximize(obj), [J >> 0, tr_out == np.eye(4)])
    prob.solve()
    return float(prob.value)


# Strategy values and p_A.

@dataclass
class StrategyValue:
    strategy: str
    value: float
    results: list  # OptResults contributing to the value
    table: dict  # (i, b) -> exact or fast value used for screening


def strategy_value(strategy: str, family: UnitaryFamily = DEFAULT_FAMILY,
                   opts: OptOptions = OptOptions(), rng=None) -> StrategyValue:
    """Adam's success probability for one strategy, played optimally.

    S1: the Bell result is random, so the value is the mean over ``i`` of the
    per-``i`` optimum (target bit 1 after committing 0). S2-S4: Adam picks
    ``i`` and the bit to open, so the value is the max over ``(i, b)``; S2 is
    searched numerically only at the best pair found by the exact-inner
    screen.
    """
    rng = np.random.default_rng(opts.seed) if rng is None else rng
    if strategy == "S1":
        results = [optimize_cheat(CheatObjective("S1", family, i, 1), opts, rng) for i in OUTCOMES]
        table = {(r.objective.i, 1): r.value for r in results}
        return StrategyValue("S1", float(np.mean([r.value for r in results])), results, table)
    if strategy in ("S3", "S4"):
        results = [optimize_cheat(CheatObjective(strategy, family, i, b), opts, rng)
                   for i in OUTCOMES for b in (0, 1)]
        table = {(r.objective.i, r.objective.b): r.value for r in results}
        best = max(results, key=lambda r: r.value)
        return StrategyValue(strategy, best.value, [best], table)
    if strategy == "S2":
        table = {}
        for i in OUTCOMES:
            for b in (0, 1):
                table[(i, b)] = _s2_screen(family, i, b, opts)
        i, b = max(table, key=table.get)
        best = optimize_cheat(CheatObjective("S2", family, i, b), opts, rng)
        return StrategyValue("S2", best.value, [best], table)
    raise ValueError(f"unknown strategy {strategy!r}")


def _s2_screen(family, i, b, opts) -> float:
    pts = _axis_params(fibonacci_sphere(max(opts.phi_points // 4, 20)))

    def val(x):
        phi = _state_from_params(x)
        return float(np.mean([best_rotation(*transition_vectors("S2", family, i, b, j, phi))[0]
                              for j in OUTCOMES]))

    x0 = max(pts, key=val)
    _, v, _ = _nelder_mead(lambda x: -val(x), x0)
    return v


@dataclass
class PAReport:
    value: float
    strategy: str
    strategies: dict  # name -> StrategyValue
    perfect_opening_value: float  # S1 only: the b=0 opening stays perfect

    def to_json(self) -> dict:
        return {
            "p_A": self.value, "argmax_strategy": self.strategy,
            "perfect_b0_opening_p_A": self.perfect_opening_value,
            "strategies": {
                name: {"value": sv.value,
                       "table": {f"i={i},b={b}": v for (i, b), v in sorted(sv.table.items())},
                       "results": [r.to_json() for r in sv.results]}
                for name, sv in self.strategies.items()},
        }


def p_A(family: UnitaryFamily = DEFAULT_FAMILY, opts: OptOptions = OptOptions(), rng=None,
        strategies=STRATEGIES) -> PAReport:
    """Adam's best cheating probability over the implemented strategies."""
    rng = np.random.default_rng(opts.seed) if rng is None else rng
    values = {s: strategy_value(s, family, opts, rng) for s in strategies}
    best = max(values.values(), key=lambda sv: sv.value)
    s1 = values["S1"].value if "S1" in values else float("nan")
    return PAReport(best.value, best.strategy, values, s1)


def sequential_cheat(p: float, N: int) -> float:
    """Cheating probability over N independent stages that all must pass."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    if N < 1:
        raise ValueError("N must be positive")
    return p ** N


# End-to-end play through the protocol.

def _stage(sv: StrategyValue, family: UnitaryFamily, rng) -> bool:
    params = ProtocolParams(1, 1, family)
    pairs, secret = babe_prepare(params, rng)
    pair = pairs[0]
    name = 1
    if sv.strategy == "S1":
        commitment, private = adam_commit(pairs, 0, params, rng)
        i = commitment.outcomes[0]
        V = next(r.V for r in sv.results if r.objective.i == i)
        q = private.received[name]
        private.received[name] = StateVector(V @ q.amplitudes, q.labels)
        private.bit = 1
        opening = adam_open(private)
        return babe_verify(secret, commitment, opening, rng).accepted
    r = sv.results[0]
    o = r.objective
    commitment = Commitment((o.i,))
    if sv.strategy == "S2":
        rec = teleport(pair, StateVector(r.phi, (f"{name}.3",)), rng)
        amps = r.V[rec.outcome] @ rec.post_state.amplitudes
    elif sv.strategy == "S3":
        amps = r.V @ r.phi
    else:
        probs = np.array([np.vdot(pair.amplitudes, E @ pair.amplitudes).real for E in r.metadata["povm"]])
        kh = min(int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum())), len(probs) - 1)
        amps = r.metadata["outputs"][kh]
    opening = Opening(o.b, ((name, 0, StateVector(amps, (f"{name}.1",))),), ())
    return babe_verify(secret, commitment, opening, rng).accepted


def simulate_cheat(sv: StrategyValue, family: UnitaryFamily, trials: int, rng,
                   stages: int = 1) -> tuple[float, float]:
    """Play a strategy through the protocol; returns (success rate, std. error).

    With ``stages > 1`` each trial is a sequence of independent single-pair
    rounds that must all be accepted.
    """
    wins = 0
    for _ in range(trials):
        ok = True
        for _s in range(stages):
            if not _stage(sv, family, rng):
                ok = False
                break
        wins += ok
    rate = wins / trials
    return rate, math.sqrt(max(rate * (1 - rate), 1e-300) / trials)


def report_json(report: PAReport) -> str:
    return json.dumps(report.to_json(), indent=2, sort_keys=True)
