import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbc5.ensemble import (
    EnsembleParams,
    delta_of,
    detection_fail_bound,
    detection_fail_exact,
    ensemble_grid,
    ensemble_row,
    legal_span_rank,
    mean_field,
    simulate_ensemble,
)
from qbc5.protocol import DEFAULT_FAMILY, pair_state
from qbc5.quantum import StateVector


def _comb_oracle(N, n, m, delta):
    """Exact sum with integer binomials: T illegal among the N - n tested."""
    K = N - n
    total = math.comb(N, K)
    return sum(math.comb(m, t) * math.comb(N - m, K - t) / total * (1 - delta) ** t
               for t in range(max(0, K - (N - m)), min(m, K) + 1))


LEGAL = [pair_state(u, 1) for u in DEFAULT_FAMILY.unitaries]


class TestParams:
    @pytest.mark.parametrize("kw", [dict(N=10, n=0, m=1, delta=0.5), dict(N=10, n=10, m=1, delta=0.5),
                                    dict(N=10, n=5, m=11, delta=0.5), dict(N=10, n=5, m=1, delta=1.5)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            EnsembleParams(**kw)

    def test_alpha(self):
        p = EnsembleParams(100, 10, 3, 0.5)
        assert p.alpha == 0.1 and p.tested == 90


class TestDelta:
    def test_legal_member(self):
        assert delta_of(LEGAL[2], LEGAL) == pytest.approx(0, abs=1e-12)

    def test_orthogonal(self):
        s = StateVector(np.array([1, 0]), ("q",))
        o = StateVector(np.array([0, 1]), ("q",))
        assert delta_of(s, [o]) == pytest.approx(1)

    def test_product_state(self):
        psi = StateVector.basis("00", ("1.1", "1.2"))
        # <00|(U (x) I)|Psi^-> = -U_01 / sqrt(2); |U_01|^2 is 0, 1/2, 1/2, 0.
        ref = min(1 - abs(u[0, 1]) ** 2 / 2 for u in DEFAULT_FAMILY.unitaries)
        assert delta_of(psi, LEGAL) == pytest.approx(ref, abs=1e-12)
        assert ref == pytest.approx(0.75)

    def test_errors(self):
        with pytest.raises(ValueError):
            delta_of(LEGAL[0], [])
        with pytest.raises(ValueError):
            delta_of(StateVector(np.array([1, 0]), ("q",)), LEGAL)


class TestExact:
    def test_certain_detection(self):
        for N, n in [(10, 3), (100, 10)]:
            assert detection_fail_exact(EnsembleParams(N, n, 1, 1.0)) == pytest.approx(n / N, abs=1e-12)

    def test_no_detection_power(self):
        for m in (0, 1, 5, 50):
            assert detection_fail_exact(EnsembleParams(100, 10, m, 0.0)) == pytest.approx(1, abs=1e-12)

    def test_reference_example(self):
        p = EnsembleParams(100, 10, 10, 0.5)
        exact = detection_fail_exact(p)
        assert exact == pytest.approx(_comb_oracle(100, 10, 10, 0.5), rel=1e-10)
        rate, se = simulate_ensemble(p, 1_000_000, np.random.default_rng(1))
        assert abs(rate - exact) <= 4 * se

    @settings(max_examples=200, deadline=None)
    @given(st.integers(2, 200), st.data())
    def test_matches_comb_oracle(self, N, data):
        n = data.draw(st.integers(1, N - 1))
        m = data.draw(st.integers(0, N))
        d = data.draw(st.floats(0, 1))
        assert detection_fail_exact(EnsembleParams(N, n, m, d)) == pytest.approx(_comb_oracle(N, n, m, d),
                                                                                abs=1e-12)

    def test_monotone(self):
        N = 100
        by_n = [detection_fail_exact(EnsembleParams(N, n, 8, 0.3)) for n in range(1, N)]
        assert all(a <= b + 1e-15 for a, b in zip(by_n, by_n[1:]))
        by_d = [detection_fail_exact(EnsembleParams(N, 20, 8, d)) for d in np.linspace(0, 1, 21)]
        assert all(a >= b - 1e-15 for a, b in zip(by_d, by_d[1:]))
        by_m = [detection_fail_exact(EnsembleParams(N, 20, m, 0.3)) for m in range(N + 1)]
        assert all(a >= b - 1e-15 for a, b in zip(by_m, by_m[1:]))


class TestBound:
    def test_arithmetic(self):
        assert detection_fail_bound(0.5, 0.5) == pytest.approx(0.5)

    def test_small_alpha(self):
        vals = [detection_fail_bound(a, 0.2) for a in (0.2, 0.1, 0.05, 0.01, 0.001)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-12

    @pytest.mark.parametrize("alpha", [0.05, 0.1, 0.2, 0.3])
    @pytest.mark.parametrize("delta", [0.1, 0.5, 0.9])
    def test_dominates_mean_field(self, alpha, delta):
        N = 1000
        n = round(alpha * N)
        m = math.ceil(1 / alpha)
        assert mean_field(EnsembleParams(N, n, m, delta)) <= detection_fail_bound(alpha, delta) + 1e-15

    @pytest.mark.parametrize("alpha,delta", [(0, 0.5), (1, 0.5), (0.5, 0), (0.5, 1.1)])
    def test_invalid(self, alpha, delta):
        with pytest.raises(ValueError):
            detection_fail_bound(alpha, delta)

    def test_holds_when_m_alpha_at_least_two(self):
        # The bound is met once m alpha >= 2 on the standard grid; at m alpha = 1
        # the exact value sits above it (averaging a convex function).
        for p in ensemble_grid(m_alphas=(2, 4)):
            assert detection_fail_exact(p) <= detection_fail_bound(p.alpha, p.delta)

    def test_exceeds_at_m_alpha_one(self):
        over = [p for p in ensemble_grid(m_alphas=(1,))
                if detection_fail_exact(p) > detection_fail_bound(p.alpha, p.delta)]
        assert over
        for p in over:
            assert mean_field(p) <= detection_fail_bound(p.alpha, p.delta) + 1e-15


class TestSimulation:
    def test_random_settings(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            N = int(rng.integers(5, 200))
            n = int(rng.integers(1, N))
            m = int(rng.integers(0, N + 1))
            p = EnsembleParams(N, n, m, float(rng.uniform(0, 1)))
            rate, se = simulate_ensemble(p, 40_000, rng)
            exact = detection_fail_exact(p)
            assert abs(rate - exact) <= 4 * max(se, math.sqrt(exact * (1 - exact) / 40_000)) + 1e-12

    def test_no_illegal(self, rng):
        assert simulate_ensemble(EnsembleParams(50, 5, 0, 0.7), 1000, rng)[0] == 1

    def test_support(self, rng):
        # m > n: some illegal state is always tested, so delta = 1 always catches it.
        p = EnsembleParams(20, 3, 5, 1.0)
        assert detection_fail_exact(p) == 0
        assert simulate_ensemble(p, 5000, rng)[0] == 0


def test_span_rank():
    rank, dim = legal_span_rank()
    assert rank == dim == 4


def test_grid_regime():
    grid = ensemble_grid()
    assert grid and all(p.m * p.alpha >= 1 - 1e-12 for p in grid)
    assert {p.N for p in grid} == {100, 1000}


def test_row(rng):
    row = ensemble_row(EnsembleParams(100, 10, 10, 0.5), 1000, rng)
    assert {"N", "n", "m", "delta", "exact", "bound", "empirical", "band"} <= set(row)
