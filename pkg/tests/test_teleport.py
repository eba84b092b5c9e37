import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from qbc5.protocol import DEFAULT_FAMILY, pair_state
from qbc5.quantum import I2, R_X, R_Z, SIGMA_X, SIGMA_Y, SIGMA_Z, StateVector, random_state
from qbc5.teleport import (
    BELL_ORDER,
    MISORDERED,
    OUTCOMES,
    identity_suite,
    sigma_of,
    teleport,
    teleport_formula,
)

KET0 = StateVector.basis("0", ("1.3",))
KET1 = StateVector.basis("1", ("1.3",))


def _simulate_8dim(u, phi, i):
    """Independent oracle: explicit 8x8 algebra with the Bell vector for outcome i.

    Register order (1, 2, 3). Bell states follow the numbering
    1: Psi+, 2: Psi-, 3: Phi+, 4: Phi-.
    """
    r = 1 / math.sqrt(2)
    bell = {1: [0, r, r, 0], 2: [0, r, -r, 0], 3: [r, 0, 0, r], 4: [r, 0, 0, -r]}[i]
    singlet = np.array([0, r, -r, 0])
    joint = np.kron(np.kron(u, I2) @ singlet, phi)
    proj = np.kron(I2, np.array(bell).reshape(1, 4))  # <bell|_{23}
    out = proj @ joint
    return out / np.linalg.norm(out)


class TestSigma:
    def test_values(self):
        np.testing.assert_array_equal(sigma_of(1), -SIGMA_Z)
        np.testing.assert_array_equal(sigma_of(2), -I2)
        np.testing.assert_array_equal(sigma_of(3), -1j * SIGMA_Y)
        np.testing.assert_array_equal(sigma_of(4), SIGMA_X)

    @pytest.mark.parametrize("i", OUTCOMES)
    def test_unitary(self, i):
        s = sigma_of(i)
        np.testing.assert_allclose(s.conj().T @ s, I2, atol=1e-15)

    @pytest.mark.parametrize("i", [0, 5, -1, "x", None])
    def test_out_of_range(self, i):
        with pytest.raises(ValueError):
            sigma_of(i)

    def test_read_only(self):
        with pytest.raises(ValueError):
            sigma_of(1)[0, 0] = 2


class TestFormula:
    def test_identity_outcome2(self):
        out = teleport_formula(I2, 2, KET0)
        np.testing.assert_allclose(out.amplitudes, [-1, 0])

    def test_rz_outcome4(self):
        out = teleport_formula(R_Z, 4, KET1)
        np.testing.assert_allclose(out.amplitudes, R_Z @ [1, 0], atol=1e-15)

    def test_rejects_multi_qubit(self):
        with pytest.raises(ValueError):
            teleport_formula(I2, 1, StateVector.basis("00", ("a", "b")))


class TestTeleport:
    def test_forced_identity_outcome2(self):
        rec = teleport(pair_state(I2, 1), KET0, outcome=2)
        np.testing.assert_allclose(rec.post_state.amplitudes, [-1, 0], atol=1e-15)
        assert rec.born_probability == pytest.approx(0.25, abs=1e-12)

    def test_forced_identity_outcome4(self):
        rec = teleport(pair_state(I2, 1), KET1, outcome=4)
        assert rec.post_state.fidelity(StateVector.basis("0", ("1.1",))) == pytest.approx(1)

    def test_post_state_label(self, rng):
        rec = teleport(pair_state(R_X, 7), StateVector.basis("0", ("7.3",)), rng)
        assert rec.post_state.labels == ("7.1",)

    def test_rx_ket1_sampled(self):
        rng = np.random.default_rng(3)
        pair = pair_state(R_X, 1)
        for _ in range(10_000):
            rec = teleport(pair, KET1, rng)
            expect = teleport_formula(R_X, rec.outcome, KET1, "1.1")
            assert rec.post_state.fidelity(expect) >= 1 - 1e-10

    def test_malformed(self, rng):
        with pytest.raises(ValueError):
            teleport(KET0, KET1, rng)
        with pytest.raises(ValueError):
            teleport(pair_state(I2, 1), pair_state(I2, 2), rng)

    def test_matches_independent_oracle(self, rng):
        for u in DEFAULT_FAMILY.unitaries:
            phi = random_state(("1.3",), rng)
            for i in OUTCOMES:
                rec = teleport(pair_state(u, 1), phi, outcome=i)
                ref = _simulate_8dim(u, phi.amplitudes, i)
                assert abs(np.vdot(ref, rec.post_state.amplitudes)) ** 2 >= 1 - 1e-12

    def test_all_pairs_and_random_inputs(self, rng):
        rows = identity_suite(DEFAULT_FAMILY.unitaries, DEFAULT_FAMILY.names, 100, rng)
        assert len(rows) == 16
        for row in rows:
            assert row["min_fidelity"] >= 1 - 1e-10, row
            assert row["max_born_error"] <= 1e-12, row

    def test_misordered_basis_breaks_identity(self, rng):
        rows = identity_suite(DEFAULT_FAMILY.unitaries, DEFAULT_FAMILY.names, 5, rng, MISORDERED)
        assert min(r["min_fidelity"] for r in rows) < 0.5

    def test_uniform_outcomes_chi_square(self):
        rng = np.random.default_rng(11)
        counts = np.zeros(4)
        for _ in range(100_000):
            k = DEFAULT_FAMILY.sample(rng)
            rec = teleport(pair_state(DEFAULT_FAMILY.unitaries[k], 1), random_state(("1.3",), rng), rng)
            counts[rec.outcome - 1] += 1
        assert chisquare(counts).pvalue > 1e-3

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(OUTCOMES), st.integers(0, 3))
    def test_inverse_recovers_input(self, seed, i, k):
        rng = np.random.default_rng(seed)
        u = DEFAULT_FAMILY.unitaries[k]
        phi = random_state(("1.3",), rng)
        rec = teleport(pair_state(u, 1), phi, outcome=i)
        back = np.linalg.inv(sigma_of(i)) @ np.linalg.inv(u) @ rec.post_state.amplitudes
        assert abs(np.vdot(phi.amplitudes, back)) ** 2 == pytest.approx(1, abs=1e-10)

    def test_order_is_documented_numbering(self):
        assert BELL_ORDER == ("psi+", "psi-", "phi+", "phi-")
