import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpke import analysis, games, qsim
from qpke.adversaries import AdversaryContext, brute_force_adversary
from qpke.core import AttackModel
from qpke.errors import CapacityError, DomainError
from qpke.schemes import BrokenScheme, PermScheme

GOLDEN = json.loads((Path(__file__).parent / "data" / "golden_ceilings.json").read_text())


def _cases(section):
    for name, by_t in GOLDEN[section].items():
        k = int(name.split("k")[1])
        for t, value in by_t.items():
            yield k, int(t), value


class TestHoeffding:
    def test_half(self):
        est = analysis.hoeffding_ci(500, 1000)
        assert est.value == 0.5
        assert est.ci95_halfwidth == pytest.approx(math.sqrt(3.6888794541139363 / 2000))
        assert est.ci95_halfwidth == pytest.approx(0.04295, abs=5e-6)

    def test_single_trial_is_clamped_for_reporting(self):
        est = analysis.hoeffding_ci(0, 1)
        assert est.value == 0.0
        assert est.ci95_halfwidth == pytest.approx(1.358, abs=1e-3)
        assert est.reported_halfwidth == 1.0

    def test_all_successes(self):
        assert analysis.hoeffding_ci(37, 37).value == 1.0

    def test_domain(self):
        with pytest.raises(DomainError):
            analysis.hoeffding_ci(0, 0)
        with pytest.raises(DomainError):
            analysis.hoeffding_ci(5, 4)

    def test_combined(self):
        assert analysis.combined_ci(0.03, 0.04) == pytest.approx(0.05)
        assert analysis.consistent_with_zero(-0.1, 0.034)
        assert not analysis.consistent_with_zero(0.11, 0.034)

    def test_estimator_consistency(self):
        # Bernoulli(0.3) means over 500 draws, 100 seeded repetitions
        p, n = 0.3, 500
        hits = 0
        for seed in range(100):
            draws = np.random.default_rng(seed).random(n) < p
            est = analysis.hoeffding_ci(int(draws.sum()), n)
            hits += abs(est.value - p) <= est.ci95_halfwidth
        assert hits >= 93


class TestEnsembles:
    def test_k2_single_copy_free(self):
        a, b = analysis.exact_ind_ensembles(PermScheme(2), 2, "0", "1", 0)
        assert qsim.trace_distance(a, b) == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.matrix_rank(a.density) == 1

    def test_plaintext_blind_scheme(self):
        a, b = analysis.exact_ind_ensembles(BrokenScheme(77), 77, "0", "1", 0)
        assert qsim.trace_distance(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_k3_t1_strictly_inside(self):
        value = analysis.ind_ceiling(PermScheme(3), 3, "0", "1", 1, compressed=False)
        assert 0.0 < value < 1.0

    @pytest.mark.parametrize("k, t, value", list(_cases("independent")))
    def test_compressed_route_matches_independent_oracle(self, k, t, value):
        assert analysis.ind_ceiling(PermScheme(k), k, "0", "1", t, compressed=True) == pytest.approx(value, abs=1e-8)

    @pytest.mark.parametrize("k, t, value", [c for c in _cases("independent") if math.factorial(c[0]) ** (c[1] + 1)
                                             <= 1296])
    def test_full_route_matches_independent_oracle(self, k, t, value):
        with qsim.capacity(2**21):
            got = analysis.ind_ceiling(PermScheme(k), k, "0", "1", t, compressed=False)
        assert got == pytest.approx(value, abs=1e-8)

    @pytest.mark.parametrize("k, t, value", list(_cases("regression")))
    def test_regression_values(self, k, t, value):
        assert analysis.ind_ceiling(PermScheme(k), k, "0", "1", t) == pytest.approx(value, abs=1e-8)

    @pytest.mark.parametrize("k", [2, 3])
    def test_monotone_in_copies(self, k):
        values = [analysis.ind_ceiling(PermScheme(k), k, "0", "1", t) for t in range(3)]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_capacity(self):
        with pytest.raises(CapacityError):
            analysis.exact_ind_ensembles(PermScheme(4), 4, "0", "1", 3)

    def test_sdp_dual_route(self):
        cp = pytest.importorskip("cvxpy")
        a, b = analysis.exact_ind_ensembles(PermScheme(3), 3, "0", "1", 1)
        diff = np.real(a.density - b.density)
        m = cp.Variable(diff.shape, symmetric=True)
        prob = cp.Problem(cp.Maximize(cp.trace(m @ diff)), [m >> 0, np.eye(diff.shape[0]) - m >> 0])
        prob.solve()
        assert prob.value == pytest.approx(5 / 9, abs=1e-4)

    @settings(max_examples=20, deadline=None)
    @given(st.sampled_from([(2, 0), (2, 1), (3, 0), (3, 1), (3, 2), (4, 0)]))
    def test_ensembles_are_states(self, case):
        k, t = case
        for rho in analysis.exact_ind_ensembles(PermScheme(k), k, "0", "1", t, compressed=True):
            assert abs(np.trace(rho.density) - 1) < 1e-9
            assert np.linalg.eigvalsh(rho.density).min() > -1e-9


class TestKeyIdentification:
    @pytest.mark.parametrize("t", [1, 2, 3, 4])
    def test_pgm_success_equals_ceiling(self, t):
        # for this key family the PGM key guess is as good as the optimal IND measurement
        k = 3
        povm, keys = analysis.key_identification_povm(k, t)
        scheme, comp = PermScheme(k), analysis.symmetric.isotypic_compression(k)
        success = 0.0
        for key, w in scheme.key_distribution(k):
            one = comp.apply(scheme.pubkey_density(key).density)
            joint = np.ones((1, 1))
            for _ in range(t):
                joint = np.kron(joint, one)
            probs = qsim.born_probabilities(povm, qsim.MixedState(joint))
            success += w * probs[keys.index(key.pi)]
        decrypt_ok = success + (1 - success) / 2
        ceiling = analysis.ind_ceiling(scheme, k, "0", "1", t)
        assert 2 * decrypt_ok - 1 == pytest.approx(ceiling, abs=1e-9)

    def test_capacity(self):
        with qsim.capacity(2**12):
            with pytest.raises(CapacityError):
                analysis.key_identification_povm(4, 3)


def _ind(k, t, trials, seed):
    scheme = PermScheme(k)
    ctx = AdversaryContext(scheme, k, "ind", AttackModel.CPA, t, "0", "1")
    return games.run_ind(scheme, brute_force_adversary(ctx), "cpa", k, "0", "1", trials, copies=t, seed=seed)


class TestBruteForce:
    def test_k2_recovers_key(self):
        rep = _ind(2, 1, 2000, 0)
        assert rep.advantage_or_gap == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("t", [0, 4])
    def test_k3_near_ceiling(self, t):
        rep = _ind(3, t, 4000, 1)
        ceiling = analysis.ind_ceiling(PermScheme(3), 3, "0", "1", t)
        assert abs(rep.advantage_or_gap - ceiling) <= 3 * rep.ci95_halfwidth

    def test_only_perm(self):
        with pytest.raises(DomainError):
            analysis.brute_force_key_adversary(BrokenScheme(77))
