import json

import numpy as np
import pytest

from qpke import analysis, games, qsim
from qpke.adversaries import (AdversaryContext, brute_force_adversary, coin_adversary, constant_adversary,
                              helstrom_distinguisher, BLIND_SIMULATORS)
from qpke.core import Adversary, AttackModel, Ciphertext, PlaintextSpace
from qpke.errors import DomainError, ShapeError, TransformError
from qpke.games import MessageDistribution, basis_function, classical_function
from qpke.schemes import PermScheme, ToyGMScheme

GM = ToyGMScheme()
K2, K3 = PermScheme(2), PermScheme(3)


def ctx(scheme, notion, attack="cpa", copies=4, x="0", y="1"):
    return AdversaryContext(scheme, scheme.default_n, notion, AttackModel.parse(attack), copies, x, y)


def within(value, target, report, sigmas=3):
    return abs(value - target) <= sigmas * report.ci95_halfwidth


class OneMessagePerm(PermScheme):
    name = "perm-one"

    def plaintext_space(self, n):
        return PlaintextSpace(n, ("0",), "single message")


class TestOW:
    def test_constant_guess_is_at_baseline(self):
        rep = games.run_ow(K3, constant_adversary(ctx(K3, "ow")), "cpa", 3, 2000, seed=1)
        assert within(rep.advantage_or_gap, 0.0, rep)

    def test_brute_force_key_search(self):
        rep = games.run_ow(K3, brute_force_adversary(ctx(K3, "ow")), "cpa", 3, 10_000, copies=4, seed=2)
        assert rep.advantage_or_gap >= 0.4
        # the PGM never beats the exact 4-copy ceiling
        ceiling = analysis.ind_ceiling(K3, 3, "0", "1", 4)
        assert rep.advantage_or_gap <= ceiling / 2 + 3 * rep.ci95_halfwidth

    def test_degenerate_space(self):
        scheme = OneMessagePerm(2)
        rep = games.run_ow(scheme, Adversary(lambda v: "0"), "cpa", 2, 20)
        assert rep.adversary_score == 1.0 and rep.advantage_or_gap == 0.0

    def test_bad_trials(self):
        with pytest.raises(DomainError):
            games.run_ow(K2, Adversary(lambda v: "0"), "cpa", 2, 0)


class TestIND:
    def test_coin(self):
        rep = games.run_ind(K3, coin_adversary(ctx(K3, "ind")), "cpa", 3, "0", "1", 4000, seed=3)
        assert rep.advantage_or_gap <= 3 * rep.ci95_halfwidth

    def test_helstrom_k2(self):
        rep = games.run_ind(K2, helstrom_distinguisher(ctx(K2, "ind", copies=0)), "cpa", 2, "0", "1", 4000,
                            copies=0, seed=4)
        assert rep.advantage_or_gap == pytest.approx(1.0, abs=2 * rep.ci95_halfwidth)

    def test_gm_residuosity(self):
        rep = games.run_ind(GM, brute_force_adversary(ctx(GM, "ind")), "cpa", 77, "0", "1", 10_000, seed=5)
        assert rep.advantage_or_gap >= 0.99

    def test_distinct_pair_required(self):
        with pytest.raises(DomainError):
            games.run_ind(K2, coin_adversary(ctx(K2, "ind")), "cpa", 2, "0", "0", 10)

    def test_non_bit_output(self):
        with pytest.raises(DomainError):
            games.run_ind(K2, Adversary(lambda v: "yes"), "cpa", 2, "0", "1", 4)

    @pytest.mark.parametrize("t", [0, 1, 2])
    def test_measurements_stay_below_ceiling(self, t):
        ceiling = analysis.ind_ceiling(K3, 3, "0", "1", t)
        for make in (helstrom_distinguisher, brute_force_adversary):
            rep = games.run_ind(K3, make(ctx(K3, "ind", copies=t)), "cpa", 3, "0", "1", 2000, copies=t, seed=6)
            assert rep.advantage_or_gap <= ceiling + 3 * rep.ci95_halfwidth


class TestSEMC:
    def test_leakage_determines_target(self):
        f = classical_function(lambda a: a, "id")
        leak_reader = Adversary(lambda view: f(view.leakage))
        sim = games.constant_transform(lambda view: f(view.leakage))
        dist = MessageDistribution.uniform(("0", "1"))
        rep = games.run_sem_c(K3, leak_reader, sim, "cpa", 3, dist, f, games.IDENTITY_LEAKAGE, 2000, seed=7)
        assert rep.adversary_score == rep.simulator_score == 1.0
        assert rep.advantage_or_gap == 0.0

    def test_constant_target(self):
        f = classical_function(lambda a: "c", "const")
        adv = Adversary(lambda view: "c")
        rep = games.run_sem_c(K2, adv, None, "cpa", 2, MessageDistribution.uniform("01"), f, None, 500)
        assert (rep.adversary_score, rep.simulator_score, rep.advantage_or_gap) == (1.0, 1.0, 0.0)

    def test_gm_brute_force(self):
        rep = games.run_sem_c(GM, brute_force_adversary(ctx(GM, "sem-c")), None, "cpa", 77,
                              MessageDistribution.uniform("01"), games.IDENTITY_LEAKAGE, games.EMPTY_LEAKAGE,
                              10_000, seed=8)
        assert rep.adversary_score == 1.0
        assert rep.advantage_or_gap >= 0.49

    def test_quantum_target_rejected(self):
        with pytest.raises(DomainError):
            games.run_sem_c(K2, Adversary(lambda v: "0"), None, "cpa", 2, MessageDistribution.uniform("01"),
                            basis_function({"0": 0, "1": 1}), None, 10)

    def test_transform_failure(self):
        def bad(adv, rng=None):
            raise RuntimeError("no simulator")

        with pytest.raises(TransformError):
            games.run_sem_c(K2, Adversary(lambda v: "0"), bad, "cpa", 2, MessageDistribution.uniform("01"),
                            games.IDENTITY_LEAKAGE, None, 10)

    def test_substitution_with_no_copies(self):
        # t=0 adversary: the simulator still gets one copy to encrypt with
        rep = games.run_sem_c(K2, Adversary(lambda v: "0"), None, "cpa", 2, MessageDistribution.uniform("01"),
                              games.IDENTITY_LEAKAGE, None, 20, copies=0)
        assert rep.pubkey_copies == 0


class TestSEMQ:
    DIST = MessageDistribution.uniform(("0", "1"))

    def test_oracle_fed(self):
        f = basis_function({"0": 1, "1": 0})
        adv = Adversary(lambda view: f(view.leakage))
        rep = games.run_sem_q(K3, adv, None, "cpa", 3, self.DIST, f, games.IDENTITY_LEAKAGE, 500)
        assert rep.adversary_score == pytest.approx(1.0)

    def test_orthogonal_output(self):
        f = basis_function({"0": 0, "1": 1}, dim=3)
        adv = Adversary(lambda view: qsim.basis_state(2, 3))
        rep = games.run_sem_q(K3, adv, None, "cpa", 3, self.DIST, f, None, 500)
        assert rep.adversary_score == 0.0

    def test_fixed_guess_on_balanced_pair(self):
        f = basis_function({"0": 1, "1": 0})
        adv = Adversary(lambda view: qsim.basis_state(0, 2))
        rep = games.run_sem_q(K3, adv, None, "cpa", 3, self.DIST, f, None, 4000, seed=9)
        assert within(rep.adversary_score, 0.5, rep)

    def test_mixed_output_uses_expectation(self):
        f = basis_function({"0": 0, "1": 1})
        adv = Adversary(lambda view: qsim.maximally_mixed(2))
        rep = games.run_sem_q(K2, adv, None, "cpa", 2, self.DIST, f, None, 50)
        assert rep.adversary_score == pytest.approx(0.5)

    @pytest.mark.parametrize("name", sorted(BLIND_SIMULATORS))
    def test_blind_strategies_cap_at_half(self, name):
        f = basis_function({"0": 1, "1": 0})
        sim = BLIND_SIMULATORS[name]()
        rep = games.run_sem_q(K2, Adversary(lambda v: qsim.basis_state(0, 2)), sim, "cpa", 2, self.DIST, f, None,
                              4000, seed=10)
        assert rep.simulator_score <= 0.5 + 3 * rep.ci95_halfwidth

    def test_dimension_mismatch(self):
        f = basis_function({"0": 0, "1": 1})
        with pytest.raises(ShapeError):
            games.run_sem_q(K2, Adversary(lambda v: qsim.basis_state(0, 4)), None, "cpa", 2, self.DIST, f, None, 5)


class TestNM:
    DIST = MessageDistribution.uniform(("0", "1"))

    def test_false_relation(self):
        adv = Adversary(lambda view: view.encrypt("0"))
        rep = games.run_nm(GM, adv, None, "cpa", 77, self.DIST, None, games.FALSE_RELATION, 300)
        assert (rep.adversary_score, rep.simulator_score, rep.advantage_or_gap) == (0.0, 0.0, 0.0)

    def test_gm_brute_force_reencryption(self):
        rep = games.run_nm(GM, brute_force_adversary(ctx(GM, "nm", "cca2")), None, "cca2", 77, self.DIST, None,
                           games.IDENTITY_RELATION, 10_000, seed=11)
        assert rep.advantage_or_gap >= 0.49

    def test_fixed_message_encryption(self):
        adv = Adversary(lambda view: view.encrypt("0"))
        rep = games.run_nm(K3, adv, None, "cpa", 3, self.DIST, None, games.IDENTITY_RELATION, 4000, seed=12)
        # a fresh bit-0 copy lands on the challenge's coset pair with probability 1/3,
        # and such outputs fail the zero-overlap rule, so each side scores 1/2 * 2/3
        assert within(rep.adversary_score, 1 / 3, rep)
        assert within(rep.simulator_score, 1 / 3, rep)
        assert abs(rep.advantage_or_gap) <= 3 * analysis.combined_ci(rep.ci95_halfwidth, rep.ci95_halfwidth)

    def test_non_ciphertext_output_is_flagged(self):
        rep = games.run_nm(K2, Adversary(lambda view: "0"), None, "cpa", 2, self.DIST, None,
                           games.IDENTITY_RELATION, 10)
        assert rep.adversary_score == 0.0 and rep.flagged_trials == 20

    def test_resubmitting_challenge_fails(self):
        adv = Adversary(lambda view: view.challenge)
        rep = games.run_nm(GM, adv, games.constant_transform(lambda v: "x"), "cca2", 77, self.DIST, None,
                           games.IDENTITY_RELATION, 50)
        assert rep.adversary_score == 0.0 and rep.flagged_trials == 100

    def test_invalid_ciphertext_fails(self):
        adv = Adversary(lambda view: Ciphertext(qsim.basis_state(0, 2)))  # not an eigenstate of U_pi
        rep = games.run_nm(K2, adv, None, "cpa", 2, self.DIST, None, games.IDENTITY_RELATION, 20)
        assert rep.adversary_score == 0.0


class TestCalibration:
    @pytest.mark.parametrize("notion", games.NOTIONS)
    @pytest.mark.parametrize("attack", ["coa", "cpa", "cca1", "cca2"])
    def test_input_ignoring_adversary(self, notion, attack):
        for scheme in (K2, GM):
            c = ctx(scheme, notion, attack, copies=1)
            adv = coin_adversary(c)
            n, dist = scheme.default_n, MessageDistribution.uniform(("0", "1"))
            common = dict(trials=1000, copies=1, seed=13)
            if notion == "ow":
                rep = games.run_ow(scheme, adv, attack, n, **common)
            elif notion == "ind":
                rep = games.run_ind(scheme, adv, attack, n, "0", "1", **common)
            elif notion == "sem-c":
                rep = games.run_sem_c(scheme, adv, None, attack, n, dist, games.IDENTITY_LEAKAGE, None, **common)
            elif notion == "sem-q":
                rep = games.run_sem_q(scheme, adv, None, attack, n, dist, games.index_function("01"), None,
                                      **common)
            else:
                rep = games.run_nm(scheme, adv, None, attack, n, dist, None, games.IDENTITY_RELATION, **common)
            h = rep.ci95_halfwidth
            bound = 3 * (2 * h if notion == "ind" else analysis.combined_ci(h, h) if rep.simulator_score is not None
                         else h)
            assert abs(rep.advantage_or_gap) <= bound

    def test_coa_matches_cpa(self):
        reps = []
        for i, attack in enumerate(("coa", "cpa")):
            adv = brute_force_adversary(ctx(K3, "ind", attack, copies=1))
            reps.append(games.run_ind(K3, adv, attack, 3, "0", "1", 4000, copies=1, seed=100 + i))
        diff = abs(reps[0].advantage_or_gap - reps[1].advantage_or_gap)
        assert diff <= 3 * analysis.combined_ci(2 * reps[0].ci95_halfwidth, 2 * reps[1].ci95_halfwidth)


class TestReport:
    def test_fields_and_json(self):
        rep = games.run_ind(K2, coin_adversary(ctx(K2, "ind")), "cpa", 2, "0", "1", 100, seed=2**64 - 1)
        d = json.loads(rep.to_json())
        assert list(d) == sorted(games.REPORT_FIELDS)
        assert d["seed"] == 2**64 - 1 and d["trials"] == 100
        assert d["ci95_halfwidth"] == pytest.approx(analysis.hoeffding_halfwidth(100))
        assert set(d["oracle_query_counts"]) == {"dec_phase1", "dec_phase2", "enc_phase1", "enc_phase2"}
        assert 0 <= d["adversary_score"] <= 1 and 0 <= d["simulator_score"] <= 1

    def test_deterministic(self):
        adv = brute_force_adversary(ctx(K3, "ind", copies=2))
        a = games.run_ind(K3, adv, "cpa", 3, "0", "1", 300, copies=2, seed=42)
        b = games.run_ind(K3, adv, "cpa", 3, "0", "1", 300, copies=2, seed=42)
        assert a.to_json() == b.to_json()

    def test_workers_match_serial(self):
        adv = brute_force_adversary(ctx(GM, "nm", "cca2"))
        args = (GM, adv, None, "cca2", 77, MessageDistribution.uniform("01"), None, games.IDENTITY_RELATION, 200)
        serial = games.run_nm(*args, seed=9)
        threaded = games.run_nm(*args, seed=9, workers=4)
        assert serial.to_json() == threaded.to_json()

    def test_seed_range(self):
        with pytest.raises(DomainError):
            games.run_ow(K2, Adversary(lambda v: "0"), "cpa", 2, 5, seed=-1)

    def test_distribution_validation(self):
        with pytest.raises(DomainError):
            MessageDistribution(("0", "1"), (0.5, 0.6))
        with pytest.raises(DomainError):
            games.run_sem_c(K2, Adversary(lambda v: "0"), None, "cpa", 2, MessageDistribution.point("7"),
                            games.IDENTITY_LEAKAGE, None, 5)

    def test_label_function_types(self):
        with pytest.raises(ShapeError):
            games.LabelFunction("quantum", lambda a: "0")("0")
        f = games.index_function(("a", "b", "c"))
        np.testing.assert_array_equal(f("c").amplitudes, [0, 0, 1])
