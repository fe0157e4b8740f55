import numpy as np
import pytest

from orthoclone.adversary import (
    AttackChannel,
    broadcast_attack,
    common_eigenbasis,
    copy_unitary,
    dummy_swap_attack,
    identity_attack,
    intercept_resend,
    make_attack,
    measure_both_attack,
    mechanism_attack,
    random_attack,
    random_attack_suite,
    shift,
    support_copy_attack,
)
from orthoclone.cloneability import Mechanism, classify_set
from orthoclone.errors import DimensionMismatch, InvalidArgument, NonCommutingFamily, PreconditionFailed
from orthoclone.protocols import BasisSpec, make_koashi_imoto
from orthoclone.qlinalg import DensityMatrix, PureState, dagger, haar_unitary, partial_trace, ptrace_matrix, trace_distance
from orthoclone.simulator import report, run_trace

from conftest import attack_library, ki_reduced


def assert_unitary(u):
    assert np.abs(dagger(u) @ u - np.eye(u.shape[0])).max() <= 1e-10


def test_all_library_unitaries(protocols):
    for p in protocols.values():
        for a in attack_library(p):
            for u in a.unitaries():
                assert_unitary(u)


def test_random_suite_unitary():
    suite = random_attack_suite(3, 30)
    assert [a.params["kind"] for a in suite[:3]] == ["haar", "near-identity", "ancilla-only"]
    for a in suite:
        for u in a.unitaries():
            assert_unitary(u)


def test_random_suite_seeded():
    a, b = random_attack_suite(11, 6), random_attack_suite(11, 6)
    for x, y in zip(a, b):
        assert np.array_equal(x.round1, y.round1) and np.array_equal(x.round2, y.round2)


def test_rejects_non_unitary():
    with pytest.raises(InvalidArgument):
        AttackChannel("bad", (2,), PureState((2,), [1, 0]), round1=np.ones((4, 4)))
    with pytest.raises(DimensionMismatch):
        AttackChannel("bad", (2,), PureState((3,), [1, 0, 0]))
    with pytest.raises(InvalidArgument):
        random_attack(np.random.default_rng(0), kind="other")


def test_copy_unitary_records_index():
    u = copy_unitary([np.diag([1.0, 0]), np.diag([0, 1.0])], 2)
    assert np.allclose(u, np.kron(np.diag([1, 0]), np.eye(2)) + np.kron(np.diag([0, 1]), shift(2)))
    with pytest.raises(InvalidArgument):
        copy_unitary([np.eye(1)] * 3, 2)


def test_intercept_dephases_held_qubit():
    # z intercept on KI(pi/6) turns the pair into a classical mixture
    p = make_koashi_imoto(np.pi / 6)
    t = run_trace(p, intercept_resend(BasisSpec.z(), 1), "0")
    r0, _ = ki_reduced(np.pi / 6)
    assert np.allclose(t.eve.matrix, r0, atol=1e-12)
    assert np.allclose(t.bob_first.matrix, r0, atol=1e-12)
    assert np.allclose(np.diag(np.diag(t.bob.matrix)), t.bob.matrix, atol=1e-12)


def test_intercept_round_check():
    with pytest.raises(InvalidArgument):
        intercept_resend(BasisSpec.z(), 3)


class TestCommonEigenbasis:
    def test_diagonalizes_commuting_family(self, rng):
        u = haar_unitary(4, rng)
        fam = [u @ np.diag(d) @ dagger(u) for d in ([0.5, 0.5, 0, 0], [0.25, 0.25, 0.25, 0.25], [0.1, 0.2, 0.3, 0.4])]
        f = common_eigenbasis(fam)
        assert_unitary(f)
        for m in fam:
            d = dagger(f) @ m @ f
            assert np.abs(d - np.diag(np.diag(d))).max() <= 1e-10

    def test_degenerate_sum(self):
        # diag(1,0) + pi diag(0, 1/pi) is degenerate; the refinement must split it
        fam = [np.diag([1.0, 0, 0]), np.diag([0, 1 / np.pi, 0]), np.diag([0, 0, 1.0])]
        f = common_eigenbasis(fam)
        for m in fam:
            d = dagger(f) @ m @ f
            assert np.abs(d - np.diag(np.diag(d))).max() <= 1e-10

    def test_non_commuting(self):
        with pytest.raises(NonCommutingFamily):
            common_eigenbasis([np.diag([1.0, 0]), np.full((2, 2), 0.5)])


class TestBroadcast:
    def marginals(self, p, attack, label):
        t = run_trace(p, attack, label)
        rho = t.stages[1][1]  # after round 1: (A1, A2, E)
        both = ptrace_matrix(rho, t.dims, [0, 2])
        bob1 = ptrace_matrix(rho, t.dims, [0])
        eve = ptrace_matrix(rho, t.dims, [2])
        return both, bob1, eve

    @pytest.mark.parametrize("name", ["ki(0)", "ki(pi/6)", "ki(pi/4)", "gv", "bb84", "minimal-mixed"])
    def test_marginal_identity(self, protocols, name):
        p = protocols[name]
        fam = [partial_trace(s, {1}) for s in p.states]
        a = broadcast_attack(fam)
        for lab, r in zip(p.labels, fam):
            t = run_trace(p, a, lab)
            rho = t.stages[1][1]
            bob1 = ptrace_matrix(rho, t.dims, [0])
            eve = ptrace_matrix(rho, t.dims, [2])  # the copy register is ancilla factor 0
            assert np.abs(bob1 - r.matrix).max() <= 1e-10
            assert np.abs(eve - r.matrix).max() <= 1e-10

    def test_not_a_clone_at_pi6(self):
        p = make_koashi_imoto(np.pi / 6)
        fam = [partial_trace(s, {1}) for s in p.states]
        a = broadcast_attack(fam)
        assert a.params["construction"] == "copy"
        for lab, r in zip(p.labels, fam):
            t = run_trace(p, a, lab)
            joint = ptrace_matrix(t.stages[1][1], t.dims, [0, 2])
            assert trace_distance(joint, np.kron(r.matrix, r.matrix)) > 1e-3

    def test_prepare_construction_for_identical_family(self):
        p = make_koashi_imoto(np.pi / 4)
        a = broadcast_attack([partial_trace(s, {1}) for s in p.states])
        assert a.params["construction"] == "prepare" and a.round1 is None
        assert report(p, a).disturbance == 0.0

    def test_non_commuting_raises(self, protocols):
        fam = [partial_trace(s, {1}) for s in protocols["minimal-pure"].states]
        with pytest.raises(NonCommutingFamily):
            broadcast_attack(fam)


class TestDummySwap:
    def test_perfect_on_pi4(self):
        p = make_koashi_imoto(np.pi / 4)
        rep = report(p, dummy_swap_attack(p))
        assert rep.eve_guess >= 1 - 1e-9
        assert rep.min_fidelity >= 1 - 1e-9
        for lab in p.labels:
            assert np.allclose(run_trace(p, dummy_swap_attack(p), lab).bob_first.matrix, np.eye(2) / 2, atol=1e-12)

    def test_perfect_on_dummy_swap_set(self):
        # three orthogonal states with identical first reductions
        p = make_koashi_imoto(np.pi / 4)
        rep = report(p, mechanism_attack(p, Mechanism.DUMMY_SWAP))
        assert rep.verdict_crosscheck

    @pytest.mark.parametrize("name", ["ki(pi/6)", "gv", "bb84", "minimal-pure"])
    def test_precondition(self, protocols, name):
        with pytest.raises(PreconditionFailed):
            dummy_swap_attack(protocols[name])


def test_support_copy_needs_orthogonal_family(protocols):
    fam = [partial_trace(s, {1}) for s in protocols["ki(pi/6)"].states]
    with pytest.raises(PreconditionFailed):
        support_copy_attack(fam)


@pytest.mark.parametrize("name", ["ki(0)", "ki(pi/2)", "ki(pi/4)", "minimal-mixed"])
def test_mechanism_attack_is_perfect(protocols, name):
    p = protocols[name]
    v = classify_set(p.state_set())
    rep = report(p, mechanism_attack(p, v.mechanism))
    assert rep.eve_guess >= 1 - 1e-9 and rep.min_fidelity >= 1 - 1e-9


@pytest.mark.parametrize("name", ["ki(pi/6)", "gv", "bb84", "minimal-pure"])
def test_library_cannot_clone_protected_sets(protocols, name):
    p = protocols[name]
    for a in attack_library(p):
        rep = report(p, a)
        assert not (rep.eve_guess >= 1 - 1e-9 and rep.min_fidelity >= 1 - 1e-9), a.name
        assert rep.verdict_crosscheck


def test_ki_pi6_second_round_intercept():
    p = make_koashi_imoto(np.pi / 6)
    rep = report(p, intercept_resend(BasisSpec.z(), 2))
    assert rep.eve_guess == pytest.approx(0.5 + 0.5 * np.cos(np.pi / 3), abs=1e-12)
    assert rep.disturbance > 0


def test_library_agrees_with_verdicts(protocols):
    for p in protocols.values():
        for a in attack_library(p):
            assert report(p, a).verdict_crosscheck, (p.title, a.name)


def test_simple_attacks_break_minimal_mixed(protocols):
    # z intercept of qubit 1 alone already gives the key without disturbance
    rep = report(protocols["minimal-mixed"], intercept_resend(BasisSpec.z(), 1))
    assert rep.eve_guess == pytest.approx(1.0, abs=1e-12) and rep.disturbance == 0.0


def test_measure_both_precondition(protocols):
    with pytest.raises(PreconditionFailed):
        measure_both_attack(protocols["minimal-pure"])


@pytest.mark.parametrize("alpha", [0.2, np.pi / 6, 0.6])
def test_no_imprint_exact(alpha):
    # zero disturbance on every label implies zero Helstrom advantage
    p = make_koashi_imoto(alpha)
    seen = 0
    for a in random_attack_suite(5, 200):
        rep = report(p, a)
        if rep.disturbance == 0.0:
            seen += 1
            assert rep.eve_guess <= 0.5 + 1e-12
    assert seen >= 60


@pytest.mark.parametrize("alpha", [0.2, np.pi / 6, 0.6])
def test_information_costs_disturbance(alpha):
    # gain grows like the square root of disturbance for weak attacks
    p = make_koashi_imoto(alpha)
    for a in random_attack_suite(5, 200):
        rep = report(p, a)
        assert rep.eve_guess - 0.5 <= 2.0 * np.sqrt(rep.disturbance) + 1e-12
        assert not (rep.eve_guess > 0.5 + 1e-4 and rep.disturbance < 1e-9)


def test_weak_attack_gains_more_than_disturbs():
    # fidelity 1 - 1e-9 does not cap the gain at 1e-6: near-identity attacks
    # gain O(eps) while disturbing O(eps^2)
    p = make_koashi_imoto(np.pi / 6)
    hits = [
        rep for rep in (report(p, a) for a in random_attack_suite(5, 200))
        if rep.min_fidelity >= 1 - 1e-9 and rep.eve_guess > 0.5 + 1e-6
    ]
    assert hits


def test_ancilla_only_attacks_learn_nothing():
    p = make_koashi_imoto(np.pi / 6)
    rng = np.random.default_rng(1)
    for _ in range(5):
        rep = report(p, random_attack(rng, 3, "ancilla-only"))
        assert rep.eve_guess == pytest.approx(0.5, abs=1e-12)
        assert rep.disturbance == 0.0


def test_make_attack(protocols):
    p = protocols["ki(pi/6)"]
    assert make_attack("identity", p).name == "identity"
    assert make_attack("intercept", p, np.pi / 8, 2).params == {"basis_angle": np.pi / 8, "round": 2}
    assert make_attack("measure-second", p).mechanism is Mechanism.MEASURE_SECOND
    with pytest.raises(InvalidArgument):
        make_attack("teleport", p)
    assert identity_attack().ancilla_dims == ()
