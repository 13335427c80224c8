import numpy as np
import pytest

from qcfsim.attacks import ConstantBiasAdversary, SuperposedAdversary
from qcfsim.catalog import get_entry, make_blackbox
from qcfsim.errors import LayoutError, ParameterError, ProtocolInvalidError, StrategyError
from qcfsim.gates import Circuit, X
from qcfsim.protocol import (
    BiasStrategy,
    HonestAdversary,
    Move,
    OutcomeMeasurement,
    Party,
    QcfProtocol,
    Round,
    evolve,
    losing_outcome,
    play_protocol1,
    run_honest,
    run_with_bias,
    verify_insensitivity,
)
from qcfsim.qlinalg import RegisterLayout, ket

Z_PROJ = (np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))


def bell_flip(swap_bob=False):
    """Alice makes a Bell pair and sends one half; both read their qubit."""
    lay = RegisterLayout.qubits("P", "Q")
    prep = Circuit("P", "Q").h("P").cx("P", "Q").unitary()
    bob = Z_PROJ[::-1] if swap_bob else Z_PROJ
    return QcfProtocol(
        "bell", lay, {"P": Party.ALICE, "Q": Party.ALICE}, ket(0, 4),
        (Round(Party.ALICE, ("P", "Q"), prep, ("Q",)),),
        {Party.ALICE: OutcomeMeasurement(("P",), Z_PROJ), Party.BOB: OutcomeMeasurement(("Q",), bob)},
    )


def test_toy_protocol_is_valid():
    run = run_honest(bell_flip())
    assert run.probabilities == pytest.approx((0.5, 0.5), abs=1e-12)
    assert run.orthogonality_residual < 1e-12
    assert bell_flip().first_mover is Party.ALICE


def test_swapped_projectors_break_agreement():
    with pytest.raises(ProtocolInvalidError) as info:
        run_honest(bell_flip(swap_bob=True))
    assert info.value.clause == "outcome agreement"


def test_broken_fixture_names_clause():
    with pytest.raises(ProtocolInvalidError) as info:
        run_honest(get_entry("broken-fixture").protocol)
    assert info.value.clause == "branch norms != 1/2"


def test_ownership_is_enforced_by_constructor():
    lay = RegisterLayout.qubits("P", "Q")
    with pytest.raises(LayoutError):
        QcfProtocol("bad", lay, {"P": Party.ALICE, "Q": Party.BOB}, ket(0, 4),
                    (Round(Party.ALICE, ("Q",), X),),
                    {Party.ALICE: OutcomeMeasurement(("P",), Z_PROJ), Party.BOB: OutcomeMeasurement(("Q",), Z_PROJ)})
    # sending a register one does not hold
    with pytest.raises(LayoutError):
        QcfProtocol("bad", lay, {"P": Party.ALICE, "Q": Party.BOB}, ket(0, 4),
                    (Round(Party.ALICE, ("P",), X, ("Q",)),),
                    {Party.ALICE: OutcomeMeasurement(("P",), Z_PROJ), Party.BOB: OutcomeMeasurement(("Q",), Z_PROJ)})


def test_non_unitary_round_rejected():
    lay = RegisterLayout.qubits("P", "Q")
    with pytest.raises(LayoutError):
        QcfProtocol("bad", lay, {"P": Party.ALICE, "Q": Party.BOB}, ket(0, 4),
                    (Round(Party.ALICE, ("P",), np.diag([1.0, 0.0])),),
                    {Party.ALICE: OutcomeMeasurement(("P",), Z_PROJ), Party.BOB: OutcomeMeasurement(("Q",), Z_PROJ)})


def test_projectors_must_sum_to_identity():
    lay = RegisterLayout.qubits("P", "Q")
    with pytest.raises(LayoutError):
        QcfProtocol("bad", lay, {"P": Party.ALICE, "Q": Party.BOB}, ket(0, 4), (),
                    {Party.ALICE: OutcomeMeasurement(("P",), (Z_PROJ[0], Z_PROJ[0])),
                     Party.BOB: OutcomeMeasurement(("Q",), Z_PROJ)})


def test_strategy_cannot_touch_other_party_register():
    p = get_entry("protocol2").protocol
    bad = BiasStrategy(Party.BOB, {1: Move(("C",), X)}, label="bad")
    with pytest.raises(StrategyError):
        run_with_bias(p, bad)
    wrong_round = BiasStrategy(Party.BOB, {0: Move(("D",), X)}, label="wrong")
    with pytest.raises(StrategyError):
        run_with_bias(p, wrong_round)


def test_losing_outcome_convention():
    assert losing_outcome(Party.ALICE) == 0 and losing_outcome(Party.BOB) == 1


@pytest.mark.parametrize("pid", ["protocol2", "atvy"])
def test_honest_strategy_reproduces_honest_run(pid):
    p = get_entry(pid).protocol
    for party in Party:
        prof = run_with_bias(p, BiasStrategy.honest(party))
        np.testing.assert_allclose(prof.final_state, run_honest(p).final_state, atol=1e-12, rtol=0)
        assert prof.epsilon == pytest.approx(0, abs=1e-12)
        assert verify_insensitivity(prof)


def test_evolve_accepts_extended_layout():
    p = get_entry("protocol2").protocol
    big = p.extended(after=[("idle", 2, Party.ALICE)])
    psi = evolve(big)
    np.testing.assert_allclose(psi.reshape(-1, 2)[:, 0], run_honest(p).final_state, atol=1e-12)


def test_protocol1_honest_and_black_box():
    assert play_protocol1(make_blackbox(), 0.5).detect_probability == pytest.approx(0, abs=1e-15)
    p = get_entry("protocol2").protocol
    assert play_protocol1(p, 0.5).detect_probability == pytest.approx(0, abs=1e-12)
    out = play_protocol1(make_blackbox(0.0, 0.2), 1.0, ConstantBiasAdversary(0.0))
    assert out.detect_probability == pytest.approx(0.25, abs=1e-12)
    with pytest.raises(ParameterError):
        play_protocol1(p, 0.3)


def test_protocol1_honest_adversary_matches_box_formula():
    p = get_entry("protocol2").protocol
    for a in (0.6, 0.8, 1.0):
        out = play_protocol1(p, a, HonestAdversary())
        assert out.detect_probability == pytest.approx(0.5 * (0.5 - np.sqrt(a * (1 - a))), abs=1e-12)


def test_protocol1_superposed_attack_at_two_thirds():
    e = get_entry("protocol2")
    adv = SuperposedAdversary(e.strategies["bob_conditional_option"], e.strategies["bob_always_option"])
    out = play_protocol1(e.protocol, 2 / 3, adv)
    assert out.detect_probability == pytest.approx(0, abs=1e-9)
    assert out.lose_probability == pytest.approx(2 / 3, abs=1e-12)
