import numpy as np
import pytest

from qcfsim.attacks import fit_small_x
from qcfsim.catalog import (
    DEFAULT_X_GRID,
    get_entry,
    make_blackbox,
    make_restricted,
    mix_strategies,
    protocol_ids,
    restricted_fidelity_curve,
)
from qcfsim.errors import ParameterError, ProtocolInvalidError, StrategyError
from qcfsim.measures import fidelity
from qcfsim.protocol import BiasStrategy, Party, run_honest, run_with_bias, verify_insensitivity


def restricted_fidelity_oracle(x):
    """Hand computation for Protocol 2, strategy (i).

    Alice's outcome-1 marginal is diag(1/2, 1/2) on {|C mO mM> = |010>, |101>}
    honestly and |010> under (i); the mixing ancilla is Bob's, so the
    restricted marginal is the classical mixture with weights
    ((1+3x), (1-x)) / (2(1+x)).
    """
    return 0.5 + np.sqrt((1 + 3 * x) * (1 - x)) / (2 * (1 + x))


@pytest.fixture(scope="module")
def p2():
    return get_entry("protocol2")


@pytest.mark.parametrize("pid", ["protocol2", "atvy"])
def test_catalog_protocols_are_fair(pid):
    assert run_honest(get_entry(pid).protocol).probabilities == pytest.approx((0.5, 0.5), abs=1e-12)


def test_broken_fixture_is_registered_and_invalid():
    assert "broken-fixture" in protocol_ids()
    with pytest.raises(ProtocolInvalidError):
        run_honest(get_entry("broken-fixture").protocol)


def test_unknown_ids():
    with pytest.raises(StrategyError):
        get_entry("nope")
    with pytest.raises(StrategyError):
        get_entry("protocol2").strategy("nope")


def test_protocol2_named_biases(p2):
    p = p2.protocol
    prof_i = run_with_bias(p, p2.strategies["bob_always_option"])
    prof_ii = run_with_bias(p, p2.strategies["bob_conditional_option"])
    assert prof_i.probabilities[1] == pytest.approx(1.0, abs=1e-12)
    assert prof_ii.probabilities[1] == pytest.approx(0.5, abs=1e-12)
    assert prof_i.epsilon == pytest.approx(0.5, abs=1e-12)
    assert prof_ii.epsilon == pytest.approx(0.0, abs=1e-12)
    assert verify_insensitivity(prof_i) and verify_insensitivity(prof_ii)
    f = fidelity(prof_i.reduced_states[(Party.ALICE, 1)], prof_ii.reduced_states[(Party.ALICE, 1)])
    assert f == pytest.approx(1.0, abs=1e-9)


def test_protocol2_garbled_message_is_caught(p2):
    prof = run_with_bias(p2.protocol, p2.strategies["bob_garbled_message"])
    rep = verify_insensitivity(prof)
    assert not rep and rep.max_leakage > 0.1


def test_protocol2_alice_tilts(p2):
    p = p2.protocol
    assert run_with_bias(p, p2.strategies["alice_favor_zero"]).epsilon == pytest.approx(0.25, abs=1e-12)
    assert run_with_bias(p, p2.strategies["alice_favor_one"]).epsilon == pytest.approx(-0.25, abs=1e-12)


def test_atvy_strategies():
    e = get_entry("atvy")
    prof = run_with_bias(e.protocol, e.strategies["bob_flip_reply"])
    assert prof.epsilon == pytest.approx(0, abs=1e-12) and verify_insensitivity(prof)
    m = np.sqrt(2) / 4
    assert run_with_bias(e.protocol, e.strategies["bob_guess_match"]).epsilon == pytest.approx(-m, abs=1e-12)
    assert run_with_bias(e.protocol, e.strategies["bob_guess_mismatch"]).epsilon == pytest.approx(m, abs=1e-12)


def test_blackbox_examples():
    fair = make_blackbox()
    assert fair.outcome0_probability(0.0) == 0.5
    with pytest.raises(ParameterError):
        fair.outcome0_probability(0.1)
    box = make_blackbox(-0.1, 0.2)
    assert box.outcome0_probability(-0.1) == pytest.approx(0.4)
    assert box.outcome0_probability(0.2) == pytest.approx(0.7)
    near = make_blackbox(-0.5 + 1e-9, 0.5 - 1e-9)
    assert near.outcome0_probability(0.5 - 1e-9) == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(ParameterError):
        make_blackbox(0.1, 0.2)
    with pytest.raises(ParameterError):
        make_blackbox(-0.5, 0.2)


def test_blackbox_sampling_is_seeded():
    box = make_blackbox(-0.1, 0.2)
    draws = [box.sample(0.2, np.random.default_rng(11)) for _ in range(3)]
    assert len(set(draws)) == 1
    rng = np.random.default_rng(12)
    mean0 = np.mean([box.sample(0.2, rng) == 0 for _ in range(4000)])
    assert mean0 == pytest.approx(0.7, abs=0.03)


def test_restricted_endpoints_and_midpoint(p2):
    p, s = p2.protocol, p2.strategies["bob_always_option"]
    assert run_with_bias(p, make_restricted(p, s, 0.0)).epsilon == pytest.approx(0, abs=1e-12)
    assert run_with_bias(p, make_restricted(p, s, 1.0)).epsilon == pytest.approx(0.5, abs=1e-12)
    assert run_with_bias(p, make_restricted(p, s, 0.1)).epsilon == pytest.approx(0.05, abs=1e-12)
    with pytest.raises(ParameterError):
        make_restricted(p, s, 1.5)


def test_restricted_rejects_sensitive_base(p2):
    with pytest.raises(StrategyError):
        make_restricted(p2.protocol, p2.strategies["bob_garbled_message"], 0.1)


def test_restricted_curve_matches_hand_oracle(p2):
    xs = [0.0, 0.2] + list(DEFAULT_X_GRID)
    curve = restricted_fidelity_curve(p2.protocol, p2.strategies["bob_always_option"], xs)
    assert curve[0][1] == pytest.approx(1.0, abs=1e-12)
    assert curve[1][1] == pytest.approx(0.5 + np.sqrt(2) / 3, abs=1e-12)
    for x, f in curve:
        assert f == pytest.approx(restricted_fidelity_oracle(x), abs=1e-12)


def test_restricted_curve_has_no_linear_term(p2):
    curve = restricted_fidelity_curve(p2.protocol, p2.strategies["bob_always_option"], DEFAULT_X_GRID)
    c1, c2, _ = fit_small_x(*zip(*curve))
    assert abs(c1) <= 1e-3 and c2 > 0
    # the same fit of the exact curve (expansion 1 - x^2 + O(x^3))
    exact = fit_small_x(DEFAULT_X_GRID, [restricted_fidelity_oracle(x) for x in DEFAULT_X_GRID])
    np.testing.assert_allclose([c1, c2], exact[:2], atol=1e-9)
    assert c2 == pytest.approx(1.0, abs=0.05)


def test_mix_rejects_mismatched_parties(p2):
    with pytest.raises(StrategyError):
        mix_strategies(p2.protocol, BiasStrategy.honest(Party.ALICE), p2.strategies["bob_always_option"], 0.5)
