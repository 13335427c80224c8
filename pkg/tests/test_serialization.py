import numpy as np
import pytest

from qcfsim import serialization as ser
from qcfsim.catalog import get_entry, protocol_ids
from qcfsim.errors import ParameterError, ProtocolInvalidError
from qcfsim.protocol import Party, run_honest, run_with_bias


@pytest.mark.parametrize("pid", [p for p in protocol_ids() if p != "broken-fixture"])
def test_protocol_round_trip(pid, tmp_path):
    p = get_entry(pid).protocol
    path = tmp_path / "p.json"
    ser.save(ser.protocol_to_dict(p), path)
    q = ser.protocol_from_dict(ser.load(path))
    assert q.layout == p.layout and q.owners == p.owners and q.first_mover is p.first_mover
    np.testing.assert_array_equal(q.initial_state, p.initial_state)
    for r, s in zip(p.rounds, q.rounds):
        np.testing.assert_array_equal(r.unitary, s.unitary)
        assert r.targets == s.targets and r.transfers == s.transfers
    assert run_honest(q).probabilities == pytest.approx(run_honest(p).probabilities, abs=1e-15)
    # the encoding is deterministic
    assert ser.dumps(ser.protocol_to_dict(q)) == path.read_text()


def test_first_mover_must_match():
    doc = ser.protocol_to_dict(get_entry("protocol2").protocol)
    doc["first_mover"] = Party(doc["first_mover"]).other.value
    with pytest.raises(ProtocolInvalidError) as exc:
        ser.protocol_from_dict(doc)
    assert exc.value.clause == "first mover"
    del doc["first_mover"]
    with pytest.raises(ParameterError):
        ser.protocol_from_dict(doc)


def test_version_and_kind_checked():
    doc = ser.protocol_to_dict(get_entry("atvy").protocol)
    with pytest.raises(ParameterError):
        ser.protocol_from_dict({**doc, "format_version": 99})
    with pytest.raises(ParameterError):
        ser.strategy_from_dict(doc)


def test_array_codec():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    np.testing.assert_array_equal(ser.decode_array(ser.encode_array(a)), a)
    with pytest.raises(ParameterError):
        ser.decode_array([[1.0, 2.0, 3.0]])


def test_strategy_and_witness_round_trip():
    entry = get_entry("protocol2")
    p = entry.protocol
    lo, hi = entry.strategies["bob_conditional_option"], entry.strategies["bob_always_option"]
    doc = ser.witness_to_dict(p.name, 1 / 6, lo, hi, {"note": "x"})
    name, lo2, hi2 = ser.witness_from_dict(doc)
    assert name == p.name
    honest = run_honest(p)
    for s, t in ((lo, lo2), (hi, hi2)):
        assert t.party is s.party and t.ancillas == s.ancillas
        assert run_with_bias(p, t, honest).epsilon == pytest.approx(run_with_bias(p, s, honest).epsilon, abs=1e-15)
