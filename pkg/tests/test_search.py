import json

import pytest

from qcfsim import serialization as ser
from qcfsim.attacks import delta_a_search, protocol2_bob_family, witness_attack
from qcfsim.catalog import get_entry
from qcfsim.cli import main


@pytest.fixture(scope="module")
def p2_search():
    p = get_entry("protocol2").protocol
    return p, delta_a_search(p, protocol2_bob_family(p), seed=7, restarts=2)


@pytest.mark.slow
def test_protocol2_search_approaches_one_sixth_from_below(p2_search):
    _, res = p2_search
    assert res.witness.certified
    # 1/6 is the optimum for Bob; the search is a certified lower bound
    assert 1 / 6 - 1e-3 <= res.delta_a <= 1 / 6 + 1e-9


@pytest.mark.slow
def test_search_witness_replays_without_detection(p2_search, tmp_path, capsys):
    p, res = p2_search
    rep = witness_attack(p, res.witness)
    assert rep.pd_simulated <= 1e-6
    assert abs(rep.pd_simulated - rep.pd_closed_form) <= 1e-8
    path = tmp_path / "w.json"
    ser.save(ser.witness_to_dict(p.name, res.delta_a, res.witness.s_low, res.witness.s_high), path)
    assert main(["attack", "protocol2", "searched-pair", "--a", repr(res.a), "--witness", str(path),
                 "--no-povm"]) == 0
    assert json.loads(capsys.readouterr().out)["P_d_simulated"] <= 1e-6
    # a witness for another protocol is refused
    assert main(["attack", "atvy", "searched-pair", "--a", "0.8", "--witness", str(path)]) == 2
