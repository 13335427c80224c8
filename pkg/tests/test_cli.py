import csv
import io
import json
import math

import pytest

from qcfsim import serialization as ser
from qcfsim.attacks import pd_box
from qcfsim.catalog import get_entry
from qcfsim.cli import DEFAULT_SEED, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


@pytest.mark.parametrize("pid", ["protocol2", "atvy"])
def test_validate_catalog(capsys, pid):
    data = run_json(capsys, "validate", pid)
    assert data["valid"] is True
    assert data["probabilities"] == pytest.approx([0.5, 0.5], abs=1e-12)


def test_validate_broken_fixture(capsys):
    code, out, err = run(capsys, "validate", "broken-fixture")
    assert code == 1
    assert "branch norms" in err
    assert json.loads(out)["violated"].startswith("branch norms")


def test_validate_protocol_file(capsys, tmp_path):
    path = tmp_path / "p.json"
    ser.save(ser.protocol_to_dict(get_entry("atvy").protocol), path)
    assert run_json(capsys, "validate", "--protocol-file", str(path))["valid"] is True
    doc = ser.load(path)
    doc["first_mover"] = "bob" if doc["first_mover"] == "alice" else "alice"
    ser.save(doc, path)
    code, _, err = run(capsys, "validate", "--protocol-file", str(path))
    assert code == 1 and "first mover" in err


def test_attack_at_two_thirds(capsys):
    data = run_json(capsys, "attack", "protocol2", "bob_conditional_option", "bob_always_option", "--a", "0.6667")
    assert data["P_d_simulated"] <= 1e-7
    assert data["P_d_box"] > 0
    assert data["beats_blackbox"] is True


def test_attack_exact_two_thirds_is_undetected(capsys):
    data = run_json(capsys, "attack", "protocol2", "bob_always_option", "bob_conditional_option",
                    "--a", repr(2 / 3))
    assert data["P_d_simulated"] <= 1e-9
    assert data["P_d_closed_form"] == pytest.approx(data["P_d_simulated"], abs=1e-8)


def test_attack_honest_pair_equals_box(capsys):
    data = run_json(capsys, "attack", "protocol2", "honest", "honest", "--a", "0.75", "--party", "alice")
    assert data["P_d_simulated"] == pytest.approx(pd_box(0.75, 0.0), abs=1e-12)


def test_attack_usage_errors(capsys):
    assert run(capsys, "attack", "protocol2", "nope", "honest", "--a", "0.6")[0] == 2
    assert run(capsys, "attack", "protocol2", "bob_always_option", "--a", "0.6")[0] == 2
    assert run(capsys, "attack", "protocol2", "bob_always_option", "alice_favor_zero", "--a", "0.6")[0] == 2
    assert run(capsys, "attack", "protocol2", "searched-pair", "--a", "0.6",
               "--witness", "/nonexistent/w.json")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["attack", "protocol2"])
    assert exc.value.code == 2


def test_curves_rows(capsys):
    code, out, _ = run(capsys, "curves", "--step", "0.25")
    assert code == 0
    rows = {float(r["epsilon"]): r for r in csv.DictReader(io.StringIO(out))}
    assert set(rows) == {-0.5, -0.25, 0.0, 0.25, 0.5}
    assert float(rows[0.0]["F_I"]) == 1 and float(rows[0.0]["F_II"]) == 1
    assert float(rows[0.5]["F_I"]) == 0.5 and rows[0.5]["F_II"] == ""
    assert float(rows[-0.25]["F_II"]) == 0.5 and rows[-0.25]["F_I"] == ""
    assert run(capsys, "curves", "--eps-min", "-0.7")[0] == 2
    assert run(capsys, "curves", "--step", "0.3")[0] == 2


def test_curves_json(capsys):
    data = run_json(capsys, "curves", "--step", "0.5", "--format", "json")
    assert data["format_version"] == ser.FORMAT_VERSION
    assert data["rows"] == [[-0.5, None, 0.0], [0.0, 1.0, 1.0], [0.5, 0.5, None]]


def test_delta_a_catalog(capsys):
    data = run_json(capsys, "delta-a", "protocol2", "--mode", "catalog")
    assert data["delta_a"] == pytest.approx(1 / 6, abs=1e-12)
    assert data["a"] == pytest.approx(2 / 3, abs=1e-12)
    alice = run_json(capsys, "delta-a", "protocol2", "--party", "alice")
    assert alice["delta_a"] == pytest.approx(0.25, abs=1e-12)
    assert run_json(capsys, "delta-a", "blackbox")["delta_a"] == 0
    assert run_json(capsys, "delta-a", "atvy")["delta_a"] == pytest.approx(math.sqrt(2) / 4, abs=1e-12)


def test_delta_a_search_needs_family(capsys):
    assert run(capsys, "delta-a", "protocol2", "--mode", "search", "--party", "alice")[0] == 2


def test_blackbox_bound(capsys):
    data = run_json(capsys, "blackbox-bound", "--a", "0.8", "--eps-min", "-0.2", "--eps-max", "0.2",
                    "--samples", "500")
    assert data["violations"] == 0
    assert data["min_pd"] >= data["bound"] - 1e-9 and data["ok"] is True
    assert run(capsys, "blackbox-bound", "--a", "1.5", "--eps-min", "-0.2", "--eps-max", "0.2")[0] == 2


def test_escrow(capsys):
    data = run_json(capsys, "escrow", "bob-steal")
    assert data["info_gain"] > 0 and data["detection"] <= 1e-9
    data = run_json(capsys, "escrow", "alice-reveal")
    assert data["reveal_shift"] > 0 and data["detection"] <= 1e-9
    code, _, err = run(capsys, "escrow", "bob-steal", "--protocol", "blackbox")
    assert code == 4 and "unavailable" in err


def test_text_format(capsys):
    code, out, _ = run(capsys, "delta-a", "protocol2", "--format", "text")
    assert code == 0
    assert any(line.startswith("delta_a: 0.1666") for line in out.splitlines())


@pytest.mark.parametrize("argv", [
    ["blackbox-bound", "--a", "0.9", "--eps-min", "-0.1", "--eps-max", "0.1", "--samples", "300"],
    ["attack", "protocol2", "bob_conditional_option", "bob_always_option", "--a", "0.7"],
    ["curves", "--step", "0.05"],
])
def test_deterministic_output_files(capsys, tmp_path, argv):
    paths = [tmp_path / "one.out", tmp_path / "two.out"]
    for p in paths:
        assert main([*argv, "--output", str(p)]) == 0
    capsys.readouterr()
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_seed_changes_sampling(capsys):
    base = ["blackbox-bound", "--a", "0.9", "--eps-min", "-0.1", "--eps-max", "0.1", "--samples", "50"]
    a = run_json(capsys, *base)
    b = run_json(capsys, *base, "--seed", str(DEFAULT_SEED + 1))
    assert a["seed"] == DEFAULT_SEED and b["seed"] == DEFAULT_SEED + 1
