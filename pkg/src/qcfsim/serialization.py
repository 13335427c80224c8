"""Versioned JSON documents for protocols, strategies and Delta-a witnesses.

Complex arrays are nested lists whose leaves are ``[re, im]`` pairs.  Every
document carries ``format_version``; imported protocols must declare their
``first_mover`` and it must agree with the first round.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ParameterError, ProtocolInvalidError
from .protocol import BiasStrategy, Move, OutcomeMeasurement, Party, QcfProtocol, Round
from .qlinalg import RegisterLayout

FORMAT_VERSION = 1


def encode_array(a) -> list:
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_array(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1:] != (2,):
        raise ParameterError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _check_version(doc, kind):
    if doc.get("format_version") != FORMAT_VERSION:
        raise ParameterError(f"unsupported format_version {doc.get('format_version')!r}")
    if doc.get("kind") != kind:
        raise ParameterError(f"expected a {kind!r} document, got {doc.get('kind')!r}")


def protocol_to_dict(p: QcfProtocol) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "protocol",
        "name": p.name,
        "first_mover": p.first_mover.value,
        "subsystems": [[n, d] for n, d in p.layout.subsystems],
        "owners": {n: q.value for n, q in p.owners.items()},
        "initial_state": encode_array(p.initial_state),
        "rounds": [
            {"actor": r.actor.value, "targets": list(r.targets), "unitary": encode_array(r.unitary),
             "transfers": list(r.transfers)}
            for r in p.rounds
        ],
        "measurements": {
            q.value: {"targets": list(m.targets), "projectors": [encode_array(x) for x in m.projectors]}
            for q, m in p.measurements.items()
        },
    }


def protocol_from_dict(doc: dict) -> QcfProtocol:
    _check_version(doc, "protocol")
    if "first_mover" not in doc:
        raise ParameterError("protocol documents must declare first_mover")
    rounds = tuple(
        Round(Party(r["actor"]), tuple(r["targets"]), decode_array(r["unitary"]), tuple(r.get("transfers", ())))
        for r in doc["rounds"]
    )
    meas = {
        Party(q): OutcomeMeasurement(tuple(m["targets"]), tuple(decode_array(x) for x in m["projectors"]))
        for q, m in doc["measurements"].items()
    }
    p = QcfProtocol(
        name=doc["name"],
        layout=RegisterLayout(tuple((n, d) for n, d in doc["subsystems"])),
        owners={n: Party(q) for n, q in doc["owners"].items()},
        initial_state=decode_array(doc["initial_state"]),
        rounds=rounds,
        measurements=meas,
    )
    if Party(doc["first_mover"]) is not p.first_mover:
        raise ProtocolInvalidError("first mover", f"declared {doc['first_mover']}, first round is {p.first_mover.value}")
    return p


def strategy_to_dict(s: BiasStrategy) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "strategy",
        "party": s.party.value,
        "label": s.label,
        "ancillas": [[n, d] for n, d in s.ancillas],
        "moves": {str(i): {"targets": list(m.targets), "unitary": encode_array(m.unitary)}
                  for i, m in sorted(s.moves.items())},
    }


def strategy_from_dict(doc: dict) -> BiasStrategy:
    _check_version(doc, "strategy")
    moves = {int(i): Move(tuple(m["targets"]), decode_array(m["unitary"])) for i, m in doc["moves"].items()}
    return BiasStrategy(Party(doc["party"]), moves, tuple((n, d) for n, d in doc["ancillas"]), doc.get("label", ""))


def witness_to_dict(protocol_name: str, delta_a: float, low: BiasStrategy, high: BiasStrategy,
                    details: dict | None = None) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "delta_a_witness",
        "protocol": protocol_name,
        "delta_a": delta_a,
        "low": strategy_to_dict(low),
        "high": strategy_to_dict(high),
        "details": details or {},
    }


def witness_from_dict(doc: dict) -> tuple[str, BiasStrategy, BiasStrategy]:
    _check_version(doc, "delta_a_witness")
    return doc["protocol"], strategy_from_dict(doc["low"]), strategy_from_dict(doc["high"])


def dumps(doc: dict) -> str:
    """Deterministic JSON text (sorted keys, trailing newline)."""
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def save(doc: dict, path) -> None:
    Path(path).write_text(dumps(doc))


def load(path) -> dict:
    return json.loads(Path(path).read_text())
