"""Quantum bit escrow and its composition with a coin flip.

Alice commits to ``b`` by sending one qubit in |xi_bx>, with x a uniformly
random basis bit.  A coin flip decides who checks the qubit at the end; the
winner of the flip verifies.  The attacks here reuse the superposed-biasing
construction with the escrow qubit in the role of the shared pair.

All magnitudes produced by the attacks (information gain, reveal shift) are
computed values with no external reference figure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .attacks import SuperposedAttack, catalog_pairs, certify_pair, delta_a, delta_a_value
from .catalog import BlackBoxFlip, CatalogEntry, get_entry, helstrom_basis
from .errors import AttackUnavailableError, ParameterError, StrategyError
from .measures import fidelity
from .protocol import BiasStrategy, Party, QcfProtocol, losing_outcome, outcome_branch
from .qlinalg import RegisterLayout, apply_operator, dm, ket, norm_sq, reduced_state, tensor

_S = 1 / math.sqrt(2)
XI = {
    (0, 0): np.array([1, 0], dtype=complex),
    (0, 1): np.array([_S, -_S], dtype=complex),
    (1, 0): np.array([0, 1], dtype=complex),
    (1, 1): np.array([_S, _S], dtype=complex),
}

# Alice's purifying registers for b and x, then the escrow qubit.
ESCROW_LAYOUT = RegisterLayout.qubits("esc.b", "esc.x", "esc.B")
COMPUTED_NOTE = "artifact-derived value"


def _bit(v, name):
    if v not in (0, 1):
        raise ParameterError(f"{name} must be 0 or 1, got {v!r}")
    return int(v)


def xi_state(b: int, x: int) -> np.ndarray:
    return XI[(_bit(b, "b"), _bit(x, "x"))].copy()


@dataclass(frozen=True, eq=False)
class EscrowCommitment:
    b: int
    x: int
    state: np.ndarray

    def __post_init__(self):
        _bit(self.b, "b")
        _bit(self.x, "x")
        if not np.allclose(self.state, XI[(self.b, self.x)], atol=1e-12):
            raise ParameterError(f"state does not encode (b, x) = ({self.b}, {self.x})")

    @classmethod
    def commit(cls, b: int, x: int) -> "EscrowCommitment":
        return cls(b, x, xi_state(b, x))


def measure_in_computational_basis() -> list[np.ndarray]:
    """Kraus operators of a computational-basis measurement (outcome discarded)."""
    return [np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)]


@dataclass(frozen=True)
class EscrowRun:
    revealed_b: int
    verifier: Party
    detection_probability: float
    detected: bool


def run_escrow(b: int, x: int, verifier: Party = Party.BOB, tamper=None, seed: int = 0) -> EscrowRun:
    """Commit, open and verify once.

    ``tamper`` is a list of Kraus operators applied to the escrow qubit in
    transit.  The verifier's check is ``{|xi_bx><xi_bx|, I - |xi_bx><xi_bx|}``;
    ``detected`` samples that check with the given seed.
    """
    com = EscrowCommitment.commit(b, x)
    rho = dm(com.state)
    if tamper is not None:
        kraus = [np.asarray(k, dtype=complex) for k in tamper]
        total = sum(k.conj().T @ k for k in kraus)
        if np.max(np.abs(total - np.eye(2))) > 1e-9:
            raise ParameterError("tamper Kraus operators are not trace preserving")
        rho = sum(k @ rho @ k.conj().T for k in kraus)
    p_pass = float(np.vdot(com.state, rho @ com.state).real)
    p_detect = max(0.0, 1.0 - p_pass)
    fired = bool(np.random.default_rng(seed).random() < p_detect)
    return EscrowRun(com.b, Party(verifier), p_detect, fired)


def escrow_purification(w0: float = 0.5, frame: np.ndarray | None = None) -> np.ndarray:
    """``sum_bx sqrt(w_b / 2) |b x> (frame |xi_bx>)`` on :data:`ESCROW_LAYOUT`."""
    if not 0.0 <= w0 <= 1.0:
        raise ParameterError(f"w0 must lie in [0, 1], got {w0}")
    frame = np.eye(2) if frame is None else frame
    w = (w0, 1.0 - w0)
    return sum(math.sqrt(w[b] / 2) * tensor(ket(2 * b + x, 4), frame @ XI[(b, x)])
               for b in (0, 1) for x in (0, 1))


def opened_check(frame: np.ndarray | None = None) -> np.ndarray:
    """Failure projector of the check after Alice opens (b, x): ``I - sum |bx><bx| (x) |xi><xi|``."""
    frame = np.eye(2) if frame is None else frame
    ok = sum(np.kron(dm(ket(2 * b + x, 4)), dm(frame @ XI[(b, x)])) for b in (0, 1) for x in (0, 1))
    return np.eye(8) - ok


def commitment_check() -> np.ndarray:
    """Failure projector of the entangled check against the honest commitment state."""
    return np.eye(8) - dm(escrow_purification())


@dataclass
class EscrowAttackReport:
    scenario: str
    cheater: Party
    delta_a: float
    a_prime: float
    info_gain: float | None
    reveal_shift: float | None
    detection: float
    lose_probability: float
    min_recovered_overlap: float
    witness: tuple[str, str]
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "cheater": self.cheater.value,
            "delta_a": self.delta_a,
            "a_prime": self.a_prime,
            "info_gain": self.info_gain,
            "reveal_shift": self.reveal_shift,
            "detection": self.detection,
            "lose_probability": self.lose_probability,
            "min_recovered_overlap": self.min_recovered_overlap,
            "witness": list(self.witness),
            "note": COMPUTED_NOTE,
            "details": self.details,
        }


def _resolve(coinflip, party: Party, pair):
    """Protocol and a certified witness pair (low bias first) for ``party``."""
    if isinstance(coinflip, BlackBoxFlip):
        raise AttackUnavailableError("a black-box flip has no strategy pair: Delta a = 0")
    if isinstance(coinflip, CatalogEntry):
        entry, protocol = coinflip, coinflip.protocol
    elif isinstance(coinflip, QcfProtocol):
        protocol = coinflip
        try:
            entry = get_entry(protocol.name)
        except StrategyError:
            entry = None
    else:
        raise ParameterError(f"unsupported coin flip {coinflip!r}")
    if pair is not None:
        cert = certify_pair(protocol, *pair)
        if not cert.certified:
            raise AttackUnavailableError("the given pair is not a certified F = 1 insensitive pair")
        if cert.s_low.party is not party:
            raise StrategyError(f"witness pair must be {party.value}'s strategies")
        return protocol, cert
    if entry is None:
        raise AttackUnavailableError(f"no catalog witness for {protocol.name}")
    res = delta_a(protocol, catalog_pairs(entry, party))
    if res.witness is None or res.delta_a <= 0:
        raise AttackUnavailableError(f"no certified pair with Delta a > 0 for {party.value} in {protocol.name}")
    return protocol, res.witness


def _check_prime(a_prime):
    if not 0.5 <= a_prime <= 1.0:
        raise ParameterError(f"a_prime must lie in [1/2, 1], got {a_prime}")


def steal_povm(a_prime: float) -> tuple[np.ndarray, np.ndarray]:
    """Two-outcome Kraus pair in the (rotated) steal frame."""
    _check_prime(a_prime)
    m0 = np.diag([math.sqrt(a_prime), math.sqrt(1 - a_prime)]).astype(complex)
    m1 = np.diag([math.sqrt(1 - a_prime), math.sqrt(a_prime)]).astype(complex)
    return m0, m1


def guessing_probability(a_prime: float, steal_basis: np.ndarray | None = None) -> float:
    """Bob's best probability of guessing b from the steal POVM outcome alone."""
    w = helstrom_basis() if steal_basis is None else np.asarray(steal_basis, dtype=complex)
    total = 0.0
    for m in steal_povm(a_prime):
        per_b = [sum(0.25 * norm_sq(m @ w @ XI[(b, x)]) for x in (0, 1)) for b in (0, 1)]
        total += max(per_b)
    return total


def _recovered_overlaps(branch, layout, frame):
    out = {}
    for b in (0, 1):
        for x in (0, 1):
            proj = dm(ket(2 * b + x, 4))
            part = apply_operator(branch, layout, ("esc.b", "esc.x"), proj)
            rho = reduced_state(part, layout, ["esc.B"])
            tr = float(np.trace(rho).real)
            if tr > 1e-15:
                ref = frame @ XI[(b, x)]
                out[(b, x)] = float(np.vdot(ref, rho @ ref).real) / tr
    return out


def csqbc_bob_attack(coinflip, pair: tuple[BiasStrategy, BiasStrategy] | None = None,
                     steal_basis: np.ndarray | None = None, a_prime: float | None = None) -> EscrowAttackReport:
    """Bob weakly measures the escrow qubit, then cheats in the flip to hide it.

    ``steal_basis`` is a unitary whose rows are the POVM basis bras (default:
    the minimum-error basis for b).  The POVM strength ``a_prime`` defaults
    to ``1/2 + Delta a`` of the witness pair, the largest value Bob can undo
    without detection whenever he loses.
    """
    protocol, cert = _resolve(coinflip, Party.BOB, pair)
    w = helstrom_basis() if steal_basis is None else np.asarray(steal_basis, dtype=complex)
    if np.max(np.abs(w.conj().T @ w - np.eye(2))) > 1e-9:
        raise ParameterError("steal_basis must be a 2x2 unitary")
    a_prime = 0.5 + cert.delta_a if a_prime is None else float(a_prime)
    _check_prime(a_prime)
    # in the rotated frame the steal basis is computational and B can act as control
    honest = escrow_purification(frame=w)
    check = opened_check(frame=w)
    detection = lose = 0.0
    overlaps = {}
    branch_pd = []
    for k, m in enumerate(steal_povm(a_prime)):
        post = apply_operator(honest, ESCROW_LAYOUT, ["esc.B"], m)
        p_k = norm_sq(post)
        att = SuperposedAttack(protocol, cert.s_low, cert.s_high, a_prime, pair_state=post / math.sqrt(p_k),
                               swap_controls=(k == 1), pair_layout=ESCROW_LAYOUT, control="esc.B", check=check,
                               label=f"escrow-bob:{protocol.name}")
        lose_branch = att.branch(att.lose)
        pd = att.pd_simulated()
        branch_pd.append(pd)
        detection += p_k * pd
        lose += p_k * norm_sq(lose_branch)
        for key, val in _recovered_overlaps(lose_branch, att.layout, w).items():
            overlaps[(k,) + key] = val
    gain = guessing_probability(a_prime, w) - 0.5
    return EscrowAttackReport(
        scenario=f"bob-steal:{protocol.name}",
        cheater=Party.BOB,
        delta_a=cert.delta_a,
        a_prime=a_prime,
        info_gain=gain,
        reveal_shift=None,
        detection=detection,
        lose_probability=lose,
        min_recovered_overlap=min(overlaps.values()),
        witness=(cert.s_low.label or "honest", cert.s_high.label or "honest"),
        details={"branch_detection": branch_pd, "epsilons": [cert.eps_low, cert.eps_high],
                 "fidelity": cert.fidelity},
    )


def csqbc_alice_attack(coinflip, pair: tuple[BiasStrategy, BiasStrategy] | None = None,
                       a_prime: float | None = None) -> EscrowAttackReport:
    """Alice commits with b = 0 weighted by ``a_prime`` and hides it in the flip.

    Her b register controls the superposed biasing (b = 0 runs the lower
    bias strategy).  When she loses, Bob checks the escrow registers against
    the honest commitment state; the reveal shift is ``P(b = 0) - 1/2``.
    """
    protocol, cert = _resolve(coinflip, Party.ALICE, pair)
    a_prime = 0.5 + cert.delta_a if a_prime is None else float(a_prime)
    _check_prime(a_prime)
    att = SuperposedAttack(protocol, cert.s_low, cert.s_high, a_prime, pair_state=escrow_purification(a_prime),
                           pair_layout=ESCROW_LAYOUT, control="esc.b", check=commitment_check(),
                           label=f"escrow-alice:{protocol.name}")
    final = att.final_state()
    p0 = float(np.real(reduced_state(final, att.layout, ["esc.b"])[0, 0]))
    lose_branch = att.branch(att.lose)
    rho = reduced_state(lose_branch, att.layout, ESCROW_LAYOUT.names)
    lose = float(np.trace(rho).real)
    overlap = fidelity(rho / lose, dm(escrow_purification())) if lose > 1e-15 else 1.0
    return EscrowAttackReport(
        scenario=f"alice-reveal:{protocol.name}",
        cheater=Party.ALICE,
        delta_a=cert.delta_a,
        a_prime=a_prime,
        info_gain=None,
        reveal_shift=p0 - 0.5,
        detection=att.pd_simulated(),
        lose_probability=lose,
        min_recovered_overlap=overlap,
        witness=(cert.s_low.label or "honest", cert.s_high.label or "honest"),
        details={"epsilons": [cert.eps_low, cert.eps_high], "fidelity": cert.fidelity},
    )


SCENARIOS = {
    "bob-steal": csqbc_bob_attack,
    "alice-reveal": csqbc_alice_attack,
}
