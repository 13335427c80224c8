"""Concrete coin-flip protocols, named bias strategies and the black box.

Register names used below:

Protocol 2 (``protocol2``)
    ``C``, ``D``: the pair Alice prepares; ``D`` goes to Bob.
    ``K``: Alice's slot for handing ``C`` to Bob when he takes the option.
    ``Q``: Bob's private coin, ``O``: option flag, ``M``: Bob's record of ``D``.
    ``mO``, ``mM``: the option flag and the result as sent to Alice.

ATVY (``atvy``)
    ``Rb``, ``Rx``: Alice's committed bit and basis, ``S``: the qubit sent.
    ``Rb2``: Bob's bit, ``mb2``: its copy sent to Alice.
    ``mb``, ``mx``: Alice's opening sent to Bob.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ParameterError, StrategyError
from .gates import H, I2, X, Z, Circuit, controlled, prep_amplitudes, selector
from .measures import fidelity
from .protocol import (
    BiasStrategy,
    Move,
    OutcomeMeasurement,
    Party,
    QcfProtocol,
    Round,
    losing_outcome,
    run_honest,
    run_with_bias,
    verify_insensitivity,
)
from .qlinalg import RegisterLayout, embed, ket

# Bob's private coin in Protocol 2: probability of taking the option after
# seeing D = 1.
PROTOCOL2_OPTION_COIN = 0.5


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    protocol: QcfProtocol
    strategies: Mapping[str, BiasStrategy] = field(default_factory=dict)

    def strategy(self, sid: str, party: Party | None = None) -> BiasStrategy:
        if sid == "honest":
            return BiasStrategy.honest(party or Party.ALICE)
        try:
            return self.strategies[sid]
        except KeyError:
            raise StrategyError(
                f"unknown strategy {sid!r} for {self.protocol.name}; known: {['honest', *self.strategies]}") from None


def _parity() -> tuple[np.ndarray, np.ndarray]:
    p1 = np.diag([0, 1, 1, 0]).astype(complex)
    return np.eye(4) - p1, p1


def _or_projectors() -> tuple[np.ndarray, np.ndarray]:
    """Outcome 1 iff the first qubit is 1 or the second is 1."""
    p1 = np.diag([0, 1, 1, 1]).astype(complex)
    return np.eye(4) - p1, p1


# ---------------------------------------------------------------------------
# Protocol 2


def make_protocol2(option_coin: float = PROTOCOL2_OPTION_COIN) -> CatalogEntry:
    """Alice shares |phi>_CD; Bob either takes the option or measures D.

    Honest Bob measures D.  When the result is 1 he may, on a private coin,
    invoke the option instead of announcing the result; the option always
    outputs 1, so honest outcomes stay uniform and the option path is part
    of honest behaviour.
    """
    layout = RegisterLayout.qubits("C", "D", "K", "Q", "O", "M", "mO", "mM")
    owners = {n: Party.ALICE for n in ("C", "D", "K")}
    owners.update({n: Party.BOB for n in ("Q", "O", "M", "mO", "mM")})

    share = Circuit("C", "D").h("C").cx("C", "D").unitary()
    bob_regs = ("D", "Q", "O", "M", "mO", "mM")
    honest_bob = (
        Circuit(*bob_regs)
        .cx("D", "M")
        .gate(prep_amplitudes(option_coin), "Q")
        .ccx("M", "Q", "O")
        .cx("O", "mO")
        .gate(controlled(controlled(X), 0), "O", "M", "mM")
        .unitary()
    )
    hand_over = Circuit("mO", "C", "K").cswap("mO", "C", "K").unitary()
    rounds = (
        Round(Party.ALICE, ("C", "D"), share, ("D",)),
        Round(Party.BOB, bob_regs, honest_bob, ("mO", "mM")),
        Round(Party.ALICE, ("mO", "C", "K"), hand_over, ("K",)),
    )
    meas = {
        Party.ALICE: OutcomeMeasurement(("mO", "mM"), _or_projectors()),
        Party.BOB: OutcomeMeasurement(("O", "M"), _or_projectors()),
    }
    proto = QcfProtocol("protocol2", layout, owners, ket(0, layout.dim), rounds, meas)

    always = Circuit(*bob_regs).x("O").cx("O", "mO").unitary()
    conditional = (
        Circuit(*bob_regs)
        .cx("D", "M")
        .cx("M", "O")
        .cx("O", "mO")
        .gate(controlled(controlled(X), 0), "O", "M", "mM")
        .unitary()
    )
    garbled = Circuit(*bob_regs).x("O").cx("O", "mO").x("mM").unitary()
    strategies = {
        "bob_always_option": BiasStrategy(Party.BOB, {1: Move(bob_regs, always)}, label="bob_always_option"),
        "bob_conditional_option": BiasStrategy(
            Party.BOB, {1: Move(bob_regs, conditional)}, label="bob_conditional_option"),
        "bob_mostly_option": bob_mostly_option(0.3),
        "bob_garbled_message": BiasStrategy(Party.BOB, {1: Move(bob_regs, garbled)}, label="bob_garbled_message"),
        "alice_favor_zero": alice_tilted(0.75, "alice_favor_zero"),
        "alice_favor_one": alice_tilted(0.25, "alice_favor_one"),
    }
    return CatalogEntry(proto, strategies)


def bob_mostly_option(delta: float, label: str | None = None) -> BiasStrategy:
    """Bob takes the option with amplitude cos(delta), otherwise measures D.

    At ``delta = 0`` this is ``bob_always_option``; for ``delta > 0`` Alice's
    outcome-1 state acquires a component from the measure path, so its
    fidelity with ``bob_conditional_option`` drops below one.
    """
    regs = ("D", "Q", "O", "M", "mO", "mM")
    u = (
        Circuit(*regs)
        .ry(np.pi - 2 * delta, "O")
        .gate(controlled(controlled(X), 0), "O", "D", "M")
        .cx("O", "mO")
        .gate(controlled(controlled(X), 0), "O", "M", "mM")
        .unitary()
    )
    return BiasStrategy(Party.BOB, {1: Move(regs, u)}, label=label or f"bob_mostly_option({delta:g})")


def alice_tilted(p0: float, label: str | None = None) -> BiasStrategy:
    """Alice shares sqrt(p0)|00> + sqrt(1-p0)|11> instead of |phi>."""
    u = Circuit("C", "D").gate(prep_amplitudes(1 - p0), "C").cx("C", "D").unitary()
    return BiasStrategy(Party.ALICE, {0: Move(("C", "D"), u)}, label=label or f"alice_tilted({p0:g})")


# ---------------------------------------------------------------------------
# ATVY three-round protocol


def xi_preparation() -> np.ndarray:
    """Controlled preparation |b x>|0> -> |b x>|xi_bx> on (Rb, Rx, S)."""
    return selector([I2, Z @ H, X, H])


def helstrom_basis() -> np.ndarray:
    """Unitary whose rows are <e0|, <e1|: the minimum-error basis for b.

    ``e0`` is the eigenvector of rho_0 - rho_1 with positive eigenvalue,
    where rho_b averages |xi_b0> and |xi_b1>.
    """
    diff = 0.5 * (Z - X)
    w, v = np.linalg.eigh(diff)
    e0, e1 = v[:, 1], v[:, 0]
    return np.array([e0.conj(), e1.conj()])


def make_atvy() -> CatalogEntry:
    """Commit a bit in one of two conjugate bases, Bob replies, Alice opens.

    The outcome is b XOR b'.  Bob's check of the opened qubit is folded away
    (insensitive cheating only), so Alice has nothing to check.
    """
    layout = RegisterLayout.qubits("Rb", "Rx", "S", "mb", "mx", "Rb2", "mb2")
    owners = {n: Party.ALICE for n in ("Rb", "Rx", "S", "mb", "mx")}
    owners.update({"Rb2": Party.BOB, "mb2": Party.BOB})
    commit = Circuit("Rb", "Rx", "S").h("Rb").h("Rx").gate(xi_preparation(), "Rb", "Rx", "S").unitary()
    reply = Circuit("Rb2", "mb2").h("Rb2").cx("Rb2", "mb2").unitary()
    opening = Circuit("Rb", "Rx", "mb", "mx").cx("Rb", "mb").cx("Rx", "mx").unitary()
    rounds = (
        Round(Party.ALICE, ("Rb", "Rx", "S"), commit, ("S",)),
        Round(Party.BOB, ("Rb2", "mb2"), reply, ("mb2",)),
        Round(Party.ALICE, ("Rb", "Rx", "mb", "mx"), opening, ("mb", "mx")),
    )
    meas = {
        Party.ALICE: OutcomeMeasurement(("Rb", "mb2"), _parity()),
        Party.BOB: OutcomeMeasurement(("mb", "Rb2"), _parity()),
    }
    proto = QcfProtocol("atvy", layout, owners, ket(0, layout.dim), rounds, meas)

    flip = Circuit("Rb2", "mb2").h("Rb2").cx("Rb2", "mb2").x("mb2").unitary()
    strategies = {
        "bob_flip_reply": BiasStrategy(Party.BOB, {1: Move(("Rb2", "mb2"), flip)}, label="bob_flip_reply"),
        "bob_guess_match": atvy_guess(False, "bob_guess_match"),
        "bob_guess_mismatch": atvy_guess(True, "bob_guess_mismatch"),
    }
    return CatalogEntry(proto, strategies)


def atvy_guess(mismatch: bool, label: str) -> BiasStrategy:
    """Bob measures S in the Helstrom basis and replies with (or against) his guess."""
    c = Circuit("S", "Rb2", "mb2").gate(helstrom_basis(), "S").cx("S", "Rb2")
    if mismatch:
        c.x("Rb2")
    c.cx("Rb2", "mb2")
    return BiasStrategy(Party.BOB, {1: Move(("S", "Rb2", "mb2"), c.unitary())}, label=label)


def make_broken_fixture() -> CatalogEntry:
    """ATVY with both parties' bits prepared off-balance; fails honest validation.

    Biasing only one bit would not do: the XOR with a uniform bit is uniform.
    """
    entry = make_atvy()
    p = entry.protocol
    commit = (Circuit("Rb", "Rx", "S").gate(prep_amplitudes(0.3), "Rb").h("Rx")
              .gate(xi_preparation(), "Rb", "Rx", "S").unitary())
    reply = Circuit("Rb2", "mb2").gate(prep_amplitudes(0.3), "Rb2").cx("Rb2", "mb2").unitary()
    rounds = (Round(Party.ALICE, ("Rb", "Rx", "S"), commit, ("S",)),
              Round(Party.BOB, ("Rb2", "mb2"), reply, ("mb2",)),
              p.rounds[2])
    return CatalogEntry(QcfProtocol("broken-fixture", p.layout, p.owners, p.initial_state, rounds, p.measurements))


# ---------------------------------------------------------------------------
# black box


@dataclass(frozen=True)
class BlackBoxFlip:
    """Ideal coin flip whose outcome-0 probability a cheater may set in
    ``[1/2 + epsilon_min, 1/2 + epsilon_max]`` and nothing else."""

    epsilon_min: float = 0.0
    epsilon_max: float = 0.0

    def __post_init__(self):
        lo, hi = self.epsilon_min, self.epsilon_max
        if not (-0.5 < lo <= 0.0 <= hi < 0.5):
            raise ParameterError(f"need -1/2 < epsilon_min <= 0 <= epsilon_max < 1/2, got ({lo}, {hi})")

    @property
    def name(self) -> str:
        return "blackbox"

    def outcome0_probability(self, epsilon: float) -> float:
        if not self.epsilon_min - 1e-12 <= epsilon <= self.epsilon_max + 1e-12:
            raise ParameterError(f"bias {epsilon} outside [{self.epsilon_min}, {self.epsilon_max}]")
        return 0.5 + epsilon

    def sample(self, epsilon: float, rng: np.random.Generator) -> int:
        return 0 if rng.random() < self.outcome0_probability(epsilon) else 1


def make_blackbox(epsilon_min: float = 0.0, epsilon_max: float = 0.0) -> BlackBoxFlip:
    return BlackBoxFlip(epsilon_min, epsilon_max)


# ---------------------------------------------------------------------------
# ancilla-controlled mixtures of strategies


def _fresh_ancilla(protocol: QcfProtocol, *strategies: BiasStrategy) -> str:
    taken = set(protocol.layout.names)
    for s in strategies:
        taken |= {n for n, _ in s.ancillas}
    k = 0
    while f"mix{k}" in taken:
        k += 1
    return f"mix{k}"


def mix_strategies(protocol: QcfProtocol, s0: BiasStrategy, s1: BiasStrategy, x: float,
                   label: str | None = None) -> BiasStrategy:
    """Run ``s0`` or ``s1`` coherently, selected by a private ancilla.

    The ancilla starts in sqrt(1-x)|0> + sqrt(x)|1>; every round of the
    party applies ``U0 (x) |0><0| + U1 (x) |1><1|``.
    """
    if not 0.0 <= x <= 1.0:
        raise ParameterError(f"x must lie in [0, 1], got {x}")
    if s0.party is not s1.party:
        raise StrategyError("cannot mix strategies of different parties")
    party = s0.party
    clash = {n for n, _ in s0.ancillas} & {n for n, _ in s1.ancillas}
    if clash:
        raise StrategyError(f"strategies share ancilla names {sorted(clash)}")
    a = _fresh_ancilla(protocol, s0, s1)
    ancillas = s0.ancillas + s1.ancillas + ((a, 2),)
    layout = protocol.layout + RegisterLayout(ancillas)
    s0.validate(protocol, layout)
    s1.validate(protocol, layout)
    moves = {}
    first = True
    for i, rnd in enumerate(protocol.rounds):
        if rnd.actor is not party:
            continue
        t0, u0 = s0.move_for(protocol, i)
        t1, u1 = s1.move_for(protocol, i)
        union = layout.ordered(set(t0) | set(t1))
        block = selector([embed(u0, layout, t0, union), embed(u1, layout, t1, union)])
        if first:
            block = block @ np.kron(prep_amplitudes(x), np.eye(layout.dim_of(union)))
            first = False
        moves[i] = Move((a,) + union, block)
    label = label or f"mix({s0.label or 'honest'},{s1.label or 'honest'},x={x:g})"
    return BiasStrategy(party, moves, ancillas, label)


def make_restricted(protocol: QcfProtocol, strategy: BiasStrategy, x: float) -> BiasStrategy:
    """Member of the ancilla-restricted family built on ``strategy``.

    Realizes bias ``x * epsilon_base``.  Raises :class:`StrategyError` if the
    base strategy is not insensitive and outcome-certain.
    """
    prof = run_with_bias(protocol, strategy)
    if not verify_insensitivity(prof):
        raise StrategyError(f"base strategy {strategy.label!r} is not an insensitive strategy of {protocol.name}")
    return mix_strategies(protocol, BiasStrategy.honest(strategy.party), strategy, x,
                          label=f"restricted({strategy.label},x={x:g})")


def restricted_fidelity_curve(protocol: QcfProtocol, strategy: BiasStrategy,
                              xs: Sequence[float]) -> list[tuple[float, float]]:
    """``F(x)`` between the honest and the restricted honest-side states.

    The compared states are the honest party's normalized marginals on the
    cheater's losing branch.
    """
    honest = run_honest(protocol)
    h = strategy.party.other
    c = losing_outcome(strategy.party)
    ref = honest.reduced[(h, c)]
    out = []
    for x in xs:
        if not 0.0 <= x <= 1.0:
            raise ParameterError(f"x must lie in [0, 1], got {x}")
        prof = run_with_bias(protocol, make_restricted(protocol, strategy, x), honest)
        out.append((float(x), fidelity(ref, prof.reduced_states[(h, c)])))
    return out


DEFAULT_X_GRID = tuple(round(0.01 * k, 2) for k in range(1, 11))

_FACTORIES: dict[str, Callable[[], CatalogEntry]] = {
    "protocol2": make_protocol2,
    "atvy": make_atvy,
    "broken-fixture": make_broken_fixture,
}


def protocol_ids() -> list[str]:
    return list(_FACTORIES)


def get_entry(pid: str) -> CatalogEntry:
    try:
        return _FACTORIES[pid]()
    except KeyError:
        raise StrategyError(f"unknown protocol {pid!r}; known: {protocol_ids()}") from None


def sanitize(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", label)
