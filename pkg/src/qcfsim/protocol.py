"""Unitary model of a two-party coin flip.

A protocol is a register layout, an initial state, an ordered list of
rounds and a final two-outcome measurement per party.  In each round the
acting party applies a unitary to registers it currently holds and may then
hand some registers to the other party.  Every measurement is deferred to
the end; classical messages are basis states of message registers.

Outcome ``c`` of a run is the branch ``Pi_{H,c} |psi_fin>`` selected by the
*honest* party's projector.  The cheater is only required to be able to
tell which branch it is in (``outcome_certain``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import LayoutError, ParameterError, ProtocolInvalidError, StrategyError
from .measures import PHI_PLUS, SupportCertificate, fidelity, phi_state, support_contained
from .qlinalg import (
    TOL_STRUCT,
    RegisterLayout,
    apply_operator,
    is_hermitian,
    is_unitary,
    norm_sq,
    reduced_state,
    tensor,
)


class Party(str, Enum):
    ALICE = "alice"
    BOB = "bob"

    @property
    def other(self) -> "Party":
        return Party.BOB if self is Party.ALICE else Party.ALICE


def losing_outcome(party: Party) -> int:
    """Coin value on which ``party`` loses the flip (Alice on 0, Bob on 1).

    This is also the outcome whose bias is quoted for that party.
    """
    return 0 if Party(party) is Party.ALICE else 1


@dataclass(frozen=True, eq=False)
class Round:
    actor: Party
    targets: tuple[str, ...]
    unitary: np.ndarray
    transfers: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "actor", Party(self.actor))
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "transfers", tuple(self.transfers))
        object.__setattr__(self, "unitary", np.asarray(self.unitary, dtype=complex))


@dataclass(frozen=True, eq=False)
class OutcomeMeasurement:
    """Projectors ``(Pi_0, Pi_1)`` on a party's final registers ``targets``."""

    targets: tuple[str, ...]
    projectors: tuple[np.ndarray, np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        p0, p1 = (np.asarray(p, dtype=complex) for p in self.projectors)
        object.__setattr__(self, "projectors", (p0, p1))


@dataclass(frozen=True, eq=False)
class QcfProtocol:
    name: str
    layout: RegisterLayout
    owners: Mapping[str, Party]
    initial_state: np.ndarray
    rounds: tuple[Round, ...]
    measurements: Mapping[Party, OutcomeMeasurement]

    def __post_init__(self):
        owners = {n: Party(p) for n, p in dict(self.owners).items()}
        meas = {Party(k): v for k, v in dict(self.measurements).items()}
        object.__setattr__(self, "owners", MappingProxyType(owners))
        object.__setattr__(self, "measurements", MappingProxyType(meas))
        object.__setattr__(self, "rounds", tuple(self.rounds))
        psi = np.asarray(self.initial_state, dtype=complex)
        object.__setattr__(self, "initial_state", psi)
        self._validate_structure()

    # -- structure -----------------------------------------------------
    def _validate_structure(self):
        lay = self.layout
        if set(self.owners) != set(lay.names):
            raise LayoutError("every register needs exactly one initial owner")
        if self.initial_state.shape != (lay.dim,):
            raise LayoutError(f"initial state has shape {self.initial_state.shape}, layout dim {lay.dim}")
        if abs(norm_sq(self.initial_state) - 1) > TOL_STRUCT:
            raise ProtocolInvalidError("initial state not normalized")
        own = dict(self.owners)
        for i, rnd in enumerate(self.rounds):
            _check_move(lay, own, rnd.actor, rnd.targets, rnd.unitary, f"round {i}")
            for t in rnd.transfers:
                if own.get(t) is not rnd.actor:
                    raise LayoutError(f"round {i}: {rnd.actor.value} cannot send {t!r} it does not hold")
                own[t] = rnd.actor.other
        if set(self.measurements) != {Party.ALICE, Party.BOB}:
            raise LayoutError("both parties need an outcome measurement")
        for party, m in self.measurements.items():
            for t in m.targets:
                lay.index(t)
                if own[t] is not party:
                    raise LayoutError(f"{party.value} measures {t!r} but does not hold it at the end")
            d = lay.dim_of(m.targets)
            p0, p1 = m.projectors
            for p in (p0, p1):
                if p.shape != (d, d) or not is_hermitian(p) or np.max(np.abs(p @ p - p)) > TOL_STRUCT:
                    raise LayoutError(f"{party.value} outcome operators must be projectors on {m.targets}")
            if np.max(np.abs(p0 + p1 - np.eye(d))) > TOL_STRUCT:
                raise LayoutError(f"{party.value} projectors do not sum to the identity")

    @property
    def first_mover(self) -> Party:
        return self.rounds[0].actor

    def holdings(self, round_index: int | None = None) -> dict[Party, tuple[str, ...]]:
        """Registers held by each party just before ``round_index``.

        ``None`` (or ``len(rounds)``) gives the final holdings.
        """
        stop = len(self.rounds) if round_index is None else round_index
        own = dict(self.owners)
        for rnd in self.rounds[:stop]:
            for t in rnd.transfers:
                own[t] = rnd.actor.other
        return {p: tuple(n for n in self.layout.names if own[n] is p) for p in Party}

    def projector(self, party: Party, outcome: int) -> tuple[tuple[str, ...], np.ndarray]:
        m = self.measurements[Party(party)]
        return m.targets, m.projectors[outcome]

    def extended(self, before: Sequence[tuple[str, int, Party]] = (),
                 after: Sequence[tuple[str, int, Party]] = (),
                 before_state=None, after_state=None) -> "QcfProtocol":
        """Same protocol on a larger space with extra idle registers.

        Extra registers default to |0>; ``before_state``/``after_state`` set
        their joint initial state.
        """
        pre = RegisterLayout(tuple((n, d) for n, d, _ in before))
        post = RegisterLayout(tuple((n, d) for n, d, _ in after))
        owners = dict(self.owners)
        owners.update({n: Party(p) for n, _, p in before})
        owners.update({n: Party(p) for n, _, p in after})
        parts = []
        if before:
            parts.append(_default_state(pre.dim, before_state))
        parts.append(self.initial_state)
        if after:
            parts.append(_default_state(post.dim, after_state))
        return QcfProtocol(
            name=self.name,
            layout=pre + self.layout + post,
            owners=owners,
            initial_state=tensor(*parts),
            rounds=self.rounds,
            measurements=self.measurements,
        )


def _default_state(dim, state):
    if state is None:
        v = np.zeros(dim, dtype=complex)
        v[0] = 1
        return v
    return np.asarray(state, dtype=complex)


def _check_move(layout, owners, actor, targets, unitary, where, extra: Iterable[str] = ()):
    extra = set(extra)
    for t in targets:
        if t not in extra:
            layout.index(t)
            if owners[t] is not actor:
                raise LayoutError(f"{where}: {actor.value} does not hold register {t!r}")
    if len(set(targets)) != len(targets):
        raise LayoutError(f"{where}: repeated target")
    d = int(np.prod([layout.dim_of(t) if t in layout else 0 for t in targets], dtype=np.int64)) if targets else 1
    if unitary.shape != (d, d):
        raise LayoutError(f"{where}: unitary shape {unitary.shape} does not match targets (dim {d})")
    if not is_unitary(unitary):
        raise LayoutError(f"{where}: operator is not unitary")


# ---------------------------------------------------------------------------
# strategies


@dataclass(frozen=True, eq=False)
class Move:
    targets: tuple[str, ...]
    unitary: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "unitary", np.asarray(self.unitary, dtype=complex))


@dataclass(frozen=True, eq=False)
class BiasStrategy:
    """Replacement unitaries of one party, keyed by round index.

    Rounds without an entry are played honestly.  ``ancillas`` are private
    registers appended to the layout in state |0> and never sent.
    """

    party: Party
    moves: Mapping[int, Move] = field(default_factory=dict)
    ancillas: tuple[tuple[str, int], ...] = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "party", Party(self.party))
        object.__setattr__(self, "moves", MappingProxyType({int(k): v for k, v in dict(self.moves).items()}))
        object.__setattr__(self, "ancillas", tuple((str(n), int(d)) for n, d in self.ancillas))

    @classmethod
    def honest(cls, party: Party) -> "BiasStrategy":
        return cls(Party(party), {}, (), "honest")

    @property
    def is_honest(self) -> bool:
        return not self.moves and not self.ancillas

    def ancilla_layout(self) -> RegisterLayout:
        return RegisterLayout(self.ancillas)

    def validate(self, protocol: QcfProtocol, layout: RegisterLayout | None = None) -> None:
        layout = layout or protocol.layout + self.ancilla_layout()
        clash = set(self.ancilla_layout().names) & set(protocol.layout.names)
        if clash:
            raise StrategyError(f"ancilla names clash with protocol registers: {sorted(clash)}")
        anc = set(self.ancilla_layout().names)
        for i, mv in self.moves.items():
            if not 0 <= i < len(protocol.rounds):
                raise StrategyError(f"strategy {self.label!r} names round {i}, protocol has {len(protocol.rounds)}")
            if protocol.rounds[i].actor is not self.party:
                raise StrategyError(f"round {i} belongs to {protocol.rounds[i].actor.value}, not {self.party.value}")
            owners = {n: p for p, names in protocol.holdings(i).items() for n in names}
            try:
                _check_move(layout, owners, self.party, mv.targets, mv.unitary, f"strategy {self.label!r} round {i}", anc)
            except LayoutError as exc:
                raise StrategyError(str(exc)) from exc

    def move_for(self, protocol: QcfProtocol, i: int) -> tuple[tuple[str, ...], np.ndarray]:
        mv = self.moves.get(i)
        if mv is None:
            rnd = protocol.rounds[i]
            return rnd.targets, rnd.unitary
        return mv.targets, mv.unitary


def evolve(protocol: QcfProtocol, strategy: BiasStrategy | None = None,
           layout: RegisterLayout | None = None, state=None) -> np.ndarray:
    """Final state of the protocol, optionally with one party deviating.

    ``layout``/``state`` allow running on an enlarged space (extra idle
    registers); by default the protocol layout plus the strategy ancillas.
    """
    strategy = strategy or BiasStrategy.honest(Party.ALICE)
    if layout is None:
        layout = protocol.layout + strategy.ancilla_layout()
    if state is None:
        state = protocol.initial_state
        if strategy.ancillas:
            state = tensor(state, _default_state(strategy.ancilla_layout().dim, None))
    strategy.validate(protocol, layout)
    psi = np.asarray(state, dtype=complex)
    for i, rnd in enumerate(protocol.rounds):
        targets, u = strategy.move_for(protocol, i) if rnd.actor is strategy.party else (rnd.targets, rnd.unitary)
        psi = apply_operator(psi, layout, targets, u)
    return psi


def outcome_branch(protocol: QcfProtocol, psi, layout: RegisterLayout, party: Party, outcome: int) -> np.ndarray:
    targets, proj = protocol.projector(party, outcome)
    return apply_operator(psi, layout, targets, proj)


def _normalized(rho):
    tr = np.trace(rho).real
    if tr < 1e-15:
        return None
    return rho / tr


# ---------------------------------------------------------------------------
# honest run


@dataclass(frozen=True, eq=False)
class HonestRun:
    protocol: QcfProtocol
    final_state: np.ndarray
    branches: tuple[np.ndarray, np.ndarray]
    reduced: Mapping[tuple[Party, int], np.ndarray]
    orthogonality_residual: float
    agreement_residual: float
    party_fidelities: Mapping[Party, float]

    @property
    def probabilities(self) -> tuple[float, float]:
        return norm_sq(self.branches[0]), norm_sq(self.branches[1])

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol.name,
            "probabilities": list(self.probabilities),
            "orthogonality_residual": self.orthogonality_residual,
            "agreement_residual": self.agreement_residual,
            "party_outcome_fidelity": {p.value: f for p, f in self.party_fidelities.items()},
        }


def run_honest(protocol: QcfProtocol, check: bool = True) -> HonestRun:
    """Run both parties honestly and validate the coin-flip conditions.

    Raises :class:`ProtocolInvalidError` naming the first violated clause
    unless ``check`` is False.
    """
    lay = protocol.layout
    psi = evolve(protocol)
    by_party = {p: [outcome_branch(protocol, psi, lay, p, c) for c in (0, 1)] for p in Party}
    branches = tuple(by_party[Party.BOB])
    agree = max(float(np.linalg.norm(by_party[Party.ALICE][c] - by_party[Party.BOB][c])) for c in (0, 1))
    ortho = abs(np.vdot(branches[0], branches[1]))
    final = protocol.holdings()
    reduced, fids = {}, {}
    for p in Party:
        for c in (0, 1):
            reduced[(p, c)] = _normalized(reduced_state(branches[c], lay, final[p]))
        r0, r1 = reduced[(p, 0)], reduced[(p, 1)]
        fids[p] = fidelity(r0, r1) if r0 is not None and r1 is not None else float("nan")
    run = HonestRun(protocol, psi, branches, MappingProxyType(reduced), float(ortho), agree, MappingProxyType(fids))
    if check:
        p0, p1 = run.probabilities
        if abs(p0 - 0.5) > TOL_STRUCT or abs(p1 - 0.5) > TOL_STRUCT:
            raise ProtocolInvalidError("branch norms != 1/2", f"honest outcome probabilities ({p0:.12g}, {p1:.12g})")
        if agree > TOL_STRUCT:
            raise ProtocolInvalidError("outcome agreement", f"parties' projectors disagree by {agree:.3e}")
        if ortho > TOL_STRUCT:
            raise ProtocolInvalidError("branch orthogonality", f"|<psi_0|psi_1>| = {ortho:.3e}")
        for p, f in fids.items():
            if not f <= TOL_STRUCT:
                raise ProtocolInvalidError("party outcome certainty", f"F(rho_{p.value},0, rho_{p.value},1) = {f:.3e}")
    return run


# ---------------------------------------------------------------------------
# biased run


@dataclass(frozen=True, eq=False)
class BiasProfile:
    """Outcome statistics and certificates of one deviating party.

    ``epsilon`` is the bias of the cheater's losing outcome (0 for Alice,
    1 for Bob).  ``reduced_states`` holds normalized marginals on each
    party's final registers (the cheater's include its ancillas); an empty
    branch maps to ``None``.
    """

    protocol: QcfProtocol
    strategy: BiasStrategy
    layout: RegisterLayout
    final_state: np.ndarray
    epsilon: float
    branch_vectors: tuple[np.ndarray, np.ndarray]
    reduced_states: Mapping[tuple[Party, int], np.ndarray | None]
    insensitive: Mapping[int, SupportCertificate]
    cheater_fidelity: float
    outcome_certain: bool

    @property
    def cheater(self) -> Party:
        return self.strategy.party

    @property
    def honest_party(self) -> Party:
        return self.strategy.party.other

    @property
    def probabilities(self) -> tuple[float, float]:
        return norm_sq(self.branch_vectors[0]), norm_sq(self.branch_vectors[1])

    def holdings(self, party: Party) -> tuple[str, ...]:
        return party_registers(self.protocol, self.strategy, party)

    def marginal(self, party: Party, outcome: int, normalized: bool = True):
        rho = reduced_state(self.branch_vectors[outcome], self.layout, self.holdings(Party(party)))
        return _normalized(rho) if normalized else rho

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.label,
            "party": self.cheater.value,
            "epsilon": self.epsilon,
            "probabilities": list(self.probabilities),
            "insensitive": {str(c): cert.to_dict() for c, cert in self.insensitive.items()},
            "outcome_certain": self.outcome_certain,
        }


def party_registers(protocol: QcfProtocol, strategy: BiasStrategy, party: Party) -> tuple[str, ...]:
    regs = protocol.holdings()[Party(party)]
    if strategy.party is Party(party):
        regs = regs + strategy.ancilla_layout().names
    return regs


def run_with_bias(protocol: QcfProtocol, strategy: BiasStrategy, honest: HonestRun | None = None) -> BiasProfile:
    honest = honest or run_honest(protocol)
    layout = protocol.layout + strategy.ancilla_layout()
    psi = evolve(protocol, strategy, layout)
    h = strategy.party.other
    branches = tuple(outcome_branch(protocol, psi, layout, h, c) for c in (0, 1))
    reduced = {}
    for p in Party:
        regs = party_registers(protocol, strategy, p)
        for c in (0, 1):
            reduced[(p, c)] = _normalized(reduced_state(branches[c], layout, regs))
    certs = {}
    for c in (0, 1):
        cand = reduced[(h, c)]
        if cand is None:
            certs[c] = SupportCertificate(True, 0.0)
        else:
            certs[c] = support_contained(cand, honest.reduced[(h, c)])
    r0, r1 = reduced[(strategy.party, 0)], reduced[(strategy.party, 1)]
    fid = 0.0 if r0 is None or r1 is None else fidelity(r0, r1)
    eps = norm_sq(branches[losing_outcome(strategy.party)]) - 0.5
    return BiasProfile(
        protocol=protocol,
        strategy=strategy,
        layout=layout,
        final_state=psi,
        epsilon=eps,
        branch_vectors=branches,
        reduced_states=MappingProxyType(reduced),
        insensitive=MappingProxyType(certs),
        cheater_fidelity=fid,
        outcome_certain=fid <= TOL_STRUCT,
    )


@dataclass(frozen=True)
class InsensitivityReport:
    ok: bool
    contained: Mapping[int, bool]
    max_leakage: float
    outcome_certain: bool

    def __bool__(self):
        return self.ok


def verify_insensitivity(profile: BiasProfile) -> InsensitivityReport:
    contained = {c: cert.contained for c, cert in profile.insensitive.items()}
    leak = max(cert.max_leakage for cert in profile.insensitive.values())
    ok = all(contained.values()) and profile.outcome_certain
    return InsensitivityReport(ok, MappingProxyType(contained), leak, profile.outcome_certain)


# ---------------------------------------------------------------------------
# Protocol 1: share |phi>, flip a coin, the winner checks the pair


@dataclass(frozen=True)
class DetectionOutcome:
    """Result of one sharing-and-verification game.

    ``detect_probability`` is the joint probability that the cheater loses
    the flip and the winner's projective check rejects the pair.
    ``checked_state`` is the normalized two-qubit state the winner checks
    (``None`` when the cheater never loses).
    """

    cheater: Party
    lose_probability: float
    detect_probability: float
    checked_state: np.ndarray | None
    details: Mapping[str, object] = field(default_factory=dict)

    @property
    def winner(self) -> Party:
        """The party more likely to win the flip."""
        return self.cheater if self.lose_probability < 0.5 else self.cheater.other


CHECK_PROJECTOR = np.eye(4) - np.outer(PHI_PLUS, PHI_PLUS.conj())


def check_failure(pair_rho) -> float:
    """Weight of a (possibly subnormalized) AB operator outside |phi>."""
    return float(np.trace(CHECK_PROJECTOR @ pair_rho).real)


class HonestAdversary:
    """Alice prepares |Phi(a)> and otherwise follows the protocol."""

    cheater = Party.ALICE

    def play(self, coinflip, a: float) -> DetectionOutcome:
        pair = phi_state(a)
        if isinstance(coinflip, QcfProtocol):
            game = coinflip.extended(before=[("A", 2, Party.ALICE), ("B", 2, Party.BOB)], before_state=pair)
            psi = evolve(game)
            lose = outcome_branch(game, psi, game.layout, Party.BOB, losing_outcome(self.cheater))
            rho = reduced_state(lose, game.layout, ["A", "B"])
        else:
            # fair use of a black box: the losing outcome has probability 1/2
            rho = 0.5 * np.outer(pair, pair.conj())
        p_lose = float(np.trace(rho).real)
        return DetectionOutcome(self.cheater, p_lose, check_failure(rho), _normalized(rho))


def play_protocol1(coinflip, a: float, adversary=None) -> DetectionOutcome:
    """Sharing-and-maintaining-entanglement game with a pluggable adversary.

    ``coinflip`` is a :class:`QcfProtocol` or a black-box flip; ``adversary``
    is any object with ``play(coinflip, a) -> DetectionOutcome``.
    """
    if not 0.5 <= a <= 1.0:
        raise ParameterError(f"a must lie in [1/2, 1], got {a}")
    adversary = adversary or HonestAdversary()
    return adversary.play(coinflip, a)
