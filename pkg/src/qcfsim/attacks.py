"""Cheating constructions against the entanglement-sharing game.

Detection probabilities are joint probabilities: the cheater loses the flip
*and* the winner's check ``{|phi><phi|, I - |phi><phi|}`` on the AB pair
fires.  Biases are always those of the cheater's losing outcome (outcome 0
for Alice, outcome 1 for Bob).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .catalog import BlackBoxFlip, make_restricted, restricted_fidelity_curve
from .errors import AdversaryError, AttackPreconditionError, ParameterError, StrategyError
from .gates import selector
from .measures import PHI_PLUS, fidelity, phi_state, uhlmann_align
from .protocol import (
    CHECK_PROJECTOR,
    BiasProfile,
    BiasStrategy,
    DetectionOutcome,
    Move,
    Party,
    QcfProtocol,
    check_failure,
    evolve,
    losing_outcome,
    outcome_branch,
    run_honest,
    run_with_bias,
    verify_insensitivity,
)
from .qlinalg import (
    TOL_STRUCT,
    RegisterLayout,
    apply_operator,
    embed,
    ket,
    norm_sq,
    reduced_state,
    support_projector,
    tensor,
)


def _check_a(a):
    if not 0.5 <= a <= 1.0:
        raise ParameterError(f"a must lie in [1/2, 1], got {a}")


def _check_eps(*eps, closed_top=False):
    for e in eps:
        ok = -0.5 < e <= 0.5 if closed_top else -0.5 < e < 0.5
        if not ok:
            raise ParameterError(f"bias {e} outside (-1/2, 1/2)")


# ---------------------------------------------------------------------------
# closed forms


def pd_box(a: float, eps_min: float) -> float:
    """Least detection probability against an ideal biased coin flip."""
    _check_a(a)
    _check_eps(eps_min, closed_top=True)
    return (0.5 + eps_min) * (0.5 - math.sqrt(a * (1 - a)))


def pd_quantum(a: float, eps_min: float, eps_max: float, F: float) -> float:
    """Detection probability of the superposed-biasing attack."""
    _check_a(a)
    _check_eps(eps_min, eps_max, closed_top=True)
    if not -1e-12 <= F <= 1 + 1e-9:
        raise ParameterError(f"fidelity {F} outside [0, 1]")
    F = min(max(F, 0.0), 1.0)
    p, q = 0.5 + eps_min, 0.5 + eps_max
    return 0.5 * (a * p + (1 - a) * q) - math.sqrt(a * (1 - a) * p * q * F)


@dataclass(frozen=True)
class Threshold:
    holds: bool
    r: float
    a_range: tuple[float, float] | None

    def contains(self, a: float) -> bool:
        return self.a_range is not None and self.a_range[0] < a < self.a_range[1]


def threshold_condition(eps_min: float, eps_max: float, F: float) -> Threshold:
    """Fidelity threshold above which some a in (a_lower, 1) beats the box."""
    r = (1 + 2 * eps_max) / (1 + 2 * eps_min)
    holds = F > (1 + 2 * eps_min) / (1 + 2 * eps_max)
    if not holds:
        return Threshold(False, r, None)
    lower = (r - 1) ** 2 / (4 * (math.sqrt(r * F) - 1) ** 2 + (r - 1) ** 2)
    return Threshold(True, r, (lower, 1.0))


def bound_curves(eps_grid: Iterable[float]) -> list[tuple[float, float | None, float | None]]:
    """Fidelity bounds (I) ``1/(1+2e)`` for e >= 0 and (II) ``1+2e`` for e <= 0.

    Each half is only defined on its own side of zero; the other entry is
    ``None``.  Both equal 1 at e = 0.
    """
    rows = []
    for e in eps_grid:
        e = float(e)
        if not -0.5 <= e <= 0.5:
            raise ParameterError(f"bias {e} outside [-1/2, 1/2]")
        f1 = 1.0 / (1.0 + 2.0 * e) if e >= 0 else None
        f2 = 1.0 + 2.0 * e if e <= 0 else None
        rows.append((e, f1, f2))
    return rows


def bob_povm(a: float) -> tuple[np.ndarray, np.ndarray]:
    """Two-outcome Kraus pair that turns half of |phi> into |Phi(a)> or |Phi(1-a)>."""
    _check_a(a)
    m0 = np.diag([math.sqrt(a), math.sqrt(1 - a)]).astype(complex)
    m1 = np.diag([math.sqrt(1 - a), math.sqrt(a)]).astype(complex)
    return m0, m1


# ---------------------------------------------------------------------------
# black-box adversaries


def _validate_kraus(kraus, tol=TOL_STRUCT):
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    total = sum(k.conj().T @ k for k in kraus)
    if np.max(np.abs(total - np.eye(total.shape[0]))) > tol:
        raise AdversaryError("Kraus operators do not sum to the identity")
    return kraus


def _kraus_on_a(k, rho_ab):
    op = np.kron(k, np.eye(2))
    return op @ rho_ab @ op.conj().T


class ConstantBiasAdversary:
    """Alice shares |Phi(a)>, fixes the box bias and sends A untouched."""

    cheater = Party.ALICE

    def __init__(self, epsilon: float):
        self.epsilon = epsilon

    def play(self, coinflip, a: float) -> DetectionOutcome:
        return KrausAdversary([np.eye(2)], [self.epsilon]).play(coinflip, a)


class KrausAdversary:
    """Instrument ``{L_k}`` on Alice's qubit; outcome k selects box bias ``epsilons[k]``."""

    cheater = Party.ALICE

    def __init__(self, kraus: Sequence[np.ndarray], epsilons: Sequence[float]):
        if len(kraus) != len(epsilons):
            raise AdversaryError("one bias per Kraus operator is required")
        self.kraus = _validate_kraus(kraus)
        self.epsilons = [float(e) for e in epsilons]

    def play(self, coinflip, a: float) -> DetectionOutcome:
        if not isinstance(coinflip, BlackBoxFlip):
            raise AdversaryError("Kraus adversaries act on black-box flips only")
        _check_a(a)
        pair = phi_state(a)
        rho = np.outer(pair, pair.conj())
        lose_rho = np.zeros((4, 4), dtype=complex)
        for k, e in zip(self.kraus, self.epsilons):
            lose_rho = lose_rho + coinflip.outcome0_probability(e) * _kraus_on_a(k, rho)
        p_lose = float(np.trace(lose_rho).real)
        checked = lose_rho / p_lose if p_lose > 0 else None
        return DetectionOutcome(Party.ALICE, p_lose, check_failure(lose_rho), checked)


def random_kraus_pairs(n: int, rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    """``n`` two-outcome instruments from QR-orthonormalized Gaussian isometries.

    Returns shape (n, 2, dim, dim); ``sum_k K_k^dag K_k = I`` for each sample.
    """
    g = rng.standard_normal((n, 2 * dim, dim)) + 1j * rng.standard_normal((n, 2 * dim, dim))
    q, r = np.linalg.qr(g)
    # fix the phase freedom so the isometry is Haar distributed
    d = np.diagonal(r, axis1=1, axis2=2)
    q = q * (d / np.abs(d))[:, None, :]
    return q.reshape(n, 2, dim, dim)


@dataclass(frozen=True)
class BlackboxBoundReport:
    a: float
    epsilon_min: float
    epsilon_max: float
    samples: int
    seed: int
    bound: float
    min_pd: float
    gap: float
    violations: int

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return dict(self.__dict__, ok=self.ok)


def blackbox_bound_check(a: float, eps_min: float, eps_max: float, samples: int = 1000,
                         seed: int = 0, kraus: np.ndarray | None = None,
                         epsilons: np.ndarray | None = None) -> BlackboxBoundReport:
    """Monte-Carlo probe: no instrument on A beats constant biasing.

    Each sampled adversary applies a random two-outcome instrument to A and
    maps its outcomes to biases drawn uniformly from ``[eps_min, eps_max]``
    (every tenth adversary uses the endpoints).  ``kraus``/``epsilons`` may
    be supplied instead, with shapes (n, k, 2, 2) and (n, k).
    """
    _check_a(a)
    box = BlackBoxFlip(eps_min, eps_max)
    rng = np.random.default_rng(seed)
    if kraus is None:
        kraus = random_kraus_pairs(samples, rng)
        epsilons = rng.uniform(eps_min, eps_max, size=(samples, 2))
        epsilons[::10] = (eps_min, eps_max)
        # sample 0 is the constant-bias adversary, which attains the bound
        kraus[0] = (np.eye(2), np.zeros((2, 2)))
        epsilons[0] = (eps_min, eps_max)
    kraus = np.asarray(kraus, dtype=complex)
    epsilons = np.asarray(epsilons, dtype=float)
    completeness = np.einsum("nkji,nkjl->nil", kraus.conj(), kraus)
    if np.max(np.abs(completeness - np.eye(kraus.shape[-1]))) > TOL_STRUCT:
        raise AdversaryError("sampled Kraus set is not complete")
    if np.any(epsilons < box.epsilon_min - 1e-12) or np.any(epsilons > box.epsilon_max + 1e-12):
        raise AdversaryError("adversary bias outside the box range")
    pair = phi_state(a).reshape(2, 2)
    # post-instrument pair states L_k (x) I |Phi(a)>, and their overlap with |phi>
    post = np.einsum("nkij,jb->nkib", kraus, pair).reshape(kraus.shape[0], kraus.shape[1], 4)
    weight = np.sum(np.abs(post) ** 2, axis=-1)
    overlap = np.abs(post @ PHI_PLUS.conj()) ** 2
    pd = np.sum((0.5 + epsilons) * (weight - overlap), axis=1)
    bound = pd_box(a, eps_min)
    min_pd = float(pd.min())
    return BlackboxBoundReport(a, eps_min, eps_max, int(pd.shape[0]), seed, bound, min_pd,
                               min_pd - bound, int(np.sum(pd < bound - 1e-9)))


# ---------------------------------------------------------------------------
# superposed biasing


def rename_ancillas(strategy: BiasStrategy, prefix: str) -> BiasStrategy:
    mapping = {n: f"{prefix}{n}" for n, _ in strategy.ancillas}
    if not mapping:
        return strategy
    moves = {i: Move(tuple(mapping.get(t, t) for t in mv.targets), mv.unitary) for i, mv in strategy.moves.items()}
    anc = tuple((mapping[n], d) for n, d in strategy.ancillas)
    return BiasStrategy(strategy.party, moves, anc, strategy.label)


@dataclass
class AttackReport:
    scenario: str
    a: float
    epsilon_min: float
    epsilon_max: float
    fidelity: float
    p_outcome0: float
    pd_closed_form: float
    pd_simulated: float
    pd_box: float
    beats_blackbox: bool
    insensitivity: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "a": self.a,
            "epsilons": [self.epsilon_min, self.epsilon_max],
            "fidelity": self.fidelity,
            "p_outcome0": self.p_outcome0,
            "P_d_closed_form": self.pd_closed_form,
            "P_d_simulated": self.pd_simulated,
            "P_d_box": self.pd_box,
            "beats_blackbox": self.beats_blackbox,
            "insensitivity": self.insensitivity,
            "details": self.details,
        }


class SuperposedAttack:
    """Cheater runs two biasing strategies coherently, controlled by its pair qubit.

    Round ``i`` of the cheater applies
    ``|c0><c0| (x) U''_i + |c1><c1| (x) U'_i`` with the control on the
    cheater's half of the AB pair (A for Alice, B for Bob).  ``c0`` is 0,
    or 1 with ``swap_controls``.  ``s_min`` (``U''``) is the strategy run on
    the heavier pair amplitude.  After the flip, the cheater applies the
    Uhlmann unitary ``V`` on its registers in the ``c1`` branch so that the
    losing branch disentangles as far as the fidelity allows.
    """

    def __init__(self, protocol: QcfProtocol, s_min: BiasStrategy, s_max: BiasStrategy, a: float,
                 pair_state=None, swap_controls: bool = False, lose_outcome: int | None = None,
                 require_insensitive: bool = True, label: str = "",
                 pair_layout: RegisterLayout | None = None, control: str | None = None,
                 check: np.ndarray | None = None):
        _check_a(a)
        if s_min.party is not s_max.party:
            raise StrategyError("both strategies must belong to the same party")
        self.protocol = protocol
        self.a = a
        self.cheater = s_min.party
        self.honest = self.cheater.other
        self.pair_layout = pair_layout or RegisterLayout.qubits("A", "B")
        self.control = control or ("A" if self.cheater is Party.ALICE else "B")
        self.check = CHECK_PROJECTOR if check is None else np.asarray(check, dtype=complex)
        self.c0 = 1 if swap_controls else 0
        self.lose = losing_outcome(self.cheater) if lose_outcome is None else int(lose_outcome)
        self.label = label or f"{protocol.name}:{s_min.label or 'honest'}/{s_max.label or 'honest'}"
        s_min = rename_ancillas(s_min, "lo.")
        s_max = rename_ancillas(s_max, "hi.")
        self.s_min, self.s_max = s_min, s_max
        self.pair_state = phi_state(a) if pair_state is None else np.asarray(pair_state, dtype=complex)
        if self.pair_state.shape != (self.pair_layout.dim,):
            raise ParameterError("pair_state does not match pair_layout")

        honest_run = run_honest(protocol)
        self.profiles = (run_with_bias(protocol, s_min, honest_run), run_with_bias(protocol, s_max, honest_run))
        self.insensitive = all(bool(verify_insensitivity(p)) for p in self.profiles)
        if require_insensitive and not self.insensitive:
            bad = [p.strategy.label for p in self.profiles if not verify_insensitivity(p)]
            raise AttackPreconditionError(f"strategies {bad} are not insensitive and outcome-certain")

        self.anc_layout = protocol.layout + s_min.ancilla_layout() + s_max.ancilla_layout()
        self.layout = self.pair_layout + self.anc_layout
        self.cheater_side = protocol.holdings()[self.cheater] + s_min.ancilla_layout().names + s_max.ancilla_layout().names
        self.honest_side = protocol.holdings()[self.honest]
        zeros = ket(0, s_min.ancilla_layout().dim * s_max.ancilla_layout().dim)
        self.qcf_initial = tensor(protocol.initial_state, zeros)

        # separate runs on the common layout give the branch vectors and V
        self.final_min = evolve(protocol, s_min, self.anc_layout, self.qcf_initial)
        self.final_max = evolve(protocol, s_max, self.anc_layout, self.qcf_initial)
        self.branches_min = [outcome_branch(protocol, self.final_min, self.anc_layout, self.honest, c) for c in (0, 1)]
        self.branches_max = [outcome_branch(protocol, self.final_max, self.anc_layout, self.honest, c) for c in (0, 1)]
        self.eps_min = norm_sq(self.branches_min[self.lose]) - 0.5
        self.eps_max = norm_sq(self.branches_max[self.lose]) - 0.5
        t, s = self.branches_min[self.lose], self.branches_max[self.lose]
        if norm_sq(t) > 1e-15 and norm_sq(s) > 1e-15:
            rt = reduced_state(t, self.anc_layout, self.honest_side)
            rs = reduced_state(s, self.anc_layout, self.honest_side)
            self.fidelity = fidelity(rt / np.trace(rt).real, rs / np.trace(rs).real)
            self.V, self.aligned_overlap_sq = uhlmann_align(t, s, self.anc_layout, self.cheater_side)
        else:
            self.fidelity = float("nan")
            self.V = np.eye(self.anc_layout.dim_of(self.cheater_side), dtype=complex)
            self.aligned_overlap_sq = 0.0

    # -- circuit -------------------------------------------------------
    def round_operator(self, i: int) -> tuple[tuple[str, ...], np.ndarray]:
        """``O_i`` for a cheater round, as (targets, matrix) with the control first."""
        t0, u0 = self.s_min.move_for(self.protocol, i)
        t1, u1 = self.s_max.move_for(self.protocol, i)
        union = self.layout.ordered(set(t0) | set(t1))
        blocks = [embed(u0, self.layout, t0, union), embed(u1, self.layout, t1, union)]
        if self.c0 == 1:
            blocks.reverse()
        return (self.control,) + union, selector(blocks)

    def alignment_operator(self) -> tuple[tuple[str, ...], np.ndarray]:
        blocks = [np.eye(self.V.shape[0]), self.V]
        if self.c0 == 1:
            blocks.reverse()
        return (self.control,) + self.layout.ordered(self.cheater_side), selector(blocks)

    def initial_state(self) -> np.ndarray:
        return tensor(self.pair_state, self.qcf_initial)

    def final_state(self, align: bool = True) -> np.ndarray:
        psi = self.initial_state()
        for i, rnd in enumerate(self.protocol.rounds):
            if rnd.actor is self.cheater:
                targets, op = self.round_operator(i)
            else:
                targets, op = rnd.targets, rnd.unitary
            psi = apply_operator(psi, self.layout, targets, op)
        if align:
            targets, op = self.alignment_operator()
            psi = apply_operator(psi, self.layout, targets, op)
        return psi

    def branch(self, outcome: int, align: bool = True) -> np.ndarray:
        return outcome_branch(self.protocol, self.final_state(align), self.layout, self.honest, outcome)

    # -- figures of merit ---------------------------------------------
    def pair_weight(self) -> float:
        """Probability that the control sits on the ``U''`` value."""
        w = np.diag(reduced_state(self.pair_state, self.pair_layout, [self.control])).real
        return float(w[self.c0] / np.sum(w))

    def checked_pair(self) -> np.ndarray:
        """Subnormalized pair-register state in the cheater's losing branch."""
        return reduced_state(self.branch(self.lose), self.layout, self.pair_layout.names)

    def pd_simulated(self) -> float:
        return float(np.trace(self.check @ self.checked_pair()).real)

    def pd_closed_form(self) -> float:
        F = 0.0 if math.isnan(self.fidelity) else self.fidelity
        return pd_quantum(self.pair_weight(), self.eps_min, self.eps_max, F)

    def four_branch_norms(self) -> dict[tuple[int, int], float]:
        """Norm of each (control value, outcome) term of the unaligned final state."""
        psi = self.final_state(align=False)
        out = {}
        for ctrl in (0, 1):
            proj = np.diag([1.0 - ctrl, float(ctrl)])
            part = apply_operator(psi, self.layout, [self.control], proj)
            for c in (0, 1):
                out[(ctrl, c)] = norm_sq(outcome_branch(self.protocol, part, self.layout, self.honest, c))
        return out

    def agreement_probability(self) -> float:
        """Probability that the cheater's own measurement matches the honest outcome.

        The cheater measures ``|c0><c0| (x) Pi''_c + |c1><c1| (x) Pi'_c`` on
        the control and its registers, with ``Pi_c`` projecting onto the
        support of its outcome-c marginal.
        """
        psi = self.final_state(align=False)
        side = self.layout.ordered(self.cheater_side)

        def projectors(branches):
            marg = [reduced_state(b, self.anc_layout, side) for b in branches]
            p0 = support_projector(marg[0]) if np.trace(marg[0]).real > 1e-15 else np.zeros_like(marg[0])
            return [p0, np.eye(p0.shape[0]) - p0]

        pmin, pmax = projectors(self.branches_min), projectors(self.branches_max)
        total = 0.0
        for c in (0, 1):
            blocks = [pmin[c], pmax[c]] if self.c0 == 0 else [pmax[c], pmin[c]]
            honest_c = outcome_branch(self.protocol, psi, self.layout, self.honest, c)
            total += norm_sq(apply_operator(honest_c, self.layout, (self.control,) + side, selector(blocks)))
        return total

    def report(self) -> AttackReport:
        sim = self.pd_simulated()
        box = pd_box(self.a, min(self.eps_min, 0.5))
        psi = self.final_state(align=False)
        p0 = norm_sq(outcome_branch(self.protocol, psi, self.layout, self.honest, 0))
        return AttackReport(
            scenario=self.label,
            a=self.a,
            epsilon_min=self.eps_min,
            epsilon_max=self.eps_max,
            fidelity=self.fidelity,
            p_outcome0=p0,
            pd_closed_form=self.pd_closed_form(),
            pd_simulated=sim,
            pd_box=box,
            beats_blackbox=sim < box - 1e-9,
            insensitivity=self.insensitive,
            details={
                "cheater": self.cheater.value,
                "losing_outcome": self.lose,
                "aligned_overlap_sq": self.aligned_overlap_sq,
                "agreement_probability": self.agreement_probability(),
            },
        )


def build_superposed_attack(protocol: QcfProtocol, s_min: BiasStrategy, s_max: BiasStrategy, a: float,
                            **kwargs) -> SuperposedAttack:
    return SuperposedAttack(protocol, s_min, s_max, a, **kwargs)


@dataclass
class BobSideAttack:
    attacks: tuple[SuperposedAttack, SuperposedAttack]
    probabilities: tuple[float, float]
    report: AttackReport


def bob_side_attack(protocol: QcfProtocol, s_min: BiasStrategy, s_max: BiasStrategy, a: float,
                    **kwargs) -> BobSideAttack:
    """Bob measures his half of |phi> with the two-outcome POVM, then cheats.

    Outcome 0 leaves |Phi(a)> and the attack runs with normal controls;
    outcome 1 leaves |Phi(1-a)> and the controls are exchanged.
    """
    if s_min.party is not Party.BOB or s_max.party is not Party.BOB:
        raise StrategyError("bob_side_attack needs Bob strategies")
    povm = bob_povm(a)
    attacks, probs = [], []
    for k, m in enumerate(povm):
        post = np.kron(np.eye(2), m) @ PHI_PLUS
        p = norm_sq(post)
        probs.append(p)
        attacks.append(SuperposedAttack(protocol, s_min, s_max, a, pair_state=post / math.sqrt(p),
                                        swap_controls=(k == 1), **kwargs))
    base = attacks[0].report()
    sim = sum(p * att.pd_simulated() for p, att in zip(probs, attacks))
    base.pd_simulated = sim
    base.beats_blackbox = sim < base.pd_box - 1e-9
    base.scenario = f"{base.scenario} (Bob POVM)"
    base.details["povm_probabilities"] = list(probs)
    base.details["branch_pd"] = [att.pd_simulated() for att in attacks]
    return BobSideAttack(tuple(attacks), tuple(probs), base)


class SuperposedAdversary:
    """Protocol-1 plug-in running :class:`SuperposedAttack` on a QCF."""

    def __init__(self, s_min: BiasStrategy, s_max: BiasStrategy, bob_measures: bool | None = None):
        self.s_min, self.s_max = s_min, s_max
        self.cheater = s_min.party
        self.bob_measures = (self.cheater is Party.BOB) if bob_measures is None else bob_measures

    def play(self, coinflip, a: float) -> DetectionOutcome:
        if not isinstance(coinflip, QcfProtocol):
            raise AdversaryError("superposed biasing needs a quantum coin flip")
        if self.cheater is Party.BOB and self.bob_measures:
            res = bob_side_attack(coinflip, self.s_min, self.s_max, a)
            rho = sum(p * att.checked_pair() for p, att in zip(res.probabilities, res.attacks))
            details = res.report.to_dict()
        else:
            att = SuperposedAttack(coinflip, self.s_min, self.s_max, a)
            rho = att.checked_pair()
            details = att.report().to_dict()
        p_lose = float(np.trace(rho).real)
        return DetectionOutcome(self.cheater, p_lose, check_failure(rho),
                                rho / p_lose if p_lose > 0 else None, details)


# ---------------------------------------------------------------------------
# restricted family versus the box


@dataclass(frozen=True)
class RestrictedPoint:
    x: float
    epsilon: float
    fidelity: float
    fidelity_bound: float
    holds: bool


def compare_restricted(points: Iterable[tuple[float, float, float]]) -> list[RestrictedPoint]:
    """Evaluate the box-distinguishability condition for (x, eps_x, F(x)) triples.

    A family biased to ``eps_x`` is compared with the box of range
    ``[min(0, eps_x), max(0, eps_x)]``; the condition reads
    ``F > 1 + 2 eps_x`` for ``eps_x < 0`` and ``F > 1/(1 + 2 eps_x)`` for
    ``eps_x > 0``.  The margin must exceed ``TOL_STRUCT`` so that rounding
    noise at ``eps_x ~ 0`` does not count as a strict win.
    """
    out = []
    for x, eps, F in points:
        lo, hi = min(0.0, eps), max(0.0, eps)
        bound = 1.0 / threshold_condition(lo, hi, F).r
        out.append(RestrictedPoint(float(x), float(eps), float(F), bound, F > bound + TOL_STRUCT))
    return out


def restricted_comparison(protocol: QcfProtocol, strategy: BiasStrategy, xs: Sequence[float]):
    """Per-x comparison for the ancilla-restricted family of ``strategy``.

    Returns ``(points, smallest_x)`` where ``smallest_x`` is the smallest
    grid value with the condition holding (``None`` if none does).
    """
    honest = run_honest(protocol)
    curve = restricted_fidelity_curve(protocol, strategy, xs)
    triples = []
    for x, F in curve:
        eps = run_with_bias(protocol, make_restricted(protocol, strategy, x), honest).epsilon
        triples.append((x, eps, F))
    points = compare_restricted(triples)
    good = [p.x for p in points if p.holds]
    return points, (min(good) if good else None)


def fit_small_x(xs: Sequence[float], fids: Sequence[float]) -> np.ndarray:
    """Least-squares coefficients (c1, c2, c3) of ``1 - F = c1 x + c2 x^2 + c3 x^3``.

    The model has no constant term because F(0) = 1 holds exactly.
    """
    xs = np.asarray(xs, dtype=float)
    y = 1.0 - np.asarray(fids, dtype=float)
    design = np.vstack([xs, xs**2, xs**3]).T
    return np.linalg.lstsq(design, y, rcond=None)[0]


# ---------------------------------------------------------------------------
# Delta a


def delta_a_value(eps_low: float, eps_high: float) -> float:
    """Largest a - 1/2 with zero detection for a perfectly aligned pair."""
    lo, hi = sorted((eps_low, eps_high))
    return (hi - lo) / (2 * (1 + hi + lo))


@dataclass
class PairCertificate:
    s_low: BiasStrategy
    s_high: BiasStrategy
    eps_low: float
    eps_high: float
    fidelity: float
    insensitive: bool
    certified: bool

    @property
    def delta_a(self) -> float:
        return delta_a_value(self.eps_low, self.eps_high)


def certify_pair(protocol: QcfProtocol, s1: BiasStrategy, s2: BiasStrategy, tol: float = TOL_STRUCT,
                 honest=None) -> PairCertificate:
    """Biases, fidelity and insensitivity of a strategy pair, low bias first."""
    honest = honest or run_honest(protocol)
    p1, p2 = run_with_bias(protocol, s1, honest), run_with_bias(protocol, s2, honest)
    if p1.epsilon > p2.epsilon:
        p1, p2 = p2, p1
    h = p1.honest_party
    c = losing_outcome(p1.cheater)
    r1, r2 = p1.reduced_states[(h, c)], p2.reduced_states[(h, c)]
    F = fidelity(r1, r2) if r1 is not None and r2 is not None else 0.0
    ins = bool(verify_insensitivity(p1)) and bool(verify_insensitivity(p2))
    return PairCertificate(p1.strategy, p2.strategy, p1.epsilon, p2.epsilon, F, ins,
                           ins and F >= 1 - tol)


@dataclass
class DeltaAResult:
    delta_a: float
    witness: PairCertificate | None
    mode: str
    details: dict = field(default_factory=dict)

    @property
    def a(self) -> float:
        return 0.5 + self.delta_a

    def to_dict(self) -> dict:
        w = self.witness
        return {
            "mode": self.mode,
            "delta_a": self.delta_a,
            "a": self.a,
            "witness": None if w is None else {
                "low": w.s_low.label, "high": w.s_high.label,
                "epsilon_low": w.eps_low, "epsilon_high": w.eps_high,
                "fidelity": w.fidelity, "insensitive": w.insensitive, "certified": w.certified,
            },
            "details": self.details,
        }


def catalog_pairs(entry, party: Party) -> list[tuple[BiasStrategy, BiasStrategy]]:
    """Every unordered pair of ``party``'s catalog strategies, honest included."""
    from itertools import combinations
    pool = [BiasStrategy.honest(party)] + [s for s in entry.strategies.values() if s.party is party]
    return list(combinations(pool, 2))


def delta_a(protocol, pairs: Iterable[tuple[BiasStrategy, BiasStrategy]] = ()) -> DeltaAResult:
    """Best certified pair among ``pairs``; a black box always gives zero."""
    if isinstance(protocol, BlackBoxFlip):
        return DeltaAResult(0.0, None, "catalog", {"note": "ideal black box: no quantum strategy pair exists"})
    honest = run_honest(protocol)
    best = None
    for s1, s2 in pairs:
        cert = certify_pair(protocol, s1, s2, honest=honest)
        if cert.certified and (best is None or cert.delta_a > best.delta_a):
            best = cert
    if best is None:
        return DeltaAResult(0.0, None, "catalog")
    return DeltaAResult(best.delta_a, best, "catalog")


# -- numeric search ---------------------------------------------------------


def hermitian_from_params(theta: np.ndarray, d: int) -> np.ndarray:
    """Map d*d reals onto a Hermitian matrix (diagonal, then real/imag off-diagonal)."""
    h = np.zeros((d, d), dtype=complex)
    h[np.diag_indices(d)] = theta[:d]
    iu = np.triu_indices(d, 1)
    m = len(iu[0])
    off = theta[d:d + m] + 1j * theta[d + m:d + 2 * m]
    h[iu] = off
    h = h + np.triu(h, 1).conj().T
    return h


def unitary_from_params(theta: np.ndarray, d: int) -> np.ndarray:
    w, v = np.linalg.eigh(hermitian_from_params(theta, d))
    return (v * np.exp(1j * w)) @ v.conj().T


@dataclass(frozen=True)
class StrategyFamily:
    """Strategies of ``party`` whose round ``round_index`` applies a free
    unitary on ``free`` followed by the fixed unitary ``post`` on ``targets``."""

    protocol: QcfProtocol
    party: Party
    round_index: int
    targets: tuple[str, ...]
    free: tuple[str, ...]
    post: np.ndarray
    name: str

    @property
    def n_params(self) -> int:
        return self.protocol.layout.dim_of(self.free) ** 2

    def strategy(self, theta, label: str = "") -> BiasStrategy:
        d = self.protocol.layout.dim_of(self.free)
        u = embed(unitary_from_params(np.asarray(theta, dtype=float), d), self.protocol.layout, self.free, self.targets)
        return BiasStrategy(self.party, {self.round_index: Move(self.targets, self.post @ u)},
                            label=label or f"{self.name}")


def atvy_bob_family(protocol: QcfProtocol) -> StrategyFamily:
    """Bob: any unitary on (S, Rb2), then copy Rb2 into his reply."""
    from .gates import Circuit
    post = Circuit("S", "Rb2", "mb2").cx("Rb2", "mb2").unitary()
    return StrategyFamily(protocol, Party.BOB, 1, ("S", "Rb2", "mb2"), ("S", "Rb2"), post, "atvy_bob_u4")


def protocol2_bob_family(protocol: QcfProtocol) -> StrategyFamily:
    """Bob: any unitary on (D, O), then the honest bookkeeping of flag and result."""
    from .gates import X, Circuit, controlled
    post = (Circuit("D", "Q", "O", "M", "mO", "mM")
            .gate(controlled(controlled(X), 0), "O", "D", "M")
            .cx("O", "mO")
            .gate(controlled(controlled(X), 0), "O", "M", "mM")
            .unitary())
    return StrategyFamily(protocol, Party.BOB, 1, ("D", "Q", "O", "M", "mO", "mM"), ("D", "O"), post,
                          "protocol2_bob_u4")


SEARCH_FAMILIES: dict[str, Callable[[QcfProtocol], StrategyFamily]] = {
    "atvy": atvy_bob_family,
    "protocol2": protocol2_bob_family,
}


def _pair_objective(family: StrategyFamily, honest, weight: float):
    n = family.n_params
    h = family.party.other
    c = losing_outcome(family.party)

    def terms(theta):
        p1 = run_with_bias(family.protocol, family.strategy(theta[:n]), honest)
        p2 = run_with_bias(family.protocol, family.strategy(theta[n:]), honest)
        r1, r2 = p1.reduced_states[(h, c)], p2.reduced_states[(h, c)]
        F = fidelity(r1, r2) if r1 is not None and r2 is not None else 0.0
        leak = sum(cert.max_leakage for p in (p1, p2) for cert in p.insensitive.values())
        certainty = p1.cheater_fidelity + p2.cheater_fidelity
        return delta_a_value(p1.epsilon, p2.epsilon), 1 - F, leak + certainty

    def objective(theta):
        da, loss, viol = terms(theta)
        return -da + weight * (loss + viol)

    return objective, terms


def delta_a_search(protocol: QcfProtocol, family: StrategyFamily | None = None, seed: int = 7,
                   restarts: int = 6, weights: Sequence[float] = (1e3, 1e5, 1e7),
                   maxiter: int = 400, refine_sweeps: int = 1) -> DeltaAResult:
    """Penalty search for a high-Delta-a pair within a parametric family.

    Seeded random restarts are optimized with L-BFGS-B under an increasing
    penalty on ``1 - F`` (and on support leakage / outcome uncertainty),
    followed by coordinate-wise refinement.  The winner is re-certified
    exactly; the result is a lower bound on Delta a.
    """
    from scipy.optimize import minimize, minimize_scalar

    family = family or SEARCH_FAMILIES[protocol.name](protocol)
    honest = run_honest(protocol)
    rng = np.random.default_rng(seed)
    n = family.n_params
    best_theta, best_val = None, math.inf
    for _ in range(restarts):
        theta = rng.uniform(-math.pi, math.pi, size=2 * n)
        for w in weights:
            obj, _ = _pair_objective(family, honest, w)
            theta = minimize(obj, theta, method="L-BFGS-B", options={"maxiter": maxiter}).x
        obj, _ = _pair_objective(family, honest, weights[-1])
        val = obj(theta)
        if val < best_val:
            best_theta, best_val = theta, val
    obj, terms = _pair_objective(family, honest, weights[-1])
    theta = best_theta.copy()
    for _ in range(refine_sweeps):
        for j in range(theta.size):
            def along(t, j=j):
                th = theta.copy()
                th[j] = t
                return obj(th)
            res = minimize_scalar(along, bracket=(theta[j] - 1e-3, theta[j] + 1e-3))
            if res.fun < obj(theta):
                theta[j] = res.x
    s1 = family.strategy(theta[:n], label=f"{family.name}[0]")
    s2 = family.strategy(theta[n:], label=f"{family.name}[1]")
    cert = certify_pair(protocol, s1, s2, honest=honest)
    da, loss, viol = terms(theta)
    details = {
        "family": family.name,
        "seed": seed,
        "restarts": restarts,
        "one_minus_fidelity": loss,
        "violation": viol,
        "certified_at_1e-9": cert.certified,
        "lower_bound": True,
    }
    ok = cert.insensitive and cert.fidelity >= 1 - 1e-6
    return DeltaAResult(cert.delta_a if ok else 0.0, cert, "search", details)


def witness_attack(protocol: QcfProtocol, cert: PairCertificate, a: float | None = None):
    """Run the superposed attack on a certified pair at ``a = 1/2 + Delta a``."""
    a = 0.5 + cert.delta_a if a is None else a
    if cert.s_low.party is Party.BOB:
        return bob_side_attack(protocol, cert.s_low, cert.s_high, a).report
    return SuperposedAttack(protocol, cert.s_low, cert.s_high, a).report()
