"""Simulator and adversarial analyzer for biased quantum coin flipping."""

from .attacks import (
    AttackReport,
    SuperposedAttack,
    blackbox_bound_check,
    bob_povm,
    bob_side_attack,
    bound_curves,
    build_superposed_attack,
    delta_a,
    delta_a_search,
    pd_box,
    pd_quantum,
    threshold_condition,
)
from .catalog import BlackBoxFlip, get_entry, make_atvy, make_blackbox, make_protocol2, make_restricted
from .errors import QcfError
from .escrow import EscrowCommitment, csqbc_alice_attack, csqbc_bob_attack, run_escrow
from .measures import fidelity, negativity, phi_state, singlet_fraction, support_contained, uhlmann_align
from .protocol import (
    BiasStrategy,
    Party,
    QcfProtocol,
    play_protocol1,
    run_honest,
    run_with_bias,
    verify_insensitivity,
)
from .qlinalg import RegisterLayout

__version__ = "0.1.0"
