"""Distinguishability and entanglement measures.

Conventions:

* ``fidelity`` is the squared Uhlmann fidelity, ``(tr sqrt(sqrt(r) s sqrt(r)))**2``.
* ``negativity`` is twice the sum of the magnitudes of the negative
  eigenvalues of the partial transpose, so that the two-qubit state
  ``sqrt(a)|00> + sqrt(1-a)|11>`` has negativity ``2*sqrt(a*(1-a))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import LayoutError, PreconditionError
from .qlinalg import (
    TOL_STRUCT,
    RegisterLayout,
    hermitian_eig,
    is_hermitian,
    psd_factor,
    norm_sq,
    partial_transpose,
    reduced_state,
    svd,
)

PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def phi_state(a: float) -> np.ndarray:
    """``sqrt(a)|00> + sqrt(1-a)|11>``; ``phi_state(0.5)`` is the Bell state."""
    return np.array([np.sqrt(a), 0, 0, np.sqrt(1 - a)], dtype=complex)


def _check_normalized(rho, label):
    tr = np.trace(rho).real
    if abs(tr - 1) > TOL_STRUCT:
        raise PreconditionError(f"{label} must have unit trace (got {tr:.12g}); normalize branch states first")


def fidelity(rho, sigma) -> float:
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise PreconditionError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    _check_normalized(rho, "rho")
    _check_normalized(sigma, "sigma")
    # tr sqrt(sqrt(r) s sqrt(r)) is the trace norm of G^dag H for r = G G^dag, s = H H^dag;
    # singular values avoid square roots of rounding-level eigenvalues
    g, h = psd_factor(rho), psd_factor(sigma)
    if not g.size or not h.size:
        return 0.0
    val = float(np.sum(svd(g.conj().T @ h)[1]) ** 2)
    return min(val, 1.0)


def negativity(rho, layout: RegisterLayout, cut: str) -> float:
    """Negativity across ``cut`` versus the rest; subnormalized input allowed."""
    rho = np.asarray(rho, dtype=complex)
    if cut not in layout:
        raise LayoutError(f"unknown cut {cut!r}")
    if not is_hermitian(rho):
        raise PreconditionError("negativity requires a Hermitian operator")
    w, _ = hermitian_eig(partial_transpose(rho, layout, cut))
    return float(-2.0 * np.sum(w[w < 0]))


def singlet_fraction(sigma) -> float:
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.shape != (4, 4):
        raise PreconditionError("singlet fraction is defined for two-qubit operators")
    return float(np.vdot(PHI_PLUS, sigma @ PHI_PLUS).real)


@dataclass(frozen=True)
class SupportCertificate:
    """Whether ``candidate`` lives inside the support of ``reference``.

    ``max_leakage`` is the weight of the candidate on the kernel of the
    reference.
    """

    contained: bool
    max_leakage: float

    def to_dict(self) -> dict:
        return {"contained": self.contained, "max_leakage": self.max_leakage}


def support_contained(candidate, reference, tol: float = TOL_STRUCT) -> SupportCertificate:
    candidate = np.asarray(candidate, dtype=complex)
    w, v = hermitian_eig(reference)
    kernel = v[:, w < tol]
    leak = float(np.trace(kernel.conj().T @ candidate @ kernel).real) if kernel.size else 0.0
    leak = max(leak, 0.0)
    return SupportCertificate(contained=leak <= tol, max_leakage=leak)


def uhlmann_align(target, source, layout: RegisterLayout, actor_side: Iterable[str]):
    """Unitary on ``actor_side`` maximizing ``|<target| V |source>|``.

    Writing both vectors as (actor x rest) matrices T and S, the overlap is
    ``tr(V S T^dagger)``; its maximum over unitaries is the trace norm of
    ``S T^dagger``, reached at ``V = Z W^dagger`` for ``S T^dagger = W diag Z^dagger``.
    That choice also makes the overlap real and non-negative.

    Returns ``(V, achieved_overlap_sq)``; ``V`` is ordered like the actor
    subsystems in ``layout``.
    """
    target = np.asarray(target, dtype=complex)
    source = np.asarray(source, dtype=complex)
    if norm_sq(target) < 1e-24 or norm_sq(source) < 1e-24:
        raise PreconditionError("uhlmann_align needs non-zero vectors")
    actor = layout.ordered(actor_side)
    aidx = [layout.index(n) for n in actor]
    ridx = [i for i in range(len(layout.dims)) if i not in aidx]
    da = layout.dim_of(actor)

    def as_matrix(v):
        return v.reshape(layout.dims).transpose(aidx + ridx).reshape(da, -1)

    x = as_matrix(source) @ as_matrix(target).conj().T
    w, s, zh = svd(x)
    v = zh.conj().T @ w.conj().T
    overlap = float(np.sum(s))
    return v, overlap**2


def jozsa_overlap_sq(target, source, layout: RegisterLayout, actor_side: Iterable[str]) -> float:
    """``|t|^2 |s|^2 F(rho_t, rho_s)`` with the marginals taken off the actor side."""
    rest = [n for n in layout.names if n not in set(actor_side)]
    rt = reduced_state(target, layout, rest)
    rs = reduced_state(source, layout, rest)
    nt, ns = np.trace(rt).real, np.trace(rs).real
    return float(nt * ns * fidelity(rt / nt, rs / ns))
