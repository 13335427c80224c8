"""Dense complex linear algebra on labeled tensor-product registers.

Index convention (used everywhere in the package): the leftmost tensor
factor is the most significant index.  A layout ``[("A", 2), ("B", 3)]``
therefore stores amplitude ``psi[i_A * 3 + i_B]``, which is what
``numpy.kron`` and a C-order ``reshape(dims)`` both produce.

States and operators are plain ``numpy.ndarray`` values (complex128).  They
are never mutated in place by this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, LayoutError, PreconditionError

MAX_AMPLITUDES = 2**12

# Tolerance policy.
TOL_STRUCT = 1e-9   # hermiticity, unitarity, orthogonality, supports
TOL_RECON = 1e-8    # reconstruction identities
PSD_CLIP = 1e-9     # eigenvalues in [-PSD_CLIP, 0] are treated as zero


def check_capacity(dim: int) -> None:
    if dim > MAX_AMPLITUDES:
        raise CapacityError(
            f"dimension {dim} exceeds the dense budget of {MAX_AMPLITUDES} amplitudes")


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered named subsystems of a tensor-product space."""

    subsystems: tuple[tuple[str, int], ...]

    def __post_init__(self):
        subs = tuple((str(n), int(d)) for n, d in self.subsystems)
        names = [n for n, _ in subs]
        if len(set(names)) != len(names):
            raise LayoutError(f"duplicate subsystem names in {names}")
        if any(d < 1 for _, d in subs):
            raise LayoutError("subsystem dimensions must be positive")
        object.__setattr__(self, "subsystems", subs)
        check_capacity(self.dim)

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "RegisterLayout":
        return cls(tuple(pairs))

    @classmethod
    def qubits(cls, *names: str) -> "RegisterLayout":
        return cls(tuple((n, 2) for n in names))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.subsystems)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.subsystems else 1

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise LayoutError(f"unknown subsystem {name!r}; layout has {self.names}") from None

    def dim_of(self, names: str | Iterable[str]) -> int:
        if isinstance(names, str):
            names = [names]
        return int(np.prod([self.dims[self.index(n)] for n in names], dtype=np.int64))

    def ordered(self, names: Iterable[str]) -> tuple[str, ...]:
        """Return ``names`` sorted into layout order (validating each)."""
        wanted = set(names)
        for n in wanted:
            self.index(n)
        return tuple(n for n in self.names if n in wanted)

    def __add__(self, other: "RegisterLayout") -> "RegisterLayout":
        return RegisterLayout(self.subsystems + other.subsystems)

    def __contains__(self, name: str) -> bool:
        return name in self.names


def _as_complex(x) -> np.ndarray:
    arr = np.asarray(x, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise PreconditionError("entries must be finite")
    return arr


def ket(index: int | str, dim: int | None = None) -> np.ndarray:
    """Computational basis vector.

    ``ket("01")`` is the two-qubit state |01>; ``ket(3, 4)`` is the same.
    """
    if isinstance(index, str):
        dim = 2 ** len(index)
        index = int(index, 2) if index else 0
    if dim is None:
        raise ValueError("dim is required for an integer index")
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def tensor(*factors) -> np.ndarray:
    """Kronecker product of vectors or of matrices (leftmost most significant)."""
    if not factors:
        raise ValueError("tensor needs at least one factor")
    arrays = [_as_complex(f) for f in factors]
    ndim = arrays[0].ndim
    if any(a.ndim != ndim for a in arrays):
        raise ValueError("cannot mix vectors and matrices in tensor")
    size = int(np.prod([a.shape[0] for a in arrays], dtype=np.int64))
    check_capacity(size)
    out = arrays[0]
    for a in arrays[1:]:
        out = np.kron(out, a)
    return out


def dm(psi) -> np.ndarray:
    """Projector |psi><psi| (not normalized)."""
    psi = _as_complex(psi)
    return np.outer(psi, psi.conj())


def norm_sq(psi) -> float:
    psi = np.asarray(psi)
    return float(np.vdot(psi, psi).real)


def is_hermitian(m, tol: float = TOL_STRUCT) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def is_unitary(m, tol: float = TOL_STRUCT) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])), initial=0.0) <= tol)


def _check_layout(dim: int, layout: RegisterLayout) -> None:
    if dim != layout.dim:
        raise LayoutError(f"operand dimension {dim} does not match layout dimension {layout.dim}")


def partial_trace(rho, layout: RegisterLayout, keep: Iterable[str]) -> np.ndarray:
    """Trace out every subsystem not in ``keep``.

    The kept factors appear in layout order.  Subnormalized inputs are fine;
    the trace of the input is preserved.
    """
    rho = _as_complex(rho)
    _check_layout(rho.shape[0], layout)
    keep = layout.ordered(keep)
    n = len(layout.dims)
    kidx = [layout.index(k) for k in keep]
    tidx = [i for i in range(n) if i not in kidx]
    t = rho.reshape(layout.dims * 2)
    perm = kidx + tidx + [n + i for i in kidx] + [n + i for i in tidx]
    t = t.transpose(perm)
    dk = layout.dim_of(keep) if keep else 1
    dt = layout.dim // dk
    t = t.reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", t)


def reduced_state(psi, layout: RegisterLayout, keep: Iterable[str]) -> np.ndarray:
    """Marginal of the (possibly subnormalized) pure state ``psi`` on ``keep``.

    Equivalent to ``partial_trace(dm(psi), ...)`` without forming the full
    density matrix.
    """
    psi = _as_complex(psi)
    _check_layout(psi.shape[0], layout)
    keep = layout.ordered(keep)
    kidx = [layout.index(k) for k in keep]
    tidx = [i for i in range(len(layout.dims)) if i not in kidx]
    dk = layout.dim_of(keep) if keep else 1
    m = psi.reshape(layout.dims).transpose(kidx + tidx).reshape(dk, -1)
    return m @ m.conj().T


def partial_transpose(rho, layout: RegisterLayout, subsystem: str) -> np.ndarray:
    rho = _as_complex(rho)
    _check_layout(rho.shape[0], layout)
    i = layout.index(subsystem)
    n = len(layout.dims)
    t = rho.reshape(layout.dims * 2)
    axes = list(range(2 * n))
    axes[i], axes[n + i] = axes[n + i], axes[i]
    return t.transpose(axes).reshape(rho.shape)


def hermitian_eig(m, tol: float = TOL_STRUCT) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.

    Columns of the returned matrix are orthonormal eigenvectors.
    """
    m = _as_complex(m)
    if not is_hermitian(m, tol):
        raise PreconditionError("hermitian_eig requires a Hermitian matrix")
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return w, v


def matrix_sqrt(rho) -> np.ndarray:
    """Principal square root of a positive semidefinite matrix."""
    w, v = hermitian_eig(rho)
    if w.size and w[0] < -PSD_CLIP:
        raise PreconditionError(f"matrix is not PSD (smallest eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def psd_factor(rho) -> np.ndarray:
    """``G`` with ``rho = G G^dagger`` and one column per numerically non-zero eigenvalue.

    Eigenvalues below ``8 d eps max(w)`` are rounding noise of a rank-deficient
    input and are dropped, as in a numerical rank decision.
    """
    w, v = hermitian_eig(rho)
    if w.size and w[0] < -PSD_CLIP:
        raise PreconditionError(f"matrix is not PSD (smallest eigenvalue {w[0]:.3e})")
    top = max(float(w[-1]), 0.0) if w.size else 0.0
    keep = w > 8 * w.size * np.finfo(float).eps * top
    return v[:, keep] * np.sqrt(w[keep])


def svd(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full SVD ``m = U @ diag(s) @ Vh`` with ``s`` descending."""
    m = _as_complex(m)
    u, s, vh = np.linalg.svd(m, full_matrices=True)
    return u, s, vh


def support_projector(rho, tol: float = TOL_STRUCT) -> np.ndarray:
    w, v = hermitian_eig(rho)
    cols = v[:, w > tol]
    return cols @ cols.conj().T


def apply_operator(psi, layout: RegisterLayout, targets: Sequence[str], op) -> np.ndarray:
    """Apply ``op`` (matrix on ``targets`` in the given order) to a state vector.

    ``psi`` may also be a (dim, k) array, in which case every column is
    transformed.  ``op`` need not be unitary; Kraus operators and projectors
    go through the same path.
    """
    psi = np.asarray(psi, dtype=complex)
    _check_layout(psi.shape[0], layout)
    batch = psi.shape[1:]
    targets = list(targets)
    if len(set(targets)) != len(targets):
        raise LayoutError(f"repeated target in {targets}")
    idx = [layout.index(t) for t in targets]
    tdims = [layout.dims[i] for i in idx]
    d = int(np.prod(tdims, dtype=np.int64)) if targets else 1
    op = np.asarray(op, dtype=complex)
    if op.shape != (d, d):
        raise LayoutError(f"operator shape {op.shape} does not match targets {targets} (dim {d})")
    n = len(layout.dims)
    rest = [i for i in range(n) if i not in idx]
    nb = len(batch)
    perm = idx + rest + list(range(n, n + nb))
    t = psi.reshape(layout.dims + batch).transpose(perm).reshape(d, -1)
    t = (op @ t).reshape(tdims + [layout.dims[i] for i in rest] + list(batch))
    return t.transpose(np.argsort(perm)).reshape(psi.shape)


def embed(op, layout: RegisterLayout, targets: Sequence[str], onto: Sequence[str] | None = None) -> np.ndarray:
    """Express ``op`` (acting on ``targets``) as a matrix on ``onto``.

    ``onto`` defaults to the whole layout; it must contain every target.
    """
    onto = list(layout.names if onto is None else onto)
    missing = set(targets) - set(onto)
    if missing:
        raise LayoutError(f"targets {sorted(missing)} not in {onto}")
    sub = RegisterLayout(tuple((n, layout.dim_of(n)) for n in onto))
    return apply_operator(np.eye(sub.dim, dtype=complex), sub, targets, op)
