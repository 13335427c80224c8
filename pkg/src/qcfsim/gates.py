"""Small gate set and a builder that compiles a gate list into one unitary."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .qlinalg import RegisterLayout, apply_operator

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def prep_amplitudes(p1: float) -> np.ndarray:
    """Rotation taking |0> to sqrt(1-p1)|0> + sqrt(p1)|1>."""
    return ry(2 * np.arcsin(np.sqrt(p1)))


def controlled(u, control_value: int = 1, control_dim: int = 2) -> np.ndarray:
    """``|v><v| (x) u + (1 - |v><v|) (x) I`` with the control first."""
    u = np.asarray(u, dtype=complex)
    out = np.kron(np.eye(control_dim), np.eye(u.shape[0])).astype(complex)
    d = u.shape[0]
    s = control_value * d
    out[s:s + d, s:s + d] = u
    return out


def selector(blocks) -> np.ndarray:
    """Block-diagonal ``sum_k |k><k| (x) blocks[k]`` (control first)."""
    blocks = [np.asarray(b, dtype=complex) for b in blocks]
    d = blocks[0].shape[0]
    out = np.zeros((len(blocks) * d, len(blocks) * d), dtype=complex)
    for k, b in enumerate(blocks):
        out[k * d:(k + 1) * d, k * d:(k + 1) * d] = b
    return out


class Circuit:
    """Accumulates gates on named registers and returns the total unitary.

    ``Circuit("C", "D").h("C").cx("C", "D").unitary()`` maps |00> to the
    Bell state (|00> + |11>)/sqrt(2).
    """

    def __init__(self, *names: str, dims: Mapping[str, int] | None = None):
        dims = dims or {}
        self.layout = RegisterLayout(tuple((n, dims.get(n, 2)) for n in names))
        self._u = np.eye(self.layout.dim, dtype=complex)

    @property
    def names(self) -> tuple[str, ...]:
        return self.layout.names

    def gate(self, u, *targets: str) -> "Circuit":
        self._u = apply_operator(self._u, self.layout, targets, u)
        return self

    def x(self, t):
        return self.gate(X, t)

    def h(self, t):
        return self.gate(H, t)

    def ry(self, theta, t):
        return self.gate(ry(theta), t)

    def cx(self, c, t, control_value: int = 1):
        return self.gate(controlled(X, control_value), c, t)

    def ccx(self, c1, c2, t):
        return self.gate(controlled(controlled(X)), c1, c2, t)

    def cswap(self, c, a, b):
        swap = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
        return self.gate(controlled(swap), c, a, b)

    def unitary(self) -> np.ndarray:
        return self._u.copy()
