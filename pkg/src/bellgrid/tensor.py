"""Plane-restricted correlation tensors for N qubits.

A tensor holds the 2^N components T[i_1, ..., i_N] with i_j in {1, 2}, i.e. the
correlation function evaluated on the two in-plane local axes of each observer.
Components are stored flat, with the index packed little-endian: party j
contributes bit j, set when i_j = 2.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_ORACLE_PARTIES = 10

_GHZ_LABEL = re.compile(r"^ghz-werner V=(?P<v>[-+0-9.eE]+)$")

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
}


@dataclass(frozen=True)
class CorrelationTensor:
    n_parties: int
    components: np.ndarray
    label: str = ""
    visibility: float | None = None

    def __post_init__(self):
        comps = np.array(self.components, dtype=float).reshape(-1)
        if self.n_parties < 1:
            raise ValueError("n_parties must be >= 1")
        if comps.size != 2**self.n_parties:
            raise ValueError(
                f"expected {2 ** self.n_parties} components for {self.n_parties} parties, got {comps.size}"
            )
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)

    @classmethod
    def zeros(cls, n_parties: int, label: str = "zero") -> "CorrelationTensor":
        return cls(n_parties, np.zeros(2**n_parties), label)

    @classmethod
    def from_array(cls, array: np.ndarray, label: str = "") -> "CorrelationTensor":
        """Build from an array of shape (2,)*N whose axis j belongs to party j."""
        array = np.asarray(array, dtype=float)
        n = array.ndim
        flat = np.transpose(array, tuple(reversed(range(n)))).reshape(-1)
        return cls(n, flat, label)

    def as_array(self) -> np.ndarray:
        """Components as shape (2,)*N, axis j = party j, position 0/1 = index 1/2."""
        n = self.n_parties
        return np.transpose(self.components.reshape((2,) * n), tuple(reversed(range(n))))

    def component(self, indices: Sequence[int]) -> float:
        """Component T[i_1, ..., i_N] addressed with 1-based indices."""
        if len(indices) != self.n_parties:
            raise ValueError("index tuple length must equal n_parties")
        return float(self.components[pack_index(indices)])

    def is_physical(self, atol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.components) <= 1.0 + atol))

    def to_dict(self) -> dict:
        return {
            "n_parties": self.n_parties,
            "components": [float(c) for c in self.components],
            "label": self.label,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "CorrelationTensor":
        label = data.get("label", "") or ""
        visibility = None
        m = _GHZ_LABEL.match(label)
        if m:
            visibility = float(m.group("v"))
        return cls(int(data["n_parties"]), np.asarray(data["components"], dtype=float), label, visibility)

    @classmethod
    def from_json(cls, text: str) -> "CorrelationTensor":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DirectionSet:
    """One in-plane measurement angle per observer (radians)."""

    angles: tuple[float, ...]

    def __init__(self, angles: Sequence[float]):
        object.__setattr__(self, "angles", tuple(float(a) for a in angles))

    def __len__(self):
        return len(self.angles)

    def vectors(self) -> np.ndarray:
        """The (cos a, sin a) pairs, shape (N, 2)."""
        a = np.asarray(self.angles)
        return np.stack([np.cos(a), np.sin(a)], axis=1)


def pack_index(indices: Sequence[int]) -> int:
    flat = 0
    for j, i in enumerate(indices):
        if i not in (1, 2):
            raise ValueError(f"tensor indices must be 1 or 2, got {i}")
        flat |= (i - 1) << j
    return flat


def unpack_index(flat: int, n_parties: int) -> tuple[int, ...]:
    return tuple(((flat >> j) & 1) + 1 for j in range(n_parties))


def _check_parties(n_parties: int) -> None:
    if n_parties < 2:
        raise ValueError("n_parties must be ≥ 2")


def ghz_werner_tensor(n_parties: int, visibility: float) -> CorrelationTensor:
    """x-y correlation tensor of V|GHZ><GHZ| + (1 - V) 1/2^N.

    A component with k indices equal to 2 (k Pauli-y factors) is
    (-1)^(k/2) V for even k and vanishes for odd k.
    """
    _check_parties(n_parties)
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {visibility}")
    flat = np.arange(2**n_parties)
    k = np.array([bin(i).count("1") for i in flat])
    comps = np.where(k % 2 == 0, np.where((k // 2) % 2 == 0, 1.0, -1.0), 0.0) * visibility
    return CorrelationTensor(n_parties, comps, f"ghz-werner V={visibility!r}", float(visibility))


def contract(tensor: CorrelationTensor, vectors: np.ndarray) -> float:
    """Contract every tensor index with an arbitrary 2-vector (one per party).

    The vectors need not be normalized; the result is multilinear in them.
    """
    vectors = np.asarray(vectors, dtype=float)
    if vectors.shape != (tensor.n_parties, 2):
        raise ValueError(f"expected vectors of shape ({tensor.n_parties}, 2), got {vectors.shape}")
    # flat layout puts party N-1 on the leading axis
    t = tensor.components.reshape((2,) * tensor.n_parties)
    for j in reversed(range(tensor.n_parties)):
        t = np.tensordot(vectors[j], t, axes=(0, 0))
    return float(t)


def evaluate(tensor: CorrelationTensor, directions: DirectionSet | Sequence[float]) -> float:
    """Correlation E(n_1, ..., n_N) = T . (n_1 x ... x n_N) for in-plane directions."""
    if not isinstance(directions, DirectionSet):
        directions = DirectionSet(directions)
    if len(directions) != tensor.n_parties:
        raise ValueError(
            f"got {len(directions)} angles for a {tensor.n_parties}-party tensor"
        )
    return contract(tensor, directions.vectors())


def sum_squared_components(tensor: CorrelationTensor) -> float:
    return float(np.dot(tensor.components, tensor.components))


def statevector_correlation_oracle(n_parties: int, visibility: float, axes: Sequence[str]) -> float:
    """Quantum expectation of a product of Pauli x/y observables on the GHZ-Werner state.

    Builds the 2^N-dimensional GHZ vector explicitly and applies the
    observable qubit by qubit; the noise part contributes Tr(O)/2^N.
    """
    if not 2 <= n_parties <= MAX_ORACLE_PARTIES:
        raise ValueError(f"n_parties must be in [2, {MAX_ORACLE_PARTIES}], got {n_parties}")
    if len(axes) != n_parties:
        raise ValueError("need one axis per party")
    ops = []
    for a in axes:
        a = a.lower()
        if a not in PAULI:
            raise ValueError(f"axis must be 'x' or 'y', got {a!r}")
        ops.append(PAULI[a])

    dim = 2**n_parties
    ghz = np.zeros(dim, dtype=complex)
    ghz[0] = ghz[-1] = 1 / math.sqrt(2)

    psi = ghz.reshape((2,) * n_parties)
    for q, op in enumerate(ops):
        psi = np.moveaxis(np.tensordot(op, psi, axes=([1], [q])), 0, q)
    pure = np.vdot(ghz, psi.reshape(dim))

    trace = 1.0 + 0j
    for op in ops:
        trace *= np.trace(op)
    value = visibility * pure + (1 - visibility) * trace / dim
    return float(value.real)
