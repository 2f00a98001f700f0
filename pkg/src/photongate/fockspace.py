"""Truncated bosonic Fock basis and dual-rail logical encoding.

States are occupation-number tuples over N channels with a per-channel
photon cutoff (2 by default, enough for two injected photons).  Indices
are zero-based mixed-radix ranks with the first channel as the most
significant digit, so channel ordering matches the tensor-product
(kron) ordering used everywhere else in the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

Occupation = tuple[int, ...]

#: Logical qubit value -> occupation of the qubit's (upper, lower) channel pair.
_DUAL_RAIL = {0: (1, 0), 1: (0, 1)}


@dataclass(frozen=True)
class FockBasis:
    """Truncated Fock basis over `channels` bosonic modes."""

    channels: int
    cutoff: int = 2

    def __post_init__(self) -> None:
        if self.channels < 1:
            raise ValueError(f"channels must be positive, got {self.channels}")
        if self.cutoff < 1:
            raise ValueError(f"cutoff must be positive, got {self.cutoff}")

    @property
    def dimension(self) -> int:
        return (self.cutoff + 1) ** self.channels


def index_of(state: Sequence[int], basis: FockBasis) -> int:
    """Rank of an occupation vector in the canonical mixed-radix order."""
    if len(state) != basis.channels:
        raise ValueError(
            f"state has {len(state)} channels, basis has {basis.channels}"
        )
    radix = basis.cutoff + 1
    index = 0
    for ch, n in enumerate(state):
        if not 0 <= n <= basis.cutoff:
            raise ValueError(
                f"occupation {n} in channel {ch + 1} exceeds cutoff {basis.cutoff}"
            )
        index = index * radix + n
    return index


def occupation_of(index: int, basis: FockBasis) -> Occupation:
    """Inverse of :func:`index_of`."""
    if not 0 <= index < basis.dimension:
        raise ValueError(f"index {index} out of range [0, {basis.dimension})")
    radix = basis.cutoff + 1
    digits = []
    for _ in range(basis.channels):
        index, n = divmod(index, radix)
        digits.append(n)
    return tuple(reversed(digits))


def logical_to_fock(logical: tuple[int, int]) -> Occupation:
    """Map a two-qubit computational state to its 4-channel Fock state.

    Qubit 1 lives on channels (1, 2), qubit 2 on channels (3, 4); logical
    |0> puts the photon in the upper channel of the pair, |1> in the lower.
    """
    q1, q2 = logical
    if q1 not in (0, 1) or q2 not in (0, 1):
        raise ValueError(f"logical values must be bits, got {logical}")
    return _DUAL_RAIL[q1] + _DUAL_RAIL[q2]


def computational_basis_indices(basis: FockBasis) -> list[int]:
    """Indices of |00>, |01>, |10>, |11> (in that order) in a 4-channel basis."""
    if basis.channels != 4:
        raise ValueError(
            f"dual-rail two-qubit encoding needs 4 channels, basis has {basis.channels}"
        )
    return [
        index_of(logical_to_fock((q1, q2)), basis)
        for q1 in (0, 1)
        for q2 in (0, 1)
    ]
