"""Sparse Pauli operators and GF(2) symplectic linear algebra.

Paulis are stored as a pair of integer bitmasks (x, z) over a fixed qubit
index space; bit q of ``x`` (``z``) set means an X (Z) component on qubit q,
both set means Y.  Global phases are not tracked: multiplication is bitwise
XOR, which is all the stabilizer bookkeeping here needs.
"""

from __future__ import annotations

from dataclasses import dataclass


_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}


@dataclass(frozen=True)
class PauliString:
    """Phaseless n-qubit Pauli operator as (x, z) bitmasks."""

    x: int = 0
    z: int = 0

    @classmethod
    def from_letters(cls, entries) -> "PauliString":
        """Build from an iterable of (qubit, letter) pairs, letter in I/X/Y/Z."""
        x = z = 0
        for q, letter in entries:
            bx, bz = _LETTER_BITS[letter]
            if bx:
                x ^= 1 << q
            if bz:
                z ^= 1 << q
        return cls(x, z)

    def letter(self, q: int) -> str:
        return _BITS_LETTER[((self.x >> q) & 1, (self.z >> q) & 1)]

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(_bits(self.x | self.z)))

    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def commutes(self, other: "PauliString") -> bool:
        return ((self.x & other.z).bit_count() + (self.z & other.x).bit_count()) % 2 == 0

    def __mul__(self, other: "PauliString") -> "PauliString":
        return PauliString(self.x ^ other.x, self.z ^ other.z)

    def restricted(self, qubit_mask: int) -> "PauliString":
        """Restriction to the qubits selected by ``qubit_mask``."""
        return PauliString(self.x & qubit_mask, self.z & qubit_mask)

    def to_symplectic(self, n: int) -> int:
        """Pack as a 2n-bit integer (x half | z half) for GF(2) algebra."""
        return (self.x << n) | self.z

    @classmethod
    def from_symplectic(cls, vec: int, n: int) -> "PauliString":
        mask = (1 << n) - 1
        return cls(vec >> n, vec & mask)

    def __str__(self) -> str:
        if not (self.x | self.z):
            return "I"
        return " ".join(f"{self.letter(q)}{q}" for q in self.support)


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class Gf2Space:
    """Row space over GF(2) with membership tests and combination recovery.

    Vectors are arbitrary-width Python ints.  ``add`` returns True when the
    vector enlarged the space; ``decompose`` returns the index set of added
    generators whose XOR equals the query, or None if the query lies outside.
    """

    def __init__(self) -> None:
        # list of (reduced_row, combo_mask_over_added_generators)
        self._rows: list[tuple[int, int]] = []
        self._count = 0

    def __len__(self) -> int:
        return self._count

    @property
    def rank(self) -> int:
        return len(self._rows)

    def _reduce(self, vec: int) -> tuple[int, int]:
        combo = 0
        for row, row_combo in self._rows:
            if (vec ^ row) < vec:
                vec ^= row
                combo ^= row_combo
        return vec, combo

    def add(self, vec: int) -> bool:
        tag = 1 << self._count
        self._count += 1
        residual, combo = self._reduce(vec)
        if residual == 0:
            return False
        self._rows.append((residual, combo ^ tag))
        self._rows.sort(key=lambda rc: -rc[0])
        return True

    def contains(self, vec: int) -> bool:
        residual, _ = self._reduce(vec)
        return residual == 0

    def decompose(self, vec: int) -> list[int] | None:
        """Indices (in insertion order) of generators XOR-ing to ``vec``."""
        residual, combo = self._reduce(vec)
        if residual != 0:
            return None
        return sorted(_bits(combo))
