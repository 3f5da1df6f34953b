"""Rectangular XZZX surface-code layout on the rotated (diamond) grid.

Data qubits sit on the even-parity vertices of a (2*dx-1) x (2*dz-1) grid:
the "primal" sublattice (even row, even column) holds dx*dz qubits and the
"dual" sublattice (odd, odd) holds (dx-1)*(dz-1), for
n = dx*dz + (dx-1)*(dz-1) data qubits in total.  Every odd-parity vertex is
the center of a diamond face whose stabilizer acts with X on the West/East
corners and Z on the North/South corners; faces cut by the boundary keep the
surviving corners (weight 3, or weight 2 in single-row/column codes).  One
ancilla lives at each face center, so a dx x dz patch uses
n + (n - 1) = 2*(dx*dz + (dx-1)*(dz-1)) - 1 qubits overall (441 for 5 x 25).

X_L is the column of Pauli X on the left primal column (weight dx) and Z_L
the row of Pauli Z on the top primal row (weight dz); the minimum weight of
any pure-X (pure-Z) logical equals dx (dz).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .pauli import PauliString

# Gate step each corner role couples in (N,W,E,S), and the gate kind used:
# X-corners (W/E) couple via CX with the ancilla as control, Z-corners (N/S)
# via CZ.  Role-homogeneous steps make every step a partial matching.
STEP_OF_ROLE = {"N": 1, "W": 2, "E": 3, "S": 4}
GATE_OF_ROLE = {"N": "CZ", "W": "CX", "E": "CX", "S": "CZ"}
CX_STEPS = frozenset(
    step for role, step in STEP_OF_ROLE.items() if GATE_OF_ROLE[role] == "CX"
)


class InvalidDimensionError(ValueError):
    pass


class TooLargeInstanceError(ValueError):
    pass


@dataclass(frozen=True)
class Stabilizer:
    face: tuple[int, int]           # center coordinate (row, col), odd parity
    pauli: PauliString
    ancilla: int                    # global qubit index of the ancilla
    corners: dict = field(hash=False)  # role -> data qubit index


@dataclass(frozen=True)
class CodeLayout:
    dx: int
    dz: int
    data_coords: tuple[tuple[int, int], ...]   # (row, col), sorted
    stabilizers: tuple[Stabilizer, ...]
    logical_x: PauliString
    logical_z: PauliString

    @property
    def n_data(self) -> int:
        return len(self.data_coords)

    @property
    def n_qubits(self) -> int:
        """Data plus ancilla qubits."""
        return self.n_data + len(self.stabilizers)

    def data_index(self, coord: tuple[int, int]) -> int:
        return self._coord_to_index[coord]

    @property
    def _coord_to_index(self) -> dict:
        # cached lazily on the instance despite frozen dataclass
        cache = self.__dict__.get("_c2i")
        if cache is None:
            cache = {c: i for i, c in enumerate(self.data_coords)}
            self.__dict__["_c2i"] = cache
        return cache

    def schedule(self) -> dict[int, list[tuple[int, int, str]]]:
        """Per gate step (1..4): list of (data qubit, ancilla, gate kind)."""
        steps: dict[int, list[tuple[int, int, str]]] = {1: [], 2: [], 3: [], 4: []}
        for stab in self.stabilizers:
            for role, q in stab.corners.items():
                steps[STEP_OF_ROLE[role]].append((q, stab.ancilla, GATE_OF_ROLE[role]))
        return steps

    def dump(self) -> str:
        """Deterministic text serialization for golden-file tests."""
        lines = [f"layout {self.dx}x{self.dz}  data={self.n_data}  "
                 f"stabilizers={len(self.stabilizers)}"]
        lines.append("qubits:")
        for i, (r, c) in enumerate(self.data_coords):
            lines.append(f"  q{i} at ({r},{c})")
        lines.append("stabilizers:")
        for s in self.stabilizers:
            terms = " ".join(f"{s.pauli.letter(q)}{q}" for q in s.pauli.support)
            lines.append(f"  face({s.face[0]},{s.face[1]}) anc={s.ancilla}  {terms}")
        lines.append("schedule:")
        for step, gates in sorted(self.schedule().items()):
            entries = " ".join(f"{kind}(a{a},q{q})" for q, a, kind in sorted(gates))
            lines.append(f"  step{step}: {entries}")
        lines.append(f"logical_x: {self.logical_x}")
        lines.append(f"logical_z: {self.logical_z}")
        return "\n".join(lines) + "\n"


def build_layout(dx: int, dz: int) -> CodeLayout:
    """Construct the rotated XZZX layout for distances (dx, dz)."""
    if dx < 1 or dz < 1 or dx * dz < 2:
        raise InvalidDimensionError(f"need dx,dz >= 1 and dx*dz >= 2, got {dx}x{dz}")
    height, width = 2 * dx - 1, 2 * dz - 1
    data_coords = tuple(
        (r, c)
        for r in range(height)
        for c in range(width)
        if (r + c) % 2 == 0
    )
    index = {coord: i for i, coord in enumerate(data_coords)}
    n = len(data_coords)

    stabilizers = []
    face_centers = [
        (r, c)
        for r in range(height)
        for c in range(width)
        if (r + c) % 2 == 1
    ]
    for k, (r, c) in enumerate(face_centers):
        corners = {}
        if r - 1 >= 0:
            corners["N"] = index[(r - 1, c)]
        if r + 1 < height:
            corners["S"] = index[(r + 1, c)]
        if c - 1 >= 0:
            corners["W"] = index[(r, c - 1)]
        if c + 1 < width:
            corners["E"] = index[(r, c + 1)]
        pauli = PauliString.from_letters(
            (q, "X" if role in "WE" else "Z") for role, q in corners.items()
        )
        stabilizers.append(Stabilizer((r, c), pauli, n + k, corners))

    logical_x = PauliString.from_letters((index[(2 * i, 0)], "X") for i in range(dx))
    logical_z = PauliString.from_letters((index[(0, 2 * j)], "Z") for j in range(dz))
    return CodeLayout(dx, dz, data_coords, tuple(stabilizers), logical_x, logical_z)


def verify_layout(layout: CodeLayout) -> list[str]:
    """Check every layout invariant except distances; empty list iff all pass."""
    violations = []
    n = layout.n_data
    if len(set(layout.data_coords)) != n:
        violations.append("data coordinates are not unique")
    expected = 2 * layout.dx * layout.dz - layout.dx - layout.dz
    if len(layout.stabilizers) != expected:
        violations.append(
            f"stabilizer count {len(layout.stabilizers)} != {expected}"
        )
    paulis = [s.pauli for s in layout.stabilizers]
    for (i, a), (j, b) in itertools.combinations(enumerate(paulis), 2):
        if not a.commutes(b):
            violations.append(f"stabilizers {i} and {j} anticommute")
    for i, p in enumerate(paulis):
        if not p.commutes(layout.logical_x):
            violations.append(f"stabilizer {i} anticommutes with X_L")
        if not p.commutes(layout.logical_z):
            violations.append(f"stabilizer {i} anticommutes with Z_L")
    if layout.logical_x.commutes(layout.logical_z):
        violations.append("X_L and Z_L commute")
    if layout.logical_x.weight() != layout.dx:
        violations.append(f"weight(X_L) = {layout.logical_x.weight()} != dx")
    if layout.logical_z.weight() != layout.dz:
        violations.append(f"weight(Z_L) = {layout.logical_z.weight()} != dz")
    for i, s in enumerate(layout.stabilizers):
        w = s.pauli.weight()
        if w != len(s.corners) or not 2 <= w <= 4:
            violations.append(f"stabilizer {i} has invalid weight {w}")
    # schedule: within a step, no qubit (data or ancilla) may appear twice
    for step, gates in layout.schedule().items():
        used = [q for q, a, _ in gates] + [a for q, a, _ in gates]
        if len(used) != len(set(used)):
            violations.append(f"schedule step {step} is not a partial matching")
    return violations


def min_logical_weight(layout: CodeLayout, kind: str) -> int:
    """Brute-force minimal weight of a pure-X or pure-Z logical operator.

    Searches all strings of the given letter that commute with every
    stabilizer and anticommute with the opposing logical; exhaustive, so the
    instance is capped at 15 data qubits.
    """
    if kind not in ("X", "Z"):
        raise ValueError(f"kind must be 'X' or 'Z', got {kind!r}")
    n = layout.n_data
    if n > 15:
        raise TooLargeInstanceError(f"{n} data qubits exceeds exhaustive bound 15")
    opposing = layout.logical_z if kind == "X" else layout.logical_x
    stabs = [s.pauli for s in layout.stabilizers]
    best = None
    for mask in range(1, 1 << n):
        if best is not None and mask.bit_count() >= best:
            continue
        p = PauliString(mask, 0) if kind == "X" else PauliString(0, mask)
        if p.commutes(opposing):
            continue
        if all(p.commutes(s) for s in stabs):
            best = mask.bit_count()
    if best is None:
        raise RuntimeError("no logical found; layout is inconsistent")
    return best
