"""Assembly of the two-stage injection circuit for all three scheme variants.

Stage I prepares a small code in the magic state: initialize region-I data
qubits, apply the k-qubit Z rotation to the grey set, then measure the small
code's stabilizers for 2 rounds (3 for the three-qubit scheme), accepting
only if every fixed stabilizer reads +1 in round 1 and consecutive rounds
agree.  Stage II initializes region II, measures the full code's stabilizers
for dm noisy rounds, and appends one noiseless round to terminate time-like
matching edges.

A round is four gate timesteps (couplings in N, W, E, S order, i.e. CZ, CX,
CX, CZ) plus a measure-and-reset timestep.  Ancilla preparation noise is
attached to the start of each noisy round; stage-start data preparation
timesteps are zero-duration, so idle noise is applied only during gate and
measurement timesteps.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field

from .lattice import (
    CX_STEPS,
    GATE_OF_ROLE,
    STEP_OF_ROLE,
    CodeLayout,
    InvalidDimensionError,
    build_layout,
)
from .pauli import Gf2Space, PauliString


@dataclass(frozen=True)
class SchemeVariant:
    name: str
    grey_size: int
    stage1_rounds: int
    rotation_kind: str  # noise-channel location kind


TWO_QUBIT_ZZ = SchemeVariant("zz", 2, 2, "RotZZ")
STANDARD_Z = SchemeVariant("standard", 1, 2, "RotZ")
THREE_QUBIT_ZZZ = SchemeVariant("zzz", 3, 3, "RotZZZ")
VARIANTS = {v.name: v for v in (TWO_QUBIT_ZZ, STANDARD_Z, THREE_QUBIT_ZZZ)}


class VariantMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class InitPattern:
    """ZeroKet ('Z') / PlusKet ('X') assignment plus the ordered grey set."""

    assignment: dict       # data qubit index -> 'Z' | 'X'
    grey: tuple[int, ...]

    def letter(self, q: int) -> str:
        return self.assignment[q]


@dataclass(frozen=True)
class Location:
    kind: str                    # PrepZ PrepX PrepAncX RotZ CX CZ MR Meas Idle
    qubits: tuple[int, ...]
    meta: tuple = ()

    def __str__(self) -> str:
        qs = ",".join(map(str, self.qubits))
        if self.meta:
            return f"{self.kind}({qs};{','.join(map(str, self.meta))})"
        return f"{self.kind}({qs})"


@dataclass(frozen=True)
class Timestep:
    label: str
    noisy: bool
    locations: tuple[Location, ...]


@dataclass(frozen=True)
class MeasuredStab:
    """A stabilizer as measured in some stage: restriction plus gate corners."""

    local_id: int
    ancilla: int
    pauli: PauliString
    corners: dict = field(hash=False)  # role -> data qubit index


@dataclass(frozen=True)
class Stage1Program:
    variant: SchemeVariant
    theta: float
    layout: CodeLayout
    init: InitPattern
    stabs: tuple[MeasuredStab, ...]
    fixed: frozenset[int]
    timesteps: tuple[Timestep, ...]
    rounds: int

    def dump(self) -> str:
        return _dump_timesteps(
            f"stage1 {self.variant.name} {self.layout.dx}x{self.layout.dz} "
            f"theta={self.theta:.9g} rounds={self.rounds} "
            f"fixed={sorted(self.fixed)}",
            self.timesteps,
        )


@dataclass(frozen=True)
class CircuitProgram:
    """Full two-stage program over the grown code's qubit index space."""

    variant: SchemeVariant
    theta: float
    layout: CodeLayout                    # dx2 x dz2
    stage1_layout: CodeLayout             # dx1 x dz1 (its own index space)
    region1_data: tuple[int, ...]         # big-space indices of region-I data
    init1: InitPattern                    # big-space indices
    init2: InitPattern                    # region-II assignment, big indices
    stage1_stabs: tuple[MeasuredStab, ...]
    stage1_fixed: frozenset[int]
    stage1_rounds: int
    stage2_stabs: tuple[MeasuredStab, ...]
    stage2_refs: tuple                    # per stab: ('ref', ids) | ('gauge',)
    dm: int
    pattern: str
    timesteps: tuple[Timestep, ...]
    skip_stage1_detection: bool = False

    @property
    def n_qubits(self) -> int:
        return self.layout.n_qubits

    def dump(self) -> str:
        head = (
            f"program {self.variant.name} {self.stage1_layout.dx}x"
            f"{self.stage1_layout.dz}->{self.layout.dx}x{self.layout.dz} "
            f"dm={self.dm} theta={self.theta:.9g} pattern={self.pattern}"
        )
        refs = " ".join(
            f"s{i}:{'+'.join(map(str, r[1])) or 'abs' if r[0] == 'ref' else 'gauge'}"
            for i, r in enumerate(self.stage2_refs)
        )
        return _dump_timesteps(head, self.timesteps) + f"round1-refs: {refs}\n"


def _dump_timesteps(header: str, timesteps) -> str:
    lines = [header]
    for t in timesteps:
        tag = "" if t.noisy else " [noiseless]"
        lines.append(f"{t.label}{tag}: " + " ".join(map(str, t.locations)))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# fixed stabilizers


def grey_invariant_generators(grey: tuple[int, ...]) -> list[PauliString]:
    """Generators of the grey-block stabilizers surviving exp(-i theta Z^k).

    Enumerated rather than hand-coded: X-type products on the grey set that
    commute with the rotation axis Z^(x)k (and hence stabilize the rotated
    |+...+> block for generic theta).
    """
    if not grey:
        return []
    axis = PauliString.from_letters((g, "Z") for g in grey)
    space = Gf2Space()
    gens = []
    nbits = max(grey) + 1
    for size in range(1, len(grey) + 1):
        for subset in itertools.combinations(grey, size):
            cand = PauliString.from_letters((g, "X") for g in subset)
            if cand.commutes(axis) and space.add(cand.to_symplectic(nbits)):
                gens.append(cand)
    return gens


def _init_space(n: int, init: InitPattern) -> Gf2Space:
    space = Gf2Space()
    for g in grey_invariant_generators(init.grey):
        space.add(g.to_symplectic(n))
    for q in sorted(init.assignment):
        if q in init.grey:
            continue
        space.add(PauliString.from_letters([(q, init.assignment[q])]).to_symplectic(n))
    return space


def compute_fixed_stabilizers(
    layout: CodeLayout, init: InitPattern, variant: SchemeVariant
) -> frozenset[int]:
    """Stabilizer ids whose round-1 outcome is deterministically +1."""
    if len(init.grey) != variant.grey_size:
        raise VariantMismatchError("grey set size does not match the scheme variant")
    space = _init_space(layout.n_data, init)
    n = layout.n_data
    return frozenset(
        i
        for i, s in enumerate(layout.stabilizers)
        if space.contains(s.pauli.to_symplectic(n))
    )


# ---------------------------------------------------------------------------
# initialization-pattern solver


def solve_init_pattern(
    layout: CodeLayout,
    assignable: list[int],
    forced: dict,
    faces: list,              # (ok, wants: {assignable qubit -> letter})
    prefer: str,
) -> dict:
    """Assign 'Z'/'X' to ``assignable`` qubits maximizing satisfied faces.

    A face counts when its indicator is true and every wanted letter matches.
    Exact transfer-matrix DP along the shorter lattice axis; ties broken by
    preferring ``prefer`` at the lexicographically first free qubit in sweep
    order.  Falls back to the structured pattern (PlusKet on free primal
    qubits, ZeroKet on free dual qubits) when the state space is infeasible.
    """
    free = [q for q in assignable if q not in forced]
    axis = 1 if layout.dx <= layout.dz else 0

    def col_of(q):
        y, x = layout.data_coords[q]
        return x if axis == 1 else y

    def within(q):
        y, x = layout.data_coords[q]
        return y if axis == 1 else x

    ncols = (2 * layout.dz - 1) if axis == 1 else (2 * layout.dx - 1)
    col_free = [sorted((q for q in free if col_of(q) == x), key=within)
                for x in range(ncols)]
    max_bits = max(
        (len(a) + len(b) + len(c)
         for a, b, c in zip(col_free, col_free[1:], col_free[2:])),
        default=sum(map(len, col_free)),
    )
    if max_bits > 14:
        out = dict(forced)
        for q in free:
            y, _ = layout.data_coords[q]
            out[q] = "X" if y % 2 == 0 else "Z"
        return out

    # viable faces: indicator true and forced letters already matching
    live = []
    for ok, wants in faces:
        if not ok:
            continue
        if any(q in forced and forced[q] != w for q, w in wants.items()):
            continue
        live.append({q: w for q, w in wants.items() if q not in forced})
    always = sum(1 for w in live if not w)
    live = [w for w in live if w]
    for wants in live:
        assert all(q in free for q in wants), "face wants a non-assignable qubit"

    # a face bucketed at x is scored with the environment of columns
    # x-1, x, x+1, so place it one left of its rightmost wanted column
    faces_at = [[] for _ in range(ncols)]
    for wants in live:
        faces_at[max(0, max(col_of(q) for q in wants) - 1)].append(
            sorted(wants.items())
        )

    letters = ("X", "Z") if prefer == "X" else ("Z", "X")

    def col_assignments(x):
        if x < 0 or x >= ncols:
            return ((),)
        qs = col_free[x]
        return tuple(
            tuple(zip(qs, combo))
            for combo in itertools.product(letters, repeat=len(qs))
        )

    def score(x, *cols):
        env = {}
        for a in cols:
            env.update(a)
        return sum(
            all(env.get(q) == w for q, w in wants) for wants in faces_at[x]
        )

    @functools.lru_cache(maxsize=None)
    def vtg(x, a_prev, a_cur):
        """Best score from faces at columns >= x, given columns x-1 and x."""
        if x >= ncols:
            return 0
        best = None
        for a_next in col_assignments(x + 1):
            v = score(x, a_prev, a_cur, a_next) + vtg(x + 1, a_cur, a_next)
            if best is None or v > best:
                best = v
        return best

    assignment = dict(forced)
    a_prev = ()
    # choose column 0 first, then extend greedily in preference order
    target = max(vtg(0, (), a0) for a0 in col_assignments(0))
    a_cur = next(a0 for a0 in col_assignments(0) if vtg(0, (), a0) == target)
    assignment.update(a_cur)
    remaining = target
    for x in range(ncols - 1):
        pick = next(
            a_next
            for a_next in col_assignments(x + 1)
            if score(x, a_prev, a_cur, a_next) + vtg(x + 1, a_cur, a_next)
            == remaining
        )
        remaining -= score(x, a_prev, a_cur, pick)
        assignment.update(pick)
        a_prev, a_cur = a_cur, pick
    vtg.cache_clear()
    assert remaining == (score(ncols - 1, a_prev, a_cur, ()) if ncols else 0)
    return assignment


def count_satisfied_faces(assignment: dict, faces: list) -> int:
    """Objective value of an assignment (used by tests as the DP oracle)."""
    total = 0
    for ok, wants in faces:
        if ok and all(assignment.get(q) == w for q, w in wants.items()):
            total += 1
    return total


# ---------------------------------------------------------------------------
# circuit assembly


def _grey_qubits(layout: CodeLayout, k: int) -> tuple[int, ...]:
    return tuple(layout.data_index((0, 2 * j)) for j in range(k))


def _stage1_init(layout: CodeLayout, variant: SchemeVariant) -> InitPattern:
    """Region-I pattern: grey |+>, logical-extension constraints, DP on the rest."""
    grey = _grey_qubits(layout, variant.grey_size)
    forced = {}
    for j in range(layout.dz):
        q = layout.data_index((0, 2 * j))
        if q not in grey:
            forced[q] = "Z"
    for i in range(1, layout.dx):
        forced[layout.data_index((2 * i, 0))] = "X"
    assignable = [q for q in range(layout.n_data) if q not in grey]
    grey_space = Gf2Space()
    nbits = layout.n_data
    for g in grey_invariant_generators(grey):
        grey_space.add(g.to_symplectic(nbits))
    grey_mask = 0
    for g in grey:
        grey_mask |= 1 << g
    faces = []
    for s in layout.stabilizers:
        grey_part = s.pauli.restricted(grey_mask)
        ok = grey_space.contains(grey_part.to_symplectic(nbits))
        wants = {
            q: s.pauli.letter(q) for q in s.pauli.support if q not in grey
        }
        faces.append((ok, wants))
    assignment = solve_init_pattern(layout, assignable, forced, faces, prefer="X")
    for g in grey:
        assignment[g] = "X"
    return InitPattern(assignment, grey)


def _round_timesteps(
    stabs,
    active_data,
    label_prefix: str,
    stage: int,
    round_id: int,
    noisy: bool,
    measure_kind: str = "MR",
):
    """Four gate timesteps plus measurement for one syndrome-extraction round."""
    steps = []
    if noisy:
        steps.append(
            Timestep(
                f"{label_prefix}.prep_anc",
                True,
                tuple(
                    Location("PrepAncX", (s.ancilla,)) for s in stabs
                ),
            )
        )
    ancillas = [s.ancilla for s in stabs]
    for step in (1, 2, 3, 4):
        locs = []
        used = set()
        for s in stabs:
            for role, q in s.corners.items():
                if STEP_OF_ROLE[role] != step:
                    continue
                kind = GATE_OF_ROLE[role]
                # CX has the ancilla as control; CZ is symmetric
                locs.append(Location(kind, (s.ancilla, q)))
                used.update((s.ancilla, q))
        if not locs:
            continue  # no face has this corner role (1xN codes): no such step
        has_cx = any(l.kind == "CX" for l in locs)
        idle_kind = "IdleDuringCX" if has_cx else "IdleDuringCZ"
        for q in itertools.chain(active_data, ancillas):
            if q not in used:
                locs.append(Location("Idle", (q,), (idle_kind,)))
        steps.append(
            Timestep(f"{label_prefix}.g{step}", noisy, tuple(locs))
        )
    meas = [
        Location(measure_kind, (s.ancilla,), (stage, round_id, s.local_id))
        for s in stabs
    ]
    idle = [Location("Idle", (q,), ("IdleMeas",)) for q in active_data]
    steps.append(Timestep(f"{label_prefix}.mr", noisy, tuple(meas + idle)))
    return steps


def _stage1_timesteps(
    variant: SchemeVariant,
    theta: float,
    init: InitPattern,
    stabs,
    data: list[int],
):
    steps = []
    preps = tuple(
        Location("PrepX" if init.assignment[q] == "X" else "PrepZ", (q,))
        for q in data
    )
    steps.append(Timestep("init1", True, preps))
    rot = [Location("RotZ", init.grey, (theta, variant.rotation_kind))]
    for q in data:
        if q not in init.grey:
            rot.append(Location("Idle", (q,), ("IdleDuringCZ",)))
    steps.append(Timestep("rot", True, tuple(rot)))
    for r in range(1, variant.stage1_rounds + 1):
        steps.extend(
            _round_timesteps(stabs, data, f"s1r{r}", 1, r, noisy=True)
        )
    return steps


def build_stage1(
    variant: SchemeVariant, dx1: int, dz1: int, theta: float
) -> Stage1Program:
    """Stage-I program: init pattern, rotation, and 2 (or 3) syndrome rounds."""
    if isinstance(variant, str):
        variant = VARIANTS[variant]
    if dz1 < variant.grey_size:
        raise VariantMismatchError(
            f"{variant.name} needs dz1 >= {variant.grey_size}, got {dz1}"
        )
    if not 0 < theta < 1.5707963267948966:
        raise ValueError("theta must lie in (0, pi/2)")
    layout = build_layout(dx1, dz1)
    init = _stage1_init(layout, variant)
    fixed = compute_fixed_stabilizers(layout, init, variant)
    stabs = tuple(
        MeasuredStab(i, s.ancilla, s.pauli, dict(s.corners))
        for i, s in enumerate(layout.stabilizers)
    )
    steps = _stage1_timesteps(variant, theta, init, stabs, list(range(layout.n_data)))
    return Stage1Program(
        variant, theta, layout, init, stabs, fixed, tuple(steps),
        variant.stage1_rounds,
    )


def _stage2_init(
    big: CodeLayout,
    region1: set[int],
    stage1_group: Gf2Space,
    pattern: str,
) -> dict:
    """Region-II assignment: logical extension forced, DP on the rest."""
    n = big.n_data
    region2 = [q for q in range(n) if q not in region1]
    forced = {}
    for j in range(big.dz):
        q = big.data_index((0, 2 * j))
        if q in region1:
            continue
        forced[q] = "Z"
    for i in range(big.dx):
        q = big.data_index((2 * i, 0))
        if q in region1 or q in forced:
            continue
        forced[q] = "X"
    region1_mask = 0
    for q in region1:
        region1_mask |= 1 << q
    faces = []
    for s in big.stabilizers:
        part1 = s.pauli.restricted(region1_mask)
        ok = stage1_group.contains(part1.to_symplectic(n))
        wants = {
            q: s.pauli.letter(q) for q in s.pauli.support if q not in region1
        }
        faces.append((ok, wants))
    prefer = "X" if pattern == "default" else "Z"
    return solve_init_pattern(big, region2, forced, faces, prefer=prefer)


def build_memory(dx: int, dz: int, dm: int) -> CircuitProgram:
    """Plain memory experiment: all-plus preparation, dm+1 rounds, no stage I.

    Used as a minimal decoding instance (maximum-likelihood oracle studies);
    post-selection is disabled since there is no injection stage.
    """
    layout = build_layout(dx, dz)
    n = layout.n_data
    init = InitPattern({q: "X" for q in range(n)}, ())
    stabs = tuple(
        MeasuredStab(i, s.ancilla, s.pauli, dict(s.corners))
        for i, s in enumerate(layout.stabilizers)
    )
    space = _init_space(n, init)
    refs = tuple(
        ("ref", ()) if space.contains(s.pauli.to_symplectic(n)) else ("gauge",)
        for s in layout.stabilizers
    )
    steps = [
        Timestep(
            "init2", True,
            tuple(Location("PrepX", (q,)) for q in range(n)),
        )
    ]
    all_data = list(range(n))
    for r in range(1, dm + 1):
        steps.extend(_round_timesteps(stabs, all_data, f"s2r{r}", 2, r, True))
    steps.extend(
        _round_timesteps(stabs, all_data, f"s2r{dm + 1}", 2, dm + 1,
                         noisy=False, measure_kind="Meas")
    )
    return CircuitProgram(
        variant=TWO_QUBIT_ZZ,
        theta=0.3926990816987241,
        layout=layout,
        stage1_layout=layout,
        region1_data=(),
        init1=InitPattern({}, ()),
        init2=init,
        stage1_stabs=(),
        stage1_fixed=frozenset(),
        stage1_rounds=0,
        stage2_stabs=stabs,
        stage2_refs=refs,
        dm=dm,
        pattern="default",
        timesteps=tuple(steps),
        skip_stage1_detection=True,
    )


def build_stage2(
    stage1: Stage1Program,
    dx2: int,
    dz2: int,
    dm: int,
    pattern: str = "default",
    skip_stage1_detection: bool = False,
) -> CircuitProgram:
    """Grow the stage-I code to dx2 x dz2 and append dm+1 measurement rounds."""
    if pattern not in ("default", "alternate"):
        raise ValueError(f"unknown pattern {pattern!r}")
    small = stage1.layout
    if dx2 < small.dx or dz2 < small.dz:
        raise InvalidDimensionError("stage-II dimensions must not shrink the code")
    if dm < 1:
        raise InvalidDimensionError("dm must be >= 1")
    big = build_layout(dx2, dz2)
    n = big.n_data

    # embed region I: same (row, col) coordinates, new indices
    small_to_big = {
        i: big.data_index(coord) for i, coord in enumerate(small.data_coords)
    }
    region1 = set(small_to_big.values())
    face_to_big = {s.face: s for s in big.stabilizers}
    big_anc_of_face = {s.face: s.ancilla for s in big.stabilizers}

    stage1_stabs = []
    stage1_group = Gf2Space()
    for s in small.stabilizers:
        pauli = PauliString.from_letters(
            (small_to_big[q], s.pauli.letter(q)) for q in s.pauli.support
        )
        corners = {role: small_to_big[q] for role, q in s.corners.items()}
        stage1_stabs.append(
            MeasuredStab(len(stage1_stabs), big_anc_of_face[s.face], pauli, corners)
        )
        stage1_group.add(pauli.to_symplectic(n))

    init1_assignment = {
        small_to_big[q]: letter for q, letter in stage1.init.assignment.items()
    }
    grey = tuple(small_to_big[g] for g in stage1.init.grey)
    init1 = InitPattern(init1_assignment, grey)

    init2_assignment = _stage2_init(big, region1, stage1_group, pattern)
    init2 = InitPattern(init2_assignment, ())

    # stage-II round-1 references: S in span(stage-I stabs, region-II init) ?
    ref_space = Gf2Space()
    m1 = len(stage1_stabs)
    for s in stage1_stabs:
        ref_space.add(s.pauli.to_symplectic(n))
    for q in sorted(init2_assignment):
        ref_space.add(
            PauliString.from_letters([(q, init2_assignment[q])]).to_symplectic(n)
        )
    refs = []
    stage2_stabs = []
    for i, s in enumerate(big.stabilizers):
        stage2_stabs.append(MeasuredStab(i, s.ancilla, s.pauli, dict(s.corners)))
        combo = ref_space.decompose(s.pauli.to_symplectic(n))
        if combo is None:
            refs.append(("gauge",))
        else:
            refs.append(("ref", tuple(k for k in combo if k < m1)))

    steps = _stage1_timesteps(
        stage1.variant, stage1.theta, init1, stage1_stabs,
        sorted(region1),
    )
    preps2 = tuple(
        Location("PrepX" if init2_assignment[q] == "X" else "PrepZ", (q,))
        for q in sorted(init2_assignment)
    )
    steps.append(Timestep("init2", True, preps2))
    all_data = list(range(n))
    for r in range(1, dm + 1):
        steps.extend(
            _round_timesteps(stage2_stabs, all_data, f"s2r{r}", 2, r, noisy=True)
        )
    steps.extend(
        _round_timesteps(
            stage2_stabs, all_data, f"s2r{dm + 1}", 2, dm + 1,
            noisy=False, measure_kind="Meas",
        )
    )
    return CircuitProgram(
        variant=stage1.variant,
        theta=stage1.theta,
        layout=big,
        stage1_layout=small,
        region1_data=tuple(sorted(region1)),
        init1=init1,
        init2=init2,
        stage1_stabs=tuple(stage1_stabs),
        stage1_fixed=stage1.fixed,
        stage1_rounds=stage1.rounds,
        stage2_stabs=tuple(stage2_stabs),
        stage2_refs=tuple(refs),
        dm=dm,
        pattern=pattern,
        timesteps=tuple(steps),
        skip_stage1_detection=skip_stage1_detection,
    )
