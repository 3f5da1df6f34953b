"""Vectorized Pauli-frame execution of compiled injection programs.

A program is compiled once per noise model into a flat list of batch
operations over boolean frame arrays of shape (batch, n_qubits).  Every
stochastic decision consumes exactly one uniform from a fixed slot, so a
trial's entire randomness is one row of a (batch, n_slots) matrix and results
are independent of how trials are partitioned into batches or workers.

Noiseless propagation of a specific elementary fault is obtained by running
with an all-ones uniform matrix and either picking the fault's channel entry
through a crafted uniform value or injecting a frame directly before an
operation; the detector-graph builder relies on this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .noise import MeasFlip, MultiQubitChannel, NoiseModel, OneQubitChannel, channel_for
from .protocol import CircuitProgram

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}

# fixed emission order of error groups within a timestep
_ERR_ORDER = (
    "CX", "CZ", "ROT", "PrepZ", "PrepX", "PrepAncX",
    "IdleDuringCX", "IdleDuringCZ", "IdleMeas",
)


@dataclass(frozen=True)
class ChannelTable:
    """Cumulative probabilities and per-entry leg flags of a Pauli channel."""

    arity: int
    entries: tuple            # entry keys, e.g. ('Z','I')
    cum: np.ndarray           # shape (K,), cumulative probabilities
    flags: np.ndarray         # shape (K, arity, 2) bool: (x, z) per leg

    def entry_uniform(self, k: int) -> float:
        """A uniform value that selects entry k (its interval's midpoint)."""
        lo = 0.0 if k == 0 else self.cum[k - 1]
        hi = self.cum[k]
        if hi <= lo:
            raise ValueError("entry has zero probability")
        return (lo + hi) / 2

    def prob(self, k: int) -> float:
        lo = 0.0 if k == 0 else self.cum[k - 1]
        return float(self.cum[k] - lo)


def _table(channel) -> ChannelTable:
    if isinstance(channel, OneQubitChannel):
        items = sorted(channel.entries.items())
        entries = tuple((k,) for k, _ in items)
        probs = [v for _, v in items]
        arity = 1
    elif isinstance(channel, MultiQubitChannel):
        items = sorted(channel.probs.items())
        entries = tuple(k for k, _ in items)
        probs = [v for _, v in items]
        arity = channel.arity
    else:
        raise TypeError(channel)
    flags = np.zeros((len(entries), arity, 2), dtype=bool)
    for k, entry in enumerate(entries):
        for leg, letter in enumerate(entry):
            bx, bz = _LETTER_BITS[letter]
            flags[k, leg, 0] = bool(bx)
            flags[k, leg, 1] = bool(bz)
    return ChannelTable(arity, entries, np.cumsum(np.asarray(probs)), flags)


@dataclass
class ErrOp:
    pos: int
    slot: int                 # first slot; one slot per target group
    table: ChannelTable
    qs: np.ndarray            # (n_targets, arity) qubit indices
    kind: str                 # location kind, for fault bookkeeping

    @property
    def n(self) -> int:
        return len(self.qs)


@dataclass
class GateOp:
    pos: int
    gate: str                 # 'CX' | 'CZ'
    a: np.ndarray             # control / first leg
    b: np.ndarray


@dataclass
class RotOp:
    pos: int
    qs: tuple[int, ...]
    coin_slot: int
    sin2: float


@dataclass
class MeasOp:
    pos: int
    anc: np.ndarray
    cols: np.ndarray
    flip_slot: int            # -1 when noiseless
    pM: float
    reset: bool


class CompiledProgram:
    """A CircuitProgram bound to a noise model, ready for batch execution."""

    def __init__(self, program: CircuitProgram, model: NoiseModel):
        self.program = program
        self.model = model
        self.n_qubits = program.n_qubits
        self.ops: list = []
        self.n_slots = 0
        self.meas_col: dict = {}
        self.rot_positions: list[int] = []
        self._compile()
        self._index_measurements()

    # -- compilation ------------------------------------------------------

    def _new_slots(self, count: int) -> int:
        start = self.n_slots
        self.n_slots += count
        return start

    def _emit_err(self, kind: str, targets: list[tuple[int, ...]]):
        if not targets:
            return
        channel_kind = kind if kind != "PrepAncX" else "PrepX"
        channel = channel_for(channel_kind, self.model)
        table = _table(channel)
        qs = np.asarray(targets, dtype=np.int32)
        self.ops.append(
            ErrOp(len(self.ops), self._new_slots(len(targets)), table, qs, kind)
        )

    def _compile(self):
        self.stage2_op_start = None
        for step in self.program.timesteps:
            if self.stage2_op_start is None and (
                step.label == "init2" or step.label.startswith("s2")
            ):
                self.stage2_op_start = len(self.ops)
            groups: dict[str, list] = {k: [] for k in _ERR_ORDER}
            gates: dict[str, list] = {"CX": [], "CZ": []}
            rot = None
            meas: list = []
            meas_kind = None
            for loc in step.locations:
                if loc.kind in ("CX", "CZ"):
                    gates[loc.kind].append(loc.qubits)
                    if step.noisy:
                        groups[loc.kind].append(loc.qubits)
                elif loc.kind == "RotZ":
                    rot = loc
                    if step.noisy:
                        groups["ROT"].append(loc.qubits)
                elif loc.kind in ("PrepZ", "PrepX", "PrepAncX"):
                    if step.noisy:
                        groups[loc.kind].append(loc.qubits)
                elif loc.kind == "Idle":
                    if step.noisy:
                        groups[loc.meta[0]].append(loc.qubits)
                elif loc.kind in ("MR", "Meas"):
                    meas.append(loc)
                    meas_kind = loc.kind
                else:
                    raise ValueError(f"unknown location kind {loc.kind}")
            for kind in _ERR_ORDER:
                if kind == "ROT":
                    if groups["ROT"]:
                        rot_kind = rot.meta[1]
                        self._emit_err(rot_kind, groups["ROT"])
                elif groups[kind]:
                    self._emit_err(kind, groups[kind])
            for gate in ("CX", "CZ"):
                if gates[gate]:
                    arr = np.asarray(gates[gate], dtype=np.int32)
                    self.ops.append(GateOp(len(self.ops), gate, arr[:, 0], arr[:, 1]))
            if rot is not None:
                theta = rot.meta[0]
                sin2 = math.sin(2 * theta) ** 2
                coin = self._new_slots(1)
                self.rot_positions.append(len(self.ops))
                self.ops.append(RotOp(len(self.ops), tuple(rot.qubits), coin, sin2))
            if meas:
                anc = np.asarray([m.qubits[0] for m in meas], dtype=np.int32)
                cols = np.arange(len(meas), dtype=np.int32) + len(self.meas_col)
                for m, c in zip(meas, cols):
                    self.meas_col[m.meta] = int(c)
                if step.noisy:
                    flip_slot = self._new_slots(len(meas))
                    pM = channel_for("MeasX", self.model).pM
                else:
                    flip_slot, pM = -1, 0.0
                self.ops.append(
                    MeasOp(len(self.ops), anc, cols, flip_slot, pM,
                           reset=(meas_kind == "MR"))
                )
        if self.stage2_op_start is None:
            self.stage2_op_start = len(self.ops)

    def _index_measurements(self):
        p = self.program
        self.n_meas = len(self.meas_col)
        self.m1 = len(p.stage1_stabs)
        self.m2 = len(p.stage2_stabs)
        self.stage1_cols = np.asarray(
            [[self.meas_col[(1, r, s)] for s in range(self.m1)]
             for r in range(1, p.stage1_rounds + 1)],
            dtype=np.int32,
        ).reshape(p.stage1_rounds, self.m1)
        self.stage2_cols = np.asarray(
            [[self.meas_col[(2, r, s)] for s in range(self.m2)]
             for r in range(1, p.dm + 2)],
            dtype=np.int32,
        )
        # detector nodes: (stab, round) with gauge round-1 nodes omitted
        self.nodes: list[tuple[int, int]] = []
        for r in range(1, p.dm + 2):
            for s in range(self.m2):
                if r == 1 and p.stage2_refs[s][0] == "gauge":
                    continue
                self.nodes.append((s, r))
        self.node_id = {node: i for i, node in enumerate(self.nodes)}
        self.n_nodes = len(self.nodes)
        # index arrays for the vectorized detector computation
        pairs_a, pairs_b, pair_nodes = [], [], []
        self._r1_nodes = []
        for i, (s, r) in enumerate(self.nodes):
            if r >= 2:
                pairs_a.append(self.stage2_cols[r - 1, s])
                pairs_b.append(self.stage2_cols[r - 2, s])
                pair_nodes.append(i)
            else:
                refs = p.stage2_refs[s][1]
                cols = [self.stage2_cols[0, s]]
                cols += [self.stage1_cols[p.stage1_rounds - 1, k] for k in refs]
                self._r1_nodes.append((i, np.asarray(cols, dtype=np.int32)))
        self._pair_a = np.asarray(pairs_a, dtype=np.int32)
        self._pair_b = np.asarray(pairs_b, dtype=np.int32)
        self._pair_nodes = np.asarray(pair_nodes, dtype=np.int32)
        # acceptance tables
        self.fixed_cols = np.asarray(
            [self.stage1_cols[0, s] for s in sorted(p.stage1_fixed)], dtype=np.int32
        )
        cons_a, cons_b = [], []
        for r in range(1, p.stage1_rounds):
            for s in range(self.m1):
                cons_a.append(self.stage1_cols[r - 1, s])
                cons_b.append(self.stage1_cols[r, s])
        self._cons_a = np.asarray(cons_a, dtype=np.int32)
        self._cons_b = np.asarray(cons_b, dtype=np.int32)
        # logical supports
        lx = self.program.layout.logical_x
        lz = self.program.layout.logical_z
        self._xl_qubits = np.asarray(lx.support, dtype=np.int32)
        self._zl_qubits = np.asarray(lz.support, dtype=np.int32)

    # -- execution --------------------------------------------------------

    def run(self, uniforms, injections=None):
        """Execute a batch.

        ``uniforms``: a (batch, n_slots) float64 matrix, a SparseUniforms, or
        an int for a noise-free batch of that size.  ``injections``: optional
        mapping op position -> list of (row, x_qubits, z_qubits) frame flips
        applied just before that op executes.
        """
        if isinstance(uniforms, (int, np.integer)):
            uniforms = SparseUniforms(int(uniforms))
        if isinstance(uniforms, SparseUniforms):
            batch = uniforms.batch
            get = uniforms.get
        else:
            batch = uniforms.shape[0]

            def get(start, count):
                return uniforms[:, start:start + count]

        x = np.zeros((batch, self.n_qubits), dtype=bool)
        z = np.zeros((batch, self.n_qubits), dtype=bool)
        meas = np.zeros((batch, self.n_meas), dtype=bool)

        for op in self.ops:
            if injections is not None and op.pos in injections:
                for row, xqs, zqs in injections[op.pos]:
                    for q in xqs:
                        x[row, q] ^= True
                    for q in zqs:
                        z[row, q] ^= True
            if isinstance(op, ErrOp):
                u = get(op.slot, op.n)
                if u is not None:
                    self._apply_channel(x, z, op, u)
            elif isinstance(op, GateOp):
                if op.gate == "CX":
                    # control a, target b: X copies c->t, Z copies t->c
                    x[:, op.b] ^= x[:, op.a]
                    z[:, op.a] ^= z[:, op.b]
                else:
                    z[:, op.a] ^= x[:, op.b]
                    z[:, op.b] ^= x[:, op.a]
            elif isinstance(op, RotOp):
                anti = np.zeros(batch, dtype=bool)
                for q in op.qs:
                    anti ^= x[:, q]
                u = get(op.coin_slot, 1)
                if u is not None:
                    fire = anti & (u[:, 0] < op.sin2)
                    for q in op.qs:
                        z[fire, q] ^= True
            elif isinstance(op, MeasOp):
                flips = z[:, op.anc].copy()
                if op.flip_slot >= 0:
                    u = get(op.flip_slot, len(op.anc))
                    if u is not None:
                        flips ^= u < op.pM
                meas[:, op.cols] = flips
                if op.reset:
                    x[:, op.anc] = False
                    z[:, op.anc] = False
            else:
                raise TypeError(op)
        return meas, x, z

    @staticmethod
    def _apply_channel(x, z, op: ErrOp, u):
        K = len(op.table.cum)
        outcome = np.searchsorted(op.table.cum, u, side="right")
        rows, cols = np.nonzero(outcome < K)
        if len(rows) == 0:
            return
        hit = outcome[rows, cols]
        for k in np.unique(hit):
            sel = hit == k
            r, c = rows[sel], cols[sel]
            for leg in range(op.table.arity):
                qcol = op.qs[c, leg]
                if op.table.flags[k, leg, 0]:
                    x[r, qcol] ^= True
                if op.table.flags[k, leg, 1]:
                    z[r, qcol] ^= True

    # -- derived observables ----------------------------------------------

    def acceptance(self, meas) -> np.ndarray:
        """Stage-I post-selection verdict per trial (True = accepted)."""
        if self.program.skip_stage1_detection:
            return np.ones(meas.shape[0], dtype=bool)
        reject = np.zeros(meas.shape[0], dtype=bool)
        if len(self.fixed_cols):
            reject |= meas[:, self.fixed_cols].any(axis=1)
        if len(self._cons_a):
            reject |= (meas[:, self._cons_a] ^ meas[:, self._cons_b]).any(axis=1)
        return ~reject

    def detectors(self, meas) -> np.ndarray:
        det = np.zeros((meas.shape[0], self.n_nodes), dtype=bool)
        if len(self._pair_nodes):
            det[:, self._pair_nodes] = meas[:, self._pair_a] ^ meas[:, self._pair_b]
        for i, cols in self._r1_nodes:
            v = meas[:, cols[0]].copy()
            for c in cols[1:]:
                v ^= meas[:, c]
            det[:, i] = v
        return det

    def logical_flips(self, x, z):
        """(anticommutes Z_L, anticommutes X_L) parity pair per trial."""
        a_z = x[:, self._zl_qubits].sum(axis=1) % 2 != 0
        a_x = z[:, self._xl_qubits].sum(axis=1) % 2 != 0
        return a_z, a_x


class SparseUniforms:
    """Virtual all-ones uniform matrix with a few overridden cells.

    ``get`` returns None when no override falls in the requested slot range,
    which callers treat as "nothing fires" (a uniform of 1.0 never selects a
    channel entry, measurement flip, or twirl coin).
    """

    def __init__(self, batch: int, overrides: dict | None = None):
        self.batch = batch
        # slot -> list of (row, value)
        self.overrides = overrides or {}

    def get(self, start: int, count: int):
        hits = [
            (slot, rv)
            for slot, rv in self.overrides.items()
            if start <= slot < start + count
        ]
        if not hits:
            return None
        arr = np.ones((self.batch, count), dtype=np.float64)
        for slot, pairs in hits:
            for row, val in pairs:
                arr[row, slot - start] = val
        return arr


def trial_uniforms(seed: int, point: int, trials, n_slots: int) -> np.ndarray:
    """Counter-based per-trial uniform rows: Philox keyed by (seed, point).

    Each trial owns an independent stream, so results never depend on how
    trials are grouped into batches or distributed over workers.
    """
    trials = list(trials)
    out = np.empty((len(trials), n_slots), dtype=np.float64)
    for i, t in enumerate(trials):
        bg = np.random.Philox(key=[seed & (2**64 - 1), point & (2**64 - 1)],
                              counter=[t, 0, 0, 0])
        out[i] = np.random.Generator(bg).random(n_slots)
    return out
