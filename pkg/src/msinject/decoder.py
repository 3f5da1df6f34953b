"""Detector graph construction and minimum-weight perfect-matching decoding.

The graph is built by enumerating every elementary fault (each channel entry
at each location, each measurement flip), propagating it noiselessly through
the compiled circuit, and recording which stage-II detectors fire together
with the logical flip it causes.  Faults rejected by stage-I post-selection
never reach the decoder and are skipped.  Faults firing more than two
detectors (Y-type components and ancilla hooks) are decomposed into their
single-qubit X/Z atoms, which is exact at the detector level because
detectors are GF(2)-linear in the injected frame; each atom must itself fire
at most two detectors or construction aborts, since that signals a schedule
bug rather than a structural channel property.

Decoding prunes pair edges that can never beat two boundary matches, splits
the flagged nodes into independent clusters, and solves each cluster exactly
(bitmask dynamic program up to 14 nodes, blossom matching above).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .engine import CompiledProgram, ErrOp, MeasOp, SparseUniforms
from .noise import NoiseModel
from .protocol import CircuitProgram


class HyperedgeError(RuntimeError):
    """An atomic fault fired more than two detectors: schedule bug."""


class InfeasibleMatchingError(RuntimeError):
    pass


class TooLargeInstanceError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    u: int
    v: int | None                 # None = boundary
    p: float
    weight: float
    logical: tuple[bool, bool]    # (flips Z_L readout, flips X_L readout)
    n_faults: int


@dataclass
class DetectorGraph:
    nodes: list                   # (stabilizer id, round)
    node_id: dict
    edges: list
    boundary: int
    undetectable: dict            # logical pair -> total probability
    annotation_conflicts: int
    n_faults: int
    _csr_full: sp.csr_matrix = field(repr=False, default=None)
    _csr_pairs: sp.csr_matrix = field(repr=False, default=None)
    _edge_map: dict = field(repr=False, default_factory=dict)
    _dist_b: np.ndarray = field(repr=False, default=None)
    _par_b: np.ndarray = field(repr=False, default=None)
    _D: np.ndarray = field(repr=False, default=None)      # all-pairs distances
    _P: np.ndarray = field(repr=False, default=None)      # path parity pairs

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def finalize(self):
        n = self.n_nodes
        rows, cols, vals = [], [], []
        for e in self.edges:
            v = self.boundary if e.v is None else e.v
            key = (min(e.u, v), max(e.u, v))
            old = self._edge_map.get(key)
            if old is None or e.weight < old[0]:
                self._edge_map[key] = (e.weight, e.logical)
        for (u, v), (w, _) in self._edge_map.items():
            rows += [u, v]
            cols += [v, u]
            vals += [w, w]
        self._csr_full = sp.csr_matrix(
            (vals, (rows, cols)), shape=(n + 1, n + 1)
        )
        keep = [i for i, r in enumerate(rows) if r != self.boundary
                and cols[i] != self.boundary]
        self._csr_pairs = sp.csr_matrix(
            ([vals[i] for i in keep],
             ([rows[i] for i in keep], [cols[i] for i in keep])),
            shape=(n + 1, n + 1),
        )
        dist, pred = csgraph.dijkstra(
            self._csr_full, indices=[self.boundary], return_predecessors=True
        )
        self._dist_b = dist[0]
        # boundary-path parities by increasing distance
        self._par_b = np.zeros(n + 1, dtype=np.uint8)
        order = np.argsort(self._dist_b)
        for v in order:
            p = pred[0][v]
            if p >= 0 and np.isfinite(self._dist_b[v]):
                self._par_b[v] = self._par_b[p] ^ self._edge_par(p, v)
        return self

    # -- path utilities ----------------------------------------------------

    def _edge_logical(self, a: int, b: int) -> tuple[bool, bool]:
        return self._edge_map[(min(a, b), max(a, b))][1]

    def _edge_par(self, a: int, b: int) -> int:
        lz, lx = self._edge_map[(min(a, b), max(a, b))][1]
        return int(lz) | (int(lx) << 1)

    def _ensure_apsp(self):
        """All-pairs shortest distances and path parities (boundary excluded)."""
        if self._D is not None:
            return
        n = self.n_nodes
        if n > 8000:
            raise TooLargeInstanceError(
                f"{n} detector nodes exceeds the all-pairs decoding bound"
            )
        dist, pred = csgraph.dijkstra(
            self._csr_pairs, indices=np.arange(n), return_predecessors=True
        )
        dist = dist[:, :n]
        pred = pred[:, :n]
        epar = np.zeros((n + 1, n + 1), dtype=np.uint8)
        for (a, b), (_, (lz, lx)) in self._edge_map.items():
            v = int(lz) | (int(lx) << 1)
            epar[a, b] = v
            epar[b, a] = v
        valid = pred >= 0
        predc = np.where(valid, pred, 0)
        cols = np.broadcast_to(np.arange(n), (n, n))
        epar_step = epar[predc, cols]
        par = np.zeros((n, n), dtype=np.uint8)
        done = np.zeros((n, n), dtype=bool)
        np.fill_diagonal(done, True)
        while True:
            done_pred = np.take_along_axis(done, predc, axis=1)
            newly = valid & ~done & done_pred
            if not newly.any():
                break
            par_pred = np.take_along_axis(par, predc, axis=1)
            np.copyto(par, par_pred ^ epar_step, where=newly)
            done |= newly
        self._D = dist.astype(np.float32)
        self._P = par

    def boundary_logical(self, u: int) -> tuple[bool, bool]:
        p = int(self._par_b[u])
        return bool(p & 1), bool(p >> 1)

    def pair_logical(self, u: int, v: int) -> tuple[bool, bool]:
        p = int(self._P[u, v])
        return bool(p & 1), bool(p >> 1)

    def dump(self) -> str:
        lines = [
            f"detector graph: {self.n_nodes} nodes, {len(self.edges)} edges, "
            f"{self.n_faults} faults, {self.annotation_conflicts} conflicts"
        ]
        def node_name(i):
            s, r = self.nodes[i]
            return f"(s{s},r{r})"
        for e in sorted(self.edges, key=lambda e: (e.u, -1 if e.v is None else e.v)):
            vname = "boundary" if e.v is None else node_name(e.v)
            ann = ("Z" if e.logical[0] else "") + ("X" if e.logical[1] else "")
            lines.append(
                f"{node_name(e.u)} -- {vname}  w={e.weight:.12g} "
                f"p={e.p:.12g} log={ann or '-'} nf={e.n_faults}"
            )
        for pair, p in sorted(self.undetectable.items()):
            ann = ("Z" if pair[0] else "") + ("X" if pair[1] else "")
            lines.append(f"undetectable log={ann} p={p:.12g}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple                  # ((u, v | None), ...)
    logical: tuple[bool, bool]
    weight: float


# ---------------------------------------------------------------------------
# fault enumeration


@dataclass(frozen=True)
class FaultRecord:
    key: tuple
    prob: float
    events: tuple[int, ...]
    logical: tuple[bool, bool]
    accepted: bool
    stage1_bits: int              # acceptance detector bits (for oracles)


def _acceptance_bits(compiled: CompiledProgram, meas: np.ndarray) -> np.ndarray:
    """Stage-I violation bits per row packed as integers."""
    cols = []
    if len(compiled.fixed_cols):
        cols.append(meas[:, compiled.fixed_cols])
    if len(compiled._cons_a):
        cols.append(meas[:, compiled._cons_a] ^ meas[:, compiled._cons_b])
    if not cols:
        return np.zeros(meas.shape[0], dtype=object)
    bits = np.concatenate(cols, axis=1)
    out = np.zeros(meas.shape[0], dtype=object)
    for j in range(bits.shape[1]):
        out |= bits[:, j].astype(object) << j
    return out


def enumerate_faults(compiled: CompiledProgram, chunk: int = 2048):
    """All elementary faults with propagated events, logicals, acceptance."""
    theta = compiled.program.theta
    cos2 = math.cos(2 * theta) ** 2
    sin2 = math.sin(2 * theta) ** 2
    # coin branches only matter for faults injected at or before the rotation
    rot_ops = [op for op in compiled.ops if op.__class__.__name__ == "RotOp"]
    specs = []
    for op in compiled.ops:
        if isinstance(op, ErrOp):
            for g in range(op.n):
                for k in range(len(op.table.cum)):
                    if op.table.prob(k) <= 0:
                        continue
                    before_rot = any(op.pos < r.pos for r in rot_ops)
                    coins = ((0, cos2), (1, sin2)) if before_rot else ((0, 1.0),)
                    for coin, cph in coins:
                        specs.append(("err", op, g, k, coin, op.table.prob(k) * cph))
        elif isinstance(op, MeasOp) and op.flip_slot >= 0 and op.pM > 0:
            for idx in range(len(op.anc)):
                specs.append(("meas", op, idx, None, 0, op.pM))
    records = []
    for lo in range(0, len(specs), chunk):
        batch_specs = specs[lo:lo + chunk]
        overrides: dict[int, list] = {}
        for row, spec in enumerate(batch_specs):
            tag, op, a, b, coin, prob = spec
            if tag == "err":
                overrides.setdefault(op.slot + a, []).append(
                    (row, op.table.entry_uniform(b))
                )
            else:
                overrides.setdefault(op.flip_slot + a, []).append((row, 0.0))
            if coin:
                for r in rot_ops:
                    overrides.setdefault(r.coin_slot, []).append((row, 0.0))
        U = SparseUniforms(len(batch_specs), overrides)
        meas, x, z = compiled.run(U)
        acc = compiled.acceptance(meas)
        det = compiled.detectors(meas)
        az, ax = compiled.logical_flips(x, z)
        s1bits = _acceptance_bits(compiled, meas)
        for row, spec in enumerate(batch_specs):
            tag, op, a, b, coin, prob = spec
            events = tuple(int(i) for i in np.nonzero(det[row])[0])
            key = (tag, op.pos, a, b, coin)
            records.append(
                FaultRecord(key, prob, events, (bool(az[row]), bool(ax[row])),
                            bool(acc[row]), int(s1bits[row]))
            )
    return records


def _atom_components(op: ErrOp, g: int, k: int):
    """Single-qubit X/Z atoms of a channel entry (Y splits into X and Z)."""
    atoms = []
    for leg, letter in enumerate(op.table.entries[k]):
        q = int(op.qs[g, leg])
        if letter in ("X", "Y"):
            atoms.append((q, "X"))
        if letter in ("Z", "Y"):
            atoms.append((q, "Z"))
    return atoms


def _atom_events(compiled: CompiledProgram, needed):
    """Propagate single-letter frame injections; key -> (events, logical)."""
    keys = sorted(needed)
    out = {}
    rot_ops = [op for op in compiled.ops if op.__class__.__name__ == "RotOp"]
    for lo in range(0, len(keys), 1024):
        batch = keys[lo:lo + 1024]
        injections: dict[int, list] = {}
        overrides: dict[int, list] = {}
        for row, (pos, q, letter, coin) in enumerate(batch):
            xqs = [q] if letter == "X" else []
            zqs = [q] if letter == "Z" else []
            injections.setdefault(pos, []).append((row, xqs, zqs))
            if coin:
                for r in rot_ops:
                    overrides.setdefault(r.coin_slot, []).append((row, 0.0))
        U = SparseUniforms(len(batch), overrides)
        meas, x, z = compiled.run(U, injections=injections)
        det = compiled.detectors(meas)
        az, ax = compiled.logical_flips(x, z)
        for row, key in enumerate(batch):
            events = tuple(int(i) for i in np.nonzero(det[row])[0])
            out[key] = (events, (bool(az[row]), bool(ax[row])))
    return out


def build_detector_graph(
    program: CircuitProgram, model: NoiseModel, compiled: CompiledProgram = None
) -> DetectorGraph:
    if compiled is None:
        compiled = CompiledProgram(program, model)
    records = enumerate_faults(compiled)
    ops_by_pos = {op.pos: op for op in compiled.ops}

    merged: dict = {}     # event key -> [prob, {logical: prob}, n]
    undetectable: dict = {}

    def add(events, prob, logical):
        if len(events) == 0:
            if logical != (False, False):
                undetectable[logical] = undetectable.get(logical, 0.0) + prob
            return
        key = events if len(events) == 2 else (events[0], None)
        slot = merged.setdefault(key, [0.0, {}, 0])
        slot[0] += prob
        slot[1][logical] = slot[1].get(logical, 0.0) + prob
        slot[2] += 1

    # first pass: fan out >2-event faults into atoms
    needed = set()
    deferred = []
    for rec in records:
        if not rec.accepted:
            continue
        if len(rec.events) <= 2:
            add(rec.events, rec.prob, rec.logical)
        else:
            tag, pos, g, k, coin = rec.key
            if tag != "err":
                raise HyperedgeError(
                    f"measurement fault fired {len(rec.events)} detectors"
                )
            atoms = [(pos, q, letter, coin)
                     for q, letter in _atom_components(ops_by_pos[pos], g, k)]
            deferred.append((rec, atoms))
            needed.update(atoms)
    atom_map = _atom_events(compiled, needed) if needed else {}
    for rec, atoms in deferred:
        for key in atoms:
            events, logical = atom_map[key]
            if len(events) > 2:
                raise HyperedgeError(
                    f"atomic fault {key} fired {len(events)} detectors"
                )
            add(events, rec.prob, logical)

    edges = []
    conflicts = 0
    for key, (p, pairs, nf) in sorted(
        merged.items(), key=lambda kv: (kv[0][0], -1 if kv[0][1] is None else kv[0][1])
    ):
        if len(pairs) > 1:
            conflicts += 1
        logical = max(pairs.items(), key=lambda kv: (kv[1], kv[0]))[0]
        u, v = key
        edges.append(Edge(u, v, p, -math.log(p), logical, nf))
    graph = DetectorGraph(
        nodes=list(compiled.nodes),
        node_id=dict(compiled.node_id),
        edges=edges,
        boundary=compiled.n_nodes,
        undetectable=undetectable,
        annotation_conflicts=conflicts,
        n_faults=len(records),
    )
    return graph.finalize()


# ---------------------------------------------------------------------------
# matching


def _min_weight_pairing(k, pair_w, bnd_w):
    """Exact minimum-weight pairing of k nodes; each may match the boundary.

    With finite boundary costs the problem becomes a maximum-gain matching
    (gain of a pair = what it saves over two boundary matches), solved by
    exact dominant-edge peeling plus a small-core search.  Infinite boundary
    costs fall back to bitmask DP or blossom matching with shadow nodes.
    """
    if k == 0:
        return 0.0, []
    if all(math.isfinite(b) for b in bnd_w):
        return _max_gain_pairing(k, pair_w, bnd_w)
    if k <= 14:
        INF = math.inf
        memo = {0: (0.0, None)}

        def solve(mask):
            hit = memo.get(mask)
            if hit is not None:
                return hit[0]
            i = (mask & -mask).bit_length() - 1
            rest = mask ^ (1 << i)
            best, choice = bnd_w[i] + solve(rest), (i, None)
            m = rest
            while m:
                j = (m & -m).bit_length() - 1
                m ^= 1 << j
                w = pair_w.get((i, j), INF)
                if w < INF:
                    cand = w + solve(rest ^ (1 << j))
                    if cand < best:
                        best, choice = cand, (i, j)
            memo[mask] = (best, choice)
            return best

        total = solve((1 << k) - 1)
        if math.isinf(total):
            raise InfeasibleMatchingError("no finite-weight pairing")
        pairs = []
        mask = (1 << k) - 1
        while mask:
            _, choice = memo[mask]
            i, j = choice
            pairs.append((i, j))
            mask ^= 1 << i
            if j is not None:
                mask ^= 1 << j
        return total, pairs

    import networkx as nx

    G = nx.Graph()
    big = sum(w for w in bnd_w if math.isfinite(w)) + sum(
        w for w in pair_w.values()
    ) + 1.0
    for i in range(k):
        w = bnd_w[i] if math.isfinite(bnd_w[i]) else big * 2
        G.add_edge(i, k + i, weight=w)
        for j in range(i + 1, k):
            G.add_edge(k + i, k + j, weight=0.0)
    for (i, j), w in pair_w.items():
        G.add_edge(i, j, weight=w)
    match = nx.min_weight_matching(G)
    pairs = []
    total = 0.0
    for a, b in match:
        a, b = min(a, b), max(a, b)
        if a < k <= b:
            if b - k != a:
                # shadow matched to a different shadow's real node: impossible
                raise InfeasibleMatchingError("blossom produced invalid pairing")
            total += bnd_w[a]
            pairs.append((a, None))
        elif a < k and b < k:
            total += pair_w[(a, b)]
            pairs.append((a, b))
    if math.isinf(total):
        raise InfeasibleMatchingError("no finite-weight pairing")
    return total, pairs


def _max_gain_pairing(k, pair_w, bnd_w):
    """Exact pairing via dominant-edge peeling on the boundary-gain matching.

    An edge (u,v) is forced into some optimal solution when no alternative
    assignment of u and v can beat it: for every other pair (x,y),
    w(u,v) + min(w(x,y), b_x + b_y) <= w(u,x) + w(v,y), together with the
    one-sided variants w(u,v) + b_x <= w(u,x) + b_v (exchange argument over
    all ways the optimum could otherwise cover u and v).  Peeled endpoints
    only remove adversary cases, so disjoint dominant edges peel together.
    The remaining ambiguous core is solved exactly by bitmask DP (<= 16
    nodes) or blossom matching on the gain graph.
    """
    INF = math.inf
    W = np.full((k, k), INF)
    np.fill_diagonal(W, 0.0)
    for (i, j), w in pair_w.items():
        W[i, j] = W[j, i] = w
    b = np.asarray(bnd_w, dtype=float)
    G = np.maximum(b[:, None] + b[None, :] - W, 0.0)
    np.fill_diagonal(G, 0.0)
    chosen = []
    alive = np.ones(k, dtype=bool)
    while True:
        idx = np.flatnonzero(alive)
        m = len(idx)
        if m < 2:
            break
        Wc = W[np.ix_(idx, idx)]
        bc = b[idx]
        if not (G[np.ix_(idx, idx)] > 0).any():
            break
        # reconnection cost of any (x, y) pair: direct edge or two boundaries
        R = np.minimum(Wc, bc[:, None] + bc[None, :])
        peeled = []
        used = np.zeros(m, dtype=bool)
        Wsearch = Wc + np.where(np.eye(m, dtype=bool), INF, 0)
        nearest = np.argmin(Wsearch, axis=1)
        cand = sorted(
            {
                (min(a, int(nearest[a])), max(a, int(nearest[a])))
                for a in range(m)
                if math.isfinite(Wsearch[a, nearest[a]])
            },
            key=lambda ab: Wc[ab],
        )
        for a, c in cand:
            if used[a] or used[c]:
                continue
            w_uv = Wc[a, c]
            if w_uv >= bc[a] + bc[c]:
                continue
            others = np.ones(m, dtype=bool)
            others[[a, c]] = False
            ou = np.flatnonzero(others)
            if len(ou):
                wa = Wc[a, ou]
                wc = Wc[c, ou]
                # one-sided exchanges
                if (w_uv + bc[ou] - wa - bc[c] > 1e-12).any():
                    continue
                if (w_uv + bc[ou] - wc - bc[a] > 1e-12).any():
                    continue
                # pair exchanges with the best reconnection of (x, y)
                delta = R[np.ix_(ou, ou)] - wa[:, None] - wc[None, :]
                if (w_uv + delta > 1e-12).any():
                    continue
            peeled.append((a, c))
            used[a] = used[c] = True
        if not peeled:
            break
        for a, c in peeled:
            chosen.append((int(idx[a]), int(idx[c])))
            alive[idx[a]] = alive[idx[c]] = False
    # ambiguous core
    core = [int(i) for i in np.flatnonzero(alive)
            if any(G[i, j] > 0 and alive[j] for j in range(k))]
    if core:
        m = len(core)
        local = {g: l for l, g in enumerate(core)}
        if m <= 16:
            memo = {0: (0.0, None)}

            def solve(mask):
                hit = memo.get(mask)
                if hit is not None:
                    return hit[0]
                i = (mask & -mask).bit_length() - 1
                rest = mask ^ (1 << i)
                best_v, choice = solve(rest), (i, None)
                mm = rest
                while mm:
                    j = (mm & -mm).bit_length() - 1
                    mm ^= 1 << j
                    gij = G[core[i], core[j]]
                    if gij > 0:
                        cand = gij + solve(rest ^ (1 << j))
                        if cand > best_v:
                            best_v, choice = cand, (i, j)
                memo[mask] = (best_v, choice)
                return best_v

            solve((1 << m) - 1)
            mask = (1 << m) - 1
            while mask:
                _, choice = memo[mask]
                i, j = choice
                mask ^= 1 << i
                if j is not None:
                    chosen.append((core[i], core[j]))
                    mask ^= 1 << j
        else:
            import networkx as nx

            Gx = nx.Graph()
            for li in range(m):
                for lj in range(li + 1, m):
                    g = G[core[li], core[lj]]
                    if g > 0:
                        Gx.add_edge(li, lj, weight=g)
            for a, b in nx.max_weight_matching(Gx):
                chosen.append((core[a], core[b]))
    matched = {i for pair in chosen for i in pair}
    pairs = [(i, j) for i, j in chosen]
    pairs += [(i, None) for i in range(k) if i not in matched]
    total = 0.0
    for i, j in pairs:
        total += pair_w[(min(i, j), max(i, j))] if j is not None else bnd_w[i]
    return total, pairs


def decode(graph: DetectorGraph, flagged) -> MatchResult:
    """Exact minimum-weight perfect matching of flagged detector nodes."""
    flagged = sorted(flagged)
    if not flagged:
        return MatchResult((), (False, False), 0.0)
    k = len(flagged)
    d_b = graph._dist_b[flagged]
    if k == 1:
        u = flagged[0]
        if not math.isfinite(d_b[0]):
            raise InfeasibleMatchingError("lone node cannot reach the boundary")
        return MatchResult(((u, None),), graph.boundary_logical(u), float(d_b[0]))
    graph._ensure_apsp()
    idx = np.asarray(flagged)
    D = graph._D[np.ix_(idx, idx)].astype(np.float64)
    if k == 2:
        u, v = flagged
        w = D[0, 1]
        bb = d_b[0] + d_b[1]
        if w < bb:
            return MatchResult(((u, v),), graph.pair_logical(u, v), float(w))
        if not math.isfinite(bb):
            raise InfeasibleMatchingError("no finite pairing for two nodes")
        ez0, ex0 = graph.boundary_logical(u)
        ez1, ex1 = graph.boundary_logical(v)
        return MatchResult(
            ((u, None), (v, None)), (ez0 ^ ez1, ex0 ^ ex1), float(bb)
        )

    # pair edges that could beat two boundary matches; ties go to the boundary
    bb = d_b[:, None] + d_b[None, :]
    cand = np.triu(np.isfinite(D) & (D < bb), 1)

    parent = list(range(k))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    pair_list = np.argwhere(cand)
    for i, j in pair_list:
        parent[find(int(i))] = find(int(j))
    clusters: dict[int, list[int]] = {}
    for i in range(k):
        clusters.setdefault(find(i), []).append(i)

    total = 0.0
    pairs = []
    lz = lx = False
    for members in clusters.values():
        m = len(members)
        if m == 1:
            i = members[0]
            if not math.isfinite(d_b[i]):
                raise InfeasibleMatchingError("isolated node cannot reach boundary")
            u = flagged[i]
            ez, ex = graph.boundary_logical(u)
            pairs.append((u, None))
            total += float(d_b[i])
            lz ^= ez
            lx ^= ex
            continue
        local = {g: l for l, g in enumerate(members)}
        pw = {}
        for li in range(m):
            for lj in range(li + 1, m):
                gi, gj = members[li], members[lj]
                if cand[gi, gj] or cand[gj, gi]:
                    pw[(li, lj)] = float(D[gi, gj])
        bw = [float(d_b[i]) for i in members]
        w, cluster_pairs = _min_weight_pairing(m, pw, bw)
        total += w
        for li, lj in cluster_pairs:
            u = flagged[members[li]]
            if lj is None:
                ez, ex = graph.boundary_logical(u)
                pairs.append((u, None))
            else:
                v = flagged[members[lj]]
                ez, ex = graph.pair_logical(u, v)
                pairs.append((u, v))
            lz ^= ez
            lx ^= ex
    return MatchResult(tuple(pairs), (lz, lx), total)


def exhaustive_decode(graph: DetectorGraph, flagged) -> MatchResult:
    """Independent oracle: enumerate every pairing, no pruning or clustering."""
    flagged = sorted(flagged)
    k = len(flagged)
    if k > 12:
        raise TooLargeInstanceError("exhaustive matching capped at 12 nodes")
    if k == 0:
        return MatchResult((), (False, False), 0.0)
    graph._ensure_apsp()
    d_b = graph._dist_b[flagged]

    best = [math.inf, None]

    def recurse(remaining, acc_w, acc_pairs):
        if acc_w >= best[0]:
            return
        if not remaining:
            best[0] = acc_w
            best[1] = list(acc_pairs)
            return
        i = remaining[0]
        rest = remaining[1:]
        recurse(rest, acc_w + d_b[i], acc_pairs + [(i, None)])
        for pos, j in enumerate(rest):
            w = graph._D[flagged[i], flagged[j]]
            if math.isfinite(w):
                recurse(
                    rest[:pos] + rest[pos + 1:],
                    acc_w + float(w),
                    acc_pairs + [(i, j)],
                )

    recurse(list(range(k)), 0.0, [])
    if best[1] is None:
        raise InfeasibleMatchingError("no pairing found")
    lz = lx = False
    pairs = []
    for i, j in best[1]:
        u = flagged[i]
        if j is None:
            ez, ex = graph.boundary_logical(u)
            pairs.append((u, None))
        else:
            v = flagged[j]
            ez, ex = graph.pair_logical(u, v)
            pairs.append((u, v))
        lz ^= ez
        lx ^= ex
    return MatchResult(tuple(pairs), (lz, lx), best[0])


# ---------------------------------------------------------------------------
# maximum-likelihood oracle


class MLTable:
    """Exhaustive coset-probability table over fault subsets (small instances)."""

    def __init__(self, compiled: CompiledProgram, max_faults: int = 24):
        records = [r for r in enumerate_faults(compiled)]
        if len(records) > max_faults:
            raise TooLargeInstanceError(
                f"{len(records)} faults exceeds the exhaustive bound {max_faults}"
            )
        self.n_nodes = compiled.n_nodes
        # group faults by twirl-coin branch; faults after the rotation are
        # branch-independent and belong to both
        theta = compiled.program.theta
        cos2 = math.cos(2 * theta) ** 2
        has_coin = any(r.key[4] for r in records)
        branched = {k.key[:4] for k in records if k.key[4] == 1}
        branch_faults = {0: [r for r in records if r.key[4] == 0], 1: []}
        if has_coin:
            branch_faults[1] = [
                r for r in records
                if r.key[4] == 1 or r.key[:4] not in branched
            ]
        def raw_prob(f):
            if f.key[4] == 1:
                return f.prob / (1 - cos2)
            if f.key[:4] in branched:
                return f.prob / cos2
            return f.prob

        self.table: dict[int, dict] = {}
        for coin, faults in branch_faults.items():
            if coin == 1 and not has_coin:
                continue
            prior = 1.0 if not has_coin else (cos2 if coin == 0 else 1 - cos2)
            base = [f for f in faults]
            probs = [min(raw_prob(f), 1.0) for f in base]
            m = len(base)
            for mask in range(1 << m):
                weight = prior
                ev = 0
                s1 = 0
                lz = lx = False
                for i in range(m):
                    f = base[i]
                    if mask >> i & 1:
                        weight *= probs[i]
                        for e in f.events:
                            ev ^= 1 << e
                        s1 ^= f.stage1_bits
                        lz ^= f.logical[0]
                        lx ^= f.logical[1]
                    else:
                        weight *= 1 - probs[i]
                if s1 != 0:
                    continue  # rejected by stage-I post-selection
                slot = self.table.setdefault(ev, {})
                slot[(lz, lx)] = slot.get((lz, lx), 0.0) + weight

    def decode(self, flagged) -> tuple[bool, bool]:
        ev = 0
        for f in flagged:
            ev ^= 1 << f
        probs = self.table.get(ev)
        if not probs:
            return (False, False)
        return max(probs.items(), key=lambda kv: (kv[1], kv[0]))[0]


def ml_decode_small(
    program: CircuitProgram, model: NoiseModel, flagged, compiled=None,
) -> tuple[bool, bool]:
    """Maximum-likelihood logical flip pair by exhaustive subset enumeration."""
    if compiled is None:
        compiled = CompiledProgram(program, model)
    cache = getattr(compiled, "_ml_table", None)
    if cache is None:
        cache = MLTable(compiled)
        compiled._ml_table = cache
    return cache.decode(flagged)
