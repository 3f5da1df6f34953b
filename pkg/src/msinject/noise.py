"""Biased circuit-level Pauli noise channels and their per-location assignment.

Two model variants are supported: A (CX an order of magnitude slower/noisier
than the diagonal gates, so CX and idling-during-CX run at 10p) and B (CX as
fast as CZ).  All channels derive from the base dephasing probability p and
the bias eta; eta = inf means pure dephasing.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

LOCATION_KINDS = (
    "PrepZ", "PrepX", "IdleMeas", "IdleDuringCZ", "IdleDuringCX",
    "CX", "CZ", "RotZZ", "RotZ", "RotZZZ", "MeasX",
)

_PAULI1 = ("X", "Y", "Z")


class UnknownKindError(KeyError):
    pass


@dataclass(frozen=True)
class OneQubitChannel:
    pX: float
    pY: float
    pZ: float

    @property
    def entries(self) -> dict[str, float]:
        return {"X": self.pX, "Y": self.pY, "Z": self.pZ}


@dataclass(frozen=True)
class MultiQubitChannel:
    """Probabilities for every non-identity Pauli on `arity` legs."""

    arity: int
    probs: dict[tuple[str, ...], float]

    def __post_init__(self):
        assert all(len(k) == self.arity for k in self.probs)
        assert all(any(l != "I" for l in k) for k in self.probs)

    @property
    def entries(self) -> dict[tuple[str, ...], float]:
        return self.probs


@dataclass(frozen=True)
class MeasFlip:
    pM: float


@dataclass(frozen=True)
class NoiseModel:
    variant: str          # "A" or "B"
    p: float
    eta: float            # bias; math.inf allowed

    def __post_init__(self):
        if self.variant not in ("A", "B"):
            raise ValueError(f"model variant must be 'A' or 'B', got {self.variant!r}")
        if self.p < 0:
            raise ValueError("p must be non-negative")
        if not (self.eta >= 1):
            raise ValueError("eta must be >= 1 (or inf)")

    @property
    def p_low(self) -> float:
        """Rate of each suppressed (non-dominant) error entry."""
        return 0.0 if math.isinf(self.eta) else self.p / self.eta

    def p_cx(self) -> float:
        """Total CX error probability: 20p + 120p/eta (A) or 2p + 12p/eta (B)."""
        return total_error(channel_for("CX", self))

    def p_from_pcx(self, p_cx: float) -> float:
        """Invert p_cx(p), which is linear in p."""
        scale = 10.0 if self.variant == "A" else 1.0
        slope = scale * (2.0 + (0.0 if math.isinf(self.eta) else 12.0 / self.eta))
        return p_cx / slope


def _one_qubit(pz: float, plow: float) -> OneQubitChannel:
    return OneQubitChannel(pX=plow, pY=plow, pZ=pz)


def _two_qubit(z_probs: dict[tuple[str, str], float], plow: float) -> MultiQubitChannel:
    probs = {}
    for pair in itertools.product("IXYZ", repeat=2):
        if pair == ("I", "I"):
            continue
        probs[pair] = z_probs.get(pair, plow)
    return MultiQubitChannel(2, probs)


def channel_for(kind: str, model: NoiseModel):
    """Channel assigned to a location kind under the given noise model."""
    p, low = model.p, model.p_low
    if kind in ("PrepZ", "PrepX", "IdleMeas", "IdleDuringCZ"):
        return _one_qubit(p, low)
    if kind == "IdleDuringCX":
        q = 10 * p if model.variant == "A" else p
        qlow = 0.0 if math.isinf(model.eta) else q / model.eta
        return _one_qubit(q, qlow)
    if kind == "CX":
        q = 10 * p if model.variant == "A" else p
        qlow = 0.0 if math.isinf(model.eta) else q / model.eta
        return _two_qubit(
            {("Z", "I"): q, ("I", "Z"): q / 2, ("Z", "Z"): q / 2}, qlow
        )
    if kind in ("CZ", "RotZZ"):
        return _two_qubit(
            {("Z", "I"): p, ("I", "Z"): p, ("Z", "Z"): p * p}, low
        )
    if kind == "RotZ":
        return _one_qubit(p, low)
    if kind == "RotZZZ":
        probs = {}
        for triple in itertools.product("IXYZ", repeat=3):
            if triple == ("I", "I", "I"):
                continue
            nz = triple.count("Z")
            if nz == len([l for l in triple if l != "I"]):
                probs[triple] = p ** nz
            else:
                probs[triple] = low
        return MultiQubitChannel(3, probs)
    if kind == "MeasX":
        return MeasFlip(p + low)
    raise UnknownKindError(kind)


def total_error(channel) -> float:
    """Sum of all non-trivial entry probabilities."""
    if isinstance(channel, MeasFlip):
        return channel.pM
    if isinstance(channel, OneQubitChannel):
        return channel.pX + channel.pY + channel.pZ
    return sum(channel.probs.values())


def average_gate_bias(channel: MultiQubitChannel) -> float:
    """(p_IZ + p_ZI + p_ZZ) over the sum of all other non-trivial entries."""
    if channel.arity != 2:
        raise ValueError("average gate bias is defined for two-qubit channels")
    z_keys = (("I", "Z"), ("Z", "I"), ("Z", "Z"))
    dominant = sum(channel.probs[k] for k in z_keys)
    rest = sum(v for k, v in channel.probs.items() if k not in z_keys)
    if rest == 0:
        return math.inf
    return dominant / rest


def sample(channel, rng: np.random.Generator):
    """Draw one error from a channel; a single uniform is consumed per call.

    Returns a tuple of letters for Pauli channels (identity letters included)
    or a flip bit for MeasFlip.
    """
    u = rng.random()
    if isinstance(channel, MeasFlip):
        return u < channel.pM
    if isinstance(channel, OneQubitChannel):
        outcomes = [("X",), ("Y",), ("Z",)]
        probs = [channel.pX, channel.pY, channel.pZ]
    else:
        outcomes = sorted(channel.probs)
        probs = [channel.probs[k] for k in outcomes]
    acc = 0.0
    for outcome, prob in zip(outcomes, probs):
        acc += prob
        if u < acc:
            return tuple(outcome)
    arity = 1 if isinstance(channel, OneQubitChannel) else channel.arity
    return ("I",) * arity


def dump_noise_table(model: NoiseModel) -> str:
    """Deterministic text table of every location kind's channel."""
    lines = [f"noise model {model.variant}  p={model.p:.9g}  eta={model.eta:.9g}"]
    for kind in LOCATION_KINDS:
        ch = channel_for(kind, model)
        if isinstance(ch, MeasFlip):
            lines.append(f"{kind}: flip={ch.pM:.9g}")
        elif isinstance(ch, OneQubitChannel):
            lines.append(
                f"{kind}: X={ch.pX:.9g} Y={ch.pY:.9g} Z={ch.pZ:.9g}"
            )
        else:
            terms = " ".join(
                f"{''.join(k)}={v:.9g}" for k, v in sorted(ch.probs.items()) if v
            )
            lines.append(f"{kind}: {terms}")
    return "\n".join(lines) + "\n"
