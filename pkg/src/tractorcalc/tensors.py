"""Pointwise tensor values with positional slots, variance, and conformal weight.

Slots are positional; callers document their meaning.  Variance markers are
``'u'`` (upper) and ``'l'`` (lower).  The integer weight tracks conformal
density weight through the algebra: products add weights, and raising or
lowering adds the weight of the metric object actually contracted in (so the
weight-(+2) conformal metric shifts by +2, its weight-(-2) inverse by -2,
while an ordinary weight-0 metric leaves the weight alone).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import ArgumentError, SingularityError, VarianceError

_PARITY = {}


def _perm_sign(perm):
    if perm not in _PARITY:
        sign, seen = 1, list(perm)
        for i in range(len(seen)):
            while seen[i] != i:
                j = seen[i]
                seen[i], seen[j] = seen[j], seen[i]
                sign = -sign
        _PARITY[perm] = sign
    return _PARITY[perm]


@dataclass(frozen=True)
class TensorValue:
    """Dense tensor at a point: components, slot variances, conformal weight."""

    dim: int
    slots: tuple
    weight: int
    components: np.ndarray

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=np.float64)
        slots = tuple(self.slots)
        if any(s not in ("u", "l") for s in slots):
            raise ArgumentError(f"variance markers must be 'u' or 'l', got {slots}")
        want = (self.dim,) * len(slots)
        if comps.shape != want:
            raise ArgumentError(f"components shape {comps.shape} != {want}")
        comps = comps.copy()
        comps.flags.writeable = False
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "slots", slots)

    @property
    def rank(self) -> int:
        return len(self.slots)

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.components))) if self.components.size else 0.0

    def __add__(self, other: "TensorValue") -> "TensorValue":
        if (self.dim, self.slots, self.weight) != (other.dim, other.slots, other.weight):
            raise ArgumentError("tensor addition needs matching dim, slots and weight")
        return TensorValue(self.dim, self.slots, self.weight,
                           self.components + other.components)

    def __sub__(self, other: "TensorValue") -> "TensorValue":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "TensorValue":
        return TensorValue(self.dim, self.slots, self.weight, self.components * float(scalar))

    __rmul__ = __mul__


def tensor_product(a: TensorValue, b: TensorValue) -> TensorValue:
    """Outer product; weights add."""
    if a.dim != b.dim:
        raise ArgumentError("dimension mismatch")
    comps = np.multiply.outer(a.components, b.components)
    return TensorValue(a.dim, a.slots + b.slots, a.weight + b.weight, comps)


def contract(t: TensorValue, slot_i: int, slot_j: int) -> TensorValue:
    """Trace over one upper and one lower slot; weight is unchanged."""
    if slot_i == slot_j or not (0 <= slot_i < t.rank and 0 <= slot_j < t.rank):
        raise ArgumentError(f"bad slot pair ({slot_i}, {slot_j}) for rank {t.rank}")
    if t.slots[slot_i] == t.slots[slot_j]:
        raise VarianceError("contraction requires one upper and one lower slot; "
                            "raise or lower explicitly first")
    comps = np.trace(t.components, axis1=slot_i, axis2=slot_j)
    slots = tuple(s for k, s in enumerate(t.slots) if k not in (slot_i, slot_j))
    return TensorValue(t.dim, slots, t.weight, comps)


def symmetrize(t: TensorValue, slots, mode: str = "sym") -> TensorValue:
    """Average over permutations of the named slots (signed for antisym)."""
    slots = tuple(sorted(slots))
    if len(set(slots)) != len(slots) or any(not 0 <= s < t.rank for s in slots):
        raise ArgumentError(f"bad slot set {slots}")
    if len({t.slots[s] for s in slots}) > 1:
        raise VarianceError("cannot (anti)symmetrize slots of mixed variance")
    if mode not in ("sym", "antisym"):
        raise ArgumentError(f"mode must be 'sym' or 'antisym', got {mode!r}")
    acc = np.zeros_like(t.components)
    count = 0
    for perm in permutations(range(len(slots))):
        axes = list(range(t.rank))
        for pos, p in zip(slots, perm):
            axes[pos] = slots[p]
        term = np.transpose(t.components, axes)
        if mode == "antisym":
            term = term * _perm_sign(perm)
        acc = acc + term
        count += 1
    return TensorValue(t.dim, t.slots, t.weight, acc / count)


def raise_lower(t: TensorValue, slot: int, metric: TensorValue,
                inverse: TensorValue) -> TensorValue:
    """Flip the variance of one slot with the supplied metric pair.

    Lowering contracts with ``metric`` and adds its weight; raising contracts
    with ``inverse`` and adds its weight.
    """
    if not 0 <= slot < t.rank:
        raise ArgumentError(f"slot {slot} out of range")
    if metric.slots != ("l", "l") or inverse.slots != ("u", "u"):
        raise ArgumentError("metric must be rank-2 lower, inverse rank-2 upper")
    g = metric.components
    if abs(np.linalg.det(g)) < 1e-300:
        raise SingularityError("singular metric")
    if t.slots[slot] == "u":
        partner, new_var, dweight = metric, "l", metric.weight
    else:
        partner, new_var, dweight = inverse, "u", inverse.weight
    comps = np.tensordot(t.components, partner.components, axes=([slot], [0]))
    comps = np.moveaxis(comps, -1, slot)
    slots = t.slots[:slot] + (new_var,) + t.slots[slot + 1:]
    return TensorValue(t.dim, slots, t.weight + dweight, comps)


def trace_free_part(t: TensorValue, metric: TensorValue,
                    inverse: TensorValue) -> TensorValue:
    """t minus its metric trace part; defined for rank-2 lower tensors."""
    if t.slots != ("l", "l"):
        raise ArgumentError("trace_free_part expects a rank-2 lower tensor")
    tr = float(np.einsum("ab,ab->", inverse.components, t.components))
    comps = t.components - (tr / t.dim) * metric.components
    return TensorValue(t.dim, t.slots, t.weight, comps)


def delta(dim: int) -> TensorValue:
    """The identity endomorphism delta^a_b at weight 0."""
    return TensorValue(dim, ("u", "l"), 0, np.eye(dim))
