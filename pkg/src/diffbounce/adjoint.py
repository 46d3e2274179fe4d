"""Scalar reverse-mode automatic differentiation on a flat tape.

The simulator is tiny (eight state scalars), so gradients are computed by
recording every elementary operation on a per-rollout tape and sweeping it
once in reverse.  Branch decisions (contact tests, approach guards, clamps)
are made on plain float values and are not recorded; gradients are therefore
piecewise, conditioned on the branch taken.

Generic numeric code can mix `DiffValue`s with plain floats: a float operand
is treated as a constant with zero adjoint, and the forward value is computed
with the exact same float arithmetic the untracked path would use, so tracked
and untracked evaluations agree bit for bit.
"""

from __future__ import annotations

import math
from typing import Union

from .errors import DegeneracyError, UsageError

Scalar = Union[float, "DiffValue"]

# Op codes stored per tape entry (needed only to replay the log).
OP_INPUT = 0
OP_ADD = 1
OP_SUB = 2
OP_MUL = 3
OP_DIV = 4
OP_NEG = 5
OP_SQRT = 6
OP_SQUARE = 7

# Entry layout: (op, ia, ib, da, db, aux, value).  `ia`/`ib` index earlier
# entries; -1 marks a constant operand whose value is stored in `aux`.
_CONST = -1


class Tape:
    """Ordered log of elementary operations for one rollout."""

    __slots__ = ("_entries", "_inputs")

    def __init__(self):
        self._entries: list[tuple] = []
        self._inputs: list[int] = []

    def __len__(self) -> int:
        return len(self._entries)

    def _push(self, op, ia, ib, da, db, aux, value) -> int:
        entries = self._entries
        entries.append((op, ia, ib, da, db, aux, value))
        return len(entries) - 1

    def replay(self) -> float:
        """Recompute every recorded value from its operands.

        Returns the maximum absolute deviation from the stored forward
        values; a faithful log replays to exactly 0.0.
        """
        values = [0.0] * len(self._entries)
        worst = 0.0
        for k, (op, ia, ib, _da, _db, aux, stored) in enumerate(self._entries):
            a = values[ia] if ia >= 0 else aux
            b = values[ib] if ib >= 0 else aux
            if op == OP_INPUT:
                v = stored
            elif op == OP_ADD:
                v = a + b
            elif op == OP_SUB:
                v = a - b
            elif op == OP_MUL:
                v = a * b
            elif op == OP_DIV:
                v = a / b
            elif op == OP_NEG:
                v = -a
            elif op == OP_SQRT:
                v = math.sqrt(a)
            else:  # OP_SQUARE
                v = a * a
            values[k] = v
            worst = max(worst, abs(v - stored))
        return worst


class DiffValue:
    """A scalar tracked on a tape; `tape is None` marks a constant."""

    __slots__ = ("tape", "idx", "value")

    def __init__(self, tape: Tape | None, idx: int, value: float):
        self.tape = tape
        self.idx = idx
        self.value = value

    @staticmethod
    def constant(value: float) -> "DiffValue":
        return DiffValue(None, _CONST, float(value))

    def __repr__(self) -> str:
        tag = "const" if self.tape is None else f"#{self.idx}"
        return f"DiffValue({self.value!r}, {tag})"

    # -- binary arithmetic ------------------------------------------------
    # Each op records its local partials evaluated at the forward values.

    def _coerce(self, other) -> tuple[Tape | None, int, float]:
        """Return (tape, idx, value) for an operand, unifying tapes."""
        if isinstance(other, DiffValue):
            if other.tape is not None and self.tape is not None and other.tape is not self.tape:
                raise UsageError("cannot combine DiffValues from different tapes")
            return other.tape, other.idx, other.value
        return None, _CONST, other

    def _binary(self, other, op, value, da, db):
        ot, oi, ov = self._coerce(other)
        tape = self.tape if self.tape is not None else ot
        if tape is None:
            return DiffValue(None, _CONST, value)
        ia = self.idx if self.tape is not None else _CONST
        ib = oi if ot is not None else _CONST
        aux = 0.0
        if ia == _CONST:
            aux = self.value
        elif ib == _CONST:
            aux = ov
        idx = tape._push(op, ia, ib, da, db, aux, value)
        return DiffValue(tape, idx, value)

    def __add__(self, other):
        b = other.value if isinstance(other, DiffValue) else other
        return self._binary(other, OP_ADD, self.value + b, 1.0, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        b = other.value if isinstance(other, DiffValue) else other
        return self._binary(other, OP_SUB, self.value - b, 1.0, -1.0)

    def __rsub__(self, other):
        # other - self with other a plain constant
        return DiffValue.constant(other)._binary(self, OP_SUB, other - self.value, 1.0, -1.0)

    def __mul__(self, other):
        b = other.value if isinstance(other, DiffValue) else other
        return self._binary(other, OP_MUL, self.value * b, b, self.value)

    __rmul__ = __mul__

    def __truediv__(self, other):
        b = other.value if isinstance(other, DiffValue) else other
        if b == 0.0:
            raise DegeneracyError("division by zero in tracked arithmetic")
        v = self.value / b
        return self._binary(other, OP_DIV, v, 1.0 / b, -v / b)

    def __rtruediv__(self, other):
        if self.value == 0.0:
            raise DegeneracyError("division by zero in tracked arithmetic")
        v = other / self.value
        return DiffValue.constant(other)._binary(self, OP_DIV, v, 1.0 / self.value, -v / self.value)

    def __neg__(self):
        v = -self.value
        if self.tape is None:
            return DiffValue(None, _CONST, v)
        idx = self.tape._push(OP_NEG, self.idx, _CONST, -1.0, 0.0, 0.0, v)
        return DiffValue(self.tape, idx, v)

    # -- comparisons act on forward values only ---------------------------

    def __lt__(self, other):
        return self.value < _plain(other)

    def __le__(self, other):
        return self.value <= _plain(other)

    def __gt__(self, other):
        return self.value > _plain(other)

    def __ge__(self, other):
        return self.value >= _plain(other)

    def __float__(self):
        return float(self.value)


def _plain(x) -> float:
    return x.value if isinstance(x, DiffValue) else x


def value_of(x: Scalar) -> float:
    """Forward value of a tracked or plain scalar (for branch predicates)."""
    return x.value if isinstance(x, DiffValue) else x


def lift(tape: Tape, value: float) -> DiffValue:
    """Register `value` as a tracked input whose adjoint backward reports."""
    v = float(value)
    idx = tape._push(OP_INPUT, _CONST, _CONST, 0.0, 0.0, 0.0, v)
    tape._inputs.append(idx)
    return DiffValue(tape, idx, v)


def sqrt(x: Scalar) -> Scalar:
    """Square root, tracked when the operand is tracked."""
    if isinstance(x, DiffValue):
        if x.value < 0.0:
            raise DegeneracyError("square root of negative value")
        v = math.sqrt(x.value)
        if x.tape is None:
            return DiffValue(None, _CONST, v)
        if v == 0.0:
            raise DegeneracyError("square root derivative undefined at zero")
        idx = x.tape._push(OP_SQRT, x.idx, _CONST, 0.5 / v, 0.0, 0.0, v)
        return DiffValue(x.tape, idx, v)
    if x < 0.0:
        raise DegeneracyError("square root of negative value")
    return math.sqrt(x)


def square(x: Scalar) -> Scalar:
    """x**2, tracked when the operand is tracked."""
    if isinstance(x, DiffValue):
        v = x.value * x.value
        if x.tape is None:
            return DiffValue(None, _CONST, v)
        idx = x.tape._push(OP_SQUARE, x.idx, _CONST, 2.0 * x.value, 0.0, 0.0, v)
        return DiffValue(x.tape, idx, v)
    return x * x


class GradientMap:
    """Adjoints of every lifted input, keyed by input identifier.

    Inputs with no path to the seeded output carry adjoint exactly 0.0.
    """

    __slots__ = ("_adjoints",)

    def __init__(self, adjoints: dict[int, float]):
        self._adjoints = adjoints

    def __getitem__(self, key: DiffValue | int) -> float:
        idx = key.idx if isinstance(key, DiffValue) else key
        return self._adjoints[idx]

    def __len__(self) -> int:
        return len(self._adjoints)

    def items(self):
        return self._adjoints.items()


def backward(tape: Tape, output: DiffValue) -> GradientMap:
    """Reverse sweep: adjoints of every lifted input w.r.t. `output`."""
    if output.tape is not tape or not 0 <= output.idx < len(tape._entries):
        raise UsageError("output was not produced on this tape")
    entries = tape._entries
    adj = [0.0] * len(entries)
    adj[output.idx] = 1.0
    for k in range(output.idx, -1, -1):
        a = adj[k]
        if a == 0.0:
            continue
        e = entries[k]
        ia = e[1]
        if ia >= 0:
            adj[ia] += a * e[3]
        ib = e[2]
        if ib >= 0:
            adj[ib] += a * e[4]
    return GradientMap({i: adj[i] for i in tape._inputs})
