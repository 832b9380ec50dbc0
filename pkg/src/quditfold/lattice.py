"""Turn-encoded walks on the square and tetrahedral lattices.

A walk is stored as integer lattice sites so that site-equality tests are
exact; physical angstrom coordinates appear only when a walk is exported.
Digit strings describe the walk either in *absolute* turns (one of the 4
lattice directions per step, radix 4) or in *relative* turns (one of the 3
non-backtracking continuations per step, radix 3).  A fixed prefix of
absolute turns can pin the first steps, removing global symmetries from the
search space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EncodingError

SQUARE = "square"
TETRAHEDRAL = "tetrahedral"
ABSOLUTE = "absolute"
RELATIVE = "relative"

#: Absolute direction map on the square lattice: 0:+x 1:+y 2:-x 3:-y.
SQUARE_DIRECTIONS = np.array([(1, 0), (0, 1), (-1, 0), (0, -1)], dtype=np.int64)

#: Direction tetrad for even-index steps on the tetrahedral (diamond) lattice,
#: in units of bond_length/sqrt(3) per axis.  Odd-index steps use the negated
#: tetrad, alternating between the two sublattices.
TETRAHEDRAL_DIRECTIONS = np.array(
    [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)], dtype=np.int64
)

#: Virtual "previous absolute turn" used when a relative square-lattice digit
#: string starts with an empty prefix; chosen so the first digit 0 decodes to
#: absolute turn 0.
_SQUARE_RELATIVE_SEED = 3

DEFAULT_BOND_LENGTH = 1.5  # angstrom

#: Default pinned first two absolute turns.  Fixing two turns removes the
#: lattice's global rotation/reflection redundancy from the search space; on
#: the tetrahedral lattice the two turns must differ (equal consecutive
#: indices would backtrack).
DEFAULT_PREFIX_TURNS = (0, 1)


@dataclass(frozen=True)
class Encoding:
    """Which lattice a digit string lives on and how turns are encoded.

    ``radix`` is 4 for absolute encodings (all lattice directions) and 3 for
    relative encodings (the non-backtracking continuations).
    """

    lattice: str
    mode: str

    def __post_init__(self):
        if self.lattice not in (SQUARE, TETRAHEDRAL):
            raise EncodingError(f"unknown lattice {self.lattice!r}")
        if self.mode not in (ABSOLUTE, RELATIVE):
            raise EncodingError(f"unknown encoding mode {self.mode!r}")

    @property
    def radix(self) -> int:
        return 4 if self.mode == ABSOLUTE else 3


@dataclass(frozen=True)
class FixedPrefix:
    """Absolute turns pinned before the free digits of a walk."""

    turns: tuple[int, ...] = ()

    def __post_init__(self):
        for t in self.turns:
            if not 0 <= t < 4:
                raise EncodingError(f"prefix turn {t} outside [0, 4)")

    def __len__(self) -> int:
        return len(self.turns)


@dataclass(frozen=True)
class Walk:
    """A decoded walk: one lattice site per step plus the originating digits.

    ``positions`` has shape (steps + 1, dim) and starts at the origin;
    consecutive sites differ by one lattice basis vector.  ``unit`` is the
    physical length (angstrom) of one integer coordinate unit, applied only
    at export time.
    """

    positions: np.ndarray
    digits: tuple[int, ...]
    unit: float = 1.0

    @property
    def steps(self) -> int:
        return len(self.positions) - 1


def _validate_digits(digits, radix: int) -> None:
    for d in digits:
        if not 0 <= d < radix:
            raise EncodingError(f"digit {d} outside [0, {radix})")


def relative_to_absolute_square(previous_turn: int, digit: int) -> int:
    """Map a relative square-lattice digit to an absolute turn.

    Digit 0 turns left, 1 continues straight, 2 turns right; the reversal of
    ``previous_turn`` is never produced, so relative walks cannot backtrack.
    """
    return (previous_turn + 1 - digit) % 4


def relative_to_absolute_tetrahedral(previous_turn: int, digit: int) -> int:
    """Map a relative tetrahedral digit to an absolute direction index.

    The three digits select among the directions other than ``previous_turn``
    cyclically; repeating the previous index (a backtrack, because
    consecutive steps use opposite tetrads) is never produced.
    """
    return (previous_turn + 1 + digit) % 4


def _absolute_turns(digits, encoding: Encoding, prefix: FixedPrefix) -> list[int]:
    _validate_digits(digits, encoding.radix)
    turns = list(prefix.turns)
    if encoding.mode == ABSOLUTE:
        turns.extend(int(d) for d in digits)
        return turns
    if encoding.lattice == SQUARE:
        t = turns[-1] if turns else _SQUARE_RELATIVE_SEED
        convert = relative_to_absolute_square
    else:
        if not turns:
            raise EncodingError(
                "relative tetrahedral digits need a previous turn; "
                "supply a non-empty prefix"
            )
        t = turns[-1]
        convert = relative_to_absolute_tetrahedral
    for d in digits:
        t = convert(t, int(d))
        turns.append(t)
    return turns


def decode_square(digits, encoding: Encoding, prefix: FixedPrefix = FixedPrefix()) -> Walk:
    """Decode a digit string into a walk on the square lattice."""
    if encoding.lattice != SQUARE:
        raise EncodingError(f"decode_square got a {encoding.lattice} encoding")
    turns = _absolute_turns(digits, encoding, prefix)
    steps = SQUARE_DIRECTIONS[turns] if turns else np.empty((0, 2), dtype=np.int64)
    positions = np.vstack([np.zeros((1, 2), dtype=np.int64), np.cumsum(steps, axis=0)])
    return Walk(positions=positions, digits=tuple(int(d) for d in digits), unit=1.0)


def decode_tetrahedral(
    digits,
    encoding: Encoding,
    prefix: FixedPrefix = FixedPrefix(),
    bond_length: float = DEFAULT_BOND_LENGTH,
) -> Walk:
    """Decode a digit string into a walk on the tetrahedral lattice.

    Even-index steps move along ``TETRAHEDRAL_DIRECTIONS``; odd-index steps
    along the negated tetrad.  Positions are integer multiples of
    ``bond_length / sqrt(3)`` per axis.
    """
    if encoding.lattice != TETRAHEDRAL:
        raise EncodingError(f"decode_tetrahedral got a {encoding.lattice} encoding")
    if bond_length <= 0:
        raise ValueError("bond_length must be positive")
    turns = _absolute_turns(digits, encoding, prefix)
    positions = np.zeros((len(turns) + 1, 3), dtype=np.int64)
    for i, t in enumerate(turns):
        step = TETRAHEDRAL_DIRECTIONS[t] if i % 2 == 0 else -TETRAHEDRAL_DIRECTIONS[t]
        positions[i + 1] = positions[i] + step
    return Walk(
        positions=positions,
        digits=tuple(int(d) for d in digits),
        unit=bond_length / math.sqrt(3.0),
    )


def count_self_crossings(walk: Walk) -> int:
    """Number of site coincidences, not counting a closed walk's endpoints.

    Counts unordered index pairs i < j with equal positions, excluding the
    (first, last) pair so that closing a loop is never penalized.
    """
    pos = walk.positions
    n = len(pos)
    crossings = 0
    for i in range(n):
        for j in range(i + 1, n):
            if i == 0 and j == n - 1:
                continue
            if pos[i, 0] == pos[j, 0] and np.array_equal(pos[i], pos[j]):
                crossings += 1
    return crossings


def endpoint_distance_sq(walk: Walk) -> int:
    """Squared distance between the walk's endpoints, in lattice units."""
    delta = walk.positions[-1] - walk.positions[0]
    return int(np.dot(delta, delta))


def is_self_avoiding_loop(walk: Walk) -> bool:
    """True iff the walk closes on itself and revisits no site."""
    return endpoint_distance_sq(walk) == 0 and count_self_crossings(walk) == 0


def walk_csv_rows(walk: Walk) -> list[str]:
    """Export a walk as CSV rows, header first.

    Planar walks are dimensionless (``unit`` 1), so their columns carry a
    ``_lattice_units`` suffix; spatial walks are physical and carry
    ``_angstrom``.
    """
    dim = walk.positions.shape[1]
    suffix = "_angstrom" if dim == 3 else "_lattice_units"
    header = "index," + ",".join(f"{axis}{suffix}" for axis in "xyz"[:dim])
    rows = [header]
    for i, site in enumerate(walk.positions):
        coords = ",".join(repr(float(c * walk.unit)) for c in site)
        rows.append(f"{i},{coords}")
    return rows
