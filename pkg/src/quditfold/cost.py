"""Diagonal cost vectors over every mixed-radix basis configuration.

The configuration index is a mixed-radix integer whose least-significant
digit is the first free turn.  Builders fill one value per configuration:
walk costs (self-crossings plus a quadratic open-endpoint penalty) and
peptide costs (partially minimized Lennard-Jones energy plus a clash
penalty), together with the per-configuration component arrays the metrics
need (crossing counts, endpoint distances, clash counts, penalty-free
energies).

Construction is deterministic, so a vector can be dumped to a small binary
cache and reloaded bit-for-bit.
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import peptide as pep
from .backends import kernels
from .errors import ConfigError, MemoryCapError
from .lattice import (
    ABSOLUTE,
    DEFAULT_BOND_LENGTH,
    DEFAULT_PREFIX_TURNS,
    SQUARE,
    TETRAHEDRAL_DIRECTIONS,
    Encoding,
    FixedPrefix,
)

DEFAULT_MEMORY_CAP_BYTES = 1 << 30

#: Maximum number of distinct cost values for which the phase kernel uses a
#: precomputed table of complex exponentials instead of per-element sincos.
PHASE_TABLE_MAX_UNIQUE = 4096

_UNSET = object()


@dataclass(frozen=True)
class WalkProblem:
    """A square-lattice walk sampling problem with a quadratic loop penalty."""

    steps: int
    encoding: Encoding
    prefix: FixedPrefix = FixedPrefix(DEFAULT_PREFIX_TURNS)
    lam: float = 0.2

    def __post_init__(self):
        if self.encoding.lattice != SQUARE:
            raise ConfigError("WalkProblem is defined on the square lattice")
        if len(self.prefix) != 2:
            raise ConfigError("WalkProblem fixes exactly the first two turns")
        if self.free_digits < 1:
            raise ConfigError(f"{self.steps} steps leave no free turns")

    @property
    def free_digits(self) -> int:
        return self.steps - len(self.prefix)

    @property
    def radices(self) -> tuple[int, ...]:
        return (self.encoding.radix,) * self.free_digits

    @property
    def n_configurations(self) -> int:
        return self.encoding.radix**self.free_digits

    @property
    def descriptor(self) -> str:
        turns = ",".join(str(t) for t in self.prefix.turns)
        return (
            f"walk;steps={self.steps};mode={self.encoding.mode};"
            f"prefix={turns};lam={self.lam!r}"
        )


@dataclass
class CostVector:
    """values[x] = cost of configuration x, plus problem metadata.

    Optional component arrays ride along when the builder produced them:
    ``crossings``/``end_dist_sq`` for walks, ``clashes``/``lj_only`` for
    peptides.
    """

    values: np.ndarray
    radices: tuple[int, ...]
    descriptor: str
    lam: float
    crossings: np.ndarray | None = None
    end_dist_sq: np.ndarray | None = None
    clashes: np.ndarray | None = None
    lj_only: np.ndarray | None = None
    _table: object = field(default=_UNSET, repr=False, compare=False)

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def n_qudits(self) -> int:
        return len(self.radices)

    def phase_table(self):
        """(codes, unique_values) when the spectrum is small enough to tabulate.

        Returns None for near-continuous spectra, in which case phase
        evolution computes per-element exponentials directly.
        """
        if self._table is _UNSET:
            unique, codes = np.unique(self.values, return_inverse=True)
            if unique.size <= PHASE_TABLE_MAX_UNIQUE:
                self._table = (codes.astype(np.uint32), unique)
            else:
                self._table = None
        return self._table

    def spectrum_std(self) -> float:
        return float(np.std(self.values))


def _check_cap(n_bytes: int, memory_cap_bytes: int, what: str) -> None:
    if n_bytes > memory_cap_bytes:
        raise MemoryCapError(
            f"{what} needs {n_bytes} bytes, exceeding the cap of "
            f"{memory_cap_bytes} bytes"
        )


def build_saw_cost(
    problem: WalkProblem,
    memory_cap_bytes: int = DEFAULT_MEMORY_CAP_BYTES,
) -> CostVector:
    """Cost vector for a walk problem: crossings + lam * endpoint_distance_sq."""
    if not 4 <= problem.steps <= 16:
        raise ConfigError("walk problems support 4..16 steps")
    if problem.lam <= 0:
        raise ConfigError("walk penalty lam must be positive")
    n = problem.n_configurations
    _check_cap(n * (8 + 2 + 2), memory_cap_bytes, f"cost vector for {problem.descriptor}")
    values = np.empty(n, dtype=np.float64)
    crossings = np.empty(n, dtype=np.uint16)
    end_dist_sq = np.empty(n, dtype=np.uint16)
    prefix = np.array(problem.prefix.turns, dtype=np.int64)
    kernels().saw_cost_fill(
        values,
        crossings,
        end_dist_sq,
        problem.encoding.radix,
        problem.encoding.mode != ABSOLUTE,
        prefix,
        problem.steps,
        problem.lam,
    )
    return CostVector(
        values=values,
        radices=problem.radices,
        descriptor=problem.descriptor,
        lam=problem.lam,
        crossings=crossings,
        end_dist_sq=end_dist_sq,
    )


def peptide_descriptor(
    topology: pep.PeptideTopology,
    params: pep.HconParams,
    lam: float,
    prefix: FixedPrefix,
    bond_length: float,
    lj_exclusion_bonds: int,
) -> str:
    atoms = ";".join(
        f"{a.element}{int(a.lj)}{int(a.clash)}" for a in topology.backbone
    )
    sides = ";".join(
        f"{attach}:{a.element}{int(a.lj)}{int(a.clash)}"
        for attach, a in topology.side_atoms()
    )
    pars = ";".join(
        f"{e}:{params.epsilon[e]!r}:{params.r_half[e]!r}" for e in pep.ELEMENTS
    )
    turns = ",".join(str(t) for t in prefix.turns)
    return (
        f"peptide;bb={atoms};side={sides};params={pars};lam={lam!r};"
        f"prefix={turns};bond={bond_length!r};excl={lj_exclusion_bonds}"
    )


def build_peptide_cost(
    topology: pep.PeptideTopology,
    params: pep.HconParams,
    lam: float,
    prefix: FixedPrefix = FixedPrefix(DEFAULT_PREFIX_TURNS),
    bond_length: float = DEFAULT_BOND_LENGTH,
    lj_exclusion_bonds: int = pep.DEFAULT_LJ_EXCLUSION_BONDS,
    memory_cap_bytes: int = DEFAULT_MEMORY_CAP_BYTES,
) -> CostVector:
    """Cost vector over all backbone digit strings with side atoms minimized out.

    values[x] is the lowest H = H_LJ + lam * clashes over all side-group
    placements for backbone configuration x; ``clashes[x]`` and ``lj_only[x]``
    record the clash count and penalty-free energy of the minimizing placement.
    """
    if lam < 0:
        raise ConfigError("clash penalty lam must be non-negative")
    if len(prefix) != 2:
        raise ConfigError("peptide problems fix exactly the first two turns")
    m = topology.free_turns
    if m < 1:
        raise ConfigError("topology leaves no free turns")
    side = topology.side_atoms()
    combos = 1
    for attach, _ in side:
        combos *= 4
    if combos > 1 << 20:
        raise ConfigError(f"side-placement enumeration too large ({combos} combos)")
    n = 3**m
    _check_cap(n * (8 + 2 + 8), memory_cap_bytes, "peptide cost vector")

    tables = pep.pair_tables(params)
    bb_atoms = list(topology.backbone)
    side_atoms = [a for _, a in side]
    values = np.empty(n, dtype=np.float64)
    clashes = np.empty(n, dtype=np.uint16)
    lj_only = np.empty(n, dtype=np.float64)
    kernels().peptide_cost_fill(
        values,
        clashes,
        lj_only,
        np.array(prefix.turns, dtype=np.int64),
        m,
        pep.element_codes(bb_atoms),
        np.array([a.lj for a in bb_atoms], dtype=np.uint8),
        np.array([a.clash for a in bb_atoms], dtype=np.uint8),
        np.array([attach for attach, _ in side], dtype=np.int64),
        pep.element_codes(side_atoms) if side_atoms else np.zeros(0, dtype=np.int64),
        np.array([a.lj for a in side_atoms], dtype=np.uint8),
        np.array([a.clash for a in side_atoms], dtype=np.uint8),
        tables.sqrt_eps,
        tables.sigma_sq,
        (bond_length / math.sqrt(3.0)) ** 2,
        lam,
        lj_exclusion_bonds,
        TETRAHEDRAL_DIRECTIONS,
    )
    return CostVector(
        values=values,
        radices=(3,) * m,
        descriptor=peptide_descriptor(
            topology, params, lam, prefix, bond_length, lj_exclusion_bonds
        ),
        lam=lam,
        clashes=clashes,
        lj_only=lj_only,
    )


# ---------------------------------------------------------------------------
# binary cache
# ---------------------------------------------------------------------------

_MAGIC = b"QCV1"
_FLAG_CROSSINGS = 1
_FLAG_END_DIST = 2
_FLAG_CLASHES = 4
_FLAG_LJ_ONLY = 8


def descriptor_hash(descriptor: str) -> int:
    digest = hashlib.sha256(descriptor.encode()).digest()
    return struct.unpack("<Q", digest[:8])[0]


def save_cost(cost: CostVector, path) -> None:
    """Dump to a little-endian binary cache (header + f64 value array)."""
    flags = 0
    extras = []
    for flag, arr, dtype in (
        (_FLAG_CROSSINGS, cost.crossings, "<u2"),
        (_FLAG_END_DIST, cost.end_dist_sq, "<u2"),
        (_FLAG_CLASHES, cost.clashes, "<u2"),
        (_FLAG_LJ_ONLY, cost.lj_only, "<f8"),
    ):
        if arr is not None:
            flags |= flag
            extras.append((arr, dtype))
    desc = cost.descriptor.encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<B", len(cost.radices)))
        fh.write(struct.pack(f"<{len(cost.radices)}B", *cost.radices))
        fh.write(struct.pack("<d", cost.lam))
        fh.write(struct.pack("<Q", descriptor_hash(cost.descriptor)))
        fh.write(struct.pack("<I", len(desc)))
        fh.write(desc)
        fh.write(struct.pack("<I", flags))
        fh.write(struct.pack("<Q", cost.values.size))
        fh.write(np.ascontiguousarray(cost.values, dtype="<f8").tobytes())
        for arr, dtype in extras:
            fh.write(np.ascontiguousarray(arr, dtype=dtype).tobytes())


def load_cost(path, expected_descriptor: str | None = None) -> CostVector:
    """Reload a cached vector; verifies the descriptor hash when one is given."""
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ConfigError(f"{path} is not a cost-vector cache")
        (n_radices,) = struct.unpack("<B", fh.read(1))
        radices = struct.unpack(f"<{n_radices}B", fh.read(n_radices))
        (lam,) = struct.unpack("<d", fh.read(8))
        (stored_hash,) = struct.unpack("<Q", fh.read(8))
        (desc_len,) = struct.unpack("<I", fh.read(4))
        descriptor = fh.read(desc_len).decode()
        (flags,) = struct.unpack("<I", fh.read(4))
        (n,) = struct.unpack("<Q", fh.read(8))
        if stored_hash != descriptor_hash(descriptor):
            raise ConfigError(f"{path}: descriptor hash mismatch, file corrupt")
        if expected_descriptor is not None and descriptor != expected_descriptor:
            raise ConfigError(
                f"{path} caches a different problem "
                f"({descriptor!r} != {expected_descriptor!r})"
            )
        values = np.frombuffer(fh.read(8 * n), dtype="<f8").astype(np.float64)
        arrays = {}
        for flag, name, dtype, width in (
            (_FLAG_CROSSINGS, "crossings", "<u2", 2),
            (_FLAG_END_DIST, "end_dist_sq", "<u2", 2),
            (_FLAG_CLASHES, "clashes", "<u2", 2),
            (_FLAG_LJ_ONLY, "lj_only", "<f8", 8),
        ):
            if flags & flag:
                arrays[name] = np.frombuffer(fh.read(width * n), dtype=dtype).astype(
                    dtype.lstrip("<")
                )
    return CostVector(
        values=values, radices=tuple(int(r) for r in radices), descriptor=descriptor,
        lam=lam, **arrays,
    )
