"""Lattice peptides: topology, Lennard-Jones energetics, side-group placement.

A peptide is modeled as a backbone chain of atoms on the tetrahedral lattice
(one atom per site, consecutive atoms one bond apart) plus side-group atoms
attached one bond away from their backbone attachment atom.  The backbone
geometry is fully determined by a turn digit string; side-group atoms are
placed by exhaustively enumerating their candidate sites and keeping the
assignment of lowest energy (partial minimization).

The energy model is a Lennard-Jones sum over atom pairs with per-element
parameters, plus a linear penalty for *clashes* (two atoms sharing a site).
Pairs separated by at most ``lj_exclusion_bonds`` bonds (default 2) are
omitted from the Lennard-Jones sum: their separations are fixed by the
lattice geometry, so they contribute only a conformation-independent offset,
and omitting them keeps energies on the scale set by the nonbonded contacts.
Clash counting always covers every clash-participating pair.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EncodingError
from .lattice import (
    DEFAULT_BOND_LENGTH,
    DEFAULT_PREFIX_TURNS,
    RELATIVE,
    TETRAHEDRAL,
    TETRAHEDRAL_DIRECTIONS,
    Encoding,
    FixedPrefix,
    Walk,
    decode_tetrahedral,
)

ELEMENTS = ("H", "C", "O", "N")

#: Number of bond separations excluded from the Lennard-Jones sum by default
#: (1-2 and 1-3 pairs, whose distances the lattice fixes).
DEFAULT_LJ_EXCLUSION_BONDS = 2


@dataclass(frozen=True)
class Atom:
    element: str
    lj: bool = True
    clash: bool = True

    def __post_init__(self):
        if self.element not in ELEMENTS:
            raise ConfigError(f"unknown element {self.element!r}")


@dataclass(frozen=True)
class PeptideTopology:
    """Backbone chain plus side groups attached to backbone atoms.

    ``side_groups`` holds ``(attachment backbone index, atoms)`` entries; each
    atom in a group occupies a lattice site one bond from its attachment atom.
    """

    backbone: tuple[Atom, ...]
    side_groups: tuple[tuple[int, tuple[Atom, ...]], ...] = ()

    def __post_init__(self):
        if len(self.backbone) < 2:
            raise ConfigError("backbone needs at least 2 atoms")
        for attach, atoms in self.side_groups:
            if not 0 <= attach < len(self.backbone):
                raise ConfigError(f"side group attachment {attach} out of range")
            if not atoms:
                raise ConfigError("empty side group")

    @property
    def free_turns(self) -> int:
        """Free relative turns once the first two backbone turns are fixed."""
        return (len(self.backbone) - 1) - 2

    def side_atoms(self) -> list[tuple[int, Atom]]:
        """Flattened (attachment index, atom) list in file order."""
        return [(a, atom) for a, atoms in self.side_groups for atom in atoms]

    def all_atoms(self) -> list[Atom]:
        return list(self.backbone) + [atom for _, atom in self.side_atoms()]


@dataclass(frozen=True)
class HconParams:
    """Per-element Lennard-Jones parameters: well depth and half radius."""

    epsilon: dict[str, float]  # kcal/mol
    r_half: dict[str, float]  # angstrom

    def __post_init__(self):
        for element in ELEMENTS:
            if element not in self.epsilon or element not in self.r_half:
                raise ConfigError(f"missing parameters for element {element}")
            if self.epsilon[element] <= 0 or self.r_half[element] <= 0:
                raise ConfigError(f"parameters for {element} must be positive")


@dataclass(frozen=True)
class Conformation:
    """A fully placed peptide with its energy under the clash-penalized model."""

    backbone_positions: np.ndarray  # (n_backbone, 3) integer lattice sites
    side_positions: np.ndarray  # (n_side, 3) integer lattice sites
    energy: float  # kcal/mol, H = H_LJ + penalty * clashes
    clashes: int
    digits: tuple[int, ...] = ()


def lj_pair(element_i: str, element_j: str, distance: float, params: HconParams) -> float:
    """Lennard-Jones energy of one atom pair at the given distance (angstrom).

    Uses sqrt(eps_i*eps_j) * ((sigma/d)^12 - 2*(sigma/d)^6) with
    sigma = r_half_i + r_half_j, so the pair minimum sits at d = sigma with
    depth -sqrt(eps_i*eps_j).  Coincident atoms (distance 0) contribute 0 by
    convention; overlap is penalized through clash counting instead.
    """
    if distance < 0:
        raise ValueError("distance must be non-negative")
    if distance == 0.0:
        return 0.0
    sigma = params.r_half[element_i] + params.r_half[element_j]
    s6 = (sigma / distance) ** 6
    return math.sqrt(params.epsilon[element_i] * params.epsilon[element_j]) * (
        s6 * s6 - 2.0 * s6
    )


def lj_lower_bound(topology: PeptideTopology, params: HconParams) -> float:
    """Sum of the per-pair minima over all LJ-participating atom pairs.

    Every pair's energy is at least -sqrt(eps_i*eps_j), so this is a lower
    bound on any conformation's Lennard-Jones energy (pairs excluded from the
    evaluated sum contribute 0 >= their per-pair minimum).
    """
    eps = [params.epsilon[a.element] for a in topology.all_atoms() if a.lj]
    total = 0.0
    for i in range(len(eps)):
        for j in range(i + 1, len(eps)):
            total -= math.sqrt(eps[i] * eps[j])
    return total


def build_alanine_topology(n_residues: int) -> PeptideTopology:
    """Heavy-atom polyalanine: N,CA,C per residue plus a terminal O backbone
    atom, with a CB side atom on each CA and a carbonyl O on each C.

    The backbone has 3*n_residues + 1 atoms, hence 3*n_residues bonds and
    3*n_residues - 2 free relative turns after fixing the first two; four
    residues give 10 free turns (3^10 = 59049 configurations).
    """
    if n_residues < 1:
        raise ConfigError("need at least one residue")
    backbone = []
    side_groups = []
    for r in range(n_residues):
        backbone.extend([Atom("N"), Atom("C"), Atom("C")])  # N, CA, C
        side_groups.append((3 * r + 1, (Atom("C"),)))  # CB on CA
        side_groups.append((3 * r + 2, (Atom("O"),)))  # carbonyl O on C
    backbone.append(Atom("O"))  # terminal O
    return PeptideTopology(backbone=tuple(backbone), side_groups=tuple(side_groups))


# ---------------------------------------------------------------------------
# topology / parameter file formats
# ---------------------------------------------------------------------------

def topology_to_lines(topology: PeptideTopology) -> list[str]:
    """Serialize as ``ATOM <index> <element> <backbone|side:<attach>> <lj:0|1> <clash:0|1>``."""
    lines = []
    index = 0
    for atom in topology.backbone:
        lines.append(
            f"ATOM {index} {atom.element} backbone lj:{int(atom.lj)} clash:{int(atom.clash)}"
        )
        index += 1
    for attach, atom in topology.side_atoms():
        lines.append(
            f"ATOM {index} {atom.element} side:{attach} lj:{int(atom.lj)} clash:{int(atom.clash)}"
        )
        index += 1
    return lines


def parse_topology(text: str) -> PeptideTopology:
    """Parse the line-oriented topology format (see ``topology_to_lines``)."""
    backbone: list[Atom] = []
    groups: dict[int, list[Atom]] = {}
    group_order: list[int] = []
    expected_index = 0
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 6 or fields[0] != "ATOM":
            raise ConfigError(f"bad topology line: {raw!r}")
        _, index_s, element, role, lj_s, clash_s = fields
        if int(index_s) != expected_index:
            raise ConfigError(f"atom indices must be sequential, got {index_s}")
        expected_index += 1
        if not (lj_s.startswith("lj:") and clash_s.startswith("clash:")):
            raise ConfigError(f"bad flags in topology line: {raw!r}")
        atom = Atom(
            element=element,
            lj=bool(int(lj_s[3:])),
            clash=bool(int(clash_s[6:])),
        )
        if role == "backbone":
            if groups:
                raise ConfigError("backbone atoms must precede side atoms")
            backbone.append(atom)
        elif role.startswith("side:"):
            attach = int(role[5:])
            if attach not in groups:
                groups[attach] = []
                group_order.append(attach)
            groups[attach].append(atom)
        else:
            raise ConfigError(f"bad atom role {role!r}")
    side_groups = tuple((a, tuple(groups[a])) for a in group_order)
    return PeptideTopology(backbone=tuple(backbone), side_groups=side_groups)


def parse_params(text: str) -> HconParams:
    """Parse ``<element> <epsilon_kcal_mol> <r_half_angstrom>`` lines."""
    epsilon: dict[str, float] = {}
    r_half: dict[str, float] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 3:
            raise ConfigError(f"bad parameter line: {raw!r}")
        element, eps_s, rh_s = fields
        epsilon[element] = float(eps_s)
        r_half[element] = float(rh_s)
    return HconParams(epsilon=epsilon, r_half=r_half)


def params_to_lines(params: HconParams) -> list[str]:
    return [
        f"{element} {float(params.epsilon[element])!r} {float(params.r_half[element])!r}"
        for element in ELEMENTS
    ]


# ---------------------------------------------------------------------------
# placement geometry
# ---------------------------------------------------------------------------

def backbone_turn_indices(digits, prefix: FixedPrefix) -> list[int]:
    """Absolute direction index of every backbone bond."""
    walk = decode_tetrahedral(
        digits, Encoding(TETRAHEDRAL, RELATIVE), prefix, bond_length=DEFAULT_BOND_LENGTH
    )
    pos = walk.positions
    turns = []
    for i in range(len(pos) - 1):
        step = pos[i + 1] - pos[i]
        if i % 2 == 1:
            step = -step
        matches = np.flatnonzero((TETRAHEDRAL_DIRECTIONS == step).all(axis=1))
        turns.append(int(matches[0]))
    return turns


def side_candidate_sites(
    attach: int, backbone_positions: np.ndarray, bond_turns: list[int]
) -> np.ndarray:
    """Candidate lattice sites for a side atom attached at backbone atom ``attach``.

    A bond leaving atom ``attach`` uses the direction tetrad of the atom's
    sublattice (even chain index: the base tetrad, odd: its negation).  The
    directions already used by the bonds to the neighbouring backbone atoms
    are unavailable; the remaining directions are enumerated in increasing
    direction-index order.  If every direction is taken (not possible on a
    chain, but allowed for robustness) all four are returned and overlap is
    left to the clash penalty.
    """
    taken = set()
    if attach - 1 >= 0:
        taken.add(bond_turns[attach - 1])
    if attach < len(bond_turns):
        taken.add(bond_turns[attach])
    free = [t for t in range(4) if t not in taken]
    if not free:
        free = list(range(4))
    sign = 1 if attach % 2 == 0 else -1
    base = backbone_positions[attach]
    return np.array([base + sign * TETRAHEDRAL_DIRECTIONS[t] for t in free], dtype=np.int64)


@dataclass(frozen=True)
class _PairTables:
    """Element-code tables for vectorized pair energy evaluation."""

    sqrt_eps: np.ndarray  # (4, 4) sqrt(eps_i * eps_j)
    sigma_sq: np.ndarray  # (4, 4) (r_half_i + r_half_j)^2, angstrom^2


def element_codes(atoms: list[Atom]) -> np.ndarray:
    return np.array([ELEMENTS.index(a.element) for a in atoms], dtype=np.int64)


def pair_tables(params: HconParams) -> _PairTables:
    eps = np.array([params.epsilon[e] for e in ELEMENTS])
    rh = np.array([params.r_half[e] for e in ELEMENTS])
    return _PairTables(
        sqrt_eps=np.sqrt(np.outer(eps, eps)),
        sigma_sq=np.add.outer(rh, rh) ** 2,
    )


def _lj_from_dist_sq(dist_sq: float, sqrt_eps: float, sigma_sq: float) -> float:
    """Pair energy from squared distance (angstrom^2); 0 at coincidence."""
    if dist_sq == 0.0:
        return 0.0
    s6 = (sigma_sq / dist_sq) ** 3
    return sqrt_eps * (s6 * s6 - 2.0 * s6)


def place_and_minimize(
    digits,
    topology: PeptideTopology,
    params: HconParams,
    clash_penalty: float,
    prefix: FixedPrefix = FixedPrefix(DEFAULT_PREFIX_TURNS),
    bond_length: float = DEFAULT_BOND_LENGTH,
    lj_exclusion_bonds: int = DEFAULT_LJ_EXCLUSION_BONDS,
) -> Conformation:
    """Place the backbone from its digit string and the side atoms optimally.

    Every combination of side-atom candidate sites is scored with
    H = H_LJ + clash_penalty * clashes and the minimizing assignment is
    returned; ties go to the lexicographically smallest combination (side
    atoms in file order, candidates in direction order).  This is a direct,
    per-configuration reference implementation; the cost module provides
    batched equivalents over all digit strings.
    """
    if clash_penalty < 0:
        raise ValueError("clash_penalty must be non-negative")
    if len(digits) != topology.free_turns:
        raise EncodingError(
            f"expected {topology.free_turns} free turns, got {len(digits)}"
        )
    walk = decode_tetrahedral(digits, Encoding(TETRAHEDRAL, RELATIVE), prefix, bond_length)
    backbone_pos = walk.positions
    bond_turns = backbone_turn_indices(digits, prefix)
    side = topology.side_atoms()
    candidates = [
        side_candidate_sites(attach, backbone_pos, bond_turns) for attach, _ in side
    ]

    unit_sq = (bond_length / math.sqrt(3.0)) ** 2
    tables = pair_tables(params)
    codes = element_codes(topology.all_atoms())
    lj_flags = np.array([a.lj for a in topology.all_atoms()])
    clash_flags = np.array([a.clash for a in topology.all_atoms()])
    n_backbone = len(topology.backbone)

    def bond_distance(i: int, j: int) -> int:
        """Bond-graph separation between atom indices (backbone chain + side bonds)."""
        ai = i if i < n_backbone else side[i - n_backbone][0]
        aj = j if j < n_backbone else side[j - n_backbone][0]
        extra = (i >= n_backbone) + (j >= n_backbone)
        return abs(ai - aj) + extra

    best = None
    for combo in itertools.product(*[range(len(c)) for c in candidates]):
        side_pos = np.array(
            [candidates[s][c] for s, c in enumerate(combo)], dtype=np.int64
        ).reshape(len(side), 3)
        all_pos = np.vstack([backbone_pos, side_pos])
        lj_energy = 0.0
        clashes = 0
        for i in range(len(all_pos)):
            for j in range(i + 1, len(all_pos)):
                delta = all_pos[i] - all_pos[j]
                d2 = int(np.dot(delta, delta))
                if d2 == 0 and clash_flags[i] and clash_flags[j]:
                    clashes += 1
                if (
                    lj_flags[i]
                    and lj_flags[j]
                    and bond_distance(i, j) > lj_exclusion_bonds
                ):
                    lj_energy += _lj_from_dist_sq(
                        d2 * unit_sq,
                        tables.sqrt_eps[codes[i], codes[j]],
                        tables.sigma_sq[codes[i], codes[j]],
                    )
        total = lj_energy + clash_penalty * clashes
        if best is None or total < best[0]:
            best = (total, clashes, side_pos)
    total, clashes, side_pos = best
    return Conformation(
        backbone_positions=backbone_pos,
        side_positions=side_pos,
        energy=total,
        clashes=clashes,
        digits=tuple(int(d) for d in digits),
    )


def conformation_csv_rows(
    conformation: Conformation,
    topology: PeptideTopology,
    bond_length: float = DEFAULT_BOND_LENGTH,
) -> list[str]:
    """Export as CSV ``atom_index,element,x,y,z`` in angstrom."""
    unit = bond_length / math.sqrt(3.0)
    rows = ["atom_index,element,x_angstrom,y_angstrom,z_angstrom"]
    atoms = topology.all_atoms()
    all_pos = np.vstack(
        [conformation.backbone_positions, conformation.side_positions.reshape(-1, 3)]
    )
    for i, (atom, site) in enumerate(zip(atoms, all_pos)):
        coords = ",".join(repr(float(c * unit)) for c in site)
        rows.append(f"{i},{atom.element},{coords}")
    return rows
