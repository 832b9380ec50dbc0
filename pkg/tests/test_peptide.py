import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quditfold.errors import ConfigError, EncodingError
from quditfold.lattice import (
    DEFAULT_PREFIX_TURNS,
    RELATIVE,
    TETRAHEDRAL,
    Encoding,
    FixedPrefix,
    decode_tetrahedral,
)
from quditfold.peptide import (
    DEFAULT_LJ_EXCLUSION_BONDS,
    ELEMENTS,
    Atom,
    HconParams,
    PeptideTopology,
    backbone_turn_indices,
    build_alanine_topology,
    conformation_csv_rows,
    lj_lower_bound,
    lj_pair,
    parse_params,
    parse_topology,
    params_to_lines,
    place_and_minimize,
    side_candidate_sites,
    topology_to_lines,
)

PREFIX = FixedPrefix(DEFAULT_PREFIX_TURNS)

UNIT_PARAMS = HconParams(
    epsilon={e: 1.0 for e in ELEMENTS},
    r_half={e: 0.5 for e in ELEMENTS},
)

MIXED_PARAMS = HconParams(
    epsilon={"H": 0.0157, "C": 0.086, "O": 0.21, "N": 0.17},
    r_half={"H": 0.6, "C": 1.908, "O": 1.6612, "N": 1.824},
)


def reference_pair(ei, ej, d, params):
    """Straight transcription of the pair formula, kept independent of the
    library's squared-distance evaluation path."""
    sigma = params.r_half[ei] + params.r_half[ej]
    eps = math.sqrt(params.epsilon[ei] * params.epsilon[ej])
    return eps * ((sigma / d) ** 12 - 2.0 * (sigma / d) ** 6)


class TestPairEnergy:
    @pytest.mark.parametrize("ei,ej", [("C", "C"), ("C", "O"), ("H", "N")])
    def test_minimum_at_contact_distance(self, ei, ej):
        sigma = MIXED_PARAMS.r_half[ei] + MIXED_PARAMS.r_half[ej]
        depth = math.sqrt(MIXED_PARAMS.epsilon[ei] * MIXED_PARAMS.epsilon[ej])
        assert lj_pair(ei, ej, sigma, MIXED_PARAMS) == pytest.approx(-depth, rel=1e-14)

    def test_double_contact_distance_exact_rational(self):
        # at d = 2*sigma: (1/2)^12 - 2*(1/2)^6 = 1/4096 - 128/4096
        value = lj_pair("C", "C", 2.0 * (2 * 0.5), UNIT_PARAMS)
        assert value == pytest.approx(-127.0 / 4096.0, rel=1e-14)

    @given(
        st.sampled_from(ELEMENTS),
        st.sampled_from(ELEMENTS),
        st.floats(0.2, 30.0),
    )
    def test_matches_reference_formula(self, ei, ej, d):
        assert lj_pair(ei, ej, d, MIXED_PARAMS) == pytest.approx(
            reference_pair(ei, ej, d, MIXED_PARAMS), rel=1e-12, abs=1e-300
        )

    def test_coincident_atoms_contribute_zero(self):
        assert lj_pair("C", "C", 0.0, MIXED_PARAMS) == 0.0

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            lj_pair("C", "C", -1.0, MIXED_PARAMS)

    @given(st.floats(0.1, 50.0))
    def test_never_below_pair_minimum(self, d):
        depth = math.sqrt(MIXED_PARAMS.epsilon["C"] * MIXED_PARAMS.epsilon["O"])
        assert lj_pair("C", "O", d, MIXED_PARAMS) >= -depth - 1e-12


class TestLowerBound:
    def test_uniform_elements_closed_form(self):
        # k lj-atoms with unit depth: bound is -C(k, 2)
        topo = PeptideTopology(backbone=tuple(Atom("C") for _ in range(5)))
        assert lj_lower_bound(topo, UNIT_PARAMS) == pytest.approx(-10.0)

    def test_lj_flag_excludes_atoms(self):
        topo = PeptideTopology(
            backbone=(Atom("C"), Atom("C"), Atom("C", lj=False), Atom("C"))
        )
        assert lj_lower_bound(topo, UNIT_PARAMS) == pytest.approx(-3.0)

    def test_bounds_every_placed_energy(self):
        topo = build_alanine_topology(2)
        bound = lj_lower_bound(topo, MIXED_PARAMS)
        for digits in itertools.product(range(3), repeat=topo.free_turns):
            conf = place_and_minimize(digits, topo, MIXED_PARAMS, 1000.0)
            assert conf.energy >= bound - 1e-9


class TestAlanineTopology:
    def test_tetrapeptide_counts(self):
        topo = build_alanine_topology(4)
        assert len(topo.backbone) == 13
        assert len(topo.side_atoms()) == 8
        assert len(topo.all_atoms()) == 21
        assert topo.free_turns == 10

    def test_dipeptide_counts(self):
        topo = build_alanine_topology(2)
        assert len(topo.backbone) == 7
        assert topo.free_turns == 4

    def test_backbone_pattern(self):
        topo = build_alanine_topology(2)
        assert [a.element for a in topo.backbone] == ["N", "C", "C", "N", "C", "C", "O"]
        assert [attach for attach, _ in topo.side_groups] == [1, 2, 4, 5]
        assert [atoms[0].element for _, atoms in topo.side_groups] == ["C", "O", "C", "O"]

    def test_needs_a_residue(self):
        with pytest.raises(ConfigError):
            build_alanine_topology(0)


class TestFileFormats:
    def test_topology_round_trip(self):
        topo = build_alanine_topology(3)
        assert parse_topology("\n".join(topology_to_lines(topo))) == topo

    def test_params_round_trip(self):
        assert parse_params("\n".join(params_to_lines(MIXED_PARAMS))) == MIXED_PARAMS

    def test_comments_and_blanks_ignored(self):
        text = "# leading comment\n\nATOM 0 C backbone lj:1 clash:1\nATOM 1 C backbone lj:0 clash:1  # trailing\n"
        topo = parse_topology(text)
        assert len(topo.backbone) == 2
        assert not topo.backbone[1].lj

    @pytest.mark.parametrize(
        "text",
        [
            "ATOM 0 X backbone lj:1 clash:1\nATOM 1 C backbone lj:1 clash:1",
            "ATOM 1 C backbone lj:1 clash:1",  # indices must start at 0
            "ATOM 0 C nowhere lj:1 clash:1",
            "ATOM 0 C backbone lj:1",  # missing field
            "ATOM 0 C side:0 lj:1 clash:1",  # side atom without backbone
        ],
    )
    def test_bad_topology_rejected(self, text):
        with pytest.raises(ConfigError):
            parse_topology(text)

    def test_backbone_after_side_rejected(self):
        text = (
            "ATOM 0 C backbone lj:1 clash:1\n"
            "ATOM 1 C backbone lj:1 clash:1\n"
            "ATOM 2 O side:0 lj:1 clash:1\n"
            "ATOM 3 C backbone lj:1 clash:1"
        )
        with pytest.raises(ConfigError):
            parse_topology(text)

    @pytest.mark.parametrize(
        "text",
        [
            "H 0.1 0.5\nC 0.1 0.5\nO 0.1 0.5",  # N missing
            "H 0.1 0.5 9\nC 0.1 0.5\nO 0.1 0.5\nN 0.1 0.5",
            "H -0.1 0.5\nC 0.1 0.5\nO 0.1 0.5\nN 0.1 0.5",  # positive only
        ],
    )
    def test_bad_params_rejected(self, text):
        with pytest.raises(ConfigError):
            parse_params(text)


class TestSidePlacement:
    def test_interior_attachment_has_two_candidates(self):
        topo = build_alanine_topology(2)
        digits = (0,) * topo.free_turns
        walk = decode_tetrahedral(digits, Encoding(TETRAHEDRAL, RELATIVE), PREFIX)
        turns = backbone_turn_indices(digits, PREFIX)
        sites = side_candidate_sites(1, walk.positions, turns)
        assert sites.shape == (2, 3)

    def test_candidates_are_lattice_neighbours(self):
        topo = build_alanine_topology(2)
        digits = (0, 1, 2, 0)
        walk = decode_tetrahedral(digits, Encoding(TETRAHEDRAL, RELATIVE), PREFIX)
        turns = backbone_turn_indices(digits, PREFIX)
        for attach, _ in topo.side_atoms():
            for site in side_candidate_sites(attach, walk.positions, turns):
                delta = site - walk.positions[attach]
                assert sorted(np.abs(delta).tolist()) == [1, 1, 1]

    def test_candidates_avoid_chain_neighbours(self):
        digits = (0, 1, 2, 0)
        walk = decode_tetrahedral(digits, Encoding(TETRAHEDRAL, RELATIVE), PREFIX)
        turns = backbone_turn_indices(digits, PREFIX)
        for attach in range(1, len(walk.positions) - 1):
            sites = side_candidate_sites(attach, walk.positions, turns)
            for site in sites:
                assert not np.array_equal(site, walk.positions[attach - 1])
                assert not np.array_equal(site, walk.positions[attach + 1])


def recompute_energy(conf, topology, params, penalty, bond_length=1.5, excl=2):
    """Second opinion on a placed conformation's energy: all-pairs sums over
    the returned coordinates with its own bond-separation bookkeeping."""
    atoms = topology.all_atoms()
    n_backbone = len(topology.backbone)
    attach = [a for a, _ in topology.side_atoms()]
    pos = np.vstack([conf.backbone_positions, conf.side_positions.reshape(-1, 3)])
    unit = bond_length / math.sqrt(3.0)

    def separation(i, j):
        ci = i if i < n_backbone else attach[i - n_backbone]
        cj = j if j < n_backbone else attach[j - n_backbone]
        return abs(ci - cj) + (i >= n_backbone) + (j >= n_backbone)

    lj = 0.0
    clashes = 0
    for i in range(len(atoms)):
        for j in range(i + 1, len(atoms)):
            d = float(np.linalg.norm((pos[i] - pos[j]) * unit))
            if d == 0.0 and atoms[i].clash and atoms[j].clash:
                clashes += 1
            if atoms[i].lj and atoms[j].lj and separation(i, j) > excl and d > 0:
                lj += lj_pair(atoms[i].element, atoms[j].element, d, params)
    return lj + penalty * clashes, clashes


class TestPlacement:
    def test_energy_matches_recomputation(self):
        topo = build_alanine_topology(2)
        for digits in [(0, 0, 0, 0), (1, 2, 0, 1), (2, 2, 2, 2), (0, 1, 2, 1)]:
            conf = place_and_minimize(digits, topo, MIXED_PARAMS, 1000.0)
            energy, clashes = recompute_energy(conf, topo, MIXED_PARAMS, 1000.0)
            assert conf.energy == pytest.approx(energy, rel=1e-10, abs=1e-10)
            assert conf.clashes == clashes

    def test_placement_is_minimal_over_candidates(self):
        topo = build_alanine_topology(2)
        digits = (1, 0, 2, 1)
        conf = place_and_minimize(digits, topo, MIXED_PARAMS, 1000.0)
        walk = decode_tetrahedral(digits, Encoding(TETRAHEDRAL, RELATIVE), PREFIX)
        turns = backbone_turn_indices(digits, PREFIX)
        candidates = [
            side_candidate_sites(a, walk.positions, turns)
            for a, _ in topo.side_atoms()
        ]
        best = math.inf
        for combo in itertools.product(*[range(len(c)) for c in candidates]):
            side_pos = np.array([candidates[s][c] for s, c in enumerate(combo)])
            trial = type(conf)(
                backbone_positions=walk.positions,
                side_positions=side_pos,
                energy=0.0,
                clashes=0,
            )
            energy, _ = recompute_energy(trial, topo, MIXED_PARAMS, 1000.0)
            best = min(best, energy)
        assert conf.energy == pytest.approx(best, rel=1e-10)

    def test_exclusion_rule_is_active(self):
        # with a shorter exclusion the bonded and angle pairs dominate the sum
        topo = build_alanine_topology(2)
        digits = (0, 1, 0, 1)
        loose = place_and_minimize(digits, topo, MIXED_PARAMS, 1000.0,
                                   lj_exclusion_bonds=2)
        tight = place_and_minimize(digits, topo, MIXED_PARAMS, 1000.0,
                                   lj_exclusion_bonds=1)
        assert abs(loose.energy - tight.energy) > 1.0

    def test_wrong_digit_count_rejected(self):
        topo = build_alanine_topology(2)
        with pytest.raises(EncodingError):
            place_and_minimize((0, 1), topo, MIXED_PARAMS, 1000.0)

    def test_negative_penalty_rejected(self):
        topo = build_alanine_topology(2)
        with pytest.raises(ValueError):
            place_and_minimize((0,) * 4, topo, MIXED_PARAMS, -1.0)

    def test_clash_free_energy_has_no_penalty_term(self):
        topo = build_alanine_topology(2)
        for digits in [(0, 1, 2, 0), (1, 1, 2, 2)]:
            a = place_and_minimize(digits, topo, MIXED_PARAMS, 1000.0)
            b = place_and_minimize(digits, topo, MIXED_PARAMS, 123.0)
            if a.clashes == 0:
                assert a.energy == pytest.approx(b.energy, rel=1e-12)

    def test_penalty_linear_in_clash_count(self):
        topo = build_alanine_topology(2)
        for digits in itertools.product(range(3), repeat=4):
            a = place_and_minimize(digits, topo, MIXED_PARAMS, 1000.0)
            if a.clashes:
                b = place_and_minimize(digits, topo, MIXED_PARAMS, 2000.0)
                # same assignment stays optimal at both penalties here, so the
                # difference isolates the clash term
                if a.clashes == b.clashes:
                    assert b.energy - a.energy == pytest.approx(
                        1000.0 * a.clashes, rel=1e-9
                    )
                break


class TestConformationExport:
    def test_csv_rows(self):
        topo = build_alanine_topology(2)
        conf = place_and_minimize((0, 1, 2, 0), topo, MIXED_PARAMS, 1000.0)
        rows = conformation_csv_rows(conf, topo, bond_length=1.5)
        assert rows[0] == "atom_index,element,x_angstrom,y_angstrom,z_angstrom"
        assert len(rows) == 1 + len(topo.all_atoms())
        first = rows[1].split(",")
        assert first[:2] == ["0", "N"]
        assert [float(c) for c in first[2:]] == [0.0, 0.0, 0.0]
        # second atom one bond away
        second = np.array([float(c) for c in rows[2].split(",")[2:]])
        assert np.linalg.norm(second) == pytest.approx(1.5, rel=1e-12)
