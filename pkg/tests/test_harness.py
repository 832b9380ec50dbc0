import os
from pathlib import Path

import numpy as np
import pytest

from quditfold.cost import WalkProblem, load_cost
from quditfold.errors import ConfigError
from quditfold.harness import (
    CROSSINGS_HEADER,
    LEDGER_HEADER,
    METRICS_HEADER,
    QUANTILES_HEADER,
    ExperimentConfig,
    RunArchive,
    apply_overrides,
    cmd_fold,
    cmd_saw,
    cmd_tune_penalty,
    config_lines,
    data_path,
    fmt,
    index_to_digits,
    oracle_enumerate,
    oracle_enumerate_peptide,
    parse_config_text,
    report_lines,
)
from quditfold.lattice import ABSOLUTE, SQUARE, Encoding
from quditfold.peptide import (
    build_alanine_topology,
    parse_params,
    topology_to_lines,
)

ABS_SQ = Encoding(SQUARE, ABSOLUTE)


class TestFormatting:
    def test_fmt_pins(self):
        assert fmt(True) == "1"
        assert fmt(False) == "0"
        assert fmt(0.1) == "0.1"
        assert fmt(1.0) == "1.0"
        assert fmt(3) == "3"
        assert fmt(None) == ""
        assert fmt("absolute") == "absolute"

    def test_fmt_floats_round_trip(self, rng):
        for x in rng.normal(size=20):
            assert float(fmt(float(x))) == float(x)


class TestConfigParsing:
    def test_key_value_lines(self):
        text = "steps = 8\n# full-line comment\n\nencoding=relative # trailing\n"
        assert parse_config_text(text) == {"steps": "8", "encoding": "relative"}

    def test_malformed_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config_text("steps = 8\nnonsense\n")

    def test_typed_overrides(self):
        cfg = apply_overrides(
            ExperimentConfig(),
            {
                "steps": "8",
                "lam": "0.5",
                "encoding": "relative",
                "p-values": "1,2,3",
                "cache-cost": "true",
                "quantile_qs": "0.1, 0.5",
            },
        )
        assert cfg.steps == 8
        assert cfg.lam == 0.5
        assert cfg.encoding == "relative"
        assert cfg.p_values == (1, 2, 3)
        assert cfg.cache_cost is True
        assert cfg.quantile_qs == (0.1, 0.5)

    def test_empty_tuple_override(self):
        cfg = apply_overrides(ExperimentConfig(), {"sizes": ""})
        assert cfg.sizes == ()

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            apply_overrides(ExperimentConfig(), {"stepz": "8"})

    def test_bad_values(self):
        with pytest.raises(ConfigError):
            apply_overrides(ExperimentConfig(), {"steps": "eight"})
        with pytest.raises(ConfigError):
            apply_overrides(ExperimentConfig(), {"cache_cost": "maybe"})
        with pytest.raises(ConfigError):
            apply_overrides(ExperimentConfig(), {"p_values": "1,x"})

    def test_snapshot_round_trips(self):
        cfg = apply_overrides(
            ExperimentConfig(),
            {"steps": "9", "lam": "0.3", "p_values": "2,4", "out_dir": "zz"},
        )
        parsed = parse_config_text("\n".join(config_lines(cfg)))
        assert apply_overrides(ExperimentConfig(), parsed) == cfg


class TestIndexing:
    def test_least_significant_first(self):
        assert index_to_digits(5, (4, 4)) == (1, 1)
        assert index_to_digits(5, (3, 3)) == (2, 1)
        assert index_to_digits(0, (3, 3, 3)) == (0, 0, 0)

    def test_mixed_radices_round_trip(self):
        radices = (2, 3, 4)
        for x in range(24):
            digits = index_to_digits(x, radices)
            assert all(0 <= d < r for d, r in zip(digits, radices))
            back = digits[0] + 2 * digits[1] + 6 * digits[2]
            assert back == x


class TestRunArchive:
    def test_atomic_write_and_contents(self, tmp_path):
        out = tmp_path / "run"
        archive = RunArchive(str(out))
        archive.add_text("notes.txt", ["alpha", "beta"])
        archive.add_table("t.csv", "a,b", ["1,2", "3,4"])
        archive.write()
        assert (out / "notes.txt").read_text() == "alpha\nbeta\n"
        assert (out / "t.csv").read_text() == "a,b\n1,2\n3,4\n"
        leftovers = [p for p in tmp_path.iterdir() if p.name != "run"]
        assert leftovers == []

    def test_existing_directory_rejected(self, tmp_path):
        out = tmp_path / "run"
        out.mkdir()
        archive = RunArchive(str(out))
        archive.add_text("notes.txt", ["x"])
        with pytest.raises(ConfigError, match="exists"):
            archive.write()


class TestOracles:
    def test_walk_oracle_stats(self):
        stats = oracle_enumerate(WalkProblem(6, ABS_SQ, lam=0.2))
        assert stats.n_configurations == 256
        assert stats.loop_count == 24  # all closures, self-intersecting included
        assert stats.zero_cost_count == 2  # crossing-free loops only
        assert stats.min_value == 0.0
        assert stats.values.size == 256
        assert stats.mean_value == pytest.approx(float(stats.values.mean()))

    def test_peptide_oracle_stats(self):
        topo = build_alanine_topology(2)
        params = parse_params(data_path("hcon_default.params").read_text())
        stats = oracle_enumerate_peptide(topo, params, 1000.0)
        assert stats.n_configurations == 81
        assert stats.clash_free_count > 0
        assert stats.min_lj_clash_free >= stats.min_value


def tiny_saw_config(out_dir, **extra):
    overrides = {
        "steps": "6",
        "p_values": "1,2",
        "attempts": "6",
        "polish_top": "2",
        "maxiter": "40",
        "sizes": "",
        "aa_ks": "2",
        "extrapolate_from": "2",
        "max_chain_p": "3",
        "chain_maxiter": "15",
        "out_dir": str(out_dir),
    }
    overrides.update(extra)
    return apply_overrides(ExperimentConfig(), overrides)


def tiny_fold_config(tmp_path, out_dir, **extra):
    topo_file = tmp_path / "di.topology"
    topo_file.write_text("\n".join(topology_to_lines(build_alanine_topology(2))) + "\n")
    overrides = {
        "problem": "fold",
        "topology_file": str(topo_file),
        "p_values": "1,2",
        "attempts": "4",
        "polish_top": "2",
        "maxiter": "40",
        "chain_maxiter": "10",
        "extrapolate_from": "2",
        "max_chain_p": "3",
        "anneal_ps": "1",
        "anneal_starts": "8",
        "quantile_ps": "2",
        "quantile_qs": "0.01,0.1,1.0",
        "hist_ps": "0,2",
        "bins": "12",
        "mds_top": "40",
        "out_dir": str(out_dir),
    }
    overrides.update(extra)
    return apply_overrides(ExperimentConfig(), overrides)


def read_rows(path):
    lines = Path(path).read_text().splitlines()
    return lines[0], [line.split(",") for line in lines[1:]]


class TestSawExperiment:
    def test_end_to_end_archive(self, tmp_path):
        out = tmp_path / "saw"
        archive = cmd_saw(tiny_saw_config(out, cache_cost="1"))
        archive.write()
        names = sorted(os.listdir(out))
        assert {
            "config.txt", "ledger.csv", "metrics.csv", "crossings.csv",
            "walk_best.csv", "saw_cost.qcv",
        } <= set(names)

        header, rows = read_rows(out / "ledger.csv")
        assert header == LEDGER_HEADER
        assert all(len(r) == len(LEDGER_HEADER.split(",")) for r in rows)
        # every polished attempt improves on (or matches) its start
        for r in rows:
            assert float(r[5]) <= float(r[4]) + 1e-9

        header, rows = read_rows(out / "metrics.csv")
        assert header == METRICS_HEADER
        metrics = {(r[0], r[1], int(r[2]), r[3]): float(r[4]) for r in rows}
        label = "saw6_absolute"
        # depth-0 state is exactly uniform: p_saw = 2/256
        assert metrics[("p_saw", label, 0, "uniform")] == pytest.approx(2 / 256)
        # "best" rows restate the lowest-energy strategy at each depth
        for p in (1, 2):
            assert metrics[("expected_cost", label, p, "best")] == metrics[
                ("expected_cost", label, p, "random")
            ]
            assert metrics[("p_saw", label, p, "best")] == metrics[
                ("p_saw", label, p, "random")
            ]
        assert ("p_saw", label, 3, "extrapolated") in metrics  # chain extends depth
        for key, value in metrics.items():
            if key[0] == "p_saw":
                assert 0.0 <= value <= 1.0
        # amplitude-amplification reference rows exist for the requested k
        assert ("amplitude_amplification", label, 2, "analytic") in metrics

        header, rows = read_rows(out / "crossings.csv")
        assert header == CROSSINGS_HEADER

        cached = load_cost(out / "saw_cost.qcv")
        assert cached.values.size == 256

    def test_reruns_are_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        cmd_saw(tiny_saw_config(a)).write()
        cmd_saw(tiny_saw_config(b)).write()
        names = sorted(os.listdir(a))
        assert names == sorted(os.listdir(b))
        for name in names:
            if name == "config.txt":
                continue  # embeds the differing out_dir
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_size_sweep_and_fits(self, tmp_path):
        out = tmp_path / "sweep"
        cfg = tiny_saw_config(
            out, sizes="6,8", sweep_attempts="6", sweep_polish_top="2",
            p_values="1", max_chain_p="0", aa_ks="1",
        )
        cmd_saw(cfg).write()
        _, rows = read_rows(out / "metrics.csv")
        metrics = {(r[0], r[1], int(r[2]), r[3]): float(r[4]) for r in rows}
        assert metrics[("p_saw", "saw6_absolute", 0, "uniform")] == pytest.approx(
            2 / 256
        )
        assert metrics[("p_saw", "saw8_absolute", 0, "uniform")] == pytest.approx(
            9 / 4096
        )
        assert ("fit_slope_log10", "sweep_random_absolute", 0, "fit") in metrics
        assert ("fit_slope_log10", "sweep_qaoa_p1_absolute", 0, "fit") in metrics


class TestFoldExperiment:
    def test_end_to_end_archive(self, tmp_path):
        out = tmp_path / "fold"
        archive = cmd_fold(tiny_fold_config(tmp_path, out))
        archive.write()
        names = set(os.listdir(out))
        assert {
            "config.txt", "ledger.csv", "metrics.csv", "quantiles.csv",
            "hist_total_p0.csv", "hist_total_p2.csv", "hist_noclash_p0.csv",
            "hist_noclash_p2.csv", "top_valid.csv", "top_invalid.csv",
            "lowest_energy.csv", "conformation_rank1.csv", "mds.csv",
        } <= names

        _, rows = read_rows(out / "metrics.csv")
        metrics = {(r[0], r[1], int(r[2]), r[3]): float(r[4]) for r in rows}
        label = "fold4turns"
        # the depth-0 state is uniform, so its dimensionless energy is 1
        assert metrics[("dimensionless_total", label, 0, "uniform")] == pytest.approx(
            1.0
        )
        assert ("lj_lower_bound_kcal_mol", label, 0, "analytic") in metrics
        assert metrics[("n_configurations", label, 0, "analytic")] == 81
        assert ("dimensionless_total", label, 1, "annealing_schedule") in metrics
        assert ("dimensionless_total", label, 1, "annealing_init") in metrics
        # best-so-far curve is non-increasing in depth
        curve = sorted(
            (p, v)
            for (m, lbl, p, s), v in metrics.items()
            if m == "dimensionless_total_bestsofar"
        )
        assert curve, "best-so-far rows missing"
        values = [v for _, v in curve]
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))

        header, rows = read_rows(out / "quantiles.csv")
        assert header == QUANTILES_HEADER
        assert {r[0] for r in rows} == {"p_random", "quantile_ratio"}

        header, rows = read_rows(out / "hist_total_p0.csv")
        assert header == "bin_left_kcal_mol,bin_right_kcal_mol,probability"
        assert sum(float(r[2]) for r in rows) == pytest.approx(1.0)

        header, rows = read_rows(out / "top_valid.csv")
        assert header == (
            "rank,config_index,digits,probability,energy_kcal_mol,"
            "lj_kcal_mol,clashes"
        )
        assert all(r[6] == "0" for r in rows)

        header, rows = read_rows(out / "conformation_rank1.csv")
        assert header == "atom_index,element,x_angstrom,y_angstrom,z_angstrom"

        header, rows = read_rows(out / "mds.csv")
        assert header == "x,y,probability,energy_kcal_mol"
        assert 0 < len(rows) <= 40

    def test_reruns_are_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        cmd_fold(tiny_fold_config(tmp_path, a)).write()
        cmd_fold(tiny_fold_config(tmp_path, b)).write()
        for name in sorted(os.listdir(a)):
            if name == "config.txt":
                continue
            assert (a / name).read_bytes() == (b / name).read_bytes(), name


class TestTuneExperiment:
    def test_end_to_end(self, tmp_path):
        out = tmp_path / "tune"
        cfg = apply_overrides(
            ExperimentConfig(),
            {
                "problem": "tune",
                "tune_steps": "6",
                "lambda_grid": "0.1,0.3",
                "tune_ps": "1",
                "tune_attempts": "6",
                "tune_polish_top": "2",
                "maxiter": "40",
                "out_dir": str(out),
            },
        )
        cmd_tune_penalty(cfg).write()
        header, rows = read_rows(out / "tune.csv")
        assert header == "lambda,p,valid_probability"
        assert {r[0] for r in rows} == {"0.1", "0.3"}
        notes = (out / "notes.txt").read_text()
        assert "recommended_lambda = " in notes
        recommended = float(notes.split("recommended_lambda = ")[1].split()[0])
        assert recommended in (0.1, 0.3)


class TestReport:
    def test_digest_mentions_headlines(self, tmp_path):
        out = tmp_path / "saw"
        cmd_saw(tiny_saw_config(out)).write()
        lines = report_lines(out)
        text = "\n".join(lines)
        assert "problem" in text
        assert "p_saw" in text
