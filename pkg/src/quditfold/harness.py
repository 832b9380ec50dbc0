"""Experiment recipes, configuration, archives, and brute-force oracles.

The harness turns a flat key=value configuration into a ``RunArchive``: a
directory of CSV files (run ledger, metric curves, histograms, conformation
tables, embeddings) plus the exact configuration snapshot that regenerates
them.  Given the same config and seed, a rerun reproduces every file
byte-for-byte.

Archives are written atomically: everything is staged into a temporary
sibling directory that is renamed into place at the end.
"""
from __future__ import annotations

import math
import os
import shutil
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import peptide as pep
from .cost import (
    DEFAULT_MEMORY_CAP_BYTES,
    CostVector,
    WalkProblem,
    build_peptide_cost,
    build_saw_cost,
    save_cost,
)
from .errors import ConfigError, MemoryCapError
from .lattice import (
    ABSOLUTE,
    DEFAULT_PREFIX_TURNS,
    RELATIVE,
    SQUARE,
    TETRAHEDRAL,
    Encoding,
    FixedPrefix,
    decode_square,
    decode_tetrahedral,
    walk_csv_rows,
)
from .metrics import (
    collision_entropy,
    crossing_distribution,
    dimensionless_energy,
    clash_probability,
    fit_exponential,
    mds_embed,
    quantile_ratio,
    random_guess_quantile,
    rms_distance_matrix,
    shannon_entropy,
)
from .optimize import (
    SAW_BETA_RANGE,
    SAW_GAMMA_RANGE,
    SCALED_RANGE,
    STRATEGY_RANDOM,
    InitStrategy,
    OptimizationRun,
    anneal_strategies,
    extrapolate,
    local_optimize,
    multistart,
    rescale_gamma,
    tune_penalty,
)
from .qsim import (
    amplitude_amplification_probability,
    born_probabilities,
    qaoa_state,
)

LEDGER_HEADER = (
    "problem,p,strategy,seed,init_objective,final_objective,"
    "iterations,grad_norm,valid_prob"
)
METRICS_HEADER = "metric,problem,p,strategy,value"
CROSSINGS_HEADER = "metric,problem,p,strategy,value,k"
QUANTILES_HEADER = "metric,problem,p,strategy,value,q"


def fmt(x) -> str:
    """Canonical text for one CSV cell (floats shortest exact round-trip)."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def data_path(name: str) -> Path:
    """Path of a packaged data file."""
    return Path(resources.files("quditfold.data") / name)


DEFAULT_TOPOLOGY = "alanine_tetrapeptide.topology"
DEFAULT_PARAMS = "hcon_default.params"


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """Every knob of an experiment; 0/empty means problem-dependent default."""

    problem: str = "saw"  # saw | fold | tune-penalty

    # walk problem
    steps: int = 10
    encoding: str = "absolute"  # absolute | relative
    lam: float = 0.2
    sizes: tuple[int, ...] = (6, 8, 10, 12)
    sweep_p: int = 1
    sweep_attempts: int = 200
    sweep_polish_top: int = 20

    # peptide problem
    topology_file: str = ""  # empty -> packaged alanine tetrapeptide
    params_file: str = ""  # empty -> packaged placeholder parameters
    clash_lambda: float = 1000.0
    lj_exclusion_bonds: int = 2
    bond_length: float = 1.5

    # ansatz / optimization
    mixer: str = "inversion"  # inversion | qudit | qubit_x
    p_values: tuple[int, ...] = ()
    attempts: int = 0
    polish_top: int = 0
    screen_maxiter: int = 0
    maxiter: int = 500
    chain_maxiter: int = 0  # 0 -> maxiter
    gtol: float = 1e-8
    seed: int = 1234
    gamma_scale: float = 0.0  # 0 -> automatic
    extrapolate_from: int = 5
    max_chain_p: int = 0  # 0 -> max(p_values)
    anneal_ps: tuple[int, ...] = ()
    anneal_starts: int = 50

    # metrics / outputs
    bins: int = 60
    top_k: int = 10
    quantile_ps: tuple[int, ...] = (2, 3, 8, 62)
    quantile_qs: tuple[float, ...] = ()
    hist_ps: tuple[int, ...] = ()
    mds_top: int = 1000
    entropy_bits: bool = False
    aa_ks: tuple[int, ...] = ()

    # penalty tuning
    lambda_grid: tuple[float, ...] = (0.05, 0.1, 0.2, 0.3, 0.5, 1.0)
    tune_steps: int = 8
    tune_ps: tuple[int, ...] = (1, 2, 3)
    tune_attempts: int = 200
    tune_polish_top: int = 20

    # resources
    memory_cap_bytes: int = DEFAULT_MEMORY_CAP_BYTES
    threads: int = 1
    out_dir: str = "archive"
    cache_cost: bool = False


_TUPLE_FIELDS = {
    "sizes": int,
    "p_values": int,
    "anneal_ps": int,
    "quantile_ps": int,
    "quantile_qs": float,
    "hist_ps": int,
    "aa_ks": int,
    "lambda_grid": float,
    "tune_ps": int,
}


def _coerce(name: str, text: str, kind):
    text = text.strip()
    try:
        if name in _TUPLE_FIELDS:
            elem = _TUPLE_FIELDS[name]
            if not text:
                return ()
            return tuple(elem(tok.strip()) for tok in text.split(","))
        if kind is bool:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name!r}: {text!r}") from exc


def apply_overrides(config: ExperimentConfig, overrides: dict[str, str]) -> ExperimentConfig:
    """Typed override of config fields from raw strings (CLI/file input)."""
    kinds = {f.name: type(getattr(config, f.name)) for f in fields(config)}
    updates = {}
    for key, text in overrides.items():
        name = key.replace("-", "_")
        if name not in kinds:
            raise ConfigError(f"unknown config key {key!r}")
        base = kinds[name] if name not in _TUPLE_FIELDS else tuple
        updates[name] = _coerce(name, text, base)
    return replace(config, **updates)


def parse_config_text(text: str) -> dict[str, str]:
    """key = value lines; '#' starts a comment; blank lines ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config_file(path) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text)


def config_lines(config: ExperimentConfig) -> list[str]:
    """Canonical snapshot, one sorted key = value per line."""
    lines = []
    for f in sorted(fields(config), key=lambda f: f.name):
        v = getattr(config, f.name)
        if isinstance(v, tuple):
            text = ",".join(fmt(x) for x in v)
        else:
            text = fmt(v)
        lines.append(f"{f.name} = {text}")
    return lines


# ---------------------------------------------------------------------------
# archives
# ---------------------------------------------------------------------------


@dataclass
class RunArchive:
    """In-memory archive: named files, written atomically as one directory."""

    out_dir: str
    files: dict[str, object] = field(default_factory=dict)  # name -> str | bytes

    def add_table(self, name: str, header: str, rows) -> None:
        self.files[name] = "\n".join([header, *rows]) + "\n"

    def add_text(self, name: str, lines) -> None:
        self.files[name] = "\n".join(lines) + "\n"

    def write(self) -> Path:
        out = Path(self.out_dir)
        if out.exists():
            raise ConfigError(
                f"output directory {out} already exists; pick a fresh --out-dir"
            )
        out.parent.mkdir(parents=True, exist_ok=True)
        tmp = out.parent / f".{out.name}.tmp{os.getpid()}"
        if tmp.exists():
            shutil.rmtree(tmp)
        tmp.mkdir()
        try:
            for name, payload in sorted(self.files.items()):
                target = tmp / name
                if isinstance(payload, bytes):
                    target.write_bytes(payload)
                else:
                    target.write_text(payload)
            os.replace(tmp, out)
        except BaseException:
            shutil.rmtree(tmp, ignore_errors=True)
            raise
        return out


def index_to_digits(x: int, radices) -> tuple[int, ...]:
    """Mixed-radix digits of a configuration index (first digit least significant)."""
    digits = []
    for d in radices:
        digits.append(x % d)
        x //= d
    return tuple(digits)


def _ledger_row(problem: str, p: int, run: OptimizationRun) -> str:
    return ",".join(
        [
            problem,
            str(p),
            run.strategy,
            str(run.seed),
            fmt(run.initial_objective),
            fmt(run.final_objective),
            str(run.iterations),
            fmt(run.grad_norm),
            fmt(run.valid_prob),
        ]
    )


def _metric_row(metric, problem, p, strategy, value, qualifier=None) -> str:
    cells = [metric, problem, str(p), strategy, fmt(value)]
    if qualifier is not None:
        cells.append(fmt(qualifier))
    return ",".join(cells)


# ---------------------------------------------------------------------------
# brute-force oracles
# ---------------------------------------------------------------------------


@dataclass
class OracleStats:
    """Independent exhaustive statistics for cross-checking cost vectors."""

    n_configurations: int
    values: np.ndarray
    zero_cost_count: int
    loop_count: int | None = None
    clash_free_count: int | None = None
    min_value: float = 0.0
    max_value: float = 0.0
    mean_value: float = 0.0
    min_lj_clash_free: float | None = None


_ORACLE_STEPS = {0: (1, 0), 1: (0, 1), 2: (-1, 0), 3: (0, -1)}


def oracle_enumerate(problem: WalkProblem) -> OracleStats:
    """Second implementation of the walk costs, via hash-map site counting.

    Deliberately shares no code with the vectorized builders: digits are
    decoded with plain integer arithmetic and crossings counted from a
    site-multiplicity dictionary.
    """
    radix = problem.encoding.radix
    relative = problem.encoding.mode == RELATIVE
    steps = problem.steps
    prefix = list(problem.prefix.turns)
    n = problem.n_configurations
    values = np.empty(n, dtype=np.float64)
    zero_cost = 0
    loops = 0
    for x in range(n):
        rem = x
        t = prefix[-1]
        px = py = 0
        sites: dict[tuple[int, int], int] = {(0, 0): 1}
        for i in range(steps):
            if i < len(prefix):
                turn = prefix[i]
            else:
                digit = rem % radix
                rem //= radix
                turn = (t + 1 - digit) % 4 if relative else digit
            t = turn
            dx, dy = _ORACLE_STEPS[turn]
            px += dx
            py += dy
            key = (px, py)
            sites[key] = sites.get(key, 0) + 1
        pairs = sum(c * (c - 1) // 2 for c in sites.values())
        end2 = px * px + py * py
        if end2 == 0:
            pairs -= 1  # the (first, last) coincidence is loop closure, not a crossing
            loops += 1
        value = pairs + problem.lam * end2
        values[x] = value
        if pairs == 0 and end2 == 0:
            zero_cost += 1
    return OracleStats(
        n_configurations=n,
        values=values,
        zero_cost_count=zero_cost,
        loop_count=loops,
        min_value=float(values.min()),
        max_value=float(values.max()),
        mean_value=float(values.mean()),
    )


def oracle_enumerate_peptide(
    topology: pep.PeptideTopology,
    params: pep.HconParams,
    lam: float,
    prefix: FixedPrefix = FixedPrefix(DEFAULT_PREFIX_TURNS),
    indices=None,
    bond_length: float = 1.5,
    lj_exclusion_bonds: int = pep.DEFAULT_LJ_EXCLUSION_BONDS,
) -> OracleStats:
    """Reference peptide energies via the pure placement routine.

    ``indices`` restricts the enumeration to a subset of configuration
    indices (the full 3^m set when omitted).
    """
    m = topology.free_turns
    n = 3**m
    if indices is None:
        indices = range(n)
    indices = list(indices)
    values = np.empty(len(indices), dtype=np.float64)
    clash_free = 0
    min_lj = None
    for row, x in enumerate(indices):
        conf = pep.place_and_minimize(
            index_to_digits(x, (3,) * m),
            topology,
            params,
            lam,
            prefix=prefix,
            bond_length=bond_length,
            lj_exclusion_bonds=lj_exclusion_bonds,
        )
        values[row] = conf.energy
        if conf.clashes == 0:
            clash_free += 1
            lj = conf.energy  # no penalty when clash-free
            min_lj = lj if min_lj is None else min(min_lj, lj)
    return OracleStats(
        n_configurations=len(indices),
        values=values,
        zero_cost_count=int(np.sum(values == 0.0)),
        clash_free_count=clash_free,
        min_value=float(values.min()),
        max_value=float(values.max()),
        mean_value=float(values.mean()),
        min_lj_clash_free=min_lj,
    )


# ---------------------------------------------------------------------------
# shared experiment plumbing
# ---------------------------------------------------------------------------


def _encoding(config: ExperimentConfig) -> Encoding:
    if config.encoding == "absolute":
        return Encoding(SQUARE, ABSOLUTE)
    if config.encoding == "relative":
        return Encoding(SQUARE, RELATIVE)
    raise ConfigError(f"unknown encoding {config.encoding!r}")


def _saw_defaults(config: ExperimentConfig):
    p_values = config.p_values or tuple(range(1, 11))
    attempts = config.attempts or 2000
    polish = config.polish_top or 50
    gamma_scale = config.gamma_scale or 1.0
    strategy = InitStrategy(STRATEGY_RANDOM, attempts, SAW_BETA_RANGE, SAW_GAMMA_RANGE)
    bounds = (SAW_BETA_RANGE, SAW_GAMMA_RANGE)
    return p_values, polish, gamma_scale, strategy, bounds


def _fold_defaults(config: ExperimentConfig, cv: CostVector):
    p_values = config.p_values or tuple(range(1, 15))
    attempts = config.attempts or 50
    polish = config.polish_top or 10
    gamma_scale = config.gamma_scale or rescale_gamma(cv)
    strategy = InitStrategy(STRATEGY_RANDOM, attempts, SCALED_RANGE, SCALED_RANGE)
    bounds = (SCALED_RANGE, SCALED_RANGE)
    return p_values, polish, gamma_scale, strategy, bounds


def _run_depth_campaign(
    cv: CostVector,
    config: ExperimentConfig,
    p_values,
    polish,
    gamma_scale,
    strategy,
    bounds,
    problem_label: str,
    valid_mask: np.ndarray,
    ledger: list[str],
):
    """Random multistart per p, then the extrapolation chain with per-depth
    best-merge.  Returns {p: {strategy_name: OptimizationRun}}."""
    runs_by_p: dict[int, dict[str, OptimizationRun]] = {}

    def record(p, run):
        probs = born_probabilities(qaoa_state(cv, run.final_schedule))
        run.valid_prob = float(probs[valid_mask].sum())
        ledger.append(_ledger_row(problem_label, p, run))

    for p in p_values:
        best, attempts = multistart(
            cv,
            p,
            strategy,
            seed=config.seed + 7919 * p,
            mixer=config.mixer,
            gamma_scale=gamma_scale,
            bounds=bounds,
            polish_top=polish,
            screen_maxiter=config.screen_maxiter,
            maxiter=config.maxiter,
            gtol=config.gtol,
            keep_all=True,
        )
        for run in attempts:
            record(p, run)
        runs_by_p.setdefault(p, {})[STRATEGY_RANDOM] = best

    start_p = config.extrapolate_from
    max_chain = config.max_chain_p or (max(p_values) if p_values else 0)
    chain_maxiter = config.chain_maxiter or config.maxiter
    if start_p in runs_by_p and max_chain > start_p:
        current = runs_by_p[start_p][STRATEGY_RANDOM].final_schedule
        for p in range(start_p + 1, max_chain + 1):
            start = replace(extrapolate(current), strategy="extrapolated")
            run = local_optimize(
                cv,
                start,
                bounds=bounds,
                gtol=config.gtol,
                maxiter=chain_maxiter,
                seed=config.seed + p,
                strategy="extrapolated",
            )
            record(p, run)
            runs_by_p.setdefault(p, {})["extrapolated"] = run
            # best-merge: the chain continues from the better of the two
            current = run.final_schedule
            rand = runs_by_p[p].get(STRATEGY_RANDOM)
            if rand is not None and rand.final_objective < run.final_objective:
                current = rand.final_schedule
    return runs_by_p


def _best_run(runs: dict[str, OptimizationRun]) -> OptimizationRun:
    return min(runs.values(), key=lambda r: r.final_objective)


# ---------------------------------------------------------------------------
# saw experiment
# ---------------------------------------------------------------------------


def cmd_saw(config: ExperimentConfig) -> RunArchive:
    """Walk-sampling experiment: success probabilities vs depth, entropies,
    crossing distributions, amplitude-amplification baselines, size sweeps."""
    enc = _encoding(config)
    problem = WalkProblem(config.steps, enc, lam=config.lam)
    cv = build_saw_cost(problem, config.memory_cap_bytes)
    p_values, polish, gamma_scale, strategy, bounds = _saw_defaults(config)
    label = f"saw{config.steps}_{config.encoding}"

    valid = (cv.crossings == 0) & (cv.end_dist_sq == 0)
    n = cv.size
    uniform = np.full(n, 1.0 / n)
    p0 = float(valid.sum()) / n

    ledger: list[str] = []
    mrows: list[str] = []
    krows: list[str] = []
    notes: list[str] = []

    def emit_distribution_rows(p, strat, probs, objective_value):
        psaw = float(probs[valid].sum())
        mrows.append(_metric_row("p_saw", label, p, strat, psaw))
        mrows.append(_metric_row("expected_cost", label, p, strat, objective_value))
        if psaw > 0:
            mrows.append(
                _metric_row(
                    "collision_entropy", label, p, strat,
                    collision_entropy(probs, valid),
                )
            )
            unit = "bits" if config.entropy_bits else "nats"
            mrows.append(
                _metric_row(
                    f"shannon_entropy_{unit}", label, p, strat,
                    shannon_entropy(probs, valid, bits=config.entropy_bits),
                )
            )
        dist = crossing_distribution(probs, cv)
        for k, value in enumerate(dist.probs_by_k):
            krows.append(_metric_row("crossing_prob", label, p, strat, value, k))
        krows.append(
            _metric_row("crossing_prob_tail", label, p, strat, dist.tail,
                        len(dist.probs_by_k))
        )
        mrows.append(_metric_row("non_loop_prob", label, p, strat, dist.non_loop))
        return psaw

    emit_distribution_rows(0, "uniform", uniform, float(cv.values.mean()))

    runs_by_p = _run_depth_campaign(
        cv, config, p_values, polish, gamma_scale, strategy, bounds, label,
        valid, ledger
    )

    best_state_probs: dict[int, np.ndarray] = {}
    for p in sorted(runs_by_p):
        for strat, run in sorted(runs_by_p[p].items()):
            probs = born_probabilities(qaoa_state(cv, run.final_schedule))
            emit_distribution_rows(p, strat, probs, run.final_objective)
        best = _best_run(runs_by_p[p])
        probs = born_probabilities(qaoa_state(cv, best.final_schedule))
        best_state_probs[p] = probs
        emit_distribution_rows(p, "best", probs, best.final_objective)

    aa_ks = config.aa_ks or tuple(sorted(set(p_values) | {16}))
    for k in aa_ks:
        mrows.append(
            _metric_row(
                "amplitude_amplification", label, k, "analytic",
                amplitude_amplification_probability(p0, k),
            )
        )

    # fixed-depth size sweep and exponential fits
    sweep_sizes, sweep_p0, sweep_popt = [], [], []
    for size in config.sizes:
        try:
            sp = WalkProblem(size, enc, lam=config.lam)
            scv = build_saw_cost(sp, config.memory_cap_bytes)
        except MemoryCapError as exc:
            notes.append(f"size {size} skipped: {exc}")
            continue
        slabel = f"saw{size}_{config.encoding}"
        svalid = (scv.crossings == 0) & (scv.end_dist_sq == 0)
        s0 = float(svalid.sum()) / scv.size
        mrows.append(_metric_row("p_saw", slabel, 0, "uniform", s0))
        sbest = multistart(
            scv,
            config.sweep_p,
            InitStrategy(STRATEGY_RANDOM, config.sweep_attempts,
                         SAW_BETA_RANGE, SAW_GAMMA_RANGE),
            seed=config.seed + 104729 * size,
            mixer=config.mixer,
            gamma_scale=gamma_scale,
            bounds=bounds,
            polish_top=config.sweep_polish_top,
            maxiter=config.maxiter,
            gtol=config.gtol,
        )
        sprobs = born_probabilities(qaoa_state(scv, sbest.final_schedule))
        sbest.valid_prob = float(sprobs[svalid].sum())
        ledger.append(_ledger_row(slabel, config.sweep_p, sbest))
        mrows.append(
            _metric_row("p_saw", slabel, config.sweep_p, STRATEGY_RANDOM,
                        sbest.valid_prob)
        )
        if s0 > 0 and sbest.valid_prob > 0:
            sweep_sizes.append(size)
            sweep_p0.append(s0)
            sweep_popt.append(sbest.valid_prob)
    if len(sweep_sizes) >= 2:
        for name, ys in (("random", sweep_p0), (f"qaoa_p{config.sweep_p}", sweep_popt)):
            intercept, slope, corr = fit_exponential(sweep_sizes, ys)
            fit_label = f"sweep_{name}_{config.encoding}"
            mrows.append(_metric_row("fit_intercept_log10", fit_label, 0, "fit", intercept))
            mrows.append(_metric_row("fit_slope_log10", fit_label, 0, "fit", slope))
            mrows.append(_metric_row("fit_correlation", fit_label, 0, "fit", corr))

    archive = RunArchive(config.out_dir)
    archive.add_text("config.txt", config_lines(config))
    archive.add_table("ledger.csv", LEDGER_HEADER, ledger)
    archive.add_table("metrics.csv", METRICS_HEADER, mrows)
    archive.add_table("crossings.csv", CROSSINGS_HEADER, krows)
    if notes:
        archive.add_text("notes.txt", notes)

    # sample walk: most probable valid configuration of the deepest state
    if best_state_probs:
        p_last = max(best_state_probs)
        probs = best_state_probs[p_last].copy()
        probs[~valid] = -1.0
        top = int(np.argmax(probs))
        walk = decode_square(index_to_digits(top, cv.radices), enc, problem.prefix)
        archive.add_text("walk_best.csv", walk_csv_rows(walk))
    if config.cache_cost:
        cache = Path(config.out_dir + ".cost.tmp")
        save_cost(cv, cache)
        archive.files["saw_cost.qcv"] = cache.read_bytes()
        cache.unlink()
    return archive


# ---------------------------------------------------------------------------
# fold experiment
# ---------------------------------------------------------------------------


def _load_peptide(config: ExperimentConfig):
    topo_path = Path(config.topology_file) if config.topology_file else data_path(
        DEFAULT_TOPOLOGY
    )
    params_path = Path(config.params_file) if config.params_file else data_path(
        DEFAULT_PARAMS
    )
    for path in (topo_path, params_path):
        if not path.exists():
            raise ConfigError(f"missing input file: {path}")
    return pep.parse_topology(topo_path.read_text()), pep.parse_params(
        params_path.read_text()
    )


def cmd_fold(config: ExperimentConfig) -> RunArchive:
    """Peptide experiment: three strategies over the depth range, dimensionless
    energy and clash curves, histograms, top conformations, quantile ratios
    against random guessing, and an MDS embedding of the sampled ensemble."""
    topology, params = _load_peptide(config)
    cv = build_peptide_cost(
        topology,
        params,
        config.clash_lambda,
        bond_length=config.bond_length,
        lj_exclusion_bonds=config.lj_exclusion_bonds,
        memory_cap_bytes=config.memory_cap_bytes,
    )
    p_values, polish, gamma_scale, strategy, bounds = _fold_defaults(config, cv)
    label = f"fold{len(cv.radices)}turns"
    n = cv.size
    uniform = np.full(n, 1.0 / n)

    e_min = float(cv.values.min())
    e_rand = float(cv.values.mean())
    noclash = cv.clashes == 0
    ncl_lj = cv.lj_only[noclash]
    ncl_min = float(ncl_lj.min())
    ncl_rand = float(ncl_lj.mean())
    bound = pep.lj_lower_bound(topology, params)

    ledger: list[str] = []
    mrows: list[str] = []
    qrows: list[str] = []

    def emit_rows(p, strat, probs, e_total):
        mrows.append(_metric_row("expected_energy_kcal_mol", label, p, strat, e_total))
        mrows.append(
            _metric_row(
                "dimensionless_total", label, p, strat,
                dimensionless_energy(e_total, e_rand, e_min),
            )
        )
        mass = float(probs[noclash].sum())
        mrows.append(
            _metric_row("clash_prob", label, p, strat,
                        clash_probability(probs, cv.clashes))
        )
        if mass > 0:
            e_ncl = float(np.dot(probs[noclash], ncl_lj)) / mass
            mrows.append(
                _metric_row(
                    "dimensionless_noclash", label, p, strat,
                    dimensionless_energy(e_ncl, ncl_rand, ncl_min),
                )
            )

    emit_rows(0, "uniform", uniform, e_rand)

    runs_by_p = _run_depth_campaign(
        cv, config, p_values, polish, gamma_scale, strategy, bounds, label,
        noclash, ledger
    )

    anneal_ps = config.anneal_ps
    if not anneal_ps and config.problem == "fold":
        upper = max([*p_values, config.max_chain_p or 0])
        anneal_ps = tuple(p for p in (1, 2, 3, 5, 8, 12, 16, 20) if p <= upper)
    for p in anneal_ps:
        ramp, init = anneal_strategies(
            cv,
            p,
            mixer=config.mixer,
            seed=config.seed + 31 * p,
            gamma_scale=gamma_scale,
            starts=config.anneal_starts,
            bounds=bounds,
            maxiter=config.maxiter,
        )
        for run in (ramp, init):
            probs = born_probabilities(qaoa_state(cv, run.final_schedule))
            run.valid_prob = float(probs[noclash].sum())
            ledger.append(_ledger_row(label, p, run))
            emit_rows(p, run.strategy, probs, run.final_objective)
            runs_by_p.setdefault(p, {})[run.strategy] = run

    best_probs: dict[int, np.ndarray] = {}
    best_sofar = math.inf
    for p in sorted(runs_by_p):
        merged = {
            s: r for s, r in runs_by_p[p].items()
            if s in (STRATEGY_RANDOM, "extrapolated")
        }
        for strat, run in sorted(merged.items()):
            probs = born_probabilities(qaoa_state(cv, run.final_schedule))
            emit_rows(p, strat, probs, run.final_objective)
        if not merged:
            continue
        best = _best_run(merged)
        probs = born_probabilities(qaoa_state(cv, best.final_schedule))
        best_probs[p] = probs
        emit_rows(p, "best", probs, best.final_objective)
        best_sofar = min(
            best_sofar, dimensionless_energy(best.final_objective, e_rand, e_min)
        )
        mrows.append(
            _metric_row("dimensionless_total_bestsofar", label, p, "best", best_sofar)
        )

    # quantile-vs-random-guessing curves
    qs = config.quantile_qs or tuple(np.logspace(-4, 0, 25))
    for p in config.quantile_ps:
        if p not in best_probs:
            continue
        probs = best_probs[p]
        for q in qs:
            pr = random_guess_quantile(probs, q, p)
            qrows.append(_metric_row("p_random", label, p, "best", pr, q))
            qrows.append(
                _metric_row("quantile_ratio", label, p, "best",
                            quantile_ratio(probs, q, p), q)
            )

    archive = RunArchive(config.out_dir)
    archive.add_text("config.txt", config_lines(config))

    # energy histograms
    hist_ps = config.hist_ps or ((0, max(best_probs)) if best_probs else (0,))
    for p in hist_ps:
        probs = uniform if p == 0 else best_probs.get(p)
        if probs is None:
            continue
        edges = np.linspace(bound, float(cv.values.max()), config.bins + 1)
        weights, _ = np.histogram(cv.values, bins=edges, weights=probs)
        rows = [
            f"{fmt(edges[i])},{fmt(edges[i + 1])},{fmt(weights[i])}"
            for i in range(config.bins)
        ]
        archive.add_table(
            f"hist_total_p{p}.csv",
            "bin_left_kcal_mol,bin_right_kcal_mol,probability",
            rows,
        )
        ncl_edges = np.linspace(bound, float(ncl_lj.max()), config.bins + 1)
        ncl_weights, _ = np.histogram(ncl_lj, bins=ncl_edges, weights=probs[noclash])
        rows = [
            f"{fmt(ncl_edges[i])},{fmt(ncl_edges[i + 1])},{fmt(ncl_weights[i])}"
            for i in range(config.bins)
        ]
        archive.add_table(
            f"hist_noclash_p{p}.csv",
            "bin_left_kcal_mol,bin_right_kcal_mol,probability",
            rows,
        )

    # top conformations of the deepest distribution
    if best_probs:
        p_last = max(best_probs)
        probs = best_probs[p_last]
        order = np.argsort(-probs, kind="stable")

        def conf_row(rank, x):
            digits = index_to_digits(int(x), cv.radices)
            return ",".join(
                [
                    str(rank),
                    str(int(x)),
                    "".join(map(str, digits)),
                    fmt(float(probs[x])),
                    fmt(float(cv.values[x])),
                    fmt(float(cv.lj_only[x])),
                    str(int(cv.clashes[x])),
                ]
            )

        header = "rank,config_index,digits,probability,energy_kcal_mol,lj_kcal_mol,clashes"
        valid_idx = [x for x in order if noclash[x]][: config.top_k]
        invalid_idx = [x for x in order if not noclash[x]][: config.top_k]
        archive.add_table(
            "top_valid.csv", header,
            [conf_row(i + 1, x) for i, x in enumerate(valid_idx)],
        )
        archive.add_table(
            "top_invalid.csv", header,
            [conf_row(i + 1, x) for i, x in enumerate(invalid_idx)],
        )
        lowest = np.argsort(cv.values, kind="stable")[:3]
        archive.add_table(
            "lowest_energy.csv", header,
            [conf_row(i + 1, x) for i, x in enumerate(lowest)],
        )
        for rank, x in enumerate(lowest, 1):
            conf = pep.place_and_minimize(
                index_to_digits(int(x), cv.radices),
                topology,
                params,
                config.clash_lambda,
                bond_length=config.bond_length,
                lj_exclusion_bonds=config.lj_exclusion_bonds,
            )
            archive.add_text(
                f"conformation_rank{rank}.csv",
                pep.conformation_csv_rows(conf, topology, config.bond_length),
            )

        # MDS embedding over the most probable conformations
        top = order[: min(config.mds_top, n)]
        unit = config.bond_length / math.sqrt(3.0)
        prefix = FixedPrefix(DEFAULT_PREFIX_TURNS)
        tet = Encoding(TETRAHEDRAL, RELATIVE)
        positions = np.empty((len(top), len(topology.backbone), 3))
        for i, x in enumerate(top):
            walk = decode_tetrahedral(
                index_to_digits(int(x), cv.radices), tet, prefix,
                bond_length=config.bond_length,
            )
            positions[i] = walk.positions * unit
        points, _, stress = mds_embed(rms_distance_matrix(positions))
        mrows.append(_metric_row("mds_relative_stress", label, p_last, "best", stress))
        archive.add_table(
            "mds.csv",
            "x,y,probability,energy_kcal_mol",
            [
                f"{fmt(points[i, 0])},{fmt(points[i, 1])},"
                f"{fmt(float(probs[x]))},{fmt(float(cv.values[x]))}"
                for i, x in enumerate(top)
            ],
        )

    mrows.append(_metric_row("lj_lower_bound_kcal_mol", label, 0, "analytic", bound))
    mrows.append(_metric_row("n_configurations", label, 0, "analytic", n))
    archive.add_table("ledger.csv", LEDGER_HEADER, ledger)
    archive.add_table("metrics.csv", METRICS_HEADER, mrows)
    archive.add_table("quantiles.csv", QUANTILES_HEADER, qrows)
    if config.cache_cost:
        cache = Path(config.out_dir + ".cost.tmp")
        save_cost(cv, cache)
        archive.files["peptide_cost.qcv"] = cache.read_bytes()
        cache.unlink()
    return archive


# ---------------------------------------------------------------------------
# penalty tuning
# ---------------------------------------------------------------------------


def cmd_tune_penalty(config: ExperimentConfig) -> RunArchive:
    """Sweep the walk penalty coefficient and report valid-configuration
    probabilities per (lambda, p); the recommendation maximizes the
    probability, ties to the smaller lambda."""
    enc = _encoding(config)

    def builder(lam):
        return build_saw_cost(
            WalkProblem(config.tune_steps, enc, lam=lam), config.memory_cap_bytes
        )

    def mask_builder(cv):
        return (cv.crossings == 0) & (cv.end_dist_sq == 0)

    chosen, rows = tune_penalty(
        builder,
        config.lambda_grid,
        mask_builder,
        InitStrategy(STRATEGY_RANDOM, config.tune_attempts,
                     SAW_BETA_RANGE, SAW_GAMMA_RANGE),
        seed=config.seed,
        ps=config.tune_ps,
        mixer=config.mixer,
        polish_top=config.tune_polish_top,
        maxiter=config.maxiter,
    )
    archive = RunArchive(config.out_dir)
    archive.add_text("config.txt", config_lines(config))
    archive.add_table(
        "tune.csv",
        "lambda,p,valid_probability",
        [f"{fmt(lam)},{p},{fmt(v)}" for lam, p, v in rows],
    )
    archive.add_text("notes.txt", [f"recommended_lambda = {fmt(chosen)}"])
    return archive


# ---------------------------------------------------------------------------
# archive summary
# ---------------------------------------------------------------------------


def report_lines(archive_dir) -> list[str]:
    """Human-readable digest of an archive's headline numbers."""
    root = Path(archive_dir)
    if not root.is_dir():
        raise ConfigError(f"{archive_dir} is not an archive directory")
    out = [f"archive: {root}"]
    config = root / "config.txt"
    if config.exists():
        for line in config.read_text().splitlines():
            if line.startswith(("problem ", "steps ", "encoding ", "seed ")):
                out.append(f"  {line}")
    metrics = root / "metrics.csv"
    if metrics.exists():
        rows = metrics.read_text().splitlines()[1:]
        headline = {}
        for row in rows:
            metric, problem, p, strategy, value = row.split(",")[:5]
            if metric in (
                "p_saw",
                "dimensionless_total",
                "dimensionless_noclash",
                "clash_prob",
                "amplitude_amplification",
            ) and strategy in ("best", "uniform", "analytic"):
                headline[(metric, int(p), strategy)] = value
        for (metric, p, strategy) in sorted(headline):
            out.append(f"  {metric:26s} p={p:<4d} {strategy:9s} {headline[(metric, p, strategy)]}")
    tune = root / "tune.csv"
    if tune.exists():
        best = None
        for row in tune.read_text().splitlines()[1:]:
            lam, p, v = row.split(",")
            if best is None or float(v) > best[1]:
                best = (float(lam), float(v))
        if best:
            out.append(f"  best lambda {fmt(best[0])} (valid probability {fmt(best[1])})")
    notes = root / "notes.txt"
    if notes.exists():
        out.extend(f"  {line}" for line in notes.read_text().splitlines())
    return out
