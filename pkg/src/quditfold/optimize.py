"""Variational-parameter search.

The objective is the expected cost of the layered ansatz state; gradients are
exact, computed by a reverse sweep: after the forward pass, the pair
(bra = H|psi>, ket = |psi>) is evolved backwards through the layers by
applying inverse unitaries to both, and each parameter's derivative is read
off as Im <bra| G |ket> with G the generator of that layer's unitary
(every layer has the form exp(-i * angle * G / 2)).  Total cost is about
three state evolutions per objective+gradient call.

Local optimization delegates to a quasi-second-order box-bounded descent
(scipy's L-BFGS-B).  On top of it sit the three initialization strategies
(random multistart, the one-parameter annealing schedule, and the annealing
schedule used as a starting point for full optimization), depth-to-depth
extrapolation of optimal angles, spectral gamma rescaling, and grid-based
penalty tuning.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .backends import kernels
from .cost import CostVector
from .errors import ArityError, ConfigError, OptimizationError
from .qsim import (
    MIXER_INVERSION,
    MIXER_QUBIT_X,
    MIXER_QUDIT,
    Schedule,
    _apply_mixer_pair,
    _apply_phase_raw_pair,
    _qubit_factors,
    _validate_uniform_radix,
    axis_layout,
    born_probabilities,
    expected_energy,
    fourier_vector,
    qaoa_state,
)

STRATEGY_RANDOM = "random"
STRATEGY_ANNEALING_SCHEDULE = "annealing_schedule"
STRATEGY_ANNEALING_INIT = "annealing_init"

SAW_BETA_RANGE = (-2.0 * math.pi, 2.0 * math.pi)
SAW_GAMMA_RANGE = (-10.0 * math.pi, 10.0 * math.pi)
SAW_ATTEMPTS = 2000
SCALED_RANGE = (-2.0 * math.pi, 2.0 * math.pi)
PEPTIDE_ATTEMPTS = 50

DEFAULT_GTOL = 1e-8
DEFAULT_MAXITER = 500

_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)


@dataclass(frozen=True)
class InitStrategy:
    """How starting schedules are produced for one optimization campaign."""

    kind: str = STRATEGY_RANDOM
    attempts: int = 1
    beta_range: tuple[float, float] = SAW_BETA_RANGE
    gamma_range: tuple[float, float] = SAW_GAMMA_RANGE

    def __post_init__(self):
        if self.kind not in (
            STRATEGY_RANDOM,
            STRATEGY_ANNEALING_SCHEDULE,
            STRATEGY_ANNEALING_INIT,
        ):
            raise ConfigError(f"unknown strategy kind {self.kind!r}")
        if self.attempts < 1:
            raise ConfigError("attempts must be >= 1")


def saw_strategy(attempts: int = SAW_ATTEMPTS) -> InitStrategy:
    return InitStrategy(kind=STRATEGY_RANDOM, attempts=attempts)


def scaled_strategy(attempts: int = PEPTIDE_ATTEMPTS) -> InitStrategy:
    """Random starts in the scaled box used for spectrum-normalized problems."""
    return InitStrategy(
        kind=STRATEGY_RANDOM,
        attempts=attempts,
        beta_range=SCALED_RANGE,
        gamma_range=SCALED_RANGE,
    )


@dataclass
class OptimizationRun:
    """Result of one local descent (or one strategy's best descent)."""

    initial_schedule: Schedule
    final_schedule: Schedule
    initial_objective: float
    final_objective: float
    iterations: int
    grad_norm: float
    seed: int
    strategy: str = STRATEGY_RANDOM
    valid_prob: float | None = None


# ---------------------------------------------------------------------------
# objective and exact gradient
# ---------------------------------------------------------------------------


def objective(cost: CostVector, schedule: Schedule) -> float:
    """Expected cost of the ansatz state prepared by ``schedule``."""
    return expected_energy(qaoa_state(cost, schedule), cost)


def _mode_projectors(d: int) -> list[np.ndarray]:
    out = []
    for m in range(d - 1):
        f = fourier_vector(d, m)
        out.append(np.outer(f, f.conj()))
    return out


def _mixer_generator_inner(bra, ket, radices, mixer: str) -> np.ndarray:
    """Im <bra| G |ket> for each mixer angle of one layer."""
    k = kernels()
    if mixer == MIXER_INVERSION:
        acc = 0.0 + 0.0j
        for stride, d in axis_layout(radices):
            acc += k.proj_grad_inner_axis(bra, ket, stride, d)
        return np.array([acc.imag])
    if mixer == MIXER_QUBIT_X:
        acc = 0.0 + 0.0j
        for stride, d in axis_layout(radices):
            for ell in range(_qubit_factors(d)):
                acc += k.dense_grad_inner_axis(bra, ket, stride << ell, 2, _PAULI_X)
        return np.array([acc.imag])
    d = _validate_uniform_radix(radices)
    out = np.empty(d - 1)
    for m, proj in enumerate(_mode_projectors(d)):
        acc = 0.0 + 0.0j
        for stride, _ in axis_layout(radices):
            acc += k.dense_grad_inner_axis(bra, ket, stride, d, proj)
        out[m] = acc.imag
    return out


def objective_and_gradient(
    cost: CostVector, schedule: Schedule
) -> tuple[float, np.ndarray, np.ndarray]:
    """(energy, d/dbetas, d/dgammas) with shapes matching the schedule."""
    k = kernels()
    state = qaoa_state(cost, schedule)
    ket = state.amplitudes
    energy = k.expect_values(ket, cost.values)
    grad_betas = np.zeros_like(schedule.betas)
    grad_gammas = np.zeros_like(schedule.gammas)
    if schedule.p == 0:
        return energy, grad_betas, grad_gammas

    bra = cost.values * ket
    grad_beta_rows = grad_betas.reshape(schedule.p, -1)
    for j in reversed(range(schedule.p)):
        beta_row = schedule.beta_row(j)
        grad_beta_rows[j] = _mixer_generator_inner(
            bra, ket, cost.radices, schedule.mixer
        )
        _apply_mixer_pair(bra, ket, cost.radices, schedule.mixer, -beta_row)
        grad_gammas[j] = schedule.gamma_scale * k.grad_inner_values(
            bra, ket, cost.values
        )
        _apply_phase_raw_pair(
            bra, ket, cost, -float(schedule.gammas[j]) * schedule.gamma_scale
        )
    return energy, grad_betas, grad_gammas


def gradient(cost: CostVector, schedule: Schedule) -> np.ndarray:
    """Flat gradient (all beta coordinates, then all gammas); length 2p for
    single-angle mixers."""
    _, gb, gg = objective_and_gradient(cost, schedule)
    return np.concatenate([gb.ravel(), gg])


# ---------------------------------------------------------------------------
# local optimization
# ---------------------------------------------------------------------------


def _pack(schedule: Schedule) -> np.ndarray:
    return np.concatenate([schedule.betas.ravel(), schedule.gammas])


def _unpack(x: np.ndarray, template: Schedule) -> Schedule:
    nb = template.betas.size
    return replace(
        template,
        betas=x[:nb].reshape(template.betas.shape).copy(),
        gammas=x[nb:].copy(),
    )


def _coordinate_bounds(template: Schedule, bounds) -> list[tuple[float, float]]:
    if bounds is None:
        return None
    beta_bounds, gamma_bounds = bounds
    return [tuple(beta_bounds)] * template.betas.size + [
        tuple(gamma_bounds)
    ] * template.gammas.size


def local_optimize(
    cost: CostVector,
    schedule: Schedule,
    bounds: tuple[tuple[float, float], tuple[float, float]] | None = None,
    gtol: float = DEFAULT_GTOL,
    maxiter: int = DEFAULT_MAXITER,
    seed: int = 0,
    strategy: str = STRATEGY_RANDOM,
) -> OptimizationRun:
    """Box-bounded quasi-second-order descent from ``schedule``.

    Deterministic given the starting point.  The returned run never has a
    final objective above its initial one.
    """
    init_obj = objective(cost, schedule)
    if not np.isfinite(init_obj):
        raise OptimizationError(f"non-finite objective {init_obj} at the start point")
    if schedule.p == 0:
        return OptimizationRun(
            initial_schedule=schedule,
            final_schedule=schedule,
            initial_objective=init_obj,
            final_objective=init_obj,
            iterations=0,
            grad_norm=0.0,
            seed=seed,
            strategy=strategy,
        )

    def fun(x):
        cand = _unpack(x, schedule)
        e, gb, gg = objective_and_gradient(cost, cand)
        if not np.isfinite(e):
            raise OptimizationError(f"non-finite objective {e} during optimization")
        return e, np.concatenate([gb.ravel(), gg])

    result = minimize(
        fun,
        _pack(schedule),
        jac=True,
        method="L-BFGS-B",
        bounds=_coordinate_bounds(schedule, bounds),
        options={"maxiter": maxiter, "gtol": gtol, "ftol": 1e-14},
    )
    final_schedule = _unpack(np.asarray(result.x, dtype=np.float64), schedule)
    final_obj = float(result.fun)
    grad_norm = float(np.linalg.norm(np.atleast_1d(result.jac)))
    if final_obj > init_obj:  # descent guarantee, even on solver failure
        final_schedule, final_obj = schedule, init_obj
    return OptimizationRun(
        initial_schedule=schedule,
        final_schedule=final_schedule,
        initial_objective=init_obj,
        final_objective=final_obj,
        iterations=int(result.nit),
        grad_norm=grad_norm,
        seed=seed,
        strategy=strategy,
    )


# ---------------------------------------------------------------------------
# initialization strategies
# ---------------------------------------------------------------------------


def _beta_shape(p: int, mixer: str, radices) -> tuple[int, ...]:
    if mixer == MIXER_QUDIT:
        return (p, _validate_uniform_radix(radices) - 1)
    return (p,)


def random_init(
    p: int,
    strategy: InitStrategy,
    seed: int,
    mixer: str = MIXER_INVERSION,
    radices=None,
    gamma_scale: float = 1.0,
) -> list[Schedule]:
    """Seeded uniform draws of ``strategy.attempts`` starting schedules."""
    rng = np.random.default_rng(seed)
    shape = _beta_shape(p, mixer, radices)
    out = []
    for _ in range(strategy.attempts):
        betas = rng.uniform(*strategy.beta_range, size=shape)
        gammas = rng.uniform(*strategy.gamma_range, size=p)
        out.append(
            Schedule(
                betas=betas,
                gammas=gammas,
                mixer=mixer,
                gamma_scale=gamma_scale,
                strategy=STRATEGY_RANDOM,
            )
        )
    return out


def annealing_schedule(
    p: int,
    delta_t: float,
    mixer: str = MIXER_INVERSION,
    radices=None,
    gamma_scale: float = 1.0,
) -> Schedule:
    """Linear layer ramp: beta_j = -((p-j)/p) dt, gamma_j = ((j+1)/p) dt."""
    j = np.arange(p, dtype=np.float64)
    betas = -((p - j) / p) * delta_t
    gammas = ((j + 1) / p) * delta_t
    shape = _beta_shape(p, mixer, radices)
    if len(shape) == 2:
        betas = np.repeat(betas[:, None], shape[1], axis=1)
    return Schedule(
        betas=betas,
        gammas=gammas,
        mixer=mixer,
        gamma_scale=gamma_scale,
        strategy=STRATEGY_ANNEALING_SCHEDULE,
    )


def _annealing_objective_and_grad(cost, p, delta_t, mixer, gamma_scale):
    sched = annealing_schedule(p, delta_t, mixer, cost.radices, gamma_scale)
    e, gb, gg = objective_and_gradient(cost, sched)
    j = np.arange(p, dtype=np.float64)
    dbeta = -((p - j) / p)
    dgamma = (j + 1) / p
    if gb.ndim == 2:
        gb = gb.sum(axis=1)
    return e, float(np.dot(gb, dbeta) + np.dot(gg, dgamma))


DELTA_T_START_RANGE = (0.0, 2.0 * math.pi)
DELTA_T_BOUNDS = (-4.0 * math.pi, 4.0 * math.pi)
DELTA_T_STARTS = 50


def anneal_strategies(
    cost: CostVector,
    p: int,
    mixer: str = MIXER_INVERSION,
    seed: int = 0,
    gamma_scale: float = 1.0,
    starts: int = DELTA_T_STARTS,
    bounds: tuple[tuple[float, float], tuple[float, float]] | None = None,
    maxiter: int = DEFAULT_MAXITER,
) -> tuple[OptimizationRun, OptimizationRun]:
    """(annealing-schedule run, annealing-init run) at depth p.

    The first optimizes the single ramp parameter dt from ``starts`` seeded
    random starting values; the second hands the winning ramp to the full
    2p-coordinate local optimization, so its final objective can only be
    lower or equal.
    """
    rng = np.random.default_rng(seed)
    dt0s = rng.uniform(*DELTA_T_START_RANGE, size=starts)

    def fun(x):
        e, g = _annealing_objective_and_grad(cost, p, float(x[0]), mixer, gamma_scale)
        return e, np.array([g])

    best_dt, best_e, best_nit, best_g = 0.0, np.inf, 0, 0.0
    for dt0 in dt0s:
        res = minimize(
            fun,
            np.array([dt0]),
            jac=True,
            method="L-BFGS-B",
            bounds=[DELTA_T_BOUNDS],
            options={"maxiter": 60, "ftol": 1e-14},
        )
        if res.fun < best_e:
            best_dt, best_e = float(res.x[0]), float(res.fun)
            best_nit, best_g = int(res.nit), float(np.linalg.norm(res.jac))

    ramp = annealing_schedule(p, best_dt, mixer, cost.radices, gamma_scale)
    ramp_run = OptimizationRun(
        initial_schedule=annealing_schedule(p, 0.0, mixer, cost.radices, gamma_scale),
        final_schedule=ramp,
        initial_objective=float(np.mean(cost.values)),
        final_objective=best_e,
        iterations=best_nit,
        grad_norm=best_g,
        seed=seed,
        strategy=STRATEGY_ANNEALING_SCHEDULE,
    )
    init_run = local_optimize(
        cost,
        replace(ramp, strategy=STRATEGY_ANNEALING_INIT),
        bounds=bounds,
        maxiter=maxiter,
        seed=seed,
        strategy=STRATEGY_ANNEALING_INIT,
    )
    return ramp_run, init_run


def extrapolate(schedule: Schedule) -> Schedule:
    """Seed depth p+1 from a depth-p optimum: copy, then extend the last two
    angles linearly (per beta column and for gamma)."""
    p = schedule.p
    if p < 2:
        raise ArityError("extrapolation needs at least two layers")
    betas = schedule.betas
    next_beta = 2.0 * betas[p - 1] - betas[p - 2]
    gammas = schedule.gammas
    next_gamma = 2.0 * gammas[p - 1] - gammas[p - 2]
    return replace(
        schedule,
        betas=np.concatenate([betas, next_beta[None]])
        if betas.ndim == 2
        else np.append(betas, next_beta),
        gammas=np.append(gammas, next_gamma),
    )


def rescale_gamma(cost: CostVector) -> float:
    """1 / stddev of the cost spectrum (1 when the spectrum is flat)."""
    sigma = cost.spectrum_std()
    return 1.0 if sigma == 0.0 else 1.0 / sigma


# ---------------------------------------------------------------------------
# multistart orchestration
# ---------------------------------------------------------------------------


def multistart(
    cost: CostVector,
    p: int,
    strategy: InitStrategy,
    seed: int,
    mixer: str = MIXER_INVERSION,
    gamma_scale: float = 1.0,
    bounds: tuple[tuple[float, float], tuple[float, float]] | None = None,
    polish_top: int | None = None,
    screen_maxiter: int = 0,
    maxiter: int = DEFAULT_MAXITER,
    gtol: float = DEFAULT_GTOL,
    keep_all: bool = False,
) -> OptimizationRun | tuple[OptimizationRun, list[OptimizationRun]]:
    """Best-of-``attempts`` random-start optimization at depth p.

    With ``polish_top`` unset every attempt is fully optimized.  Otherwise a
    two-stage budget applies: every attempt is screened (a bare objective
    evaluation, or ``screen_maxiter`` descent iterations) and only the
    ``polish_top`` most promising are optimized to convergence.  Screening
    never changes the winner's descent guarantee since polished starts are
    the screen's best scorers.  Equal objectives resolve to the lowest
    attempt index.
    """
    starts = random_init(p, strategy, seed, mixer, cost.radices, gamma_scale)
    n = len(starts)
    screened: list[tuple[float, int, Schedule, float]] = []
    for i, sched in enumerate(starts):
        if screen_maxiter > 0 and p > 0:
            run = local_optimize(
                cost, sched, bounds=bounds, maxiter=screen_maxiter, gtol=gtol,
                seed=seed, strategy=strategy.kind,
            )
            screened.append((run.final_objective, i, run.final_schedule,
                             run.initial_objective))
        else:
            e = objective(cost, sched)
            if not np.isfinite(e):
                raise OptimizationError(f"non-finite objective at attempt {i}")
            screened.append((e, i, sched, e))
    order = sorted(range(n), key=lambda i: (screened[i][0], i))
    n_polish = n if polish_top is None else min(polish_top, n)

    runs: list[OptimizationRun] = []
    best: OptimizationRun | None = None
    for rank, i in enumerate(order[:n_polish]):
        score, _, start_sched, init_obj = screened[i]
        run = local_optimize(
            cost, start_sched, bounds=bounds, maxiter=maxiter, gtol=gtol,
            seed=seed + i, strategy=strategy.kind,
        )
        run = replace(
            run,
            initial_schedule=starts[i],
            initial_objective=min(init_obj, run.initial_objective),
        )
        runs.append(run)
        if (
            best is None
            or run.final_objective < best.final_objective
            or (run.final_objective == best.final_objective and run.seed < best.seed)
        ):
            best = run
    if keep_all:
        return best, runs
    return best


def tune_penalty(
    cost_builder,
    lambda_grid,
    valid_mask_builder,
    strategy: InitStrategy,
    seed: int = 0,
    ps=(1, 2, 3),
    mixer: str = MIXER_INVERSION,
    polish_top: int | None = None,
    maxiter: int = DEFAULT_MAXITER,
) -> tuple[float, list[tuple[float, int, float]]]:
    """Sweep a penalty-coefficient grid; pick the value maximizing the valid-
    configuration probability of its best optimized state over ``ps``.

    ``cost_builder(lam)`` supplies the cost vector and ``valid_mask_builder(cost)``
    the boolean validity mask.  Returns (chosen lambda, rows of
    (lambda, p, valid probability)); ties resolve to the smaller lambda.
    """
    rows: list[tuple[float, int, float]] = []
    best_lam, best_prob = None, -1.0
    for lam in sorted(lambda_grid):
        cv = cost_builder(lam)
        mask = valid_mask_builder(cv)
        lam_best = 0.0
        for p in ps:
            run = multistart(
                cv, p, strategy, seed, mixer=mixer, polish_top=polish_top,
                maxiter=maxiter,
            )
            probs = born_probabilities(qaoa_state(cv, run.final_schedule))
            valid = float(probs[mask].sum())
            rows.append((float(lam), int(p), valid))
            lam_best = max(lam_best, valid)
        if lam_best > best_prob + 1e-15:
            best_lam, best_prob = float(lam), lam_best
    return best_lam, rows
