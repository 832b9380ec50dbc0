"""Mixed-radix statevector engine.

States live on a product of qudits with per-site radices; the amplitude of
configuration x sits at the mixed-radix index with the first qudit as the
least-significant digit.  Layered evolution alternates a diagonal phase
(from a cost vector) with one of three mixer families:

- ``qubit_x``: an X rotation on every qubit; available when every radix is a
  power of two, acting as the tensor power of the 2x2 rotation within each
  qudit.
- ``qudit``: a phase per discrete-Fourier mode of each qudit, with the last
  mode's phase pinned to 0 (one angle per mode 0..d-2).
- ``inversion``: the single-angle special case 1 + (e^{-i beta/2} - 1)|+><+|
  per qudit, an inversion about the qudit mean at beta = 2*pi.

All apply_* operations mutate the state's amplitudes in place and return the
state; every operation is unitary, so norms are preserved to rounding.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .backends import kernels
from .cost import CostVector
from .errors import ArityError, UnsupportedMixerError

MIXER_QUBIT_X = "qubit_x"
MIXER_QUDIT = "qudit"
MIXER_INVERSION = "inversion"
MIXERS = (MIXER_QUBIT_X, MIXER_QUDIT, MIXER_INVERSION)


@dataclass
class MixedRadixState:
    amplitudes: np.ndarray
    radices: tuple[int, ...]

    @property
    def size(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "MixedRadixState":
        return MixedRadixState(self.amplitudes.copy(), self.radices)


@dataclass
class Schedule:
    """Per-layer variational angles.

    ``betas`` has shape (p,) for single-angle mixers and (p, d-1) for the
    qudit mixer; ``gammas`` has shape (p,).  ``gammas`` are stored in the
    optimizer's coordinates: the effective phase angle handed to the engine
    is gamma * gamma_scale.
    """

    betas: np.ndarray
    gammas: np.ndarray
    mixer: str = MIXER_INVERSION
    gamma_scale: float = 1.0
    strategy: str = ""

    def __post_init__(self):
        self.betas = np.atleast_1d(np.asarray(self.betas, dtype=np.float64))
        self.gammas = np.atleast_1d(np.asarray(self.gammas, dtype=np.float64))
        if self.mixer not in MIXERS:
            raise UnsupportedMixerError(f"unknown mixer {self.mixer!r}")
        if self.betas.shape[0] != self.gammas.shape[0]:
            raise ArityError(
                f"{self.betas.shape[0]} beta rows vs {self.gammas.size} gammas"
            )

    @property
    def p(self) -> int:
        return self.gammas.size

    def beta_row(self, j: int) -> np.ndarray:
        return np.atleast_1d(self.betas[j])


def axis_layout(radices) -> list[tuple[int, int]]:
    """(stride, radix) per qudit, first qudit least significant."""
    layout = []
    stride = 1
    for d in radices:
        layout.append((stride, int(d)))
        stride *= int(d)
    return layout


def uniform_state(radices) -> MixedRadixState:
    """The uniform superposition over all configurations."""
    radices = tuple(int(d) for d in radices)
    n = math.prod(radices)
    amplitudes = np.full(n, 1.0 / math.sqrt(n), dtype=np.complex128)
    return MixedRadixState(amplitudes=amplitudes, radices=radices)


# ---------------------------------------------------------------------------
# phase evolution
# ---------------------------------------------------------------------------


def _apply_phase_raw(psi: np.ndarray, cost: CostVector, gamma: float) -> None:
    table = cost.phase_table()
    if table is None:
        kernels().phase_apply_direct(psi, cost.values, -0.5 * gamma)
    else:
        codes, unique = table
        kernels().phase_apply_table(psi, codes, np.exp(-0.5j * gamma * unique))


def _apply_phase_raw_pair(
    psi1: np.ndarray, psi2: np.ndarray, cost: CostVector, gamma: float
) -> None:
    table = cost.phase_table()
    if table is None:
        kernels().phase_apply_direct2(psi1, psi2, cost.values, -0.5 * gamma)
    else:
        codes, unique = table
        kernels().phase_apply_table2(psi1, psi2, codes, np.exp(-0.5j * gamma * unique))


def apply_phase(state: MixedRadixState, cost: CostVector, gamma: float) -> MixedRadixState:
    """Multiply each amplitude by exp(-i * gamma * values[x] / 2)."""
    if cost.values.size != state.size:
        raise ArityError("cost vector and state dimensions differ")
    _apply_phase_raw(state.amplitudes, cost, gamma)
    return state


# ---------------------------------------------------------------------------
# mixers
# ---------------------------------------------------------------------------


def _qubit_factors(d: int) -> int:
    """log2(d), or raise for non-power-of-two radices."""
    k = d.bit_length() - 1
    if d != 1 << k:
        raise UnsupportedMixerError(
            f"the qubit X mixer needs power-of-two radices, got {d}"
        )
    return k


def rx_matrix(beta: float) -> np.ndarray:
    c = math.cos(beta / 2.0)
    s = -1j * math.sin(beta / 2.0)
    return np.array([[c, s], [s, c]], dtype=np.complex128)


def fourier_vector(d: int, mode: int) -> np.ndarray:
    """The Fourier basis vector ``|f_mode>`` with amplitudes w^(mode*x)/sqrt(d)."""
    x = np.arange(d)
    return np.exp(2j * np.pi * mode * x / d) / math.sqrt(d)


def qudit_mixer_matrix(d: int, betas) -> np.ndarray:
    """Sum of e^{-i beta_j/2} |f_j><f_j| over modes, with beta_{d-1} = 0."""
    betas = np.asarray(betas, dtype=np.float64)
    if betas.shape != (d - 1,):
        raise ArityError(f"qudit mixer on radix {d} takes {d - 1} angles")
    phases = np.exp(-0.5j * np.concatenate([betas, [0.0]]))
    m = np.zeros((d, d), dtype=np.complex128)
    for j in range(d):
        f = fourier_vector(d, j)
        m += phases[j] * np.outer(f, f.conj())
    return m


def _validate_uniform_radix(radices) -> int:
    ds = set(int(d) for d in radices)
    if len(ds) != 1:
        raise UnsupportedMixerError(
            "the qudit mixer needs a uniform radix, got {}".format(sorted(ds))
        )
    return ds.pop()


def _mixer_plan(radices, mixer: str, beta_row: np.ndarray):
    """(kernel_name, [(stride, d, arg)]) describing one mixer layer."""
    if mixer == MIXER_INVERSION:
        if beta_row.shape != (1,):
            raise ArityError("inversion mixer takes a single angle per layer")
        coef = np.exp(-0.5j * beta_row[0]) - 1.0
        return [("proj", stride, d, coef) for stride, d in axis_layout(radices)]
    if mixer == MIXER_QUDIT:
        d = _validate_uniform_radix(radices)
        m = qudit_mixer_matrix(d, beta_row)
        return [("dense", stride, d, m) for stride, d in axis_layout(radices)]
    if mixer == MIXER_QUBIT_X:
        if beta_row.shape != (1,):
            raise ArityError("qubit X mixer takes a single angle per layer")
        m = rx_matrix(beta_row[0])
        ops = []
        for stride, d in axis_layout(radices):
            for ell in range(_qubit_factors(d)):
                ops.append(("dense", stride << ell, 2, m))
        return ops
    raise UnsupportedMixerError(f"unknown mixer {mixer!r}")


def _apply_mixer(psi: np.ndarray, radices, mixer: str, beta_row) -> None:
    k = kernels()
    for kind, stride, d, arg in _mixer_plan(radices, mixer, np.atleast_1d(beta_row)):
        if kind == "proj":
            k.proj_mixer_axis(psi, stride, d, arg)
        else:
            k.dense_mixer_axis(psi, stride, d, arg)


def _apply_mixer_pair(psi1, psi2, radices, mixer: str, beta_row) -> None:
    k = kernels()
    for kind, stride, d, arg in _mixer_plan(radices, mixer, np.atleast_1d(beta_row)):
        if kind == "proj":
            k.proj_mixer_axis2(psi1, psi2, stride, d, arg)
        else:
            k.dense_mixer_axis2(psi1, psi2, stride, d, arg)


def apply_qubit_x_mixer(state: MixedRadixState, beta: float) -> MixedRadixState:
    """Rotate every qubit by Rx(beta); radices must be powers of two."""
    _apply_mixer(state.amplitudes, state.radices, MIXER_QUBIT_X, np.array([beta]))
    return state


def apply_qudit_mixer(state: MixedRadixState, betas) -> MixedRadixState:
    """Apply the per-mode Fourier phase mixer (one angle per mode 0..d-2)."""
    _apply_mixer(state.amplitudes, state.radices, MIXER_QUDIT, np.asarray(betas))
    return state


def apply_inversion_mixer(state: MixedRadixState, beta: float) -> MixedRadixState:
    """Per qudit: a += (e^{-i beta/2} - 1) * mean(a) over the qudit's values."""
    _apply_mixer(state.amplitudes, state.radices, MIXER_INVERSION, np.array([beta]))
    return state


def apply_schedule_mixer(state: MixedRadixState, schedule: Schedule, j: int) -> MixedRadixState:
    _apply_mixer(state.amplitudes, state.radices, schedule.mixer, schedule.beta_row(j))
    return state


def qaoa_state(cost: CostVector, schedule: Schedule) -> MixedRadixState:
    """Prepare the layered state: uniform, then p (phase, mixer) alternations."""
    state = uniform_state(cost.radices)
    for j in range(schedule.p):
        _apply_phase_raw(
            state.amplitudes, cost, float(schedule.gammas[j]) * schedule.gamma_scale
        )
        _apply_mixer(state.amplitudes, state.radices, schedule.mixer, schedule.beta_row(j))
    return state


# ---------------------------------------------------------------------------
# measurement-side queries
# ---------------------------------------------------------------------------


def born_probabilities(state: MixedRadixState) -> np.ndarray:
    a = state.amplitudes
    return a.real**2 + a.imag**2


def expected_energy(state: MixedRadixState, cost: CostVector) -> float:
    """<state| diag(values) |state>."""
    return kernels().expect_values(state.amplitudes, cost.values)


def event_probability(state: MixedRadixState, mask: np.ndarray) -> float:
    """Total probability of the configurations selected by a boolean mask."""
    return float(np.sum(born_probabilities(state)[mask]))


def zero_cost_mask(cost: CostVector, tol: float = 1e-9) -> np.ndarray:
    return np.abs(cost.values) <= tol


def zero_clash_mask(cost: CostVector) -> np.ndarray:
    if cost.clashes is None:
        raise ArityError("cost vector carries no clash counts")
    return cost.clashes == 0


def energy_below_mask(cost: CostVector, threshold: float) -> np.ndarray:
    return cost.values <= threshold


def amplitude_amplification_probability(p0: float, k: int) -> float:
    """Success probability of k amplification rounds on initial probability p0."""
    if not 0.0 <= p0 <= 1.0:
        raise ValueError("p0 must be a probability")
    if k < 0:
        raise ValueError("k must be non-negative")
    return math.sin((2 * k + 1) * math.asin(math.sqrt(p0))) ** 2


# ---------------------------------------------------------------------------
# debug state dump
# ---------------------------------------------------------------------------


def save_state(state: MixedRadixState, path) -> None:
    """Binary dump: radices header + interleaved re/im float64."""
    with open(path, "wb") as fh:
        fh.write(b"QST1")
        fh.write(struct.pack("<B", len(state.radices)))
        fh.write(struct.pack(f"<{len(state.radices)}B", *state.radices))
        inter = np.empty(2 * state.size, dtype="<f8")
        inter[0::2] = state.amplitudes.real
        inter[1::2] = state.amplitudes.imag
        fh.write(inter.tobytes())


def load_state(path) -> MixedRadixState:
    with open(path, "rb") as fh:
        if fh.read(4) != b"QST1":
            raise ValueError(f"{path} is not a state dump")
        (n_radices,) = struct.unpack("<B", fh.read(1))
        radices = struct.unpack(f"<{n_radices}B", fh.read(n_radices))
        inter = np.frombuffer(fh.read(), dtype="<f8")
    amplitudes = inter[0::2] + 1j * inter[1::2]
    return MixedRadixState(
        amplitudes=np.ascontiguousarray(amplitudes), radices=tuple(map(int, radices))
    )
