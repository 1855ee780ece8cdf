"""Single measurement realizations.

Two steppers are available:

* ``BayesSplit`` (canonical): half a step of free evolution, an exact Bayes
  update on a current drawn from the two-Gaussian outcome mixture, and another
  half step of free evolution.
* ``EulerLangevin``: one explicit Euler step of the Langevin equations for
  ``sigma11`` and ``sigma12``.  Kept for cross-validation; read this way the
  equations carry an O(dt) per-step bias in the ensemble mean of ``sigma11``.

The scalar functions here (:func:`step`, :func:`euler_langevin_step`, ...) do
the same arithmetic as the batch kernels used by :func:`run_trajectory`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .bayes import bayes_update, outcome_distribution, sample_outcome
from .model import (
    DensityMatrix,
    DetectorParams,
    SystemParams,
    derived_quantities,
    max_timestep,
)
from .rng import RandomSource


class Scheme(str, enum.Enum):
    BAYES_SPLIT = "BayesSplit"
    EULER_LANGEVIN = "EulerLangevin"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        for member in cls:
            if value.lower() == member.value.lower():
                return member
        raise ValueError(f"unknown scheme {value!r}; expected BayesSplit or EulerLangevin")


class TimestepTooLarge(ValueError):
    pass


class NumericalBlowup(ArithmeticError):
    pass


class WindowTooShort(ValueError):
    pass


@dataclass(frozen=True)
class CurrentSample:
    t_start: float
    dt: float
    i_avg: float

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")


@dataclass(frozen=True)
class NoiseSample:
    """Step-averaged detector noise; variance ``S_I / (2 dt)``."""

    xi: float

    @classmethod
    def draw(cls, dt: float, det: DetectorParams, rng: RandomSource) -> "NoiseSample":
        _, z = rng.pair()
        return cls(math.sqrt(det.s_i / (2.0 * dt)) * z)


def rotation_matrix(t: float, sys: SystemParams) -> np.ndarray:
    """Rotation of the Bloch vector ``(2 Re s12, 2 Im s12, s11 - s22)`` over time ``t``.

    The rotation vector is ``(-2H, 0, eps)/hbar``; its generator reproduces
    ``d s11/dt = -2H/hbar Im s12`` and
    ``d s12/dt = i eps/hbar s12 + i H/hbar (s11 - s22)``.
    """
    wx = -2.0 * sys.h_coupling / sys.hbar
    wz = sys.eps / sys.hbar
    omega = math.hypot(wx, wz)
    if omega == 0.0 or t == 0.0:
        return np.eye(3)
    nx, nz = wx / omega, wz / omega
    c = math.cos(omega * t)
    s = math.sin(omega * t)
    k = 1.0 - c
    return np.array(
        [
            [c + k * nx * nx, -s * nz, k * nx * nz],
            [s * nz, c, -s * nx],
            [k * nz * nx, s * nx, c + k * nz * nz],
        ]
    )


def _apply_rotation(rho: DensityMatrix, m: np.ndarray) -> DensityMatrix:
    x, y, z = rho.bloch()
    xn = m[0, 0] * x + m[0, 1] * y + m[0, 2] * z
    yn = m[1, 0] * x + m[1, 1] * y + m[1, 2] * z
    zn = m[2, 0] * x + m[2, 1] * y + m[2, 2] * z
    s11 = min(max(0.5 * (1.0 + zn), 0.0), 1.0)
    return DensityMatrix(float(s11), float(0.5 * xn), float(0.5 * yn))


def hamiltonian_evolve(rho: DensityMatrix, dt: float, sys: SystemParams) -> DensityMatrix:
    """Free (unmeasured) evolution over ``dt``, in closed form."""
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt!r}")
    if (sys.h_coupling == 0.0 and sys.eps == 0.0) or dt == 0.0:
        return rho
    return _apply_rotation(rho, rotation_matrix(dt, sys))


def measurement_substep(
    rho: DensityMatrix,
    dt: float,
    det: DetectorParams,
    rng: RandomSource,
    t_start: float = 0.0,
) -> tuple[DensityMatrix, CurrentSample]:
    dist = outcome_distribution(rho, dt, det)
    i_avg = sample_outcome(dist, rng)
    return bayes_update(rho, i_avg, dt, det), CurrentSample(t_start, dt, i_avg)


def check_timestep(dt: float, sys: SystemParams, det: DetectorParams, allow_large_dt: bool = False):
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    limit = max_timestep(sys, det)
    if dt > limit and not allow_large_dt:
        raise TimestepTooLarge(
            f"dt={dt:g} exceeds dt_max={limit:g} = min(0.1 tau_loc, 0.1/Omega); "
            "pass allow_large_dt to override"
        )


def step(
    rho: DensityMatrix,
    dt: float,
    sys: SystemParams,
    det: DetectorParams,
    rng: RandomSource,
    *,
    t_start: float = 0.0,
    allow_large_dt: bool = False,
) -> tuple[DensityMatrix, CurrentSample]:
    """One BayesSplit step."""
    check_timestep(dt, sys, det, allow_large_dt)
    if derived_quantities(sys, det).omega == 0.0:
        return measurement_substep(rho, dt, det, rng, t_start)
    half = rotation_matrix(0.5 * dt, sys)
    rho = _apply_rotation(rho, half)
    rho, sample = measurement_substep(rho, dt, det, rng, t_start)
    return _apply_rotation(rho, half), sample


def euler_langevin_step(
    rho: DensityMatrix,
    dt: float,
    sys: SystemParams,
    det: DetectorParams,
    noise: NoiseSample,
) -> DensityMatrix:
    """Explicit Euler step of the Langevin equations for the conditioned state.

    ``sigma11`` is clamped to [0, 1] afterwards and ``sigma12`` shrunk back onto
    ``|s12|^2 <= s11 s22`` if the step overshot it.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    s11, re, im = rho.sigma11, rho.re_sigma12, rho.im_sigma12
    h, eps, hbar = sys.h_coupling, sys.eps, sys.hbar
    di, si, gamma = det.delta_i, det.s_i, det.gamma_d_extra
    s22 = 1.0 - s11
    dev = (s22 - s11) * di / 2.0 + noise.xi
    if 0.0 < s11 < 1.0:
        r = -s11 * s22 * (2.0 * di / si) * dev
        # ((s22 - s11) / (2 s11 s22)) * r with the s11*s22 factor cancelled
        kk = -(s22 - s11) * (di / si) * dev
    else:
        r = 0.0
        kk = 0.0
    ds11 = (-2.0 * h / hbar) * im + r
    dre = -(eps / hbar) * im + kk * re - gamma * re
    dim = (eps / hbar) * re + (h / hbar) * (s11 - s22) + kk * im - gamma * im
    s11 = s11 + dt * ds11
    re = re + dt * dre
    im = im + dt * dim
    if not (math.isfinite(s11) and math.isfinite(re) and math.isfinite(im)):
        raise NumericalBlowup("non-finite state in Euler-Langevin step")
    s11 = min(max(s11, 0.0), 1.0)
    bound = s11 * (1.0 - s11)
    mod2 = re * re + im * im
    if mod2 > bound:
        scale = math.sqrt(bound / mod2)
        re *= scale
        im *= scale
    return DensityMatrix(s11, re, im)


@dataclass(frozen=True)
class TrajectoryRecord:
    """One realization: ``states[k]`` at ``times[k]``, ``currents[k]`` over step k."""

    times: np.ndarray
    states: np.ndarray
    currents: np.ndarray
    dt: float
    seed: int
    system: SystemParams
    detector: DetectorParams
    scheme: Scheme

    def __len__(self):
        return len(self.times)

    @property
    def sigma11(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def sigma12(self) -> np.ndarray:
        return self.states[:, 1] + 1j * self.states[:, 2]

    def state(self, k: int) -> DensityMatrix:
        return DensityMatrix(*map(float, self.states[k]))

    @property
    def final_state(self) -> DensityMatrix:
        return self.state(-1)

    def purity_defects(self) -> np.ndarray:
        s11 = self.states[:, 0]
        return s11 * (1.0 - s11) - (self.states[:, 1] ** 2 + self.states[:, 2] ** 2)

    def current_samples(self) -> list[CurrentSample]:
        return [CurrentSample(float(t), self.dt, float(i)) for t, i in zip(self.times[:-1], self.currents)]


def n_steps(t_end: float, dt: float) -> int:
    if not 0 < dt < t_end:
        raise ValueError(f"need 0 < dt < t_end, got dt={dt!r}, t_end={t_end!r}")
    return int(round(t_end / dt))


def simulate_states(
    states0: np.ndarray,
    u: np.ndarray,
    z: np.ndarray,
    dt: float,
    sys: SystemParams,
    det: DetectorParams,
    scheme: Scheme = Scheme.BAYES_SPLIT,
    backend: str | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Run the stepping kernel on a batch of starting states and pre-drawn noise."""
    kern = _backend.get_kernels(backend)
    rotate = derived_quantities(sys, det).omega > 0.0
    half = rotation_matrix(0.5 * dt, sys)
    states, currents = kern.simulate_batch(
        0 if scheme is Scheme.BAYES_SPLIT else 1,
        np.ascontiguousarray(states0, dtype=float),
        np.ascontiguousarray(u, dtype=float),
        np.ascontiguousarray(z, dtype=float),
        float(dt),
        float(sys.eps),
        float(sys.h_coupling),
        float(sys.hbar),
        float(det.i0),
        float(det.delta_i),
        float(det.s_i),
        float(det.gamma_d_extra),
        np.ascontiguousarray(half),
        bool(rotate),
    )
    return states, currents


def draw_noise(seeds: tuple[int, int], count: int) -> tuple[np.ndarray, np.ndarray]:
    return RandomSource(*seeds).pairs(count)


def run_trajectory(
    rho0: DensityMatrix,
    t_end: float,
    dt: float,
    sys: SystemParams,
    det: DetectorParams,
    seed: int,
    scheme: Scheme | str = Scheme.BAYES_SPLIT,
    *,
    allow_large_dt: bool = False,
    backend: str | None = None,
    stream_index: int = 0,
) -> TrajectoryRecord:
    """Simulate one realization from ``rho0`` up to ``t_end``.

    The record is a pure function of ``(rho0, t_end, dt, params, seed,
    scheme)``; ``stream_index`` selects the trajectory stream under ``seed``.
    """
    scheme = Scheme.parse(scheme)
    check_timestep(dt, sys, det, allow_large_dt)
    steps = n_steps(t_end, dt)
    u, z = draw_noise((seed, stream_index), steps)
    states, currents = simulate_states(
        np.array([rho0.as_tuple()]), u[None, :], z[None, :], dt, sys, det, scheme, backend
    )
    if not np.all(np.isfinite(states)):
        bad = int(np.argmin(np.all(np.isfinite(states[0]), axis=1)))
        raise NumericalBlowup(f"non-finite state at step {bad} ({scheme.value})")
    return TrajectoryRecord(
        times=dt * np.arange(steps + 1),
        states=states[0],
        currents=currents[0],
        dt=dt,
        seed=seed,
        system=sys,
        detector=det,
        scheme=scheme,
    )


def cumulative_average(record: TrajectoryRecord) -> np.ndarray:
    """Mean of the step currents from t = 0 up to the end of each step."""
    c = record.currents
    return np.cumsum(c) / np.arange(1, len(c) + 1)


def filter_current(record: TrajectoryRecord, window: float) -> np.ndarray:
    """Running boxcar mean over ``floor(window/dt)`` steps (shorter at the start)."""
    if window < record.dt * (1.0 - 1e-12):
        raise WindowTooShort(f"window {window!r} shorter than dt {record.dt!r}")
    k = max(1, int(math.floor(window / record.dt + 1e-9)))
    c = record.currents
    csum = np.concatenate(([0.0], np.cumsum(c)))
    idx = np.arange(1, len(c) + 1)
    lo = np.maximum(idx - k, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)
