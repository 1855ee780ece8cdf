"""Statistics over many independent realizations.

Trajectories are simulated in fixed-size chunks.  Each chunk reduces to
per-time (count, mean, M2) accumulators, and the chunks are merged by a
pairwise tree in chunk order.  Chunking never depends on the number of
workers, so the result is bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import DensityMatrix, DetectorParams, SystemParams
from .rng import stream_block
from .trajectory import (
    NumericalBlowup,
    Scheme,
    TrajectoryRecord,
    check_timestep,
    n_steps,
    simulate_states,
)

CHUNK_SIZE = 250


class NonPositiveValue(ValueError):
    pass


class DegenerateFit(ValueError):
    pass


class SeriesTooShort(ValueError):
    pass


class TrajectoryFailure(NumericalBlowup):
    def __init__(self, index: int, message: str):
        super().__init__(f"trajectory {index}: {message}")
        self.index = index


@dataclass(frozen=True)
class EnsembleStats:
    """Per-time ensemble averages.

    ``mean_state[:, k]`` holds the means of (sigma11, Re s12, Im s12) and
    ``se_state`` their standard errors.  ``abs_mean_offdiag`` is ``|E[s12]|``,
    the coherence of the record-averaged density matrix.
    """

    times: np.ndarray
    mean_state: np.ndarray
    se_state: np.ndarray
    abs_mean_offdiag: np.ndarray
    se_abs_mean_offdiag: np.ndarray
    mean_purity_defect: np.ndarray
    se_purity_defect: np.ndarray
    n_traj: int
    final_states: np.ndarray = field(repr=False)
    dt: float = 0.0
    scheme: Scheme = Scheme.BAYES_SPLIT

    @property
    def mean_sigma11(self) -> np.ndarray:
        return self.mean_state[:, 0]

    @property
    def se_sigma11(self) -> np.ndarray:
        return self.se_state[:, 0]

    def purity_defect_of_mean(self) -> np.ndarray:
        """Purity defect of the averaged state (decays to mixed, unlike the mean defect)."""
        s11 = self.mean_state[:, 0]
        return s11 * (1.0 - s11) - self.abs_mean_offdiag ** 2


def _chunk_moments(values: np.ndarray):
    mean = values.mean(axis=0)
    m2 = ((values - mean) ** 2).sum(axis=0)
    return values.shape[0], mean, m2


def _merge(a, b):
    na, ma, m2a = a
    nb, mb, m2b = b
    n = na + nb
    delta = mb - ma
    mean = ma + delta * (nb / n)
    m2 = m2a + m2b + delta ** 2 * (na * nb / n)
    return n, mean, m2


def _tree_reduce(items: list):
    while len(items) > 1:
        merged = [_merge(items[i], items[i + 1]) for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            merged.append(items[-1])
        items = merged
    return items[0]


def run_ensemble(
    rho0: DensityMatrix,
    t_end: float,
    dt: float,
    sys: SystemParams,
    det: DetectorParams,
    n: int,
    master_seed: int,
    scheme: Scheme | str = Scheme.BAYES_SPLIT,
    *,
    workers: int = 1,
    allow_large_dt: bool = False,
    backend: str | None = None,
    chunk_size: int = CHUNK_SIZE,
) -> EnsembleStats:
    """Average ``n`` trajectories; trajectory ``k`` uses stream ``(master_seed, k)``.

    Trajectory 0 is the same realization :func:`run_trajectory` produces for
    ``seed=master_seed``.
    """
    if n < 1:
        raise ValueError("ensemble needs n >= 1")
    scheme = Scheme.parse(scheme)
    check_timestep(dt, sys, det, allow_large_dt)
    steps = n_steps(t_end, dt)
    start = np.array(rho0.as_tuple())
    bounds = [(a, min(a + chunk_size, n)) for a in range(0, n, chunk_size)]

    def run_chunk(bound):
        a, b = bound
        u, z = stream_block(master_seed, a, b, steps)
        states, _ = simulate_states(
            np.tile(start, (b - a, 1)), u, z, dt, sys, det, scheme, backend
        )
        finite = np.all(np.isfinite(states), axis=(1, 2))
        if not finite.all():
            bad = a + int(np.argmin(finite))
            raise TrajectoryFailure(bad, f"non-finite state ({scheme.value})")
        s11 = states[:, :, 0]
        defect = s11 * (1.0 - s11) - (states[:, :, 1] ** 2 + states[:, :, 2] ** 2)
        values = np.concatenate([states, defect[:, :, None]], axis=2)
        return _chunk_moments(values), states[:, -1, :].copy()

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_chunk, bounds))
    else:
        results = [run_chunk(bd) for bd in bounds]

    count, mean, m2 = _tree_reduce([r[0] for r in results])
    finals = np.concatenate([r[1] for r in results], axis=0)
    if count > 1:
        se = np.sqrt(m2 / (count - 1) / count)
    else:
        se = np.zeros_like(mean)
    mean_re, mean_im = mean[:, 1], mean[:, 2]
    abs_off = np.hypot(mean_re, mean_im)
    with np.errstate(invalid="ignore", divide="ignore"):
        se_abs = np.where(
            abs_off > 0,
            np.sqrt((mean_re * se[:, 1]) ** 2 + (mean_im * se[:, 2]) ** 2) / abs_off,
            np.hypot(se[:, 1], se[:, 2]),
        )
    return EnsembleStats(
        times=dt * np.arange(steps + 1),
        mean_state=mean[:, :3],
        se_state=se[:, :3],
        abs_mean_offdiag=abs_off,
        se_abs_mean_offdiag=se_abs,
        mean_purity_defect=mean[:, 3],
        se_purity_defect=se[:, 3],
        n_traj=int(count),
        final_states=finals,
        dt=dt,
        scheme=scheme,
    )


@dataclass(frozen=True)
class DecayFit:
    rate: float
    r_squared: float
    amplitude: float


def fit_decay_rate(t, y) -> DecayFit:
    """Least-squares fit of ``ln y = ln A - rate * t``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("t and y must be 1-d sequences of equal length")
    if len(t) < 3:
        raise ValueError("need at least 3 points")
    if np.any(y <= 0):
        raise NonPositiveValue("all values must be positive for a log-linear fit")
    if np.ptp(t) == 0:
        raise DegenerateFit("all sample times are equal")
    logy = np.log(y)
    tc = t - t.mean()
    slope = float(np.dot(tc, logy - logy.mean()) / np.dot(tc, tc))
    intercept = float(logy.mean() - slope * t.mean())
    resid = logy - (intercept + slope * t)
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(rate=abs(slope), r_squared=r2, amplitude=math.exp(intercept))


@dataclass(frozen=True)
class LocalizationStats:
    frac_dot1: float
    frac_dot2: float
    frac_undecided: float
    n: int


def localization_stats(records, threshold: float = 0.99, t_eval: float | None = None) -> LocalizationStats:
    """Fractions of realizations localized in each dot at ``t_eval``.

    ``records`` is a sequence of :class:`TrajectoryRecord` or an array of
    ``sigma11`` values already taken at the evaluation time.
    """
    if not 0.5 < threshold < 1.0:
        raise ValueError("threshold must lie in (0.5, 1)")
    if len(records) and isinstance(records[0], TrajectoryRecord):
        values = []
        for rec in records:
            k = len(rec.times) - 1 if t_eval is None else int(round(t_eval / rec.dt))
            values.append(rec.sigma11[k])
        s11 = np.asarray(values)
    else:
        s11 = np.asarray(records, dtype=float)
        if s11.ndim == 2:
            s11 = s11[:, 0]
    n = len(s11)
    dot1 = int(np.count_nonzero(s11 >= threshold))
    dot2 = int(np.count_nonzero(s11 <= 1.0 - threshold))
    return LocalizationStats(dot1 / n, dot2 / n, (n - dot1 - dot2) / n, n)


@dataclass(frozen=True)
class Spectrum:
    """Periodogram on an angular-frequency axis."""

    omega: np.ndarray
    power: np.ndarray

    @property
    def resolution(self) -> float:
        return float(self.omega[1] - self.omega[0])

    def peak_omega(self) -> float:
        k = 1 + int(np.argmax(self.power[1:]))
        return float(self.omega[k])

    def band_power(self, lo: float, hi: float) -> float:
        mask = (self.omega >= lo) & (self.omega < hi)
        return float(self.power[mask].sum())


def oscillation_spectrum(source, dt: float | None = None, quantity: str = "sigma11") -> Spectrum:
    """Periodogram of a uniformly sampled series with its mean removed.

    ``source`` may be a :class:`TrajectoryRecord`, an :class:`EnsembleStats`
    (its mean ``sigma11``), or a plain array together with ``dt``.
    """
    if isinstance(source, TrajectoryRecord):
        columns = {"sigma11": 0, "re_sigma12": 1, "im_sigma12": 2}
        series = source.states[:, columns[quantity]]
        dt = source.dt
    elif isinstance(source, EnsembleStats):
        columns = {"sigma11": 0, "re_sigma12": 1, "im_sigma12": 2}
        series = source.mean_state[:, columns[quantity]]
        dt = source.dt
    else:
        series = np.asarray(source, dtype=float)
        if dt is None:
            raise ValueError("dt is required for a bare series")
    if len(series) < 16:
        raise SeriesTooShort(f"need at least 16 samples, got {len(series)}")
    y = series - series.mean()
    spec = np.fft.rfft(y)
    power = (np.abs(spec) ** 2) * dt / len(y)
    omega = 2.0 * np.pi * np.fft.rfftfreq(len(y), dt)
    return Spectrum(omega, power)


@dataclass(frozen=True)
class Dwell:
    state: int
    start: float
    end: float
    complete: bool

    @property
    def duration(self) -> float:
        return self.end - self.start


def _crossing_time(t, y, k, level):
    if k == 0:
        return float(t[0])
    y0, y1 = y[k - 1], y[k]
    if y1 == y0:
        return float(t[k])
    return float(t[k - 1] + (t[k] - t[k - 1]) * (level - y0) / (y1 - y0))


def dwell_times(source, hi: float = 0.9, lo: float = 0.1, dt: float | None = None) -> list[Dwell]:
    """Dwell intervals in each dot using hysteresis thresholds on ``sigma11``.

    Dot 1 is entered when ``sigma11 >= hi`` and left when ``sigma11 <= lo``;
    dot 2 the other way round.  Crossing times are linearly interpolated.
    A dwell already in progress at the first sample, or still open at the
    last, is returned with ``complete=False``.
    """
    if not lo < 0.5 < hi:
        raise ValueError("need lo < 0.5 < hi")
    if isinstance(source, TrajectoryRecord):
        t = source.times
        y = source.sigma11
    else:
        y = np.asarray(source, dtype=float)
        if dt is None:
            raise ValueError("dt is required for a bare series")
        t = dt * np.arange(len(y))
    up = np.flatnonzero(y >= hi)
    down = np.flatnonzero(y <= lo)
    if len(up) == 0 and len(down) == 0:
        return []

    first_up = up[0] if len(up) else len(y)
    first_down = down[0] if len(down) else len(y)
    if first_up < first_down:
        state, k = 1, int(first_up)
    else:
        state, k = 2, int(first_down)
    start = float(t[0]) if k == 0 else _crossing_time(t, y, k, hi if state == 1 else lo)
    complete_start = k > 0

    dwells = []
    while True:
        exits = down if state == 1 else up
        pos = np.searchsorted(exits, k, side="right")
        if pos == len(exits):
            dwells.append(Dwell(state, start, float(t[-1]), False))
            break
        k = int(exits[pos])
        end = _crossing_time(t, y, k, lo if state == 1 else hi)
        dwells.append(Dwell(state, start, end, complete_start))
        state = 2 if state == 1 else 1
        start = end
        complete_start = True
    return dwells


def mean_dwell(dwells: Sequence[Dwell], state: int | None = None) -> float:
    """Mean duration of complete dwells (optionally for one dot); nan if none."""
    durations = [d.duration for d in dwells if d.complete and (state is None or d.state == state)]
    return float(np.mean(durations)) if durations else math.nan
