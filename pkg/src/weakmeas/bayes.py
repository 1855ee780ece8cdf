"""Bayesian conditioning of the double-dot state on averaged detector output.

The diagonal update is done on the log-odds ``L = ln(s11/s22)``.  An outcome
``i_avg`` averaged over a window ``tau`` shifts it by

    L' = L - 2 dI (i_avg - I0) tau / S_I

which is the ratio of the two Gaussian likelihoods, so outcomes near ``I1``
favour dot 1.  The coherence is rescaled by ``sqrt(s11' s22' / (s11 s22))``,
which keeps a pure state pure, and then damped by ``exp(-gamma_d tau)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import DensityMatrix, DetectorParams, SystemParams, derived_quantities


class NonPositiveWindow(ValueError):
    pass


@dataclass(frozen=True)
class OutcomeDistribution:
    """Two-component Gaussian mixture of the window-averaged current."""

    weight1: float
    mean1: float
    weight2: float
    mean2: float
    variance: float

    @property
    def mean(self) -> float:
        return self.weight1 * self.mean1 + self.weight2 * self.mean2

    def pdf(self, x):
        norm = 1.0 / math.sqrt(2.0 * math.pi * self.variance)
        g1 = math.exp(-((x - self.mean1) ** 2) / (2.0 * self.variance))
        g2 = math.exp(-((x - self.mean2) ** 2) / (2.0 * self.variance))
        return norm * (self.weight1 * g1 + self.weight2 * g2)


def outcome_distribution(rho: DensityMatrix, tau: float, det: DetectorParams) -> OutcomeDistribution:
    if not tau > 0:
        raise NonPositiveWindow(f"averaging window must be positive, got {tau!r}")
    return OutcomeDistribution(
        weight1=rho.sigma11,
        mean1=det.i1,
        weight2=rho.sigma22,
        mean2=det.i2,
        variance=det.s_i / (2.0 * tau),
    )


def sample_outcome(dist: OutcomeDistribution, rng) -> float:
    """Draw one window-averaged current from ``dist``.

    ``rng`` must provide ``pair() -> (u, z)`` (see :class:`weakmeas.rng.RandomSource`).
    """
    u, z = rng.pair()
    mean = dist.mean1 if u < dist.weight1 else dist.mean2
    return mean + math.sqrt(dist.variance) * z


def log_odds(s11: float) -> float:
    return math.log(s11) - math.log1p(-s11)


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def log_s11_s22(x: float) -> float:
    """``ln(s11 * s22)`` for log-odds ``x``, without overflow."""
    a = abs(x)
    return -(a + 2.0 * math.log1p(math.exp(-a)))


def log_odds_shift(i_avg: float, tau: float, det: DetectorParams) -> float:
    return -2.0 * det.delta_i * (i_avg - det.i0) * tau / det.s_i


def bayes_update(rho: DensityMatrix, i_avg: float, tau: float, det: DetectorParams) -> DensityMatrix:
    """Posterior state after observing average current ``i_avg`` over ``tau``."""
    if not tau > 0:
        raise NonPositiveWindow(f"averaging window must be positive, got {tau!r}")
    s11, re, im = rho.sigma11, rho.re_sigma12, rho.im_sigma12
    if det.delta_i != 0.0 and 0.0 < s11 < 1.0:
        lo = log_odds(s11)
        lo_new = lo + log_odds_shift(i_avg, tau, det)
        scale = math.exp(0.5 * (log_s11_s22(lo_new) - log_s11_s22(lo)))
        s11 = sigmoid(lo_new)
        re *= scale
        im *= scale
    if det.gamma_d_extra > 0.0:
        damp = math.exp(-det.gamma_d_extra * tau)
        re *= damp
        im *= damp
    return DensityMatrix(s11, re, im)


def _windows(record: Iterable) -> Iterable[tuple[float, float]]:
    for item in record:
        if hasattr(item, "i_avg"):
            yield item.i_avg, item.dt
        else:
            i_avg, tau = item
            yield i_avg, tau


def condition_on_record(
    rho0: DensityMatrix,
    record: Sequence,
    sys: SystemParams,
    det: DetectorParams,
) -> DensityMatrix:
    """State assigned by an observer holding the detector ``record``.

    ``record`` holds ``(i_avg, tau)`` pairs or :class:`CurrentSample` objects.
    With tunnelling present each window is split symmetrically around the
    measurement update, the same way the trajectory stepper does it.
    """
    from .trajectory import hamiltonian_evolve

    rotate = derived_quantities(sys, det).omega > 0
    rho = rho0
    for i_avg, tau in _windows(record):
        if rotate:
            rho = hamiltonian_evolve(rho, 0.5 * tau, sys)
        rho = bayes_update(rho, i_avg, tau, det)
        if rotate:
            rho = hamiltonian_evolve(rho, 0.5 * tau, sys)
    return rho
