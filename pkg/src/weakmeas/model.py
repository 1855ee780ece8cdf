"""Domain types and parameter handling for the measured double dot.

State 1 is the dot that lets current ``I1 = I0 - dI/2`` through the detector,
state 2 the one giving ``I2 = I0 + dI/2``.  Only ``sigma11`` and the complex
off-diagonal element are stored; ``sigma22 = 1 - sigma11``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

PURITY_TOL = 1e-12
WEAK_COUPLING_RATIO = 0.3


class ModelError(ValueError):
    """Base class for invalid parameters or states."""


class NonPositiveSpectralDensity(ModelError):
    pass


class NegativeExcessDecoherence(ModelError):
    pass


class NonFiniteParameter(ModelError):
    pass


class InvalidState(ModelError):
    pass


class WeakCouplingWarning(UserWarning):
    """Detector response is not small compared to the mean current."""


@dataclass(frozen=True)
class DensityMatrix:
    """Conditioned 2x2 density matrix of the double dot.

    Parameters
    ----------
    sigma11 : float
        Occupation probability of dot 1.
    re_sigma12, im_sigma12 : float
        Real and imaginary parts of the off-diagonal element.
    """

    sigma11: float
    re_sigma12: float = 0.0
    im_sigma12: float = 0.0

    def __post_init__(self):
        for name in ("sigma11", "re_sigma12", "im_sigma12"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidState(f"{name} is not finite: {value!r}")
            object.__setattr__(self, name, float(value))
        if not 0.0 <= self.sigma11 <= 1.0:
            raise InvalidState(f"sigma11={self.sigma11!r} outside [0, 1]")
        if purity_defect(self) < -PURITY_TOL:
            raise InvalidState(
                f"|sigma12|^2 exceeds sigma11*sigma22 (defect {purity_defect(self):.3e})"
            )

    @property
    def sigma22(self) -> float:
        return 1.0 - self.sigma11

    @property
    def sigma12(self) -> complex:
        return complex(self.re_sigma12, self.im_sigma12)

    @classmethod
    def pure(cls, sigma11: float, phase: float = 0.0) -> "DensityMatrix":
        """Pure state with the given occupation and relative phase."""
        mod = math.sqrt(sigma11 * (1.0 - sigma11))
        return cls(sigma11, mod * math.cos(phase), mod * math.sin(phase))

    @classmethod
    def from_bloch(cls, x: float, y: float, z: float) -> "DensityMatrix":
        return cls(0.5 * (1.0 + z), 0.5 * x, 0.5 * y)

    def bloch(self) -> tuple[float, float, float]:
        """Bloch vector ``(2 Re s12, 2 Im s12, s11 - s22)``."""
        return (2.0 * self.re_sigma12, 2.0 * self.im_sigma12, 2.0 * self.sigma11 - 1.0)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.sigma11, self.re_sigma12, self.im_sigma12)


def purity_defect(rho: DensityMatrix) -> float:
    """Return ``sigma11*sigma22 - |sigma12|^2``; zero for a pure state, 1/4 when fully mixed."""
    s11 = rho.sigma11
    return s11 * (1.0 - s11) - (rho.re_sigma12 ** 2 + rho.im_sigma12 ** 2)


@dataclass(frozen=True)
class SystemParams:
    """Double-dot Hamiltonian: level asymmetry ``eps``, tunnelling ``h_coupling``."""

    eps: float = 0.0
    h_coupling: float = 0.0
    hbar: float = 1.0


@dataclass(frozen=True)
class DetectorParams:
    """Point-contact detector seen through its low-frequency statistics.

    ``s_i`` is the one-sided shot-noise spectral density and
    ``gamma_d_extra`` the decoherence rate in excess of the ideal-detector value.
    """

    i0: float = 10.0
    delta_i: float = 1.0
    s_i: float = 1.0
    gamma_d_extra: float = 0.0

    @property
    def i1(self) -> float:
        return self.i0 - 0.5 * self.delta_i

    @property
    def i2(self) -> float:
        return self.i0 + 0.5 * self.delta_i


@dataclass(frozen=True)
class DerivedQuantities:
    """Rates and times derived from the parameters.

    ``coupling_c`` is ``None`` when the tunnelling amplitude vanishes.
    """

    gamma_d_meas: float
    tau_loc: float
    omega: float
    coupling_c: float | None

    @property
    def coupling_defined(self) -> bool:
        return self.coupling_c is not None


@dataclass(frozen=True)
class ValidatedModel:
    system: SystemParams
    detector: DetectorParams
    derived: DerivedQuantities
    warnings: tuple[str, ...] = field(default=())


def validate_params(sys: SystemParams, det: DetectorParams, *, warn: bool = True) -> ValidatedModel:
    """Check parameter bounds and return them bundled with derived quantities.

    A weak-coupling violation (``|dI| > 0.3 I0``) only produces a warning.
    """
    values = {
        "eps": sys.eps,
        "h_coupling": sys.h_coupling,
        "hbar": sys.hbar,
        "i0": det.i0,
        "delta_i": det.delta_i,
        "s_i": det.s_i,
        "gamma_d_extra": det.gamma_d_extra,
    }
    for name, value in values.items():
        if not math.isfinite(value):
            raise NonFiniteParameter(f"{name}={value!r}")
    if sys.hbar <= 0:
        raise ModelError(f"hbar must be positive, got {sys.hbar!r}")
    if det.s_i <= 0:
        raise NonPositiveSpectralDensity(f"s_i={det.s_i!r}")
    if det.gamma_d_extra < 0:
        raise NegativeExcessDecoherence(f"gamma_d_extra={det.gamma_d_extra!r}")

    notes = []
    if abs(det.delta_i) > WEAK_COUPLING_RATIO * abs(det.i0):
        msg = (
            f"weak coupling violated: |delta_i|={abs(det.delta_i):g} > "
            f"{WEAK_COUPLING_RATIO} * i0={abs(det.i0):g}"
        )
        notes.append(msg)
        if warn:
            warnings.warn(msg, WeakCouplingWarning, stacklevel=2)
    return ValidatedModel(sys, det, derived_quantities(sys, det), tuple(notes))


def derived_quantities(sys: SystemParams, det: DetectorParams) -> DerivedQuantities:
    di2 = det.delta_i ** 2
    gamma = di2 / (4.0 * det.s_i)
    tau_loc = 2.0 * det.s_i / di2 if di2 > 0 else math.inf
    omega = math.hypot(2.0 * sys.h_coupling, sys.eps) / sys.hbar
    coupling = sys.hbar * di2 / (det.s_i * sys.h_coupling) if sys.h_coupling != 0 else None
    return DerivedQuantities(gamma, tau_loc, omega, coupling)


def max_timestep(sys: SystemParams, det: DetectorParams) -> float:
    """Largest step allowed without override: ``min(0.1 tau_loc, 0.1/Omega)``."""
    d = derived_quantities(sys, det)
    limit_meas = 0.1 * d.tau_loc
    limit_osc = 0.1 / d.omega if d.omega > 0 else math.inf
    return min(limit_meas, limit_osc)
