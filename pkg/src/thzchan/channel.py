"""Channel gains and path-loss laws for a short-range frequency-selective link.

Every function accepts scalars or numpy arrays (broadcast together) and is
pure. Frequencies are in Hz, distances in metres, losses in dB. Gains use the
``exp(-j 2 pi f d / c)`` phase convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

SPEED_OF_LIGHT = 299792458.0
TWO_PI = 2.0 * math.pi


def speed_of_light() -> float:
    """Speed of light in vacuum, m/s."""
    return SPEED_OF_LIGHT


def wavelength(frequency_hz: float) -> float:
    return SPEED_OF_LIGHT / _positive(frequency_hz, "frequency")


@dataclass(frozen=True)
class LosParams:
    """Exponents of the LOS attenuation law ``c / (4 pi f**alpha d**beta)``.

    ``alpha`` scales the frequency dependence and ``beta`` the distance
    dependence; free space is ``alpha = beta = 1``. Fitting is meaningful for
    alpha in [0, 4] and beta in [0, 6], evaluation accepts any finite value.
    """

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise DomainError(f"LOS exponents must be finite, got {self}")


FREE_SPACE = LosParams(1.0, 1.0)


@dataclass(frozen=True)
class RicianParams:
    """Rician K-factor in linear scale; ``math.inf`` means pure LOS."""

    k_factor: float

    def __post_init__(self):
        if math.isnan(self.k_factor) or self.k_factor < 0:
            raise DomainError(f"K-factor must be >= 0, got {self.k_factor}")

    @classmethod
    def pure_los(cls) -> RicianParams:
        return cls(math.inf)

    @classmethod
    def from_db(cls, k_db: float) -> RicianParams:
        if k_db == math.inf:
            return cls(math.inf)
        return cls(10.0 ** (k_db / 10.0))

    @property
    def k_db(self) -> float:
        if self.k_factor == 0:
            return -math.inf
        return 10.0 * math.log10(self.k_factor) if math.isfinite(self.k_factor) else math.inf

    @property
    def is_pure_los(self) -> bool:
        return self.k_factor == math.inf


@dataclass(frozen=True)
class TwoRayGeometry:
    """Direct and reflected path lengths plus the complex reflection coefficient."""

    d_direct: float
    d_reflected: float
    gamma: complex = 0.0

    def __post_init__(self):
        _positive(self.d_direct, "d_direct")
        _positive(self.d_reflected, "d_reflected")
        if self.d_reflected < self.d_direct:
            raise DomainError("reflected path cannot be shorter than the direct path")
        if abs(self.gamma) > 1.0:
            raise DomainError(f"|gamma| must not exceed 1, got {abs(self.gamma)}")


@dataclass(frozen=True)
class StandingWaveParams:
    """Cosine ripple ``A cos(2 pi d / period + phase) + C`` added to the LOS loss.

    The phase is wrapped into [0, 2 pi) on construction.
    """

    amplitude_db: float = 0.0
    phase_rad: float = 0.0
    calibration_db: float = 0.0
    period_m: float = SPEED_OF_LIGHT / 208e9

    def __post_init__(self):
        if not self.amplitude_db >= 0:
            raise DomainError(f"amplitude must be >= 0 dB, got {self.amplitude_db}")
        if not (self.period_m > 0 and math.isfinite(self.period_m)):
            raise DomainError(f"period must be positive, got {self.period_m}")
        object.__setattr__(self, "phase_rad", float(self.phase_rad) % TWO_PI)


def _positive(x, name: str):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"{name} must be positive and finite")
    return x


def _unwrap(x):
    return x[()] if isinstance(x, np.ndarray) and x.ndim == 0 else x


def _propagation_phase(f, d):
    """``exp(-j 2 pi f d / c)`` with the whole cycles removed before exp."""
    cycles = np.asarray(f, dtype=float) * np.asarray(d, dtype=float) / SPEED_OF_LIGHT
    frac = cycles - np.round(cycles)
    return np.exp(-1j * TWO_PI * frac)


def h_los(f, d, p: LosParams = FREE_SPACE):
    """Complex LOS gain ``c / (4 pi f^alpha d^beta) * exp(-j 2 pi f d / c)``."""
    _positive(f, "frequency")
    _positive(d, "distance")
    f = np.asarray(f, dtype=float)
    d = np.asarray(d, dtype=float)
    mag = SPEED_OF_LIGHT / (4.0 * math.pi * f**p.alpha * d**p.beta)
    return _unwrap(mag * _propagation_phase(f, d))


def path_loss_los_db(f, d, p: LosParams = FREE_SPACE):
    """LOS path loss ``20 log10(4 pi f^alpha d^beta / c)`` in dB."""
    _positive(f, "frequency")
    _positive(d, "distance")
    f = np.asarray(f, dtype=float)
    d = np.asarray(d, dtype=float)
    # Same magnitude expression as h_los so the two agree to rounding.
    mag = SPEED_OF_LIGHT / (4.0 * math.pi * f**p.alpha * d**p.beta)
    return _unwrap(-20.0 * np.log10(mag))


def fspl_db(f, d):
    """Free-space (Friis) path loss, i.e. the LOS law with alpha = beta = 1."""
    return path_loss_los_db(f, d, FREE_SPACE)


def h_two_ray(f, g: TwoRayGeometry):
    """Direct ray plus a reflected ray of length ``d_reflected`` scaled by gamma."""
    direct = np.asarray(h_los(f, g.d_direct, FREE_SPACE))
    reflected = g.gamma * np.asarray(h_los(f, g.d_reflected, FREE_SPACE))
    return _unwrap(direct + reflected)


def h_rician(k: RicianParams, h_los, nlos_draw):
    """Combine a deterministic LOS gain with a unit-variance NLOS draw.

    ``sqrt(K/(1+K)) h_los + sqrt(1/(1+K)) nlos``; K = inf returns ``h_los``
    unchanged and K = 0 returns ``nlos_draw`` unchanged.
    """
    if k.k_factor == math.inf:
        return h_los
    if k.k_factor == 0:
        return nlos_draw
    K = k.k_factor
    return math.sqrt(K / (1.0 + K)) * h_los + math.sqrt(1.0 / (1.0 + K)) * nlos_draw


def integrated_pl_db(d, f_c, los: LosParams, sw: StandingWaveParams):
    """LOS path loss plus a cosine standing-wave ripple and calibration offset."""
    base = np.asarray(path_loss_los_db(f_c, d, los))
    d = np.asarray(d, dtype=float)
    ripple = sw.amplitude_db * np.cos(TWO_PI * d / sw.period_m + sw.phase_rad)
    return _unwrap(base + ripple + sw.calibration_db)
