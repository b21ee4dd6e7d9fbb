"""Synthetic channel sounder.

Regenerates distance sweeps of band-averaged path loss from a known truth
model: LOS law, an optional reflected ray, a block-fading Rician NLOS term and
additive dB-domain measurement noise. Every distance point draws from its own
random stream seeded by ``(seed, point index)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import FREE_SPACE, LosParams, RicianParams, h_los, h_rician
from .errors import DomainError
from .estimation import Dataset, MeasurementRecord
from .wideband import BandSpec

CARRIER_HZ = 208e9


@dataclass(frozen=True)
class SweepSpec:
    """Equispaced distance sweep from ``d_start`` to ``d_stop`` in metres."""

    d_start: float
    d_stop: float
    d_step: float

    def __post_init__(self):
        if not (self.d_start > 0 and self.d_stop > self.d_start and self.d_step > 0):
            raise DomainError(f"invalid sweep {self}")
        span = self.d_stop - self.d_start
        rem = span - (self.n_points - 1) * self.d_step
        if rem > 0.5 * self.d_step:
            raise DomainError(f"step {self.d_step} does not divide span {span} to within half a step")

    @property
    def n_points(self) -> int:
        # Tolerate the rounding of span / step (0.8 / 0.01 = 79.999...).
        return int(math.floor((self.d_stop - self.d_start) / self.d_step * (1 + 1e-9))) + 1

    def distances(self) -> np.ndarray:
        n = self.n_points
        last = self.d_start + (n - 1) * self.d_step
        if abs(last - self.d_stop) <= 1e-9 * self.d_step * n:
            return np.linspace(self.d_start, self.d_stop, n)
        return self.d_start + self.d_step * np.arange(n)


def preset_large_scale() -> SweepSpec:
    """10 cm to 90 cm in 1 cm steps (81 points)."""
    return SweepSpec(0.10, 0.90, 0.01)


def preset_small_scale() -> SweepSpec:
    """45.00 cm to 45.30 cm in 0.05 mm steps (61 points)."""
    return SweepSpec(0.450, 0.453, 0.00005)


PRESETS = {"large": preset_large_scale, "small": preset_small_scale}


@dataclass(frozen=True)
class ReflectionTemplate:
    """Reflected ray as a function of the direct distance d.

    The excess path is ``excess_m + slope * (d - ref_m)`` and the reflection
    coefficient is constant. ``slope = 0`` gives a fixed excess length; a
    reflector fixed at ``L`` behind a moving receiver is ``slope = -2``,
    ``ref_m = L``, ``excess_m = 0``.
    """

    gamma: complex = -0.4
    excess_m: float = 2e-3
    slope: float = 0.0
    ref_m: float = 0.0

    def __post_init__(self):
        if abs(self.gamma) > 1.0:
            raise DomainError(f"|gamma| must not exceed 1, got {abs(self.gamma)}")

    @classmethod
    def reflector_behind_receiver(cls, reflector_m: float, gamma: complex = -0.4) -> ReflectionTemplate:
        return cls(gamma=gamma, excess_m=0.0, slope=-2.0, ref_m=reflector_m)

    def excess(self, d):
        ex = self.excess_m + self.slope * (np.asarray(d, dtype=float) - self.ref_m)
        if np.any(ex < 0):
            raise DomainError("reflected path would be shorter than the direct path")
        return ex


@dataclass(frozen=True)
class TruthModel:
    los: LosParams = FREE_SPACE
    two_ray: ReflectionTemplate | None = None
    k: RicianParams = field(default_factory=RicianParams.pure_los)
    noise_sigma_db: float = 0.5

    def __post_init__(self):
        if not self.noise_sigma_db >= 0:
            raise DomainError("noise sigma must be >= 0 dB")


def default_truth(preset: str = "small", noise_sigma_db: float = 0.5) -> TruthModel:
    """Two-ray truth used by the CLI: a reflector 5 mm beyond the far end of the sweep."""
    sweep = PRESETS[preset]()
    template = ReflectionTemplate.reflector_behind_receiver(sweep.d_stop + 0.005)
    return TruthModel(two_ray=template, noise_sigma_db=noise_sigma_db)


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    subband_points: int = 301

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.subband_points < 3 or self.subband_points % 2 == 0:
            raise DomainError("subband_points must be odd and >= 3")


def point_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one distance point (``stream`` separates sub-bands)."""
    key = [seed, index] if stream == 0 else [seed, index, stream]
    return np.random.default_rng(key)


def synth_transfer_function(d: float, band: BandSpec, truth: TruthModel, n_points: int,
                            rng: np.random.Generator) -> np.ndarray:
    """Complex channel at ``n_points`` equispaced frequencies across the band.

    Consumes exactly two standard normals from ``rng`` (the NLOS draw, shared
    by all frequencies of this distance point).
    """
    f = np.linspace(band.f_start, band.f_stop, n_points)
    los = np.asarray(h_los(f, d, truth.los))
    det = los
    if truth.two_ray is not None:
        d_ref = d + float(truth.two_ray.excess(d))
        det = los + truth.two_ray.gamma * np.asarray(h_los(f, d_ref, truth.los))
    w = complex(rng.standard_normal(), rng.standard_normal()) / math.sqrt(2.0)
    # NLOS power tracks the LOS power so K keeps its power-ratio meaning.
    return np.asarray(h_rician(truth.k, det, np.abs(los) * w))


def simulate_sweep(sweep: SweepSpec, band: BandSpec, truth: TruthModel,
                   cfg: SimConfig = SimConfig(), label: str = "", stream: int = 0) -> Dataset:
    """Band-mean received power per distance, converted to path loss with noise."""
    records = []
    for i, d in enumerate(sweep.distances()):
        rng = point_rng(cfg.seed, i, stream)
        H = synth_transfer_function(float(d), band, truth, cfg.subband_points, rng)
        pl = -10.0 * math.log10(float(np.mean(np.abs(H) ** 2)))
        noise = rng.standard_normal()
        if truth.noise_sigma_db > 0:
            pl += truth.noise_sigma_db * noise
        records.append(MeasurementRecord(float(d), band, pl))
    return Dataset(tuple(records), band.center, label or f"sim seed={cfg.seed}")


def split_band(band: BandSpec, n: int) -> list[BandSpec]:
    """Split a band into ``n`` contiguous equal sub-bands."""
    if n < 1:
        raise DomainError("number of sub-bands must be >= 1")
    edges = np.linspace(band.f_start, band.f_stop, n + 1)
    return [BandSpec(float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]
