"""Least-squares fitting of path-loss models and Rician K-factor estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .channel import (
    FREE_SPACE,
    SPEED_OF_LIGHT,
    TWO_PI,
    LosParams,
    RicianParams,
    StandingWaveParams,
    integrated_pl_db,
    path_loss_los_db,
    wavelength,
)
from .errors import DataError, DomainError, IdentifiabilityError
from .wideband import BandSpec

# 20 log10(4 pi / c): the constant part of the LOS law in dB.
LOS_CONSTANT_DB = 20.0 * math.log10(4.0 * math.pi / SPEED_OF_LIGHT)
MIN_K_SAMPLES = 30


@dataclass(frozen=True)
class MeasurementRecord:
    distance: float
    band: BandSpec
    path_loss_db: float

    def __post_init__(self):
        if not (self.distance > 0 and math.isfinite(self.distance)):
            raise DataError(f"distance must be positive, got {self.distance}")
        if not math.isfinite(self.path_loss_db):
            raise DataError(f"path loss must be finite, got {self.path_loss_db}")


@dataclass(frozen=True)
class Dataset:
    """Path-loss records over one band, sorted by distance."""

    records: tuple[MeasurementRecord, ...]
    carrier: float
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if not self.records:
            raise DataError("dataset is empty")
        bands = {r.band for r in self.records}
        if len(bands) != 1:
            raise DataError(f"dataset {self.label!r} mixes {len(bands)} bands")
        d = self.distances
        if np.any(np.diff(d) < 0):
            raise DataError(f"dataset {self.label!r} is not sorted by distance")
        if not (self.carrier > 0 and math.isfinite(self.carrier)):
            raise DataError(f"carrier must be positive, got {self.carrier}")

    @classmethod
    def from_arrays(cls, distances, path_loss_db, band: BandSpec,
                    carrier: float | None = None, label: str = "") -> Dataset:
        d = np.asarray(distances, dtype=float)
        pl = np.asarray(path_loss_db, dtype=float)
        if d.shape != pl.shape:
            raise DataError("distance and path-loss arrays differ in length")
        order = np.argsort(d, kind="stable")
        records = tuple(MeasurementRecord(float(d[i]), band, float(pl[i])) for i in order)
        return cls(records, band.center if carrier is None else carrier, label)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def band(self) -> BandSpec:
        return self.records[0].band

    @property
    def distances(self) -> np.ndarray:
        return np.array([r.distance for r in self.records])

    @property
    def path_loss(self) -> np.ndarray:
        return np.array([r.path_loss_db for r in self.records])


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters with residuals ``model - measured`` in dB.

    ``calibration_db`` is the fitted intercept of an LOS-only fit; when a
    standing-wave term is present its own ``calibration_db`` is used instead.
    """

    rmse_db: float
    residuals_db: np.ndarray = field(repr=False)
    los: LosParams | None = None
    sw: StandingWaveParams | None = None
    k: RicianParams | None = None
    calibration_db: float = 0.0

    def predict(self, distances, carrier: float):
        los = self.los or FREE_SPACE
        if self.sw is not None:
            return integrated_pl_db(distances, carrier, los, self.sw)
        return np.asarray(path_loss_los_db(carrier, distances, los)) + self.calibration_db


def _rmse(residuals) -> float:
    r = np.asarray(residuals, dtype=float)
    return float(np.sqrt(np.mean(r * r)))


def rmse_db(model_pl, dataset: Dataset | Sequence[float]) -> float:
    """Root-mean-square difference between model and measured path loss."""
    measured = dataset.path_loss if isinstance(dataset, Dataset) else np.asarray(dataset, float)
    model = np.asarray(model_pl, dtype=float)
    if model.shape != measured.shape:
        raise DataError(f"model has {model.size} points, dataset has {measured.size}")
    return _rmse(model - measured)


def fspl_reference(dataset: Dataset) -> FitResult:
    """Parameter-free free-space benchmark evaluated at the dataset carrier."""
    model = np.asarray(path_loss_los_db(dataset.carrier, dataset.distances, FREE_SPACE))
    res = model - dataset.path_loss
    return FitResult(_rmse(res), res, los=FREE_SPACE)


def fit_alpha_beta(datasets: Dataset | Sequence[Dataset], alpha: float | None = None) -> FitResult:
    """Fit the LOS exponents by linear least squares in the dB domain.

    With ``alpha=None`` both exponents are fitted jointly, with no free
    intercept, which needs at least two distinct carriers. Passing a value for
    ``alpha`` fixes it and fits ``beta`` plus a calibration intercept instead,
    which works on a single carrier.

    Residuals are returned in the concatenated record order of ``datasets``.
    """
    if isinstance(datasets, Dataset):
        datasets = [datasets]
    if not datasets:
        raise DataError("no datasets to fit")
    f = np.concatenate([np.full(len(ds), ds.carrier) for ds in datasets])
    d = np.concatenate([ds.distances for ds in datasets])
    pl = np.concatenate([ds.path_loss for ds in datasets])
    log_f = 20.0 * np.log10(f)
    log_d = 20.0 * np.log10(d)

    if np.unique(d).size < 2:
        raise IdentifiabilityError("beta", "beta is not identifiable: all records share one distance")
    if alpha is None:
        if np.unique(f).size < 2:
            raise IdentifiabilityError(
                "alpha",
                "alpha is not identifiable from a single carrier frequency: its effect is a "
                "constant offset confounded with the calibration constant; supply datasets at "
                "two or more carriers or fix alpha",
            )
        X = np.column_stack([log_f, log_d])
        y = pl - LOS_CONSTANT_DB
        (a_hat, b_hat), *_ = np.linalg.lstsq(X, y, rcond=None)
        los = LosParams(float(a_hat), float(b_hat))
        intercept = 0.0
    else:
        X = np.column_stack([log_d, np.ones_like(log_d)])
        y = pl - LOS_CONSTANT_DB - alpha * log_f
        (b_hat, intercept), *_ = np.linalg.lstsq(X, y, rcond=None)
        los = LosParams(float(alpha), float(b_hat))
        intercept = float(intercept)

    model = np.asarray(path_loss_los_db(f, d, los)) + intercept
    res = model - pl
    return FitResult(_rmse(res), res, los=los, calibration_db=intercept)


def default_period_grid(carrier: float, lo: float = 0.40, hi: float = 1.10, n: int = 201) -> np.ndarray:
    """Candidate ripple periods: carrier wavelength times linspace(lo, hi, n)."""
    return wavelength(carrier) * np.linspace(lo, hi, n)


def fit_standing_wave(dataset: Dataset, los: LosParams, carrier: float | None = None,
                      period_grid=None, fit_beta: bool = False, refine: bool = True) -> FitResult:
    """Fit ``A cos(2 pi d / period + phase) + C`` to the LOS residual.

    For every candidate period the remaining parameters enter linearly
    (``a cos + b sin + C``, plus ``beta`` when ``fit_beta``) and are solved
    exactly. The best grid period is then polished by a bounded scalar search
    between its grid neighbours; ties on the grid go to the smallest period.
    """
    carrier = dataset.carrier if carrier is None else carrier
    grid = default_period_grid(carrier) if period_grid is None else np.asarray(period_grid, float)
    if grid.size == 0:
        raise DomainError("period grid is empty")
    if np.any(~np.isfinite(grid)) or np.any(grid <= 0):
        raise DomainError("period grid must hold positive periods")
    grid = np.unique(grid)

    d = dataset.distances
    pl = dataset.path_loss
    span = d[-1] - d[0]
    if span < 2.0 * grid[0]:
        raise DataError(
            f"sweep spans {span:.4g} m, need at least two periods of {grid[0]:.4g} m")

    if fit_beta:
        y = pl - LOS_CONSTANT_DB - 20.0 * los.alpha * math.log10(carrier)
        extra = [20.0 * np.log10(d)]
    else:
        y = pl - np.asarray(path_loss_los_db(carrier, d, los))
        extra = []

    def solve(period):
        theta = TWO_PI * d / period
        X = np.column_stack([np.cos(theta), np.sin(theta), np.ones_like(d), *extra])
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        r = X @ coef - y
        return float(r @ r), coef

    ssr = np.array([solve(p)[0] for p in grid])
    # Equal up to rounding counts as a tie; the grid is ascending.
    tie = 64.0 * np.finfo(float).eps * float(y @ y)
    i = int(np.flatnonzero(ssr <= ssr.min() + tie)[0])
    best_period, best_ssr = float(grid[i]), float(ssr[i])
    if refine and grid.size > 1:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, grid.size - 1)]
        scale = grid[i]
        opt = minimize_scalar(lambda x: solve(x * scale)[0], bounds=(lo / scale, hi / scale),
                              method="bounded", options={"xatol": 1e-13})
        if opt.fun < best_ssr:
            best_period, best_ssr = float(opt.x * scale), float(opt.fun)

    _, coef = solve(best_period)
    a, b, c = (float(v) for v in coef[:3])
    fitted_los = LosParams(los.alpha, float(coef[3])) if fit_beta else los
    sw = StandingWaveParams(
        amplitude_db=math.hypot(a, b),
        phase_rad=math.atan2(-b, a) % TWO_PI,
        calibration_db=c,
        period_m=best_period,
    )
    model = np.asarray(integrated_pl_db(d, carrier, fitted_los, sw))
    res = model - pl
    return FitResult(_rmse(res), res, los=fitted_los, sw=sw, calibration_db=c)


def estimate_k_factor(power_samples) -> RicianParams:
    """Second-moment K-factor estimate from linear power samples.

    With ``g = Var[P] / E[P]^2``, ``K = sqrt(1 - g) / (1 - sqrt(1 - g))``.
    Zero variance gives the pure-LOS sentinel and ``g >= 1`` gives K = 0.
    """
    p = np.asarray(power_samples, dtype=float).ravel()
    if p.size < MIN_K_SAMPLES:
        raise DataError(f"need at least {MIN_K_SAMPLES} power samples, got {p.size}")
    if np.any(~np.isfinite(p)) or np.any(p <= 0):
        raise DataError("power samples must be positive and finite")
    mean = p.mean()
    g = float(np.mean((p - mean) ** 2) / mean**2)
    if g < np.finfo(float).eps:
        return RicianParams.pure_los()
    if g >= 1.0:
        return RicianParams(0.0)
    r = math.sqrt(1.0 - g)
    return RicianParams(r / (1.0 - r))


def k_factor_from_residuals(residuals_db) -> RicianParams:
    """K-factor diagnostic from the small-scale power left after a path-loss fit.

    Residuals are ``model - measured`` dB, so ``10**(res/10)`` is received
    power relative to the model (the estimator is scale-free).
    """
    r = np.asarray(residuals_db, dtype=float)
    return estimate_k_factor(10.0 ** (r / 10.0))
