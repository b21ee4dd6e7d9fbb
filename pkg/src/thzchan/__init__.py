"""Frequency-selective Rician path-loss modeling for short-range THz links."""

__version__ = "0.1.0"

from .channel import (  # noqa: E402
    FREE_SPACE,
    LosParams,
    RicianParams,
    StandingWaveParams,
    TwoRayGeometry,
    fspl_db,
    h_los,
    h_rician,
    h_two_ray,
    integrated_pl_db,
    path_loss_los_db,
    speed_of_light,
)
from .errors import (  # noqa: E402
    AccuracyLossError,
    DataError,
    DomainError,
    IdentifiabilityError,
    NumericalError,
    QuadratureError,
)
from .estimation import (  # noqa: E402
    Dataset,
    FitResult,
    MeasurementRecord,
    estimate_k_factor,
    fit_alpha_beta,
    fit_standing_wave,
    rmse_db,
)
from .incgamma import gen_exponential_integral  # noqa: E402
from .sounder import (  # noqa: E402
    ReflectionTemplate,
    SimConfig,
    SweepSpec,
    TruthModel,
    preset_large_scale,
    preset_small_scale,
    simulate_sweep,
    synth_transfer_function,
)
from .wideband import (  # noqa: E402
    BandSpec,
    QuadratureConfig,
    band_avg_path_loss_db,
    band_integral_analytic,
    band_integral_quadrature,
    band_power_avg_path_loss_db,
)
