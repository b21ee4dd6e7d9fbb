"""Command-line front end: simulate, fit, evaluate, bandwidth-sweep, replay.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
Every output file gets a ``<output>.manifest.json`` recording the fully
resolved parameters; ``thzchan replay`` re-runs a command from it.
"""

from __future__ import annotations

import argparse
import cmath
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import (
    LosParams,
    RicianParams,
    StandingWaveParams,
    fspl_db,
    integrated_pl_db,
    path_loss_los_db,
)
from .errors import DataError, DomainError, IdentifiabilityError, NumericalError
from .estimation import (
    MIN_K_SAMPLES,
    Dataset,
    FitResult,
    default_period_grid,
    fit_alpha_beta,
    fit_standing_wave,
    fspl_reference,
    k_factor_from_residuals,
)
from .io import (
    fit_to_params,
    read_dataset_csv,
    read_manifest,
    read_params_json,
    write_dataset_csv,
    write_manifest,
    write_params_json,
    write_table_csv,
)
from .sounder import (
    CARRIER_HZ,
    PRESETS,
    ReflectionTemplate,
    SimConfig,
    SweepSpec,
    TruthModel,
    simulate_sweep,
    split_band,
)
from .wideband import BandSpec

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
DEFAULT_BANDWIDTHS_GHZ = "0.5,1,5,10,15"
SWEEP_HEADER = ("bw_ghz", "rmse_no_sw_db", "rmse_sw_db", "improvement_pct")


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values or any(not (v > 0 and math.isfinite(v)) for v in values):
        raise argparse.ArgumentTypeError("values must be positive numbers")
    return values


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


# -- shared flag groups ------------------------------------------------------

def _add_sweep_flags(p: argparse.ArgumentParser, default_preset: str | None) -> None:
    g = p.add_argument_group("distance sweep")
    g.add_argument("--preset", choices=sorted(PRESETS), default=default_preset,
                   help="measurement sweep preset: large = 0.10-0.90 m / 1 cm (81 points), "
                        "small = 450.00-453.00 mm / 0.05 mm (61 points)")
    g.add_argument("--d-start", type=float, help="first distance in m (explicit sweep, with --d-stop/--d-step)")
    g.add_argument("--d-stop", type=float, help="last distance in m (explicit sweep)")
    g.add_argument("--d-step", type=float, help="distance step in m (explicit sweep)")


def _add_truth_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("truth model")
    g.add_argument("--carrier-ghz", type=float, default=CARRIER_HZ / 1e9, help="carrier frequency in GHz (default 208)")
    g.add_argument("--alpha", type=float, default=1.0, help="frequency exponent of the LOS law (default 1)")
    g.add_argument("--beta", type=float, default=1.0, help="distance exponent of the LOS law (default 1)")
    g.add_argument("--k-db", type=float, default=math.inf, help="Rician K-factor in dB; inf = pure LOS (default inf)")
    g.add_argument("--two-ray", choices=["reflector", "fixed", "none"], default="reflector",
                   help="reflected ray: 'reflector' = fixed reflector behind the receiver, "
                        "'fixed' = constant excess path, 'none' = LOS only (default reflector)")
    g.add_argument("--reflector-m", type=float, default=None,
                   help="reflector distance from the transmitter in m (default: 5 mm beyond the last distance)")
    g.add_argument("--excess-mm", type=float, default=2.0, help="excess path length in mm for --two-ray fixed (default 2)")
    g.add_argument("--gamma-mag", type=float, default=0.4, help="reflection coefficient magnitude (default 0.4)")
    g.add_argument("--gamma-phase-deg", type=float, default=180.0, help="reflection coefficient phase in degrees (default 180)")
    g.add_argument("--noise-db", type=float, default=0.5, help="measurement noise standard deviation in dB (default 0.5)")
    g.add_argument("--seed", type=_seed, default=0, help="random seed, decimal or 0x-hex (default 0)")
    g.add_argument("--subband-points", type=int, default=301, help="frequency samples per band, odd (default 301)")


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("standing-wave period grid (multiples of the carrier wavelength)")
    g.add_argument("--period-min", type=float, default=0.40, help="smallest period factor (default 0.40)")
    g.add_argument("--period-max", type=float, default=1.10, help="largest period factor (default 1.10)")
    g.add_argument("--period-steps", type=int, default=201, help="number of grid periods (default 201)")


def _resolve_sweep(args) -> SweepSpec:
    explicit = [args.d_start, args.d_stop, args.d_step]
    if any(v is not None for v in explicit):
        if args.preset is not None:
            raise UsageError("--preset cannot be combined with --d-start/--d-stop/--d-step")
        if any(v is None for v in explicit):
            raise UsageError("--d-start, --d-stop and --d-step must be given together")
        try:
            return SweepSpec(args.d_start, args.d_stop, args.d_step)
        except DomainError as exc:
            raise UsageError(f"--d-step: {exc}")
    if args.preset is None:
        raise UsageError("either --preset or --d-start/--d-stop/--d-step is required")
    return PRESETS[args.preset]()


def _resolve_truth(args, sweep: SweepSpec) -> TruthModel:
    if not 0 <= args.gamma_mag <= 1:
        raise UsageError("--gamma-mag must lie in [0, 1]")
    if args.noise_db < 0:
        raise UsageError("--noise-db must be >= 0")
    if args.subband_points < 3 or args.subband_points % 2 == 0:
        raise UsageError("--subband-points must be odd and >= 3")
    gamma = cmath.rect(args.gamma_mag, math.radians(args.gamma_phase_deg))
    if args.two_ray == "reflector":
        if args.reflector_m is None:
            args.reflector_m = sweep.d_stop + 0.005
        if args.reflector_m <= sweep.d_stop:
            raise UsageError("--reflector-m must lie beyond the last distance of the sweep")
        template = ReflectionTemplate.reflector_behind_receiver(args.reflector_m, gamma)
    elif args.two_ray == "fixed":
        if args.excess_mm < 0:
            raise UsageError("--excess-mm must be >= 0")
        template = ReflectionTemplate(gamma, args.excess_mm * 1e-3)
    else:
        template = None
    if args.k_db != math.inf and math.isnan(args.k_db):
        raise UsageError("--k-db must be a number or inf")
    return TruthModel(
        los=LosParams(args.alpha, args.beta),
        two_ray=template,
        k=RicianParams.from_db(args.k_db) if args.k_db > -math.inf else RicianParams(0.0),
        noise_sigma_db=args.noise_db,
    )


def _bandwidth_hz(value_ghz: float, carrier_hz: float, flag: str) -> BandSpec:
    bw = value_ghz * 1e9
    if not 0 < bw < carrier_hz:
        raise UsageError(f"{flag} must be positive and below the carrier frequency")
    return BandSpec.double_sideband(carrier_hz, bw)


def _params_for_manifest(args) -> dict:
    out = {}
    for k, v in vars(args).items():
        if k in ("handler",):
            continue
        if isinstance(v, float) and not math.isfinite(v):
            v = repr(v)
        out[k] = v
    return out


def _restore_params(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        if v in ("inf", "-inf", "nan"):
            v = float(v)
        out[k] = v
    return out


# -- commands ----------------------------------------------------------------

def cmd_simulate(args) -> int:
    sweep = _resolve_sweep(args)
    truth = _resolve_truth(args, sweep)
    carrier = args.carrier_ghz * 1e9
    band = _bandwidth_hz(args.bandwidth_ghz, carrier, "--bandwidth-ghz")
    if args.subbands < 1:
        raise UsageError("--subbands must be >= 1")
    cfg = SimConfig(args.seed, args.subband_points)
    bands = split_band(band, args.subbands) if args.subbands > 1 else [band]
    datasets = [simulate_sweep(sweep, b, truth, cfg, stream=j) for j, b in enumerate(bands)]
    write_dataset_csv(args.out, datasets)
    write_manifest(args.out, "simulate", _params_for_manifest(args), args.seed, outputs=[args.out])
    n = sum(len(ds) for ds in datasets)
    print(f"wrote {n} records to {args.out}")
    return EXIT_OK


def _fit(datasets: list[Dataset], model: str, alpha: float | None, grid_factors) -> FitResult:
    if model == "fspl":
        fits = [fspl_reference(ds) for ds in datasets]
        res = np.concatenate([f.residuals_db for f in fits])
        return FitResult(float(np.sqrt(np.mean(res**2))), res, los=fits[0].los)
    if model == "los":
        return fit_alpha_beta(datasets, alpha)
    if len(datasets) != 1:
        raise DataError(f"model los+sw fits a single band; input holds {len(datasets)} bands")
    ds = datasets[0]
    if alpha is None:
        # Raises the identifiability error for a single carrier.
        fit_alpha_beta(datasets, None)
    grid = default_period_grid(ds.carrier, *grid_factors)
    return fit_standing_wave(ds, LosParams(alpha, 1.0), period_grid=grid, fit_beta=True)


def _k_db(fit: FitResult) -> float | None:
    if fit.residuals_db.size < MIN_K_SAMPLES:
        return None
    return k_factor_from_residuals(fit.residuals_db).k_db


def cmd_fit(args) -> int:
    if args.period_steps < 1 or not 0 < args.period_min <= args.period_max:
        raise UsageError("--period-min/--period-max/--period-steps describe an empty grid")
    datasets = read_dataset_csv(args.input)
    fit = _fit(datasets, args.model, args.alpha, (args.period_min, args.period_max, args.period_steps))
    params = fit_to_params(fit, _k_db(fit))
    write_params_json(args.out, params)

    rows = []
    offset = 0
    for ds in datasets:
        model = np.asarray(fit.predict(ds.distances, ds.carrier))
        for r, m in zip(ds.records, model):
            rows.append((r.distance, r.band.f_start, r.band.f_stop, r.path_loss_db, float(m),
                         float(fit.residuals_db[offset])))
            offset += 1
    resid_path = Path(str(args.out) + ".residuals.csv")
    write_table_csv(resid_path, ("distance_m", "f_start_hz", "f_stop_hz", "measured_db", "model_db",
                                 "residual_db"), rows)
    write_manifest(args.out, "fit", _params_for_manifest(args), None,
                   inputs=[args.input], outputs=[args.out, resid_path])
    print(f"model {args.model}: rmse {fit.rmse_db:.4f} dB")
    return EXIT_OK


def _predict_from_params(params: dict, distances, carrier: float) -> np.ndarray:
    los = LosParams(params["alpha"], params["beta"])
    if params["sw_period_m"] is None:
        base = np.asarray(path_loss_los_db(carrier, distances, los))
        return base + (params["sw_calibration_db"] or 0.0)
    sw = StandingWaveParams(params["sw_amplitude_db"], params["sw_phase_rad"],
                            params["sw_calibration_db"], params["sw_period_m"])
    return np.asarray(integrated_pl_db(distances, carrier, los, sw))


def cmd_evaluate(args) -> int:
    datasets = read_dataset_csv(args.input)
    params = read_params_json(args.params)
    if params["alpha"] is None or params["beta"] is None:
        raise DataError(f"{args.params}: alpha and beta are required for evaluation")
    rows = []
    residuals = []
    for ds in datasets:
        model = _predict_from_params(params, ds.distances, ds.carrier)
        ref = np.asarray(fspl_db(ds.carrier, ds.distances))
        for r, m, f in zip(ds.records, model, ref):
            residuals.append(float(m) - r.path_loss_db)
            rows.append((r.distance, r.band.f_start, r.band.f_stop, r.path_loss_db, float(m), float(f),
                         residuals[-1]))
    write_table_csv(args.out, ("distance_m", "f_start_hz", "f_stop_hz", "measured_db", "model_db",
                               "fspl_db", "residual_db"), rows)
    write_manifest(args.out, "evaluate", _params_for_manifest(args), None,
                   inputs=[args.input, args.params], outputs=[args.out])
    res = np.asarray(residuals)
    print(f"rmse {float(np.sqrt(np.mean(res**2))):.4f} dB over {res.size} points")
    return EXIT_OK


def bandwidth_sweep_rows(sweep: SweepSpec, truth: TruthModel, carrier: float, bandwidths_ghz,
                         cfg: SimConfig, alpha: float = 1.0, grid_factors=(0.40, 1.10, 201)):
    """Simulate and fit at each bandwidth; rows of (bw, rmse w/o SW, rmse with SW, gain %)."""
    rows = []
    for bw in bandwidths_ghz:
        band = _bandwidth_hz(bw, carrier, "--bandwidths-ghz")
        ds = simulate_sweep(sweep, band, truth, cfg)
        smooth = fit_alpha_beta(ds, alpha)
        grid = default_period_grid(carrier, *grid_factors)
        with_sw = fit_standing_wave(ds, LosParams(alpha, 1.0), period_grid=grid, fit_beta=True)
        gain = 100.0 * (smooth.rmse_db - with_sw.rmse_db) / smooth.rmse_db if smooth.rmse_db > 0 else 0.0
        rows.append((float(bw), smooth.rmse_db, with_sw.rmse_db, gain))
    return rows


def cmd_bandwidth_sweep(args) -> int:
    sweep = _resolve_sweep(args)
    truth = _resolve_truth(args, sweep)
    if args.period_steps < 1 or not 0 < args.period_min <= args.period_max:
        raise UsageError("--period-min/--period-max/--period-steps describe an empty grid")
    carrier = args.carrier_ghz * 1e9
    rows = bandwidth_sweep_rows(sweep, truth, carrier, args.bandwidths_ghz,
                                SimConfig(args.seed, args.subband_points), args.fit_alpha,
                                (args.period_min, args.period_max, args.period_steps))
    write_table_csv(args.out, SWEEP_HEADER, rows)
    write_manifest(args.out, "bandwidth-sweep", _params_for_manifest(args), args.seed, outputs=[args.out])
    for bw, a, b, g in rows:
        print(f"{bw:6g} GHz  rmse w/o SW {a:7.3f} dB  with SW {b:7.3f} dB  improvement {g:6.2f} %")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "evaluate": cmd_evaluate,
    "bandwidth-sweep": cmd_bandwidth_sweep,
}


def cmd_replay(args) -> int:
    doc = read_manifest(args.manifest)
    command = doc["command"]
    if command not in COMMANDS:
        raise DataError(f"{args.manifest}: unknown command {command!r}")
    params = _restore_params(doc["parameters"])
    if args.out is not None:
        params["out"] = str(args.out)
    ns = argparse.Namespace(**params)
    return COMMANDS[command](ns)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thzchan",
        description="Frequency-selective Rician path-loss toolkit: simulate sweeps, fit models, "
                    "evaluate RMSE and bandwidth trends.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", help="generate a synthetic path-loss dataset CSV",
                       description="Simulate a distance sweep and write a dataset CSV plus manifest.")
    _add_sweep_flags(p, None)
    p.add_argument("--bandwidth-ghz", type=float, default=15.0,
                   help="single-sideband bandwidth B in GHz; the band is [fc-B, fc+B] (default 15)")
    p.add_argument("--subbands", type=int, default=1,
                   help="split the band into N sub-band datasets with distinct carriers (default 1)")
    _add_truth_flags(p)
    p.add_argument("--out", required=True, help="output dataset CSV path")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("fit", help="fit a path-loss model to a dataset CSV",
                       description="Fit fspl (no free parameters), los (alpha/beta) or los+sw "
                                   "(LOS plus cosine standing wave) and write a parameter JSON.")
    p.add_argument("--in", dest="input", required=True, help="input dataset CSV")
    p.add_argument("--model", choices=["fspl", "los", "los+sw"], default="los", help="model to fit (default los)")
    p.add_argument("--alpha", type=float, default=None,
                   help="fix the frequency exponent and fit beta plus a calibration constant; "
                        "omit to fit alpha jointly (needs two or more bands)")
    _add_grid_flags(p)
    p.add_argument("--out", required=True,
                   help="output parameter JSON path; residuals go to <out>.residuals.csv")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("evaluate", help="evaluate a parameter JSON against a dataset CSV",
                       description="Write plot-ready measured/model/FSPL columns and report RMSE.")
    p.add_argument("--in", dest="input", required=True, help="input dataset CSV")
    p.add_argument("--params", required=True, help="parameter JSON written by 'fit'")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("bandwidth-sweep", help="RMSE with and without the standing-wave term across bandwidths",
                       description="For each bandwidth: simulate with a shared truth and seed, fit the smooth "
                                   "LOS model and the LOS+standing-wave model, and tabulate the RMSEs.")
    _add_sweep_flags(p, "small")
    p.add_argument("--bandwidths-ghz", type=_float_list, default=_float_list(DEFAULT_BANDWIDTHS_GHZ),
                   help=f"comma-separated single-sideband bandwidths in GHz (default {DEFAULT_BANDWIDTHS_GHZ})")
    p.add_argument("--fit-alpha", type=float, default=1.0,
                   help="frequency exponent held fixed in the fits (default 1)")
    _add_truth_flags(p)
    _add_grid_flags(p)
    p.add_argument("--out", required=True, help="output RMSE table CSV path")
    p.set_defaults(handler=cmd_bandwidth_sweep)

    p = sub.add_parser("replay", help="re-run a command from its manifest",
                       description="Re-run the command recorded in a manifest with identical parameters.")
    p.add_argument("manifest", help="manifest JSON written next to an output")
    p.add_argument("--out", default=None, help="write the primary output here instead of the recorded path")
    p.set_defaults(handler=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"thzchan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DomainError, IdentifiabilityError) as exc:
        print(f"thzchan: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"thzchan: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
