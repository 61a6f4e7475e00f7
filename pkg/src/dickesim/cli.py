"""Command-line front end: ``dicke-sim <experiment> --config ... --out ...``.

Exit codes: 0 success, 1 configuration error, 2 runtime error,
3 cross-validation failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import config as config_mod
from . import meanfield, params, spectrum
from .errors import CheckFailed, ConfigError, DickeSimError, NotDetected
from .lindblad import transmission_scan
from .operators import FockSpace, SpinSpace
from .runio import RunDirectory, manifest_payload, write_csv_file, write_json_file
from .units import to_mhz

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_CHECK = 3


def counts_model(photons, efficiency: float, kappa: float,
                 bin_us: float) -> np.ndarray:
    """Mean detector counts per time bin for an intracavity photon number.

    The cavity emits ``2 * kappa * n`` photons per microsecond; a scalar
    detection efficiency maps that flux onto counts.  Deterministic mean
    counts only, no shot noise.
    """
    if not 0.0 < efficiency <= 1.0:
        raise ValueError("efficiency must lie in (0, 1]")
    if bin_us <= 0.0:
        raise ValueError("bin_us must be positive")
    return efficiency * 2.0 * kappa * np.asarray(photons) * bin_us


def detection_efficiency(counts_per_bin: float, photons: float, kappa: float,
                         bin_us: float) -> float:
    """Efficiency implied by a counts-per-bin / photon-number pair."""
    return counts_per_bin / (2.0 * kappa * photons * bin_us)


def _probe_grid(scenario) -> np.ndarray:
    block = scenario.block("probe")
    return np.linspace(block["delta_p_start"], block["delta_p_stop"],
                       int(block["points"]))


def _run_params(scenario, rundir: RunDirectory) -> dict:
    cfg = scenario.physical
    eff = params.effective_params(cfg)
    Delta_r, Delta_s = params.derive_detunings(cfg)
    summary = {
        "omega_mhz": to_mhz(eff.omega),
        "omega0_mhz": to_mhz(eff.omega0),
        "delta_mhz": to_mhz(eff.delta),
        "lambda_r_mhz": to_mhz(eff.lambda_r),
        "lambda_s_mhz": to_mhz(eff.lambda_s),
        "omega_dS_mhz": to_mhz(eff.omega_dS),
        "Delta_r_ghz": to_mhz(Delta_r) / 1e3,
        "Delta_s_ghz": to_mhz(Delta_s) / 1e3,
        "N_lambda": eff.N_lambda,
        "kappa_mhz": to_mhz(eff.kappa),
        "omega_d_mhz": to_mhz(params.dispersive_shift(cfg.N_total, cfg)),
        "asymmetry_equal_rabi": (Delta_r - Delta_s) / (Delta_r + Delta_s),
        "scattering_rate_per_ms": params.scattering_rate_estimate(cfg),
    }
    try:
        summary["lambda_c_mhz"] = to_mhz(params.critical_coupling(eff))
    except DickeSimError as exc:
        summary["lambda_c_mhz"] = None
        summary["lambda_c_note"] = str(exc)

    lines = [f"{key:>24} = {value}" for key, value in summary.items()]
    rundir.path("params.txt").write_text("\n".join(lines) + "\n",
                                         encoding="utf-8")
    return summary


def _run_transmission(scenario, rundir: RunDirectory) -> dict:
    block = scenario.block("probe")
    eff = params.effective_params(scenario.physical)
    n_model = int(block.get("n_lambda_model", 2))
    fock = FockSpace(int(block["n_max"]))
    grid = _probe_grid(scenario)
    points = transmission_scan(replace(eff, N_lambda=n_model), grid,
                               block["eta_p"], fock, SpinSpace(n_model),
                               frame_offset=scenario.physical.eta)
    write_csv_file(
        rundir.path("transmission.csv"),
        ["delta_p_mhz", "n_ss", "n_norm"],
        [(to_mhz(p.Delta_p), p.n_ss, p.normalized) for p in points],
    )
    summary = {
        "n_empty": points[0].n_empty,
        "lambda_r_mhz": to_mhz(eff.lambda_r),
        "points": len(points),
    }
    try:
        fit = spectrum.splitting_from_scan(grid, [p.normalized for p in points],
                                           width_seed=eff.kappa)
        summary.update({
            "peak1_mhz": to_mhz(fit.peak1),
            "peak2_mhz": to_mhz(fit.peak2),
            "splitting_mhz": to_mhz(fit.splitting),
            "half_splitting_mhz": to_mhz(fit.half_splitting),
            "fit_width_mhz": to_mhz(fit.width),
            "fit_residual": fit.residual,
        })
    except DickeSimError as exc:
        summary["fit_note"] = str(exc)
    return summary


def _run_splitting_map(scenario, rundir: RunDirectory) -> dict:
    block = scenario.block("map")
    probe_block = scenario.block("probe")
    targets = np.linspace(block["omega_d_start"], block["omega_d_stop"],
                          int(block["rows"]))
    result = spectrum.crossing_map(
        scenario.physical, scenario.calibration,
        scenario.entries.get("power_r", 18.0),
        targets, _probe_grid(scenario), probe_block["eta_p"],
        FockSpace(int(probe_block["n_max"])),
        n_lambda_model=int(probe_block.get("n_lambda_model", 2)),
        bin_width=block.get("bin_width"),
    )
    rows = []
    for i, center in enumerate(result.bin_centers):
        for j, dp in enumerate(result.probe_detunings):
            rows.append((to_mhz(center), to_mhz(dp), result.values[i, j]))
    write_csv_file(rundir.path("map.csv"),
                   ["omega_d_bin_mhz", "delta_p_mhz", "transmission_norm"],
                   rows)
    write_csv_file(
        rundir.path("overlay.csv"),
        ["omega_d_bin_mhz", "bare_cavity_mhz", "bare_spin_mhz",
         "branch_lower_mhz", "branch_upper_mhz", "lambda_r_mhz", "N"],
        [(to_mhz(c), to_mhz(result.bare_cavity[i]), to_mhz(result.bare_spin),
          to_mhz(result.branch_lower[i]), to_mhz(result.branch_upper[i]),
          to_mhz(result.couplings[i]), int(result.atom_numbers[i]))
         for i, c in enumerate(result.bin_centers)],
    )
    write_json_file(rundir.path("map.json"), {
        "omega_d_bins_mhz": [to_mhz(c) for c in result.bin_centers],
        "delta_p_mhz": [to_mhz(d) for d in result.probe_detunings],
        "transmission_norm": result.values.tolist(),
    })
    return {"rows": len(result.bin_centers),
            "bare_spin_mhz": to_mhz(result.bare_spin)}


def _ramp_objects(scenario):
    ramp = config_mod.ramp_protocol(scenario)
    detector = config_mod.detection_criterion(scenario)
    block = scenario.block("ramp")
    cfg = scenario.physical
    if "eta" in block or "zeta" in block:
        cfg = replace(cfg, eta=block.get("eta", cfg.eta),
                      zeta=block.get("zeta", cfg.zeta))
    seed = block.get("seed", meanfield.DEFAULT_SEED)
    return cfg, ramp, detector, seed


def _run_ramp(scenario, rundir: RunDirectory) -> dict:
    cfg, ramp, detector, seed = _ramp_objects(scenario)
    calib = scenario.calibration
    summary: dict = {"detected": False}
    try:
        result, series = meanfield.ramp_experiment(cfg, calib, ramp, detector,
                                                   seed=seed)
        summary.update({
            "detected": True,
            "P_threshold_mw": result.P_threshold,
            "t_detect_us": result.detection_time,
            "lambda_at_threshold_mhz": to_mhz(result.lambda_at_threshold),
        })
    except NotDetected as exc:
        series = exc.series
        summary["note"] = str(exc)
    try:
        P_static, lam_static = meanfield.static_threshold_power(cfg, calib, ramp)
        summary["P_static_mw"] = P_static
        summary["lambda_c_static_mhz"] = to_mhz(lam_static)
    except DickeSimError as exc:
        summary["static_note"] = str(exc)

    photons = cfg.N_lambda * series.a2
    counts = counts_model(photons, detector.efficiency, cfg.kappa,
                          detector.bin_us)
    write_csv_file(
        rundir.path("ramp.csv"),
        ["t_us", "P_mw", "lambda_mhz", "a_c2", "s_z", "photons",
         "counts_per_bin"],
        zip(series.t, series.power, (to_mhz(v) for v in series.lam),
            series.a2, series.s_z, photons, counts),
    )
    return summary


def _run_threshold_map(scenario, rundir: RunDirectory) -> dict:
    cfg, ramp, detector, seed = _ramp_objects(scenario)
    block = scenario.block("tmap")
    if "duration" in block:
        ramp = replace(ramp, duration=block["duration"])
    band = (block.get("band_lower", 1.2), block.get("band_upper", 0.89))
    targets = np.linspace(block["omega_d_start"], block["omega_d_stop"],
                          int(block["points"]))
    atom_numbers = [params.atoms_from_shift(w, cfg) for w in targets]
    records = meanfield.threshold_map(cfg, scenario.calibration, atom_numbers,
                                      ramp, detector, band=band, seed=seed)
    write_csv_file(
        rundir.path("threshold_map.csv"),
        ["omega_d_mhz", "N", "detected", "P_threshold_mw",
         "lambda_dynamic_mhz", "P_static_mw", "lambda_c_static_mhz",
         "P_static_lower_mw", "P_static_upper_mw", "error"],
        [(to_mhz(r.omega_d), r.N, r.detected, r.P_threshold,
          None if r.lambda_dynamic is None else to_mhz(r.lambda_dynamic),
          r.P_static,
          None if r.lambda_c_static is None else to_mhz(r.lambda_c_static),
          r.P_static_lower, r.P_static_upper, r.error)
         for r in records],
    )
    detected = sum(1 for r in records if r.detected)
    return {"points": len(records), "detected": detected}


def _run_quantum_check(scenario, rundir: RunDirectory) -> dict:
    from .checks import run_checks

    block = scenario.block("check")
    results = run_checks(n_atoms=int(block.get("n_lambda", 4)),
                         n_max=int(block.get("n_max", 12)))
    write_csv_file(
        rundir.path("checks.csv"),
        ["check_id", "passed", "measured", "tolerance", "detail"],
        [(r.check_id, r.passed, r.measured, r.tolerance, r.detail)
         for r in results],
    )
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.check_id}  "
              f"measured={r.measured:.3g} tol={r.tolerance:.3g}")
    failed = [r.check_id for r in results if not r.passed]
    if failed:
        raise CheckFailed(f"failed: {', '.join(failed)}", failed_ids=failed)
    return {"all_passed": True, "checks": len(results)}


_RUNNERS = {
    "params": _run_params,
    "transmission": _run_transmission,
    "splitting-map": _run_splitting_map,
    "ramp": _run_ramp,
    "threshold-map": _run_threshold_map,
    "quantum-check": _run_quantum_check,
}


def run(experiment: str, config_path: str, out_dir: str,
        overrides=(), argv: list[str] | None = None) -> dict:
    """Execute one experiment and commit its run record."""
    entries = config_mod.apply_overrides(config_mod.load_config(config_path),
                                         overrides)
    scenario = config_mod.build_scenario(entries, experiment)
    rundir = RunDirectory(out_dir)
    try:
        summary = _RUNNERS[experiment](scenario, rundir)
        write_json_file(rundir.path("summary.json"), summary)
        write_json_file(rundir.path("manifest.json"),
                        manifest_payload(entries, experiment, rundir.outputs,
                                         argv=argv))
    except BaseException:
        rundir.abort()
        raise
    rundir.commit()
    return summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dicke-sim",
        description="Simulate the open two-coupling cavity model: effective "
                    "parameters, transmission spectra, superradiance "
                    "thresholds and cross-validation checks.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in _RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="configuration file")
        p.add_argument("--out", required=True, help="output run directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a configuration entry")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        summary = run(args.experiment, args.config, args.out,
                      overrides=args.set, argv=argv)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailed as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except DickeSimError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for key, value in summary.items():
        print(f"{key}: {value}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
