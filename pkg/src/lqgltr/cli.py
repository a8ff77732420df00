"""Batch command-line front end for the full design pipeline.

Commands (run in this order for the complete flow; each writes its artifacts
plus a manifest into the output directory):

    model       build the nominal plant and weights
    identify    CD-EKF parameter identification against table truth
    design      Kalman target, rho sweep, compensator assembly
    analyze     singular-value robustness tests on the selected design
    reduce      balanced truncation of the selected compensator
    discretize  bilinear transform of the reduced compensator
    simulate    closed-loop disturbance simulation and RMS LOS error
    sweep       swept-sine identification of the closed-loop sensitivity
    report      aggregate summary of everything above

Exit codes: 0 ok, 2 configuration error, 3 computation error, 4 missing
artifact dependency.
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, design, gimbal, kernels, reduction, robustness, \
    simident, textio
from .config import ProjectConfig, canonical_yaml, load_config, write_config
from .errors import ComputationError, ConfigError, LqgLtrError, \
    MissingDependency

TWO_PI = 2.0 * np.pi


def _hash_header(cfg):
    return (f"config_sha256 {textio.config_hash(canonical_yaml(cfg))}",)


def _manifest(outdir, cfg, command, extra=()):
    pairs = [("command", command),
             ("package_version", __version__),
             ("schema_version", cfg.schema_version),
             ("config_sha256", textio.config_hash(canonical_yaml(cfg))),
             ("kernel_backend", kernels.BACKEND),
             ("workers", cfg.workers)]
    pairs.extend(extra)
    textio.write_summary(os.path.join(outdir, f"{command}_manifest.txt"),
                         pairs)


def _need(outdir, filename):
    path = os.path.join(outdir, filename)
    if not os.path.exists(path):
        raise MissingDependency(
            f"{filename} not found in {outdir}; run the producing command "
            "first")
    return path


def _design_pieces(cfg):
    plant = cfg.plant()
    we2 = cfg.weight_model("design2")
    aug = design.augment_plant(plant, we2)
    noise = cfg.noise_intensities(aug)
    kal = design.design_kalman(aug, noise)
    return plant, aug, kal


def cmd_model(cfg, outdir):
    plant = cfg.plant()
    az = gimbal.build_axis_model(cfg.gimbal.azimuth.params())
    el = gimbal.build_axis_model(cfg.gimbal.elevation.params())
    w1a, w1e, w1 = gimbal.uncertainty_weights()
    hdr = _hash_header(cfg)
    textio.write_state_space(os.path.join(outdir, "plant.ss.txt"), plant,
                             header=hdr)
    textio.write_state_space(os.path.join(outdir, "w1.ss.txt"), w1, header=hdr)
    for name, which in (("we_design1.ss.txt", "design1"),
                        ("we_design2.ss.txt", "design2")):
        textio.write_state_space(os.path.join(outdir, name),
                                 cfg.weight_model(which), header=hdr)
    from .systems import frequency_response
    fr = frequency_response(plant, cfg.grid.grid())
    textio.write_frequency_response(
        os.path.join(outdir, "plant_response.txt"), fr, header=hdr)
    dc = plant.dc_gain()
    _manifest(outdir, cfg, "model", [
        ("plant_order", plant.n_states),
        ("azimuth_order", az.n_states),
        ("elevation_order", el.n_states),
        ("dc_gain_azimuth", float(dc[0, 0])),
        ("dc_gain_elevation", float(dc[1, 1])),
        ("w1a_dc", float(abs(w1a.weight.evaluate(0.0)))),
        ("w1e_dc", float(abs(w1e.weight.evaluate(0.0)))),
    ])


def cmd_identify(cfg, outdir):
    ident = cfg.identification
    pairs = []
    hdr = _hash_header(cfg)
    for name, axis in (("azimuth", cfg.gimbal.azimuth),
                       ("elevation", cfg.gimbal.elevation)):
        res = simident.estimate_parameters(
            axis.params(), excitation_amplitude=ident.excitation_amplitude,
            duration=ident.duration, meas_noise_std=ident.meas_noise_std,
            seed=ident.seed, init_scale=ident.init_scale, dt=ident.dt,
            excitation_hz=ident.excitation_hz)
        decim = max(1, res.time.size // 2000)
        lines = [f"# ekf_trace axis={name}", f"# {hdr[0]}",
                 "# t inertia viscous_friction cov_trace"]
        for k in range(0, res.time.size, decim):
            lines.append(" ".join(repr(float(v)) for v in (
                res.time[k], res.state_trace[k, 4], res.state_trace[k, 5],
                res.covariance_trace[k])))
        with open(os.path.join(outdir, f"identify_{name}.txt"), "w",
                  encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        pairs += [(f"{name}_inertia", res.final.inertia),
                  (f"{name}_viscous_friction", res.final.viscous_friction),
                  (f"{name}_inertia_rel_error", res.inertia_error),
                  (f"{name}_viscous_rel_error", res.viscous_friction_error),
                  (f"{name}_clamp_events", res.clamp_events)]
    textio.write_summary(os.path.join(outdir, "identify_summary.txt"), pairs)
    _manifest(outdir, cfg, "identify", [("seed", ident.seed)])


def cmd_design(cfg, outdir):
    plant, aug, kal = _design_pieces(cfg)
    grid = cfg.grid.grid()
    sweep = design.ltr_sweep(aug, kal, cfg.design.rhos, grid=grid,
                             recovery_band_hz=cfg.design.recovery_band_hz)
    hdr = _hash_header(cfg)
    textio.write_state_space(os.path.join(outdir, "kalman_loop.ss.txt"),
                             kal.loop, header=hdr)
    lines = ["# ltr_recovery", f"# {hdr[0]}",
             "# rho recovery_error loop_stable max_closedloop_real"]
    for rho in sweep.rhos:
        comp = sweep.compensator(rho)
        acl = design.closed_loop_matrix(plant, comp)
        max_re = float(np.max(np.linalg.eigvals(acl).real))
        lines.append(f"{rho!r} {sweep.recovery_error[rho]!r} "
                     f"{int(sweep.loop_stable[rho])} {max_re!r}")
        textio.write_state_space(
            os.path.join(outdir, f"compensator_rho_{rho:.0e}.ss.txt"),
            comp, header=hdr)
    with open(os.path.join(outdir, "design_recovery.txt"), "w",
              encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    selected = cfg.design.selected_rho
    if selected not in sweep.compensators:
        raise ComputationError(
            f"selected_rho {selected} not in the rho sweep {sweep.rhos}")
    textio.write_state_space(
        os.path.join(outdir, "compensator_selected.ss.txt"),
        sweep.compensator(selected), header=hdr)
    fmin, lmin = design.return_difference_minima(
        aug, kal.gain, sweep.kc_by_rho[selected], grid=grid)
    textio.write_summary(os.path.join(outdir, "design_summary.txt"), [
        ("augmented_order", aug.order),
        ("compensator_order", sweep.compensator(selected).n_states),
        ("selected_rho", float(selected)),
        ("recovery_error_selected", sweep.recovery_error[selected]),
        ("filter_return_difference_min", fmin),
        ("lqr_return_difference_min", lmin),
    ])
    _manifest(outdir, cfg, "design")


def cmd_analyze(cfg, outdir):
    comp = textio.read_state_space(_need(outdir, "compensator_selected.ss.txt"))
    plant = cfg.plant()
    we1 = cfg.weight_model("design1")
    _, _, w1 = gimbal.uncertainty_weights()
    report, s_o, t_o = robustness.evaluate_robustness(
        plant, design.loop_compensator(comp), we1, w1, grid=cfg.grid.grid())
    hdr = _hash_header(cfg)
    textio.write_robustness_report(
        os.path.join(outdir, "robustness_report.txt"), report, header=hdr)
    textio.write_summary(os.path.join(outdir, "analyze_summary.txt"), [
        ("np_peak", report.np_peak),
        ("np_pass", int(report.nominal_performance_ok)),
        ("rs_peak", report.rs_peak),
        ("rs_pass", int(report.robust_stability_ok)),
        ("rp_peak", report.rp_peak),
        ("rp_peak_hz", report.rp_peak_hz),
        ("dc_sensitivity", float(np.linalg.svd(
            s_o.transfer_at(0.0), compute_uv=False)[0])),
    ])
    _manifest(outdir, cfg, "analyze")


def cmd_reduce(cfg, outdir):
    comp = textio.read_state_space(_need(outdir, "compensator_selected.ss.txt"))
    bal = reduction.balanced_realization(comp)
    reduced, bound = reduction.balance_and_truncate(
        comp, cfg.reduction.target_order)
    hdr = _hash_header(cfg)
    textio.write_state_space(
        os.path.join(outdir, "compensator_reduced.ss.txt"), reduced,
        header=hdr)
    lines = ["# hankel_singular_values", f"# {hdr[0]}", "# index value"]
    for i, v in enumerate(bal.hankel_values):
        lines.append(f"{i} {v!r}")
    with open(os.path.join(outdir, "hankel.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    textio.write_summary(os.path.join(outdir, "reduce_summary.txt"), [
        ("original_order", comp.n_states),
        ("reduced_order", reduced.n_states),
        ("truncation_error_bound", bound),
    ])
    _manifest(outdir, cfg, "reduce")


def cmd_discretize(cfg, outdir):
    reduced = textio.read_state_space(_need(outdir,
                                            "compensator_reduced.ss.txt"))
    disc = reduction.bilinear_discretize(reduced, cfg.reduction.sample_period)
    textio.write_state_space(
        os.path.join(outdir, "controller_discrete.ss.txt"), disc,
        header=_hash_header(cfg))
    textio.write_summary(os.path.join(outdir, "discretize_summary.txt"), [
        ("sample_period", cfg.reduction.sample_period),
        ("order", disc.n_states),
        ("schur_stable", int(disc.is_stable())),
    ])
    _manifest(outdir, cfg, "discretize")


def cmd_simulate(cfg, outdir):
    controller = textio.read_state_space(_need(outdir,
                                               "controller_discrete.ss.txt"))
    plant = cfg.plant()
    profile = cfg.disturbance.profile()
    trace = simident.simulate_closed_loop(plant, controller, profile,
                                          cfg.simulation.duration)
    rms = simident.rms_los_error(trace, cfg.simulation.settle)
    decim = max(1, trace.time.size // 5000)
    sub = simident.SimulationTrace(
        time=trace.time[::decim], w=trace.w[::decim], u=trace.u[::decim],
        d=trace.d[::decim], angle=trace.angle[::decim],
        sample_period=trace.sample_period * decim)
    textio.write_trace(os.path.join(outdir, "sim_trace.txt"), sub,
                       header=_hash_header(cfg))
    textio.write_summary(os.path.join(outdir, "simulate_summary.txt"), [
        ("duration", cfg.simulation.duration),
        ("settle", cfg.simulation.settle),
        ("disturbance_seed", cfg.disturbance.seed),
        ("rms_los_urad_azimuth", float(rms[0])),
        ("rms_los_urad_elevation", float(rms[1])),
    ])
    _manifest(outdir, cfg, "simulate")


def cmd_sweep(cfg, outdir):
    controller = textio.read_state_space(_need(outdir,
                                               "controller_discrete.ss.txt"))
    plant = cfg.plant()
    ss_cfg = cfg.swept_sine
    grid_hz = ss_cfg.grid_hz()

    def one(f):
        return simident.swept_sine_identify(
            plant, controller, [f], amplitude=ss_cfg.amplitude,
            cycles=ss_cfg.cycles, settle_min_s=ss_cfg.settle_min_s)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(one, grid_hz))
    else:
        parts = [one(f) for f in grid_hz]
    snapped = np.concatenate([p.grid_hz for p in parts])
    values = np.concatenate([p.values for p in parts], axis=0)
    ident = simident.IdentifiedResponse(grid_hz=snapped, values=values)

    # reference: the continuous loop with the implemented (reduced)
    # compensator, so the comparison isolates sampling effects
    comp = textio.read_state_space(_need(outdir,
                                         "compensator_reduced.ss.txt"))
    s_o, _ = robustness.closed_loop_maps(plant, design.loop_compensator(comp))
    we1 = cfg.weight_model("design1")
    hdr = _hash_header(cfg)
    lines = ["# swept_sine_identification", f"# {hdr[0]}",
             "# frequency_hz sigma_max_identified sigma_max_analytic "
             "we_inverse re/im entries row-major"]
    worst = 0.0
    for k, f in enumerate(ident.grid_hz):
        analytic = s_o.transfer_at(1j * TWO_PI * f)
        sig_id = float(np.linalg.svd(ident.values[k], compute_uv=False)[0])
        sig_an = float(np.linalg.svd(analytic, compute_uv=False)[0])
        we_inv = 1.0 / float(np.linalg.svd(
            we1.transfer_at(1j * TWO_PI * f), compute_uv=False)[0])
        err = np.abs(np.abs(ident.values[k]) - np.abs(analytic)) / \
            np.maximum(np.abs(analytic), 1e-2)
        worst = max(worst, float(np.max(err)))
        row = [repr(float(f)), repr(sig_id), repr(sig_an), repr(we_inv)]
        for i in range(2):
            for j in range(2):
                row += [repr(float(ident.values[k, i, j].real)),
                        repr(float(ident.values[k, i, j].imag))]
        lines.append(" ".join(row))
    with open(os.path.join(outdir, "sweep_identified.txt"), "w",
              encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    textio.write_summary(os.path.join(outdir, "sweep_summary.txt"), [
        ("points", int(ident.grid_hz.size)),
        ("worst_entry_magnitude_error", worst),
    ])
    _manifest(outdir, cfg, "sweep")


def cmd_report(cfg, outdir):
    sections = ["model_manifest.txt", "identify_summary.txt",
                "design_summary.txt", "analyze_summary.txt",
                "reduce_summary.txt", "discretize_summary.txt",
                "simulate_summary.txt", "sweep_summary.txt"]
    pairs = [("config_sha256", textio.config_hash(canonical_yaml(cfg)))]
    for name in sections:
        path = _need(outdir, name)
        for key, val in textio.read_summary(path).items():
            pairs.append((f"{name.rsplit('_', 1)[0]}.{key}", val))
    textio.write_summary(os.path.join(outdir, "report.txt"), pairs)
    _manifest(outdir, cfg, "report")


COMMANDS = {
    "model": cmd_model,
    "identify": cmd_identify,
    "design": cmd_design,
    "analyze": cmd_analyze,
    "reduce": cmd_reduce,
    "discretize": cmd_discretize,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lqgltr",
        description="LQG/LTR loop-shaping pipeline for gimbal LOS "
                    "stabilization")
    parser.add_argument("command", choices=sorted(COMMANDS) + ["init-config"])
    parser.add_argument("--config", help="YAML project configuration")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int,
                        help="override disturbance/identification seeds")
    parser.add_argument("--rho", help="comma-separated rho sweep override")
    parser.add_argument("--grid",
                        help="frequency grid override: fmin_hz,fmax_hz,ppd")
    parser.add_argument("--workers", type=int, help="worker thread count")
    return parser


def _apply_overrides(cfg, args):
    from dataclasses import replace
    if args.seed is not None:
        cfg = replace(cfg,
                      disturbance=replace(cfg.disturbance, seed=args.seed),
                      identification=replace(cfg.identification,
                                             seed=args.seed),
                      perturbation=replace(cfg.perturbation, seed=args.seed))
    if args.rho:
        try:
            rhos = tuple(sorted((float(tok) for tok in args.rho.split(",")),
                                reverse=True))
        except ValueError as exc:
            raise ConfigError(f"invalid --rho list: {args.rho}") from exc
        selected = cfg.design.selected_rho
        if selected not in rhos:
            selected = rhos[-1]
        cfg = replace(cfg, design=replace(cfg.design, rhos=rhos,
                                          selected_rho=selected))
    if args.grid:
        try:
            fmin, fmax, ppd = args.grid.split(",")
            grid = replace(cfg.grid, f_min_hz=float(fmin),
                           f_max_hz=float(fmax),
                           points_per_decade=int(ppd))
        except ValueError as exc:
            raise ConfigError(f"invalid --grid spec: {args.grid}") from exc
        cfg = replace(cfg, grid=grid)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = replace(cfg, workers=args.workers)
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "init-config":
            target = args.config or os.path.join(args.out, "lqgltr.yaml")
            os.makedirs(os.path.dirname(target) or ".", exist_ok=True)
            write_config(target)
            print(f"wrote default configuration to {target}")
            return 0
        cfg = load_config(args.config) if args.config else ProjectConfig()
        cfg = _apply_overrides(cfg, args)
        os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command](cfg, args.out)
        print(f"{args.command}: artifacts written to {args.out}")
        return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except MissingDependency as exc:
        print(f"missing dependency: {exc}", file=sys.stderr)
        return 4
    except LqgLtrError as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
