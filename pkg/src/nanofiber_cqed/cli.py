"""Command-line interface: ``nfcqed {gate,sweep,optimum,fiber}``.

Exit codes: 0 success, 2 parse/configuration error, 3 physics precondition
violated, 4 numerical solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from nanofiber_cqed import __version__
from nanofiber_cqed import constants as K
from nanofiber_cqed.errors import PhysicsError, ScenarioError, SolverError
from nanofiber_cqed.evaluate import evaluate_file, run_sweep, summarize
from nanofiber_cqed.fidelity import (
    haar_average_fidelity,
    optimum_cooperativity,
    optimum_performance,
    qubit_splitting_floor,
    required_loss_ratio,
)
from nanofiber_cqed.fiber import FiberSpec, coupling_profile, solve_mode
from nanofiber_cqed.gates import ResidualCoupling, ideal_unitary, local_channel, RemoteChannel
from nanofiber_cqed.optimum import numeric_optimum, splitting_ceiling
from nanofiber_cqed.physics import CavitySpec
from nanofiber_cqed.scenario import echo, load_scenario, to_scenario

EXIT_PARSE = 2
EXIT_PHYSICS = 3
EXIT_SOLVER = 4

RATE_DISPLAY_FLOOR = 1e-12


def _json_value(x):
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        x = x.item()
    if isinstance(x, float) and math.isnan(x):
        return None
    return x


def dumps(obj) -> str:
    # infinities are written as the JSON extension "Infinity" and re-parse exactly
    return json.dumps(_json_value(obj), indent=2, sort_keys=False)


def _csv_cell(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(stream, columns, rows, comments=()):
    for line in comments:
        stream.write(f"# {line}\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_csv_cell(v) for v in row])


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x) or math.isnan(x):
            return str(x)
        return f"{x:.6g}"
    return str(x)


# ---------------------------------------------------------------- gate


def _haar_check(cfg, samples, seed):
    out = {}
    rng = np.random.default_rng(seed)
    for kind in cfg.kinds:
        layout = to_scenario(cfg, kind).layout()
        if kind == "local":
            chan = local_channel(layout, cfg.gate.probe_detuning_2pi_mhz, cfg.gate.flavor)
        else:
            chan = RemoteChannel(layout, cfg.gate.probe_detuning_2pi_mhz)
        mean, err = haar_average_fidelity(chan, ideal_unitary(layout), samples, rng)
        out[kind] = {"F_avg_monte_carlo": mean, "standard_error": err, "samples": samples, "seed": seed}
    return out


def cmd_gate(args) -> int:
    cfg = load_scenario(args.scenario)
    results = evaluate_file(cfg, full_rates=True)
    report = {"scenario": echo(cfg), "results": results}
    if args.haar_samples:
        report["monte_carlo"] = _haar_check(cfg, args.haar_samples, args.seed)
    out = _out_dir(args)
    if args.format == "json":
        text = dumps(report) + "\n"
    elif args.format == "csv":
        buf = io.StringIO()
        rows = []
        for kind, res in results.items():
            for k, v in res.items():
                if k in ("pauli_rates", "couplings_2pi_mhz"):
                    continue
                rows.append([kind, k, v])
            for i, g in enumerate(res["couplings_2pi_mhz"]):
                rows.append([kind, f"g_q{i + 1}_2pi_mhz", g])
        write_csv(buf, ["gate", "metric", "value"], rows, [f"nfcqed {__version__} gate", "scenario " + json.dumps(echo(cfg))])
        text = buf.getvalue()
    else:
        text = _gate_text(results)
    sys.stdout.write(text)
    if out is not None:
        suffix = {"json": "json", "csv": "csv"}.get(args.format, "txt")
        (out / f"gate_report.{suffix}").write_text(text)
    return 0


def _gate_text(results) -> str:
    lines = []
    for kind, res in results.items():
        lines.append(f"[{kind} gate]")
        lines.append("  couplings (2pi MHz): " + ", ".join(_fmt(g) for g in res["couplings_2pi_mhz"]))
        for key in ("F_avg", "F_e", "F_superposition", "F_analytic", "F_branch_mean", "p_S", "bias"):
            v = res.get(key, math.nan)
            if isinstance(v, float) and math.isnan(v):
                continue
            lines.append(f"  {key:16s} {_fmt(v)}")
        marg = [(k[2:], v) for k, v in res.items() if k.startswith("p_") and k != "p_S"]
        if marg and not all(math.isnan(v) for _, v in marg):
            lines.append("  Pauli rates on the gate pair (|p| < 1e-12 shown as 0):")
            for lab, v in marg:
                lines.append(f"    p_{lab} = {_fmt(0.0 if abs(v) < RATE_DISPLAY_FLOOR else v)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- sweep


def cmd_sweep(args) -> int:
    cfg = load_scenario(args.scenario)
    axes, columns, rows = run_sweep(cfg, args.threads)
    summary = summarize(axes, columns, rows)
    summary["scenario"] = echo(cfg)
    buf = io.StringIO()
    write_csv(
        buf,
        columns,
        rows,
        [f"nfcqed {__version__} sweep", "scenario " + json.dumps(echo(cfg)), "rows are row-major over the sweep axes"],
    )
    csv_text = buf.getvalue()
    json_text = dumps(summary) + "\n"
    out = _out_dir(args)
    if out is not None:
        (out / "sweep.csv").write_text(csv_text)
        (out / "sweep_summary.json").write_text(json_text)
    sys.stdout.write(json_text if args.format == "json" else csv_text)
    return 0


# ---------------------------------------------------------------- optimum


def cmd_optimum(args) -> int:
    if args.cesium:
        splitting = args.qubit_splitting if args.qubit_splitting is not None else K.CS_QUBIT_SPLITTING
        offset = args.excited_offset if args.excited_offset is not None else K.CS_EXCITED_OFFSET
        ratio_sq = args.dipole_ratio_sq if args.dipole_ratio_sq is not None else K.CS_RESIDUAL_DIPOLE_RATIO_SQ
    else:
        splitting = args.qubit_splitting
        offset = args.excited_offset or 0.0
        ratio_sq = args.dipole_ratio_sq if args.dipole_ratio_sq is not None else 1.0
    residual = None
    if splitting is not None:
        residual = ResidualCoupling(ratio_sq, splitting - offset)
    report: dict = {"inputs": {"gamma_2pi_mhz": args.gamma, "kappa_t_2pi_mhz": args.kappa_t, "kappa_m_2pi_mhz": args.kappa_m}}

    if residual is not None:
        report["inputs"].update(
            {"qubit_splitting_2pi_mhz": splitting, "excited_offset_2pi_mhz": offset, "residual_dipole_ratio_sq": ratio_sq}
        )
        ceiling = splitting_ceiling(residual, args.gamma, args.kappa_t, args.kappa_m)
        report["splitting_limit"] = {
            "floor_formula": qubit_splitting_floor(args.gamma, splitting, ratio_sq, offset),
            "ceiling_infidelity": ceiling.infidelity,
            "ceiling_fidelity": ceiling.fidelity,
            "ceiling_loss_ratio": ceiling.loss_ratio,
            "ceiling_g_2pi_mhz": ceiling.g,
        }

    target = args.target_fidelity
    if target is None and residual is not None and args.kappa_r is None:
        target = report["splitting_limit"]["ceiling_fidelity"]
    if target is not None:
        x = required_loss_ratio(target)
        coop = x / (1 - x) - 1 if x < 1 else math.inf
        f_max, p_s = optimum_performance(cooperativity=coop)
        report["target"] = {
            "fidelity": target,
            "required_loss_ratio": x,
            "cooperativity": coop,
            "F_max": f_max,
            "p_s": p_s,
        }
        kappa = (args.kappa_t + args.kappa_m) / (1 - x) if x < 1 else math.inf
        if math.isfinite(kappa):
            report["target"]["kappa_r_2pi_mhz"] = x * kappa
            report["target"]["g_2pi_mhz"] = math.sqrt(coop * args.gamma * kappa)

    if args.kappa_r is not None:
        cav = CavitySpec(args.kappa_r, args.kappa_t, args.kappa_m)
        block: dict = {"kappa_r_2pi_mhz": args.kappa_r, "loss_ratio": cav.loss_ratio}
        try:
            coop, g_star = optimum_cooperativity(cav.kappa_r, cav.kappa, args.gamma)
            f_max, p_s = optimum_performance(cav.kappa_r, cav.kappa)
            block["analytic"] = {"cooperativity": coop, "g_2pi_mhz": g_star, "F_max": f_max, "p_s": p_s}
        except PhysicsError as exc:
            block["analytic"] = {"error": str(exc)}
        num = numeric_optimum(cav, args.gamma, residual, metric=args.metric)
        block["numeric"] = {"g_2pi_mhz": num.g, "fidelity": num.fidelity, "metric": args.metric}
        if num.relative_offset is not None:
            block["numeric"]["relative_offset_from_analytic"] = num.relative_offset
        report["cavity"] = block

    if len(report) == 1:
        raise ScenarioError("nothing to compute: give --kappa-r, --target-fidelity, --qubit-splitting or --cesium")
    text = dumps(report) + "\n" if args.format == "json" else _flat_text(report)
    sys.stdout.write(text)
    out = _out_dir(args)
    if out is not None:
        (out / "optimum.json").write_text(dumps(report) + "\n")
    return 0


def _flat_text(report, prefix="") -> str:
    lines = []
    for k, v in report.items():
        if isinstance(v, dict):
            lines.append(_flat_text(v, prefix + k + ".").rstrip("\n"))
        else:
            lines.append(f"{prefix}{k} = {_fmt(v)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- fiber


def _fiber_from_args(args) -> FiberSpec:
    if args.scenario:
        cfg = load_scenario(args.scenario)
        if cfg.fiber is None:
            raise ScenarioError("scenario has no [fiber] section")
        f = cfg.fiber
        return FiberSpec(f.radius_nm, f.n_core, f.n_clad, f.wavenumber_per_um, f.cavity_length_m)
    return FiberSpec(args.radius_nm, args.n_core, args.n_clad, args.wavenumber_per_um, args.cavity_length_m)


def cmd_fiber(args) -> int:
    fiber = _fiber_from_args(args)
    mode = solve_mode(fiber)
    r_min = args.r_min_nm if args.r_min_nm is not None else fiber.radius_nm
    r_grid = np.linspace(r_min, args.r_max_nm, args.num)
    prof = coupling_profile(fiber, r_grid)
    at_r0 = coupling_profile(fiber, [args.r0_nm])
    report = {
        "fiber": {
            "radius_nm": fiber.radius_nm,
            "n_core": fiber.n_core,
            "n_clad": fiber.n_clad,
            "wavenumber_per_um": fiber.wavenumber_per_um,
            "cavity_length_m": fiber.cavity_length_m,
        },
        "mode": {
            "v": mode.v,
            "u": mode.u,
            "w": mode.w,
            "beta_per_um": mode.beta,
            "s": mode.s,
            "characteristic_residual": mode.residual,
            "peak_eps_E2": mode.peak_intensity,
            "transverse_integral_um2": mode.transverse_integral_um2,
            "mode_volume_um3": mode.mode_volume_um3,
        },
        "coupling_at_r0": {"r_nm": args.r0_nm, **{k: float(v[0]) for k, v in at_r0.items() if k != "r_nm"}},
    }
    columns = list(prof)
    rows = np.column_stack([prof[c] for c in columns]).tolist()
    buf = io.StringIO()
    write_csv(buf, columns, rows, [f"nfcqed {__version__} fiber", "fiber " + json.dumps(report["fiber"])])
    out = _out_dir(args)
    if out is not None:
        (out / "fiber_profile.csv").write_text(buf.getvalue())
        (out / "fiber_mode.json").write_text(dumps(report) + "\n")
    if args.format == "csv":
        sys.stdout.write(buf.getvalue())
    elif args.format == "json":
        sys.stdout.write(dumps(report) + "\n")
    else:
        sys.stdout.write(_flat_text(report))
    return 0


# ---------------------------------------------------------------- entry


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nfcqed", description="Photon-mediated CZ gates in nanofiber cavity networks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, formats=("text", "json", "csv"), default="text"):
        sp.add_argument("--out", help="directory for output files")
        sp.add_argument("--format", choices=formats, default=default)

    g = sub.add_parser("gate", help="evaluate one scenario")
    g.add_argument("--scenario", required=True)
    common(g)
    g.add_argument("--haar-samples", type=int, default=0, help="add a Monte-Carlo Haar-average fidelity estimate")
    g.add_argument("--seed", type=int, default=0, help="seed for the Monte-Carlo estimate")
    g.set_defaults(func=cmd_gate)

    s = sub.add_parser("sweep", help="evaluate a 1D or 2D grid from the [sweep] section")
    s.add_argument("--scenario", required=True)
    common(s, ("csv", "json"), "csv")
    s.add_argument("--threads", type=int, default=None, help="worker processes (default: available cores)")
    s.set_defaults(func=cmd_sweep)

    o = sub.add_parser("optimum", help="analytic and numerical optimum coupling")
    common(o, ("text", "json"), "text")
    o.add_argument("--kappa-r", type=float)
    o.add_argument("--kappa-t", type=float, default=K.KAPPA_T)
    o.add_argument("--kappa-m", type=float, default=K.KAPPA_M)
    o.add_argument("--gamma", type=float, default=K.CS_GAMMA)
    o.add_argument("--target-fidelity", type=float)
    o.add_argument("--qubit-splitting", type=float, help="qubit splitting in 2pi MHz (enables residual coupling)")
    o.add_argument("--excited-offset", type=float, help="excited-state offset subtracted from the splitting")
    o.add_argument("--dipole-ratio-sq", type=float, help="|mu_0/mu_1|^2 of the residual transition")
    o.add_argument("--cesium", action="store_true", help="cesium clock-state splitting and dipole ratio")
    o.add_argument("--metric", choices=("F_avg", "F_e", "F_superposition"), default="F_avg")
    o.set_defaults(func=cmd_optimum)

    f = sub.add_parser("fiber", help="HE11 mode and coupling profile")
    f.add_argument("--scenario", help="take the fiber from a scenario's [fiber] section")
    common(f)
    f.add_argument("--radius-nm", type=float, default=K.FIBER_RADIUS_NM)
    f.add_argument("--n-core", type=float, default=K.FIBER_N_CORE)
    f.add_argument("--n-clad", type=float, default=K.FIBER_N_CLAD)
    f.add_argument("--wavenumber-per-um", type=float, default=K.CS_D2_WAVENUMBER_PER_UM)
    f.add_argument("--cavity-length-m", type=float, default=K.CAVITY_LENGTH_M)
    f.add_argument("--r0-nm", type=float, default=K.TARGET_DISTANCE_NM)
    f.add_argument("--r-min-nm", type=float)
    f.add_argument("--r-max-nm", type=float, default=1500.0)
    f.add_argument("--num", type=int, default=131)
    f.set_defaults(func=cmd_fiber)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PhysicsError as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
