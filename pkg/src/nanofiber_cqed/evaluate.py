"""Metric evaluation for scenarios and parameter sweeps."""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from nanofiber_cqed.addressing import Scenario, power_for_shift
from nanofiber_cqed.fidelity import (
    analytic_local_fidelity_full,
    analytic_remote_fidelity,
    average_fidelity,
    branch_fidelities,
    entanglement_fidelity,
    superposition_fidelity,
)
from nanofiber_cqed.gates import (
    RemoteChannel,
    configuration_amplitudes,
    ideal_unitary,
    local_channel,
    success_probability,
)
from nanofiber_cqed.pauli import PAULI_LETTERS, error_rates
from nanofiber_cqed.scenario import ScenarioFile, to_scenario, validate_sweep, with_overrides

MARGINAL_LABELS = tuple(a + b for a in PAULI_LETTERS for b in PAULI_LETTERS)

GATE_METRICS = (
    "F_avg",
    "F_e",
    "F_superposition",
    "F_analytic",
    "F_branch_mean",
    "p_S",
) + tuple(f"p_{lab}" for lab in MARGINAL_LABELS) + ("bias",)


def _remote_analytic_inputs(layout):
    """(r0, r1) if the layout is the one-atom-per-cavity remote case the closed form covers."""
    if layout.n_qubits != 2:
        return None
    if layout.cavities[0] != layout.cavities[1] or layout.atoms[0] != layout.atoms[1]:
        return None
    r = configuration_amplitudes(layout, layout.cavity_of[layout.control], 0.0)[0]
    # basis index 0: control in |0>; index 1: control in |1>
    return r[0], r[1]


def evaluate_gate(scenario: Scenario, pauli: bool = True, full_rates: bool = False) -> dict:
    """All reported metrics for one scenario.

    Keys follow ``GATE_METRICS``; entries that do not apply are NaN. With
    ``full_rates`` the complete N-qubit rate table is added under
    ``"pauli_rates"``.
    """
    layout = scenario.layout()
    u = ideal_unitary(layout)
    if scenario.kind == "local":
        chan = local_channel(layout, scenario.probe_detuning, scenario.flavor)
    else:
        chan = RemoteChannel(layout, scenario.probe_detuning)
    out = dict.fromkeys(GATE_METRICS, math.nan)
    fe = entanglement_fidelity(chan, u)
    out["F_e"] = fe
    out["F_avg"] = average_fidelity(fe, layout.dim)
    out["F_superposition"] = superposition_fidelity(chan, u)
    out["p_S"] = success_probability(layout, scenario.probe_detuning, scenario.kind)
    if scenario.kind == "local":
        out["F_analytic"] = analytic_local_fidelity_full(chan.g, 1 + layout.control, 1 + layout.target, layout.n_qubits)
    else:
        fh, fv = branch_fidelities(chan, u)
        out["F_branch_mean"] = 0.5 * (fh + fv)
        inputs = _remote_analytic_inputs(layout) if scenario.probe_detuning == 0 else None
        if inputs is not None:
            out["F_analytic"] = analytic_remote_fidelity(*inputs)
    if pauli:
        pc = error_rates(chan, u, (layout.control, layout.target))
        for lab in MARGINAL_LABELS:
            out[f"p_{lab}"] = pc.marginal[lab]
        out["bias"] = pc.bias
        if full_rates:
            out["pauli_rates"] = pc.as_dict()
    out["couplings_2pi_mhz"] = [a.g for a in layout.atoms]
    return out


def evaluate_file(cfg: ScenarioFile, pauli: bool | None = None, full_rates: bool = False) -> dict[str, dict]:
    """Metrics for every gate kind named in the file."""
    if pauli is None:
        pauli = cfg.gate.pauli_rates
    return {kind: evaluate_gate(to_scenario(cfg, kind), pauli, full_rates) for kind in cfg.kinds}


# ---------------------------------------------------------------- sweeps


def sweep_columns(cfg: ScenarioFile, axes) -> list[str]:
    cols = [f for f, _ in axes]
    if any(f == "atoms.nontarget_delta_2pi_mhz" for f, _ in axes):
        cols.append("nontarget_laser_power_mW")
    cols += ["target_g_2pi_mhz", "nontarget_g_2pi_mhz"]
    metrics = GATE_METRICS
    if not cfg.gate.pauli_rates:
        metrics = tuple(m for m in metrics if m == "p_S" or not (m.startswith("p_") or m == "bias"))
    for kind in cfg.kinds:
        cols += [f"{kind}_{m}" for m in metrics]
    return cols


def _evaluate_point(args):
    cfg, overrides, columns = args
    point = with_overrides(cfg, overrides)
    results = evaluate_file(point)
    row = dict(overrides)
    if "nontarget_laser_power_mW" in columns:
        delta = overrides["atoms.nontarget_delta_2pi_mhz"]
        a = point.addressing
        row["nontarget_laser_power_mW"] = power_for_shift(abs(delta), a.waist_um, a.polarizability_au)
    any_res = next(iter(results.values()))
    g = any_res["couplings_2pi_mhz"]
    row["target_g_2pi_mhz"] = g[0]
    row["nontarget_g_2pi_mhz"] = g[2] if len(g) > 2 else math.nan
    for kind, res in results.items():
        for m, v in res.items():
            col = f"{kind}_{m}"
            if col in columns:
                row[col] = v
    return [row.get(c, math.nan) for c in columns]


def run_sweep(cfg: ScenarioFile, threads: int | None = None):
    """Evaluate the grid row-major over the axes; returns (axes, columns, rows)."""
    axes = validate_sweep(cfg)
    columns = sweep_columns(cfg, axes)
    points = [dict(zip([f for f, _ in axes], combo)) for combo in itertools.product(*[v for _, v in axes])]
    tasks = [(cfg, p, columns) for p in points]
    if threads is None:
        threads = os.cpu_count() or 1
    if threads <= 1 or len(tasks) <= 1:
        rows = [_evaluate_point(t) for t in tasks]
    else:
        # first point in-process so configuration errors surface directly
        first = _evaluate_point(tasks[0])
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rest = list(pool.map(_evaluate_point, tasks[1:], chunksize=max(1, len(tasks) // (4 * threads))))
        rows = [first] + rest
    return axes, columns, rows


def summarize(axes, columns, rows) -> dict:
    """argmax / argmin of every metric column over the grid, ignoring NaN."""
    data = np.array(rows, dtype=float)
    fields = [f for f, _ in axes]
    summary = {
        "axes": [{"field": f, "values": v} for f, v in axes],
        "points": len(rows),
        "metrics": {},
    }
    for j, col in enumerate(columns):
        if col in fields:
            continue
        vals = data[:, j]
        finite = ~np.isnan(vals)
        if not finite.any():
            summary["metrics"][col] = None
            continue
        masked_hi = np.where(finite, vals, -np.inf)
        masked_lo = np.where(finite, vals, np.inf)
        i_max = int(np.argmax(masked_hi))
        i_min = int(np.argmin(masked_lo))
        summary["metrics"][col] = {
            "max": float(vals[i_max]),
            "argmax": {f: float(data[i_max, k]) for k, f in enumerate(fields)},
            "min": float(vals[i_min]),
            "argmin": {f: float(data[i_min, k]) for k, f in enumerate(fields)},
        }
    return summary
