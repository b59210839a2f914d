"""Command-line front end.

Usage::

    squaredot spectrum --config run.yaml --out results/
    squaredot concurrence --config run.yaml --out results/ --manifest

Every subcommand writes CSV files whose ``#`` header carries the config
hash, the seed and the package version; identical inputs give identical
bytes.  Exit codes: 0 success, 2 configuration error, 3 numerical
non-convergence, 4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .constants import HBAR, effective_hartree
from .core_model import DotGeometry, EffectiveParams, MaterialParams, spectrum_vs_flux, zeeman_energy
from .coupling import ArrayGeometry, v_dipole, v_exact, v_screened
from .dynamics import (
    QState,
    evolve_nqubit,
    measure_computational,
    named_gate,
    synthesize_rotation,
)
from .entanglement import computational_start_trace, detuned_trace, preservation_trace, root_swap_trace
from .exact_ed import (
    SINGLET,
    TRIPLET,
    EDConfig,
    SizeError,
    center_ratio,
    charge_density,
    diagonal_basis_densities,
    extract_delta,
    load_or_compute,
    noninteracting_levels,
    pair_dimension,
    solve_ed,
)
from .exact_ed.solver import MAX_PAIR_DIM
from .results import ResultTable

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_RESOURCE = 0, 2, 3, 4
U64_MAX = 2**64 - 1


class NonConvergence(ArithmeticError):
    """Raised after outputs are written when a numerical check failed."""


def _material(cfg: RunConfig) -> MaterialParams:
    m = cfg["material"]
    return MaterialParams(m["effective_mass_ratio"], m["relative_permittivity"], m["g_factor"])


def _times(total: float, cfg: RunConfig) -> np.ndarray:
    p = cfg["protocol"]
    t_max = total if p["t_max_ps"] is None else p["t_max_ps"]
    if not t_max > 0 or p["points"] < 2:
        raise ConfigError("protocol.t_max_ps must be positive and protocol.points >= 2")
    return np.linspace(0.0, t_max, p["points"])


# -- subcommands -----------------------------------------------------------


def cmd_spectrum(cfg: RunConfig) -> dict[str, ResultTable]:
    """Eight low-lying levels over a flux grid at fixed Zeeman energy."""
    e, g = cfg["effective"], cfg["geometry"]
    geom = DotGeometry(g["side_length_nm"], g["effective_area_nm2"], tuple(g["corner_bias_uV"]))
    eps0 = geom.site_energies() if e["eps0_ueV"] is None else tuple(e["eps0_ueV"])
    e_b = zeeman_energy(_material(cfg), e["field_T"])
    p = EffectiveParams(eps0, e["delta_ueV"], 0.0, e_b)
    if e["flux_points"] < 1:
        raise ConfigError("effective.flux_points must be >= 1")
    grid = np.linspace(e["flux_min"], e["flux_max"], e["flux_points"])
    spec = spectrum_vs_flux(p, grid, e["diamagnetic_ueV"])
    cols = [("flux", "h/e", spec.flux)] + [(lab, "ueV", spec.column(lab)) for lab in spec.labels]
    meta = {"zeeman_ueV": e_b, "field_T_for_zeeman": e["field_T"], "ground_label": _ground_labels(spec)}
    return {"spectrum": ResultTable.from_columns(cols, meta)}


def _ground_labels(spec) -> str:
    """Ground-level label at the first, middle and last flux points."""
    idx = sorted({0, spec.flux.size // 2, spec.flux.size - 1})
    return ";".join(f"{spec.flux[k]:g}:{spec.labels[int(np.argmin(spec.energies[k]))]}" for k in idx)


def cmd_evolve(cfg: RunConfig, seed: int = 0) -> dict[str, ResultTable]:
    """Single-qubit gate dynamics from |0> under a named or synthesized schedule."""
    p, e = cfg["protocol"], cfg["effective"]
    delta = e["delta_ueV"]
    if not delta > 0:
        raise ConfigError("effective.delta_ueV must be positive for gate dynamics")
    if p["gate"] == "rotation":
        sched = synthesize_rotation((p["theta_rad"], p["phase_rad"]), delta, p["gate_energy_ueV"])
    else:
        sched = named_gate(p["gate"], delta)
    t = _times(sched.total_time, cfg)
    amps = np.empty((t.size, 2), dtype=complex)
    starts = np.concatenate([[0.0], np.cumsum([seg.duration for seg in sched.segments])[:-1]])
    # a sample on a boundary belongs to the later segment; beyond the end the last one continues
    segment = np.searchsorted(starts, t, side="right") - 1
    state = QState.basis("0")
    for k, seg in enumerate(sched.segments):
        mask = segment == k
        if mask.any():
            amps[mask] = evolve_nqubit(state, _matrix(seg.h), t[mask] - starts[k])
        state = evolve_nqubit(state, _matrix(seg.h), seg.duration)
    final = QState.normalized(amps[-1])
    cols = [
        ("t", "ps", t),
        ("segment", "", segment),
        ("re_a0", "", amps[:, 0].real),
        ("im_a0", "", amps[:, 0].imag),
        ("re_a1", "", amps[:, 1].real),
        ("im_a1", "", amps[:, 1].imag),
        ("p0", "", np.abs(amps[:, 0]) ** 2),
        ("p1", "", np.abs(amps[:, 1]) ** 2),
    ]
    meta = {
        "gate": p["gate"],
        "segments": [[s.label, s.duration] for s in sched.segments],
        "schedule_total_ps": sched.total_time,
        "final_p1": float(final.probabilities()[1]),
    }
    out = {"evolve": ResultTable.from_columns(cols, meta)}
    if p["shots"] > 0:
        counts = measure_computational(final, p["shots"], seed)
        rows = [[int(b, 2), counts.get(b, 0)] for b in ("0", "1")]
        out["evolve_counts"] = ResultTable([("outcome", ""), ("counts", "")], rows, {"shots": p["shots"]})
    return out


def _matrix(h) -> np.ndarray:
    return h.matrix() if hasattr(h, "matrix") else np.asarray(h)


def cmd_couple(cfg: RunConfig) -> dict[str, ResultTable]:
    """Inter-dot couplings v_n under the three models, plus a d/L sweep."""
    a = cfg["array"]
    eps_r = cfg["material"]["relative_permittivity"]
    try:
        geom = ArrayGeometry(a["n_dots"], a["spacing_nm"], a["side_nm"], a["image_distance_nm"], eps_r)
    except ValueError as exc:
        raise ConfigError(f"array: {exc}") from None
    if geom.n_dots < 2:
        raise ConfigError("array.n_dots must be >= 2 to define a coupling")
    n = np.arange(1, geom.n_dots)
    exact = np.array([v_exact(k, geom) for k in n])
    dipole = np.array([v_dipole(k, geom) for k in n])
    cols = [
        ("n", "", n),
        ("v_exact", "ueV", exact),
        ("v_dipole", "ueV", dipole),
    ]
    ratios = [("ratio_exact", "", exact / exact[0]), ("ratio_dipole", "", dipole / dipole[0])]
    if geom.image_distance_delta is not None:
        screened = np.array([v_screened(k, geom) for k in n])
        cols.append(("v_screened", "ueV", screened))
        ratios.append(("ratio_screened", "", screened / screened[0]))
    meta = {"screened_model": geom.image_distance_delta is not None}
    out = {"couple": ResultTable.from_columns(cols + ratios, meta)}

    sweep = np.asarray(a["d_over_L_sweep"], dtype=float)
    if np.any(sweep <= 1):
        raise ConfigError("array.d_over_L_sweep entries must exceed 1")
    ex, dp = [], []
    for r in sweep:
        g = ArrayGeometry(2, r * geom.side_L, geom.side_L, None, eps_r)
        ex.append(v_exact(1, g))
        dp.append(v_dipole(1, g))
    ex, dp = np.array(ex), np.array(dp)
    out["couple_sweep"] = ResultTable.from_columns(
        [("d_over_L", "", sweep), ("v_exact", "ueV", ex), ("v_dipole", "ueV", dp), ("exact_over_dipole", "", ex / dp)]
    )
    return out


def _ratio_tag(r: float) -> str:
    return f"{r:g}".replace(".", "p").replace("-", "m")


def cmd_concurrence(cfg: RunConfig) -> dict[str, ResultTable]:
    """One trace per v/gamma in the sweep for the selected protocol."""
    p = cfg["protocol"]
    gamma = p["gamma_ueV"]
    if not gamma > 0:
        raise ConfigError("protocol.gamma_ueV must be positive")
    out = {}
    for ratio in p["v_over_gamma"]:
        if not ratio > 0:
            raise ConfigError("protocol.v_over_gamma entries must be positive")
        v = ratio * gamma
        grid = None if p["t_max_ps"] is None else _times(0.0, cfg)
        name = p["name"]
        if name == "rootswap":
            trace = root_swap_trace(v, grid, gamma)
        elif name == "detuned":
            trace = detuned_trace(gamma, v, grid)
        elif name == "preserve":
            trace = preservation_trace(gamma, v, grid)
        else:
            gammas = [gamma, gamma]
            if p["gamma_off_dot"] in (0, 1):
                gammas[p["gamma_off_dot"]] = 0.0
            elif p["gamma_off_dot"] != -1:
                raise ConfigError("protocol.gamma_off_dot must be -1, 0 or 1")
            trace = computational_start_trace(v, tuple(gammas), p["start"], grid)
        cols = [(k, "ps" if k == "t_ps" else "", val) for k, val in trace.columns().items()]
        cols[0] = ("t", "ps", cols[0][2])
        meta = {
            "protocol": name,
            "gamma_ueV": gamma,
            "v_ueV": v,
            "v_over_gamma": ratio,
            "max_concurrence": float(trace.concurrence.max()),
            "min_concurrence": float(trace.concurrence.min()),
            "max_transfer_prob": float(trace.transfer_prob.max()),
            "hbar_ueV_ps": HBAR,
        }
        meta.update({k: v_ for k, v_ in trace.metadata.items()})
        out[f"concurrence_{name}_v{_ratio_tag(ratio)}"] = ResultTable.from_columns(cols, meta)
    return out


def _ordering(spec, n: int = 4) -> str:
    return ",".join("S" if c == SINGLET else "T" for c in spec.channels[:n])


def cmd_ed(cfg: RunConfig, cache_dir: Path | None = None) -> dict[str, ResultTable]:
    """Two-electron spectrum, calibration numbers and densities for one L/a."""
    e = cfg["ed"]
    material = _material(cfg)
    ha = effective_hartree(material.effective_mass_ratio, material.relative_permittivity)
    try:
        ed_cfg = EDConfig(e["L_over_a"], e["cutoff"], SINGLET, e["quadrature_order"], tuple(e["corner_bias_Ha"]))
    except ValueError as exc:
        raise ConfigError(f"ed: {exc}") from None
    for channel in (SINGLET, TRIPLET):
        dim = pair_dimension(ed_cfg.sp_cutoff, channel)
        if dim > MAX_PAIR_DIM:
            raise SizeError(f"{channel} basis dimension {dim} exceeds the desk cap of {MAX_PAIR_DIM}")
    k = e["n_states"]
    if k < 1:
        raise ConfigError("ed.n_states must be >= 1")

    if e["noninteracting"]:
        rows, chans = [], []
        for code, channel in enumerate((SINGLET, TRIPLET)):
            lv = noninteracting_levels(ed_cfg, channel, k)
            rows.append(lv)
            chans.append(np.full(lv.size, code))
        energies = np.concatenate(rows)
        codes = np.concatenate(chans)
        order = np.argsort(energies, kind="stable")
        spec_table = ResultTable.from_columns(
            [
                ("index", "", np.arange(order.size)),
                ("energy", "Ha*", energies[order]),
                ("energy", "ueV", energies[order] * ha),
                ("triplet", "", codes[order]),
            ],
            {"mode": "noninteracting", "L_over_a": ed_cfg.L_over_a, "cutoff": ed_cfg.sp_cutoff},
        )
        return {"ed_spectrum": spec_table}

    tensor = load_or_compute(ed_cfg.sp_cutoff, ed_cfg.quadrature_order, cache_dir)
    spec = solve_ed(ed_cfg, k, tensor=tensor)
    codes = np.array([0 if c == SINGLET else 1 for c in spec.channels])
    base = {"mode": "interacting", "L_over_a": ed_cfg.L_over_a, "cutoff": ed_cfg.sp_cutoff}
    out = {
        "ed_spectrum": ResultTable.from_columns(
            [
                ("index", "", np.arange(spec.energies.size)),
                ("energy", "Ha*", spec.energies),
                ("energy", "ueV", spec.energies * ha),
                ("triplet", "", codes),
            ],
            {**base, "eigen_residual": spec.residual, "ordering": _ordering(spec, spec.energies.size)},
        )
    }

    est = extract_delta(spec, material)
    ground = charge_density(spec.states[0], e["grid_n"])
    if len(spec.channel_states(SINGLET)) >= 2:
        plus, minus = diagonal_basis_densities(spec, e["grid_n"])
    else:
        plus = minus = ground
    E = spec.energies
    spread = E[3] - E[0] if E.size >= 4 else float("nan")
    gap = E[4] - E[3] if E.size >= 5 else float("nan")
    summary = ResultTable.from_columns(
        [
            ("delta", "Ha*", [est.delta]),
            ("delta", "ueV", [est.delta_ueV]),
            ("midway_ratio", "", [est.midway_ratio]),
            ("manifold_spread", "Ha*", [spread]),
            ("gap_to_fifth", "Ha*", [gap]),
            ("gap_over_spread", "", [gap / spread if spread > 0 else float("nan")]),
            ("center_ratio_ground", "", [center_ratio(ground)]),
            ("center_ratio_diagonal", "", [center_ratio(plus)]),
        ],
        {
            **base,
            "ordering": _ordering(spec),
            "isolated": est.isolated,
            "note": est.note,
            "tensor_cache": "hit" if tensor.from_cache else "miss",
            "quadrature_flagged": tensor.n_flagged,
            "quadrature_max_change": tensor.max_order_change,
        },
    )
    out["ed_summary"] = summary
    X, Y = np.meshgrid(ground.x, ground.x, indexing="ij")
    out["ed_density"] = ResultTable.from_columns(
        [
            ("x", "L", X.ravel()),
            ("y", "L", Y.ravel()),
            ("ground", "1/L^2", ground.values.ravel()),
            ("diagonal_plus", "1/L^2", plus.values.ravel()),
            ("diagonal_minus", "1/L^2", minus.values.ravel()),
        ],
        {**base, "state": "ground and (S1 +/- S2)/sqrt2"},
    )
    if tensor.n_flagged:
        raise NonConvergence(f"{tensor.n_flagged} Coulomb moments did not converge between quadrature orders", out)
    return out


# -- driver ------------------------------------------------------------------


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if not 0 <= value <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64 - 1]")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="squaredot", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("spectrum", "levels versus flux for the four-corner model"),
        ("evolve", "single-qubit gate dynamics"),
        ("couple", "inter-dot couplings in a linear array"),
        ("concurrence", "two-qubit entanglement protocols"),
        ("ed", "two-electron exact diagonalization"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, type=Path, help="YAML run configuration")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
        p.add_argument("--seed", type=_u64, default=0, help="RNG seed for sampled measurements")
        p.add_argument("--manifest", action="store_true", help="also write the resolved configuration as JSON")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def run(command: str, cfg: RunConfig, out_dir: Path, seed: int = 0, manifest: bool = False) -> list[Path]:
    """Execute one subcommand and write its files; returns the written paths."""
    if command == "spectrum":
        tables = cmd_spectrum(cfg)
    elif command == "evolve":
        tables = cmd_evolve(cfg, seed)
    elif command == "couple":
        tables = cmd_couple(cfg)
    elif command == "concurrence":
        tables = cmd_concurrence(cfg)
    elif command == "ed":
        cache = cfg["ed"]["cache_dir"]
        cache_dir = Path(cache) if cache else out_dir / "tensor_cache"
        try:
            tables = cmd_ed(cfg, cache_dir)
        except NonConvergence as exc:
            _write(exc.args[1], cfg, command, out_dir, seed)
            raise
    else:
        raise ConfigError(f"unknown command {command!r}")
    paths = _write(tables, cfg, command, out_dir, seed)
    if manifest:
        doc = {"command": command, "config": cfg.sections, "config_hash": cfg.hash, "seed": seed, "version": __version__}
        path = out_dir / f"{cfg['output']['prefix']}manifest_{command}.json"
        path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        paths.append(path)
    return paths


def _write(tables: dict[str, ResultTable], cfg: RunConfig, command: str, out_dir: Path, seed: int) -> list[Path]:
    stamp = {"command": command, "config_hash": cfg.hash, "seed": seed, "version": __version__}
    paths = []
    for name, table in tables.items():
        table.metadata = {**_clean(table.metadata), **stamp}
        paths.append(table.write(out_dir / f"{cfg['output']['prefix']}{name}.csv"))
    return paths


def _clean(meta: dict) -> dict:
    """JSON-safe metadata: numpy scalars to Python, non-finite floats to strings."""
    out = {}
    for k, v in meta.items():
        if isinstance(v, np.generic):
            v = v.item()
        if isinstance(v, float) and not math.isfinite(v):
            v = repr(v)
        out[k] = v
    return out


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.command)
        args.out.mkdir(parents=True, exist_ok=True)
        paths = run(args.command, cfg, args.out, args.seed, args.manifest)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SizeError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except NonConvergence as exc:
        print(f"non-convergence: {exc.args[0]}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ArithmeticError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # parameter combinations the physics modules reject
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
