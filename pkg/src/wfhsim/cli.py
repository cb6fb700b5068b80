"""Command-line front end.

Five subcommands drive the library and emit CSV/JSON artifacts:

    scan-ssps     phase-difference fringe scan of the split single photon
    scan-tmss     phase-sum fringe scan of the noisy squeezed state
    bell          multi-start maximisation of the CGLMP correlator I_M
    oracle-check  analytic pipeline vs brute-force circuit on random draws
    invert        photon statistics and (w0, w1) from a click matrix CSV

Configuration can come from a JSON file (--config) with individual values
overridden by repeated --set dotted.path=value flags.  Every run writes a
provenance JSON with the fully resolved parameters.  Exit codes: 0 success,
1 validation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import cmath
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bell import BellSettings, SearchConfig, optimize_IM, output_amplitudes_m2
from .detector import GprModel, apply_response, invert_response, load_click_matrix
from .errors import ConfigError, WfhError
from .oracle import circuit_for_channels, simulate_circuit
from .states import make_noisy_tmss, make_ssps_input, make_tmss, split_on_balanced_bs
from .wfh import (
    WFHChannel,
    default_phase_grid,
    joint_photon_stats,
    ssps_scan,
    tmss_scan,
    write_sidecar,
)

FIG3_DEFAULTS = {
    "w0": 0.161,
    "w1": 0.669,
    "eta_a": 0.072,
    "eta_b": 0.064,
    "alpha_a": 0.510,
    "alpha_b": 0.585,
}
FIG4_DEFAULTS = {
    "lam": 0.295,
    "noise_p": 0.04,
    "eta_a": 0.132,
    "eta_b": 0.155,
    "alpha_a": 0.365,
    "alpha_b": 0.347,
}
M2_CURVE_DEFAULTS = {"lam": 0.3, "alpha": 0.131, "beta": 0.131, "phase_offset": math.pi / 4}


def _fmt(value: float) -> str:
    return "%.17g" % value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wfhsim",
        description="Joint click statistics of weak-field homodyne detection",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="JSON file with parameter values")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="PATH=VALUE",
            help="override one config value by dotted path (repeatable)",
        )
        p.add_argument("--out-dir", type=Path, default=Path("."), help="artifact directory")
        p.add_argument("--seed", type=int, default=7, help="seed for every stochastic choice")
        p.add_argument("--threads", type=int, default=1, help="worker processes (1 = serial)")

    p = sub.add_parser("scan-ssps", help="fringe scan of the split single photon")
    common(p)
    for key, val in FIG3_DEFAULTS.items():
        p.add_argument(f"--{key.replace('_', '-')}", type=float, default=val)
    _scan_flags(p)

    p = sub.add_parser("scan-tmss", help="fringe scan of the noisy squeezed state")
    common(p)
    for key, val in FIG4_DEFAULTS.items():
        p.add_argument(f"--{key.replace('_', '-')}", type=float, default=val)
    _scan_flags(p)

    p = sub.add_parser("bell", help="maximise the CGLMP correlator I_M")
    common(p)
    p.add_argument("--M", dest="m_values", default="2,3,4,5,6,7,8", help="comma-separated layers")
    p.add_argument("--starts", type=int, default=64)
    p.add_argument("--lo-max", type=float, default=2.0)
    p.add_argument("--lam-max", type=float, default=0.95)
    p.add_argument("--free-bs", action="store_true", help="include splitter ratios in the search")
    p.add_argument(
        "--m2-curves",
        type=Path,
        default=None,
        help="also write the nine four-photon expectation curves to this CSV",
    )

    p = sub.add_parser("oracle-check", help="cross-validate analytic vs brute-force statistics")
    common(p)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--m-max", type=int, default=10)

    p = sub.add_parser("invert", help="photon statistics from a click matrix CSV")
    common(p)
    p.add_argument("--clicks", type=Path, required=True, help="JointClickMatrix CSV")
    p.add_argument("--eta-a", type=float, required=True)
    p.add_argument("--eta-b", type=float, required=True)
    p.add_argument("--bins", type=int, default=8)
    p.add_argument("--support", type=int, default=2)
    return parser


def _scan_flags(p) -> None:
    p.add_argument("--bins", type=int, default=8)
    p.add_argument("--points", type=int, default=72)
    p.add_argument("--p-max", type=int, default=2, help="largest click index in the CSV")
    p.add_argument("--m-max", type=int, default=12)
    p.add_argument("--r0", type=float, default=0.5, help="ideal GPR reflectivity")
    p.add_argument("--v-a", type=float, default=0.0, help="GPR modulation depth, side A")
    p.add_argument("--v-b", type=float, default=0.0, help="GPR modulation depth, side B")
    p.add_argument("--theta0-a", type=float, default=0.0)
    p.add_argument("--theta0-b", type=float, default=0.0)
    p.add_argument("--prefix", default=None, help="artifact basename (defaults to the command)")


def _apply_config_and_overrides(args: argparse.Namespace) -> dict:
    """Resolve CLI defaults, JSON config and --set overrides to one dict."""
    params = {k: v for k, v in vars(args).items() if k not in {"config", "overrides"}}
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config document must be a JSON object")
        for key, value in loaded.items():
            key = key.replace("-", "_")
            if key not in params:
                raise ConfigError(f"unknown config key {key!r}")
            params[key] = value
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set needs PATH=VALUE, got {item!r}")
        raw_key, raw_value = item.split("=", 1)
        key = raw_key.strip().replace("-", "_").replace(".", "_")
        if key not in params:
            raise ConfigError(f"unknown config key {raw_key!r}")
        try:
            params[key] = json.loads(raw_value)
        except json.JSONDecodeError:
            params[key] = raw_value
    return params


def _write_provenance(out_dir: Path, name: str, params: dict, outputs: list[str]) -> None:
    doc = {
        "artifact_version": __version__,
        "parameters": {
            k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(params.items())
        },
        "outputs": outputs,
    }
    (out_dir / f"{name}_provenance.json").write_text(json.dumps(doc, indent=2, sort_keys=True))


def _run_scan(params: dict) -> int:
    out_dir = Path(params["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    kind = params["command"]
    prefix = params.get("prefix") or kind.replace("-", "_")
    grid = default_phase_grid(int(params["points"]))
    gpr_a = GprModel(r0=params["r0"], v=params["v_a"], theta0=params["theta0_a"])
    gpr_b = GprModel(r0=params["r0"], v=params["v_b"], theta0=params["theta0_b"])
    ch_a = WFHChannel(
        lo_magnitude=params["alpha_a"], eta=params["eta_a"], bins=int(params["bins"])
    )
    ch_b = WFHChannel(
        lo_magnitude=params["alpha_b"], eta=params["eta_b"], bins=int(params["bins"])
    )
    workers = max(1, int(params["threads"]))
    if kind == "scan-ssps":
        scan = ssps_scan(
            params["w0"], params["w1"], ch_a, ch_b, gpr_a, gpr_b,
            grid=grid, m_max=int(params["m_max"]), workers=workers,
        )
        state = split_on_balanced_bs(make_ssps_input(params["w0"], params["w1"]))
    else:
        scan = tmss_scan(
            params["lam"], params["noise_p"], ch_a, ch_b, gpr_a, gpr_b,
            grid=grid, m_max=int(params["m_max"]), workers=workers,
        )
        state = make_noisy_tmss(params["lam"], params["noise_p"])
    csv_path = out_dir / f"{prefix}.csv"
    scan.to_csv(csv_path, p_max=int(params["p_max"]))
    sidecar_path = out_dir / f"{prefix}_params.json"
    write_sidecar(scan, sidecar_path)
    state_path = out_dir / f"{prefix}_state.json"
    state_path.write_text(json.dumps(state.to_json_dict()))
    _write_provenance(
        out_dir, prefix, params, [csv_path.name, sidecar_path.name, state_path.name]
    )
    print(f"wrote {csv_path}")
    return 0


def _run_bell(params: dict) -> int:
    out_dir = Path(params["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        m_values = [int(tok) for tok in str(params["m_values"]).split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"--M must be comma-separated integers, got {params['m_values']!r}") from exc
    if not m_values or any(m < 1 for m in m_values):
        raise ConfigError("--M needs at least one layer >= 1")
    config = SearchConfig(
        n_starts=int(params["starts"]),
        seed=int(params["seed"]),
        lam_max=float(params["lam_max"]),
        lo_max=float(params["lo_max"]),
        workers=max(1, int(params["threads"])),
        free_bs=bool(params["free_bs"]),
    )
    rows = []
    outputs = []
    for m in m_values:
        result = optimize_IM(m, config)
        s = result.settings
        report = {
            "M": m,
            "best_I": result.best_value,
            "lambda_abs": abs(s.lam),
            "theta": cmath.phase(complex(s.lam)),
            "alphas": [[abs(a), cmath.phase(complex(a))] for a in s.alphas],
            "betas": [[abs(b), cmath.phase(complex(b))] for b in s.betas],
            "n_starts": config.n_starts,
            "seed": config.seed,
            "converged_fraction": result.converged_fraction,
            "boundary_hits": result.boundary_hits,
            "starts": [
                {"value": st.value, "converged": st.converged, "nfev": st.nfev}
                for st in result.starts
            ],
        }
        path = out_dir / f"bell_M{m}.json"
        path.write_text(json.dumps(report, indent=2, sort_keys=True))
        outputs.append(path.name)
        rows.append((m, result.best_value))
        print(f"M={m}: best_I={result.best_value:.9f}")
    csv_path = out_dir / "bell_results.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("M,best_I\n")
        for m, val in rows:
            fh.write(f"{m},{_fmt(val)}\n")
    outputs.append(csv_path.name)
    if params.get("m2_curves"):
        curve_path = Path(params["m2_curves"])
        if not curve_path.is_absolute():
            curve_path = out_dir / curve_path
        _write_m2_curves(curve_path)
        outputs.append(curve_path.name)
    _write_provenance(out_dir, "bell", params, outputs)
    return 0


def _write_m2_curves(path: Path, n_points: int = 144) -> None:
    """Nine four-photon expectation curves versus one LO phase.

    The second LO trails the first by the configured offset; squeezing and LO
    magnitudes follow the defaults of the four-photon layer study.
    """
    d = M2_CURVE_DEFAULTS
    phases = np.linspace(0.0, 2.0 * math.pi, n_points, endpoint=False)
    with open(path, "w", encoding="utf-8") as fh:
        names = [f"Q{k}{kp}" for k in range(3) for kp in range(3)]
        fh.write("phi," + ",".join(names) + "\n")
        for phi in phases:
            alpha = d["alpha"] * cmath.exp(1j * phi)
            beta = d["beta"] * cmath.exp(1j * (phi + d["phase_offset"]))
            settings = BellSettings(m=2, lam=d["lam"], alphas=(alpha, alpha), betas=(beta, beta))
            probs = np.abs(output_amplitudes_m2(settings)) ** 2
            # label by reflected counts (k, k') = (2 - gamma_a, 2 - gamma_b)
            row = [probs[2 - k, 2 - kp] for k in range(3) for kp in range(3)]
            fh.write(",".join([_fmt(phi)] + [_fmt(v) for v in row]) + "\n")


def _run_oracle_check(params: dict) -> int:
    out_dir = Path(params["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    trials = int(params["trials"])
    tol = float(params["tol"])
    m_max = int(params["m_max"])
    rng = np.random.default_rng(int(params["seed"]))
    worst = 0.0
    records = []
    for trial in range(trials):
        kind = "ssps" if trial % 2 == 0 else "tmss"
        if kind == "ssps":
            w0, w1 = rng.dirichlet(np.ones(3))[:2]
            state = split_on_balanced_bs(make_ssps_input(w0, w1))
        else:
            lam = rng.uniform(0.05, 0.35) * np.exp(2j * math.pi * rng.random())
            state = make_tmss(lam)
        channels = []
        for _ in range(2):
            r = rng.uniform(0.5, 0.8)
            channels.append(
                WFHChannel(
                    lo_magnitude=rng.uniform(0.05, 1.0),
                    lo_phase=rng.uniform(0.0, 2.0 * math.pi),
                    eta=rng.uniform(0.05, 1.0),
                    bins=8,
                    t=math.sqrt(1.0 - r * r),
                    r=r,
                )
            )
        ch_a, ch_b = channels
        analytic = joint_photon_stats(state, ch_a, ch_b, m_max=m_max)
        brute = simulate_circuit(circuit_for_channels(state, ch_a, ch_b), m_max=m_max)
        p_analytic = apply_response(analytic.matrix, ch_a.eta, ch_b.eta, ch_a.bins)
        p_brute = apply_response(brute, ch_a.eta, ch_b.eta, ch_a.bins)
        dev = float(np.abs(p_analytic.probs - p_brute.probs).max())
        worst = max(worst, dev)
        records.append({"trial": trial, "kind": kind, "max_deviation": dev})
    passed = worst < tol
    summary = {
        "trials": trials,
        "seed": int(params["seed"]),
        "tolerance": tol,
        "max_deviation": worst,
        "passed": passed,
        "records": records,
    }
    path = out_dir / "oracle_check.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True))
    _write_provenance(out_dir, "oracle_check", params, [path.name])
    print(f"oracle-check: max deviation {worst:.3e} over {trials} trials -> "
          f"{'PASS' if passed else 'FAIL'}")
    return 0 if passed else 1


def _run_invert(params: dict) -> int:
    out_dir = Path(params["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    clicks_path = Path(params["clicks"])
    if not clicks_path.exists():
        raise ConfigError(f"click matrix {clicks_path} does not exist")
    clicks = load_click_matrix(clicks_path)
    F = invert_response(
        clicks,
        params["eta_a"],
        params["eta_b"],
        int(params["bins"]),
        support=int(params["support"]),
    )
    w0, w1 = float(F[0, 0]), float(F[1, 0] + F[0, 1])
    report = {"w0": w0, "w1": w1, "photon_statistics": [[float(v) for v in row] for row in F]}
    path = out_dir / "invert.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True))
    _write_provenance(out_dir, "invert", params, [path.name])
    print(f"w0={w0:.9f} w1={w1:.9f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, 0 on --help
        return int(exc.code or 0)
    try:
        params = _apply_config_and_overrides(args)
        if args.command in ("scan-ssps", "scan-tmss"):
            return _run_scan(params)
        if args.command == "bell":
            return _run_bell(params)
        if args.command == "oracle-check":
            return _run_oracle_check(params)
        if args.command == "invert":
            return _run_invert(params)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (WfhError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
