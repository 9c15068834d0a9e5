"""Command-line front end.

Subcommands:

* ``simulate``   — integrate one SG/EMA/GDFlow run and write a trajectory CSV
* ``equilibria`` — closed-form equilibrium set for scalar data
* ``stability``  — linearized spectrum (and optional probe) at an equilibrium
* ``montecarlo`` — paired SG/EMA convergence statistics over random data
* ``verify``     — built-in invariant suite

Exit codes: 0 success, 1 usage error, 2 numerical failure (divergence where
it is forbidden), 3 verification failure.  Flags beat a TOML config file
(--config, same key names with underscores), which beats built-in defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import __version__
from .analysis import EmpiricalDecay, empirical_stability_probe, linearize
from .dynamics import AlgoKind, integrate_flow, write_trajectory_csv
from .equilibria import ScalarMoments, materialize_equilibrium, solve_equilibria
from .model import (
    ConstantAlpha,
    DataMoments,
    HyperParams,
    LinearRampAlpha,
    load_sample_pairs_csv,
    random_state,
    Dims,
)
from .montecarlo import TrialConfig, run_monte_carlo
from .verify import run_verification

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems with exit code 1."""

    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ssldyn", description=__doc__, add_help=True)
    parser.add_argument("--version", action="version", version=f"ssldyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate one run and write a trajectory CSV")
    sim.add_argument("--config", help="TOML config file; flags override its values")
    sim.add_argument("--algo", choices=["sg", "ema", "gdflow"])
    sim.add_argument("--n", type=int)
    sim.add_argument("--m", type=int)
    sim.add_argument("--lambda", dest="lam", type=float)
    sim.add_argument("--mu", type=float)
    sim.add_argument("--nu", type=float)
    sim.add_argument("--dt", type=float)
    sim.add_argument("--t-end", type=float)
    sim.add_argument("--alpha", type=float, help="constant target-averaging coefficient")
    sim.add_argument("--alpha-ramp", help="a0,a1 linear ramp over the run")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--moments", help="CSV of view pairs (header x1..xm,y1..ym)")
    sim.add_argument("--rho", type=float)
    sim.add_argument("--tau", type=float)
    sim.add_argument("--delta", type=float)
    sim.add_argument("--stride", type=int)
    sim.add_argument("--scheme", choices=["rk4", "euler"])
    sim.add_argument("--out", help="trajectory CSV path")
    sim.add_argument("--manifest", help="also write a run manifest JSON")

    eq = sub.add_parser("equilibria", help="equilibrium set for scalar data")
    eq.add_argument("--config", help="TOML config file; flags override its values")
    eq.add_argument("--rho", type=float)
    eq.add_argument("--tau", type=float)
    eq.add_argument("--lambda", dest="lam", type=float)
    eq.add_argument("--json", dest="json_out", help="write JSON here instead of stdout")

    st = sub.add_parser("stability", help="linearized spectrum at an equilibrium")
    st.add_argument("--config", help="TOML config file; flags override its values")
    st.add_argument("--rho", type=float)
    st.add_argument("--tau", type=float)
    st.add_argument("--lambda", dest="lam", type=float)
    st.add_argument("--radius", choices=["origin", "inner", "outer"])
    st.add_argument("--alpha", type=float)
    st.add_argument("--algo", choices=["sg", "ema"])
    st.add_argument("--n", type=int)
    st.add_argument("--dt", type=float)
    st.add_argument("--probe", help="size,t — also run an empirical perturbation probe")
    st.add_argument("--out", help="write the report JSON here instead of stdout")

    mc = sub.add_parser("montecarlo", help="paired SG/EMA convergence statistics")
    mc.add_argument("--config", help="TOML config file; flags override its values")
    mc.add_argument("--trials", type=int)
    mc.add_argument("--steps", type=int)
    mc.add_argument("--scheme", choices=["rk4", "euler"])
    mc.add_argument("--dt", type=float)
    mc.add_argument("--n", type=int)
    mc.add_argument("--seed", type=int)
    mc.add_argument("--rho-range", help="lo,hi")
    mc.add_argument("--tau-range", help="lo,hi")
    mc.add_argument("--lambda-range", help="lo,hi")
    mc.add_argument("--alpha", type=float, help="constant alpha")
    mc.add_argument("--alpha-ramp", help="a0,a1 linear ramp")
    mc.add_argument("--workers", type=int)
    mc.add_argument("--out", help="stats JSON path")

    sub.add_parser("verify", help="run the built-in invariant suite")
    return parser


def _load_config(path) -> dict:
    if not path:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _resolve(args, config: dict, key: str, default):
    """Precedence: CLI flag > config file > default."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    if key in config:
        return config[key]
    return default


def _pair(text, what) -> tuple[float, float]:
    if isinstance(text, (list, tuple)):
        vals = [float(v) for v in text]
    else:
        vals = [float(v) for v in str(text).split(",")]
    if len(vals) != 2:
        raise UsageError(f"{what} expects two comma-separated values, got {text!r}")
    return vals[0], vals[1]


def _alpha_schedule(args, config):
    ramp = _resolve(args, config, "alpha_ramp", None)
    const = _resolve(args, config, "alpha", None)
    if ramp is not None and const is not None:
        raise UsageError("give either --alpha or --alpha-ramp, not both")
    if ramp is not None:
        a0, a1 = _pair(ramp, "--alpha-ramp")
        return LinearRampAlpha(a0, a1)
    if const is not None:
        return ConstantAlpha(float(const))
    return None


def _cmd_simulate(args) -> int:
    config = _load_config(args.config)
    algo = AlgoKind(_resolve(args, config, "algo", "sg"))
    n = int(_resolve(args, config, "n", 2))
    m = int(_resolve(args, config, "m", 1))
    lam = float(_resolve(args, config, "lam", config.get("lambda", 0.1)))
    mu = float(_resolve(args, config, "mu", 0.1))
    nu = float(_resolve(args, config, "nu", 0.1))
    dt = float(_resolve(args, config, "dt", 0.05))
    t_end = float(_resolve(args, config, "t_end", 300.0))
    seed = int(_resolve(args, config, "seed", 0))
    stride = int(_resolve(args, config, "stride", 1))
    scheme = _resolve(args, config, "scheme", "rk4")
    out = _resolve(args, config, "out", None)
    if out is None:
        raise UsageError("simulate requires --out")
    alpha = _alpha_schedule(args, config) or ConstantAlpha(0.9)

    moments_file = _resolve(args, config, "moments", None)
    rho = _resolve(args, config, "rho", None)
    tau = _resolve(args, config, "tau", None)
    delta = _resolve(args, config, "delta", None)
    if moments_file is not None:
        mom = load_sample_pairs_csv(moments_file)
        if mom.m != m:
            raise UsageError(f"moments file has m={mom.m}, flags say m={m}")
    elif rho is not None and tau is not None:
        if m != 1:
            raise UsageError("--rho/--tau imply m=1; use --moments for m>1")
        if delta is None:
            # minimum-variance realizable completion: y = (tau/rho) x
            delta = tau * tau / rho if rho > 0 else 0.0
        mom = DataMoments.from_scalars(float(rho), float(tau), float(delta))
    else:
        raise UsageError("simulate needs --moments FILE or --rho and --tau")

    hyper = HyperParams(lam=lam, mu=mu, nu=nu, alpha=alpha, dt=dt)
    state0 = random_state(Dims(n, m), seed)
    traj = integrate_flow(algo, state0, mom, hyper, t_end, stride=stride, scheme=scheme)
    write_trajectory_csv(traj, out)

    manifest_path = _resolve(args, config, "manifest", None)
    if manifest_path:
        manifest = {
            "tool": "ssldyn",
            "version": __version__,
            "command": "simulate",
            "parameters": {
                "algo": algo.value,
                "n": n,
                "m": m,
                "lambda": lam,
                "mu": mu,
                "nu": nu,
                "dt": dt,
                "t_end": t_end,
                "stride": stride,
                "scheme": scheme,
                "alpha": dataclasses.asdict(alpha),
                "moments": {
                    "source": moments_file or "scalars",
                    "rho": None if rho is None else float(rho),
                    "tau": None if tau is None else float(tau),
                    "delta": None if delta is None else float(delta),
                },
                "out": str(out),
            },
            "seed": seed,
        }
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    if traj.diverged:
        print("error: trajectory diverged", file=sys.stderr)
        return 2
    return 0


def _cmd_equilibria(args) -> int:
    config = _load_config(args.config)
    rho = _resolve(args, config, "rho", None)
    tau = _resolve(args, config, "tau", None)
    lam = _resolve(args, config, "lam", config.get("lambda"))
    if rho is None or tau is None or lam is None:
        raise UsageError("equilibria needs --rho, --tau and --lambda")
    eqset = solve_equilibria(ScalarMoments(float(rho), float(tau), float(lam)))
    text = json.dumps(eqset.to_json_dict(), indent=2) + "\n"
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_stability(args) -> int:
    config = _load_config(args.config)
    rho = float(_resolve(args, config, "rho", 3.0))
    tau = float(_resolve(args, config, "tau", 2.0))
    lam = float(_resolve(args, config, "lam", config.get("lambda", 0.1)))
    radius_kind = _resolve(args, config, "radius", "outer")
    alpha = float(_resolve(args, config, "alpha", 0.9))
    algo = AlgoKind(_resolve(args, config, "algo", "ema"))
    n = int(_resolve(args, config, "n", 2))
    dt = float(_resolve(args, config, "dt", 0.05))

    eqset = solve_equilibria(ScalarMoments(rho, tau, lam))
    if radius_kind == "origin":
        radius = 0.0
    else:
        if len(eqset.radii) != 2:
            raise UsageError(
                f"no circle equilibria for rho={rho}, tau={tau}, lambda={lam} "
                f"(discriminant {eqset.discriminant:.6g})"
            )
        radius = eqset.radii[0] if radius_kind == "inner" else eqset.radii[1]
    direction = np.zeros(n)
    direction[0] = 1.0
    eq = materialize_equilibrium(eqset, radius, direction)
    mom = DataMoments.from_scalars(rho, tau)
    hyper = HyperParams(lam=lam, alpha=ConstantAlpha(alpha), dt=dt)
    report = linearize(algo, eq, mom, hyper)

    probe = _resolve(args, config, "probe", None)
    if probe is not None:
        size, t_probe = _pair(probe, "--probe")
        dist = empirical_stability_probe(algo, eq, mom, hyper, size, t_probe)
        report = dataclasses.replace(
            report, empirical_decay=EmpiricalDecay(size, t_probe, dist)
        )
    text = json.dumps(report.to_json_dict(), indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_montecarlo(args) -> int:
    config = _load_config(args.config)
    trials = _resolve(args, config, "trials", None)
    if trials is None:
        raise UsageError("montecarlo requires --trials")
    defaults = TrialConfig(trials=0)
    alpha = _alpha_schedule(args, config) or defaults.alpha
    cfg = TrialConfig(
        trials=int(trials),
        steps=int(_resolve(args, config, "steps", defaults.steps)),
        scheme=_resolve(args, config, "scheme", defaults.scheme),
        dt=float(_resolve(args, config, "dt", defaults.dt)),
        n=int(_resolve(args, config, "n", defaults.n)),
        rho_range=_pair(_resolve(args, config, "rho_range", defaults.rho_range), "--rho-range"),
        tau_range=_pair(_resolve(args, config, "tau_range", defaults.tau_range), "--tau-range"),
        lambda_range=_pair(
            _resolve(args, config, "lambda_range", defaults.lambda_range), "--lambda-range"
        ),
        alpha=alpha,
        seed=int(_resolve(args, config, "seed", defaults.seed)),
        workers=int(_resolve(args, config, "workers", defaults.workers)),
    )
    stats = run_monte_carlo(cfg)
    text = stats.to_json()
    out = _resolve(args, config, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "equilibria":
            return _cmd_equilibria(args)
        if args.command == "stability":
            return _cmd_stability(args)
        if args.command == "montecarlo":
            return _cmd_montecarlo(args)
        if args.command == "verify":
            failures = run_verification()
            return 3 if failures else 0
        parser.error(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except FloatingPointError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
