"""Command line front end for the experiment harness.

Subcommands:

* ``run``      -- Monte Carlo trials for one experiment config or preset.
* ``sweep``    -- (s, m) grid sweep emitting per-estimator probability matrices.
* ``verify-t3`` -- certificate construction check over random draws.
* ``localize`` -- localize frequencies of a saved signal via the dual program.
* ``presets``  -- list the bundled experiment presets or dump one as JSON.

Exit codes: 0 on success, 2 on configuration errors, 3 when trials hit
solver failures (results are still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .conic import SolveOptions, SolverFailure
from .estimators import localize, recover
from .harness import (
    PRESETS,
    ConfigError,
    ExperimentConfig,
    preset_config,
    run_experiment,
    sweep_phase_transition,
    verify_theorem3,
)
from .signal import Band, Block, KnownPoles, NoPrior, Probabilistic, load_signal
from .trigpoly import eval_dual_grid

__all__ = ["main"]


def _load_config(args) -> ExperimentConfig:
    overrides = {
        "seed": args.seed,
        "trials": args.trials,
    }
    if args.preset:
        return preset_config(args.preset, **overrides)
    cfg = ExperimentConfig.from_json(args.config)
    data = json.loads(cfg.to_json())
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_json(data)


def _default_out(args) -> Path:
    if args.out:
        return Path(args.out)
    name = args.preset or Path(args.config).stem
    return Path("results") / name


def _cmd_run(args) -> int:
    config = _load_config(args)
    result = run_experiment(config, _default_out(args), jobs=args.jobs)
    for cell in result.summary["cells"]:
        print(
            f"{cell['estimator']} s={cell['s']} m={cell['m']} p={cell['p']}: "
            f"{cell['successes']}/{cell['trials']} complete "
            f"(P={cell['probability']:.3f}, mean k={cell['mean_k']:.2f})"
        )
    print(f"wrote {result.out_dir}/trials.csv")
    return 3 if result.had_failures else 0


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    out_dir = _default_out(args)
    result, matrices = sweep_phase_transition(config, out_dir, jobs=args.jobs)
    for label, mat in matrices.items():
        print(f"{label}: matrix {mat.shape[0]}x{mat.shape[1]} -> "
              f"{out_dir}/matrix_{label}.csv")
    return 3 if result.had_failures else 0


def _cmd_verify_t3(args) -> int:
    s_values = list(range(args.s_min, args.s_max + 1))
    report = verify_theorem3(
        s_values,
        trials=args.trials,
        n=args.n,
        halfwidth=args.halfwidth,
        seed=args.seed,
        contiguous=args.contiguous,
        out_dir=args.out,
    )
    for row in report["per_s"]:
        print(
            f"s={row['s']} m={row['m']}: nonsingular {row['nonsingular']}/{row['trials']}"
            f" ({row['nonsingular_fraction']:.1%}), max interp residual"
            f" {row['max_interp_residual_tame']:.2e} at condition <= 1e10,"
            f" median condition {row['median_condition']:.2e}"
        )
    if args.out:
        print(f"wrote {Path(args.out)}/t3_trials.csv")
    return 0


def _prior_from_json(path: str):
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read prior: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"prior is not valid JSON: {e}") from e
    if not isinstance(data, dict) or "type" not in data:
        raise ConfigError('prior JSON must be an object with a "type" key')
    kind = data["type"]
    known = {"none", "probabilistic", "block", "known_poles"}
    if kind not in known:
        raise ConfigError(f"unknown prior type {kind!r}; expected one of {sorted(known)}")
    extra = set(data) - {"type", "bands", "weights", "freqs"}
    if extra:
        raise ConfigError(f"unknown prior keys: {sorted(extra)}")
    try:
        if kind == "none":
            return NoPrior()
        if kind == "probabilistic":
            bands = tuple(Band(lo, hi) for lo, hi in data["bands"])
            return Probabilistic(bands, tuple(data["weights"]))
        if kind == "block":
            bands = tuple(Band(lo, hi) for lo, hi in data["bands"])
            return Block(bands)
        return KnownPoles(tuple(data["freqs"]))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad {kind} prior: {e}") from e


def _threshold_at(prior, f: np.ndarray) -> np.ndarray:
    if isinstance(prior, Probabilistic):
        return np.asarray(prior.weight_at(f), dtype=float)
    if isinstance(prior, Block):
        return np.where(prior.covers(f), 1.0, np.inf)
    return np.ones_like(f)


def _cmd_localize(args) -> int:
    try:
        _, obs = load_signal(args.input)
    except OSError as e:
        raise ConfigError(f"cannot read signal: {e}") from e
    except ValueError as e:
        raise ConfigError(f"bad signal file: {e}") from e
    prior = _prior_from_json(args.prior) if args.prior else None
    opts = None
    if args.eps:
        opts = SolveOptions(eps_abs=args.eps, eps_rel=args.eps)
    est = recover(obs, prior, opts)
    if est.spectrum is None:
        print("no frequencies localized")
    else:
        print("f |c|")
        for f, c in zip(est.spectrum.frequencies, est.spectrum.coefficients):
            print(f"{f:.9f} {abs(c):.9f}")
    if args.out:
        if est.dual is None:
            # every pole known: the completion step leaves no dual program
            print("no dual polynomial for this prior; skipping CSV")
        else:
            fgrid = np.arange(args.grid) / args.grid
            absq = np.abs(eval_dual_grid(est.dual.q_array(), args.grid))
            gen_prior = prior
            thr = _threshold_at(gen_prior, fgrid)
            out = Path(args.out)
            out.parent.mkdir(parents=True, exist_ok=True)
            with open(out, "w", newline="", encoding="ascii") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["f", "absQ", "threshold"])
                for g in range(args.grid):
                    writer.writerow([
                        format(fgrid[g], ".17g"),
                        format(absq[g], ".17g"),
                        format(thr[g], ".17g"),
                    ])
            print(f"wrote {out}")
    return 0


def _cmd_presets(args) -> int:
    if args.name:
        cfg = preset_config(args.name)
        print(cfg.to_json())
        return 0
    width = max(len(k) for k in PRESETS)
    for name in sorted(PRESETS):
        p = PRESETS[name]
        cells = []
        cells.append(f"n={p['n']}")
        if p.get("s"):
            cells.append(f"s={p['s']}")
        if p.get("s_values"):
            cells.append(f"s in {list(p['s_values'])}")
        if p.get("m"):
            cells.append(f"m={p['m']}")
        if p.get("m_values"):
            cells.append(f"m in {list(p['m_values'])}")
        cells.append(f"trials={p['trials']}")
        cells.append(",".join(p["estimators"]))
        print(f"{name:<{width}}  {' '.join(cells)}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specprior",
        description="Line spectral estimation with frequency priors: "
        "experiment runner and localization tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="experiment config JSON file")
        src.add_argument("--preset", help="bundled preset name (see `specprior presets`)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--trials", type=int, help="override the trial count")
        p.add_argument("--jobs", type=int, default=1, help="worker threads (default 1)")
        p.add_argument("--out", help="output directory (default results/<name>)")

    p_run = sub.add_parser("run", help="run Monte Carlo trials of one experiment")
    add_config_args(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run an (s, m) grid and emit probability matrices")
    add_config_args(p_sweep)
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_t3 = sub.add_parser("verify-t3", help="check the 3s-sample certificate construction")
    p_t3.add_argument("--s-min", type=int, default=2)
    p_t3.add_argument("--s-max", type=int, default=8)
    p_t3.add_argument("--trials", type=int, default=200)
    p_t3.add_argument("--n", type=int, default=256, help="ambient window length")
    p_t3.add_argument("--halfwidth", type=float, default=0.001)
    p_t3.add_argument("--contiguous", action="store_true",
                      help="use sample indices 0..3s-1 instead of a random subset")
    p_t3.add_argument("--seed", type=int, default=0)
    p_t3.add_argument("--out", help="directory for t3_trials.csv / t3_summary.json")
    p_t3.set_defaults(fn=_cmd_verify_t3)

    p_loc = sub.add_parser("localize", help="recover frequencies from a saved signal")
    p_loc.add_argument("--input", required=True, help="signal text file")
    p_loc.add_argument("--prior", help="prior JSON file (type/bands/weights/freqs)")
    p_loc.add_argument("--out", help="write the dual polynomial as f,absQ,threshold CSV")
    p_loc.add_argument("--grid", type=int, default=4096, help="CSV grid size")
    p_loc.add_argument("--eps", type=float, help="solver tolerance (default 1e-7)")
    p_loc.set_defaults(fn=_cmd_localize)

    p_pre = sub.add_parser("presets", help="list presets or dump one as JSON")
    p_pre.add_argument("name", nargs="?", help="preset to print as config JSON")
    p_pre.set_defaults(fn=_cmd_presets)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SolverFailure as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
