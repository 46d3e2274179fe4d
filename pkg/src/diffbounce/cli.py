"""Command-line front end.

Subcommands:
    simulate   roll out a scenario's initial controls and dump the state table
    optimize   learn a control sequence by gradient descent
    ablate     run the 2x2 TOI-Position / TOI-Velocity grid
    gradcheck  adjoint-vs-finite-difference probes and the continuity sweep

Exit codes: 0 success, 2 configuration error, 3 simulation degeneracy,
4 non-finite optimization.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, DegeneracyError, DiffBounceError, NonFiniteError
from .experiments import (
    ExperimentSpec,
    run_ablation,
    run_gradcheck,
    run_optimize,
    run_simulate,
)
from .objective import ObjectiveConfig, OptimizerConfig
from .scenarios import analytical_loss_for
from .sim import MODEL_DIRECT, ContactConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGENERACY = 3
EXIT_NONFINITE = 4


def _onoff(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _add_common(parser: argparse.ArgumentParser, toi_flags: bool = True):
    parser.add_argument("--scenario", default="single",
                        help="built-in name (single, multi) or a scenario config file")
    parser.add_argument("--model", default=MODEL_DIRECT,
                        choices=["direct", "compliant", "pbd"])
    if toi_flags:
        parser.add_argument("--toi-position", type=_onoff, default=None,
                            metavar="on|off",
                            help="TOI position replay (default: on for direct)")
        parser.add_argument("--toi-velocity", type=_onoff, default=None,
                            metavar="on|off",
                            help="TOI velocity/normal rewind (default: on for direct)")
    parser.add_argument("--out", type=Path, default=None, metavar="DIR",
                        help="output directory (default: runs/<subcommand>_<scenario>)")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for finite-difference probe selection")


def _add_optimizer(parser: argparse.ArgumentParser):
    parser.add_argument("--lr", type=float, default=None,
                        help="learning rate (default: frozen repo config)")
    parser.add_argument("--iters", type=int, default=None,
                        help="iteration budget (default: frozen repo config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffbounce",
        description="Differentiable two-ball contact simulation and optimal control.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_sim = sub.add_parser("simulate", help="roll out the initial controls")
    _add_common(p_sim)

    p_opt = sub.add_parser("optimize", help="learn controls by gradient descent")
    _add_common(p_opt)
    _add_optimizer(p_opt)

    p_abl = sub.add_parser("ablate", help="run the 2x2 TOI flag grid")
    _add_common(p_abl, toi_flags=False)
    _add_optimizer(p_abl)

    p_gc = sub.add_parser("gradcheck", help="gradient probes and continuity sweep")
    _add_common(p_gc)
    p_gc.add_argument("--probes", type=int, default=20,
                      help="number of sampled control entries")
    return parser


def _contact_from_args(args) -> ContactConfig:
    tp = getattr(args, "toi_position", None)
    tv = getattr(args, "toi_velocity", None)
    if args.model == MODEL_DIRECT:
        tp = True if tp is None else tp
        tv = True if tv is None else tv
    else:
        if tp or tv:
            raise ConfigError("TOI flags are only meaningful for the direct impulse model")
        tp = tv = False
    return ContactConfig(model=args.model, toi_position=tp, toi_velocity=tv)


def _spec_from_args(args) -> ExperimentSpec:
    opt_kwargs = {}
    if getattr(args, "lr", None) is not None:
        opt_kwargs["learning_rate"] = args.lr
    if getattr(args, "iters", None) is not None:
        opt_kwargs["iterations"] = args.iters
    scenario_tag = Path(str(args.scenario)).stem
    out_dir = args.out if args.out is not None else Path("runs") / f"{args.subcommand}_{scenario_tag}"
    return ExperimentSpec(
        scenario=args.scenario,
        contact=_contact_from_args(args),
        objective=ObjectiveConfig(),
        optimizer=OptimizerConfig(**opt_kwargs),
        out_dir=out_dir,
        seed=args.seed,
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = _spec_from_args(args)
        if args.subcommand == "simulate":
            bundle = run_simulate(spec)
            events = ", ".join(f"{e.pair}@t={e.time:.4f}" for e in bundle.trajectory.events)
            print(f"simulated {bundle.scenario.steps} steps; "
                  f"events: {events or 'none'}")
        elif args.subcommand == "optimize":
            bundle = run_optimize(spec)
            res = bundle.result
            target = analytical_loss_for(bundle.scenario)
            line = (f"best loss {res.loss:.6f} at iteration {res.iteration} "
                    f"(final {res.final_loss:.6f})")
            if target is not None:
                line += f"; analytical optimum {target}"
            print(line)
        elif args.subcommand == "ablate":
            bundle = run_ablation(spec)
            for row in bundle.ablation:
                tag = f"toi_position={row['toi_position']} toi_velocity={row['toi_velocity']}"
                if row["status"] == "ok":
                    print(f"{tag}: final loss {row['final_loss']:.6f} "
                          f"(best at iteration {row['best_iteration']})")
                else:
                    print(f"{tag}: {row['status']}")
        else:
            bundle = run_gradcheck(spec, n_probes=args.probes)
            r = bundle.metadata.results
            print(f"contact probes: max rel error {r['max_rel_error_contact']:.3e} "
                  f"({r['flagged_probes']} flagged)")
            print(f"no-contact probes: max rel error {r['max_rel_error_nocontact']:.3e}")
            print(f"continuity: off jump {r['off_jump_coarse']:.3e}, "
                  f"on max adjacent {r['on_max_adjacent_coarse']:.3e} (coarse) / "
                  f"{r['on_max_adjacent_fine']:.3e} (fine)")
        print(f"outputs written to {bundle.out_dir}")
        return EXIT_OK
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DegeneracyError as err:
        where = f" at step {err.step_index}" if err.step_index is not None else ""
        print(f"simulation degeneracy{where}: {err}", file=sys.stderr)
        return EXIT_DEGENERACY
    except NonFiniteError as err:
        print(f"optimization aborted: {err}", file=sys.stderr)
        return EXIT_NONFINITE
    except DiffBounceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
