"""Command-line entry points.

Exit status: 0 on success, 1 on task failure or bad input data, 2 on usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .contact_analysis import HysteresisParams, analyze_contacts, filter_demo_outliers, write_timeline_csv
from .errors import ContactLfdError
from .formats import load_demo, load_policy, load_scene, read_json, save_demo, save_policy, save_scene, save_truth
from .generator import ScenarioSpec, generate_demo

BUILTIN = "builtin:"


def _spec(arg: str) -> ScenarioSpec:
    from . import scenarios
    if arg.startswith(BUILTIN):
        name = arg[len(BUILTIN):]
        if name == "dishwash":
            return scenarios.dishwash_spec()
        if name == "wrist-flip":
            return scenarios.wrist_flip_spec()
        if name.startswith("random:"):
            return scenarios.random_spec(int(name.split(":", 1)[1]))
        raise ContactLfdError(f"unknown built-in scenario {name!r} (dishwash, wrist-flip, random:<seed>)")
    return ScenarioSpec.from_dict(read_json(arg))


def _chain(arg: str):
    from .motion_planning import KinematicChain, load_bundled_chain
    if arg.startswith(BUILTIN):
        return load_bundled_chain(arg[len(BUILTIN):])
    return KinematicChain.load(arg)


def _exec_params(args):
    from .execution_sim import ExecParams
    return ExecParams(seed=args.seed, continue_on_error=args.continue_on_error,
                      use_alternatives=not args.no_alternatives, estimate_poses=args.estimate_poses)


def cmd_gen_demo(args) -> int:
    spec = _spec(args.spec)
    demo, truth = generate_demo(spec)
    save_demo(demo, args.out)
    save_truth(truth, os.path.join(args.out, "truth.json"))
    if args.save_spec:
        with open(args.save_spec, "w") as fh:
            json.dump(spec.to_dict(), fh, indent=1, sort_keys=True)
    print(f"wrote {len(demo.frames)} frames of {', '.join(demo.objects)} to {args.out}")
    return 0


def cmd_gen_scene(args) -> int:
    from . import scenarios
    if args.name == "dishwash":
        scene = scenarios.dishwash_scene(args.displacement, args.swap_bowl, args.seed, tuple(args.remove),
                                         args.tight_sink, args.home)
    else:
        scene = scenarios.wrist_flip_scene(args.seed)
    save_scene(scene, args.out)
    return 0


def cmd_segment(args) -> int:
    from .pipeline import primitives_summary
    from .primitive_learning import segment_primitives
    demo = filter_demo_outliers(load_demo(args.demo))
    contacts = analyze_contacts(demo, HysteresisParams(args.d_make, args.d_break))
    prims = segment_primitives(contacts.hand)
    os.makedirs(args.out_dir, exist_ok=True)
    write_timeline_csv(os.path.join(args.out_dir, "timeline.csv"), contacts)
    with open(os.path.join(args.out_dir, "primitives.json"), "w") as fh:
        json.dump(primitives_summary(prims), fh, indent=1)
        fh.write("\n")
    for p in prims:
        print(f"{p.kind.value:16s} {p.target:10s} frames {p.span[0]}-{p.span[1]}")
    return 0


def cmd_learn(args) -> int:
    from .pipeline import LearnParams, learn_from_demo
    params = LearnParams(hysteresis=HysteresisParams(args.d_make, args.d_break))
    res = learn_from_demo(load_demo(args.demo), params)
    save_policy(res.policy, args.policy_out)
    print(f"learned {len(res.policy.primitives)} primitives -> {args.policy_out}")
    return 0


def _run(args):
    from .execution_sim import build_world, execute_policy
    policy = load_policy(args.policy)
    scene = load_scene(args.scene)
    chain = _chain(args.chain)
    world = build_world(scene, chain, policy)
    _, result = execute_policy(policy, world, chain, _exec_params(args))
    return scene, result


def cmd_plan(args) -> int:
    args.continue_on_error = True
    _, result = _run(args)
    feasible = True
    for p in result.primitives:
        ok = p.outcome.value == "Success"
        feasible &= ok
        extra = "" if ok else f"  ({p.message})"
        print(f"{p.index:3d} {p.kind:16s} {p.target:10s} {'feasible' if ok else p.outcome.value}{extra}")
    return 0 if feasible else 1


def cmd_execute(args) -> int:
    from .report import result_to_dict, save_result, write_execution_csv
    scene, result = _run(args)
    d = result_to_dict(result, scene.get("condition"), args.seed, os.path.basename(args.scene))
    if args.out:
        save_result(d, args.out)
    else:
        json.dump(d, sys.stdout, indent=1, sort_keys=True)
        sys.stdout.write("\n")
    if args.csv:
        write_execution_csv(args.csv, result)
    return 0 if result.success else 1


def cmd_eval(args) -> int:
    from .report import format_table, load_result, success_table
    table = format_table(success_table([load_result(p) for p in args.results]))
    print(table)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(table + "\n")
    return 0


def cmd_plot(args) -> int:
    from .plotting import plot_csv
    kw = {}
    if args.d_make is not None:
        kw["d_make"] = args.d_make
    if args.d_break is not None:
        kw["d_break"] = args.d_break
    if args.pair:
        kw["pairs"] = set(args.pair)
    plot_csv(args.csv, args.svg_out, **kw)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="contactlfd", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-demo", help="generate a synthetic demonstration directory")
    p.add_argument("spec", help="scenario JSON, or builtin:dishwash | builtin:wrist-flip | builtin:random:<seed>")
    p.add_argument("out")
    p.add_argument("--save-spec", metavar="PATH", help="also write the scenario JSON")
    p.set_defaults(func=cmd_gen_demo)

    p = sub.add_parser("gen-scene", help="write an execution scene")
    p.add_argument("name", choices=["dishwash", "wrist-flip"])
    p.add_argument("out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--displacement", type=float, default=0.0)
    p.add_argument("--swap-bowl", action="store_true")
    p.add_argument("--tight-sink", action="store_true")
    p.add_argument("--home", action="store_true", help="second kitchen variant")
    p.add_argument("--remove", nargs="*", default=[], metavar="OBJECT")
    p.set_defaults(func=cmd_gen_scene)

    p = sub.add_parser("segment", help="contact timeline CSV and primitive list JSON")
    p.add_argument("demo")
    p.add_argument("--d-make", type=float, required=True)
    p.add_argument("--d-break", type=float, required=True)
    p.add_argument("-o", "--out-dir", default=".")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("learn", help="learn a policy from a demonstration")
    p.add_argument("demo")
    p.add_argument("policy_out")
    p.add_argument("--d-make", type=float, default=0.005)
    p.add_argument("--d-break", type=float, default=0.010)
    p.set_defaults(func=cmd_learn)

    for name, func, help_ in (("plan", cmd_plan, "dry run: per-primitive feasibility"),
                              ("execute", cmd_execute, "execute a policy in simulation")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("policy")
        p.add_argument("scene")
        p.add_argument("chain", help="robot description JSON, or builtin:franka_like")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--no-alternatives", action="store_true", help="disable alternative object poses")
        p.add_argument("--estimate-poses", action="store_true", help="estimate object poses by ICP before each primitive")
        if name == "execute":
            p.add_argument("--continue-on-error", action="store_true")
            p.add_argument("-o", "--out", help="result JSON (default: stdout)")
            p.add_argument("--csv", help="joint and object pose time series")
        p.set_defaults(func=func)

    p = sub.add_parser("eval", help="success-rate table over result files")
    p.add_argument("results", nargs="+")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="SVG from a timeline or execution CSV")
    p.add_argument("csv")
    p.add_argument("svg_out")
    p.add_argument("--d-make", type=float)
    p.add_argument("--d-break", type=float)
    p.add_argument("--pair", action="append", help="a-b pair to include (repeatable)")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ContactLfdError, ValueError) as exc:
        print(f"contactlfd {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
