"""Command line interface.

Subcommands:
  run             execute a batch of trials and write artifacts
  validate-world  check a world file and print its inventory
  eig-check       compare the consistency surrogate against exact information
                  gain for every simulatable query in a world
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import CuriositreeError
from .harness import (
    build_manifest,
    compute_metrics,
    load_run_config,
    parse_env_spec,
    run_batch,
    write_artifacts,
)
from .policies import ALL_POLICY_SPECS, parse_policy
from .tabular import (
    Posterior,
    exact_eig,
    expected_surrogate_eig,
    is_deterministic_partition,
    load_world,
)

BRIDGE_TOL = 1e-9


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_run_config(args.config)
    envspec = parse_env_spec(args.env, config)
    specs = ALL_POLICY_SPECS if args.policy == "all" else (args.policy,)
    kinds = [parse_policy(s) for s in specs]

    records = run_batch(config, kinds, envspec, args.trials, args.seed, args.ground_truth)
    summaries = compute_metrics(records)
    manifest = build_manifest(config, kinds, envspec, args.trials, args.seed, args.ground_truth)
    write_artifacts(args.out, records, summaries, manifest)

    print(f"wrote {len(records)} transcripts and summaries to {args.out}")
    header = f"{'policy':<20} {'n':>5} {'tsr':>7} {'coverage':>9} {'ssr':>7} {'mean$ok':>8}"
    print(header)
    for s in summaries:
        ssr = "-" if s.selective_success_rate is None else f"{s.selective_success_rate:.3f}"
        mean_ok = "-" if s.success_cost is None else f"{s.success_cost.mean:.2f}"
        print(
            f"{s.policy:<20} {s.n:>5} {s.total_success_rate:>7.3f} "
            f"{s.coverage:>9.3f} {ssr:>7} {mean_ok:>8}"
        )
    return 0


def _cmd_validate_world(args: argparse.Namespace) -> int:
    world = load_world(args.world)
    print(f"{args.world}: OK")
    print(f"  diseases: {len(world.diseases)}")
    by_class: dict[str, int] = {}
    for query in world.queries.values():
        by_class[query.cls.value] = by_class.get(query.cls.value, 0) + 1
    for name, count in sorted(by_class.items()):
        print(f"  {name} queries: {count}")
    print(f"  synonym entries: {len(world.synonyms)}")
    return 0


def _cmd_eig_check(args: argparse.Namespace) -> int:
    world = load_world(args.world)
    n = len(world.diseases)
    uniform = Posterior(tuple(1.0 / n for _ in range(n)))
    dist = uniform.top_k(world, n)

    print(f"{'query':<28} {'class':<10} {'exact':>10} {'surrogate':>10} {'delta':>10} det")
    failures = 0
    checked = 0
    for query in world.queries.values():
        if not query.responses or not query.likelihoods:
            continue
        checked += 1
        exact = exact_eig(uniform, world, query.id)
        surrogate = expected_surrogate_eig(dist, world, query.id)
        delta = abs(exact - surrogate)
        deterministic = is_deterministic_partition(world, query.id)
        flag = "yes" if deterministic else "no"
        print(
            f"{query.id:<28} {query.cls.value:<10} {exact:>10.6f} "
            f"{surrogate:>10.6f} {delta:>10.2e} {flag}"
        )
        if deterministic and delta > BRIDGE_TOL:
            failures += 1
    if checked == 0:
        print("no simulatable queries in world")
        return 1
    if failures:
        print(f"FAIL: {failures} deterministic partition queries exceed {BRIDGE_TOL}")
        return 1
    print(f"OK: surrogate matches exact gain within {BRIDGE_TOL} on deterministic partitions")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curiositree",
        description="Budgeted information acquisition with selective prediction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a batch of trials and write artifacts")
    run.add_argument("--config", default=None, help="JSON config file (defaults apply if omitted)")
    run.add_argument(
        "--policy",
        default="curiositree",
        choices=ALL_POLICY_SPECS + ("all",),
        help="policy to evaluate, or 'all' for every policy",
    )
    run.add_argument(
        "--env", required=True, help="'tabular:<world-file>' or 'live'"
    )
    run.add_argument("--trials", type=int, required=True, help="trials per policy")
    run.add_argument("--seed", type=int, default=0, help="base seed; trials use seed..seed+n-1")
    run.add_argument("--out", required=True, help="output directory for artifacts")
    run.add_argument(
        "--ground-truth",
        default=None,
        help="fix the hidden diagnosis (required for live mode; tabular draws from the prior)",
    )
    run.set_defaults(func=_cmd_run)

    validate = sub.add_parser("validate-world", help="validate a world file")
    validate.add_argument("world", help="world JSON file")
    validate.set_defaults(func=_cmd_validate_world)

    check = sub.add_parser(
        "eig-check", help="compare surrogate and exact information gain on a world"
    )
    check.add_argument("world", help="world JSON file")
    check.set_defaults(func=_cmd_eig_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CuriositreeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
