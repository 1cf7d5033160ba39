"""Command-line entry point: ``ponas-pool {partition,run,validate}``.

Exit codes: 0 ok, 2 configuration error, 3 runtime error, 4 an artifact
invariant failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import random
import sys
from collections import defaultdict
from pathlib import Path

from .chain import GENESIS_DIGEST, Block, commitment_digest
from .config import ConfigError, load_config, parse_space, scenario_from_config
from .oracle import derive_seed
from .sim import InvalidScenario, Scenario, run
from .space import Configuration, SpaceError, partition, subspace_table

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_INVALID = 0, 2, 3, 4

INVARIANTS = ("monotone best curves", "commitment audit", "share conservation", "chain linkage")

log = logging.getLogger("ponas_pool")


class ArtifactError(Exception):
    """An artifact invariant does not hold; ``invariant`` names which."""

    def __init__(self, invariant: str, detail: str) -> None:
        super().__init__(f"{invariant}: {detail}")
        self.invariant = invariant
        self.detail = detail


def _seed(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ponas-pool", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default="WARNING",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="partition a search space among miners")
    p.add_argument("--config", type=Path, help="experiment config (default: the fixture space)")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--miners", type=int, default=9)
    p.add_argument("--out", type=Path, help="output file (default: stdout)")

    p = sub.add_parser("run", help="run a scenario and write its artifacts")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--workers", type=int, default=1,
                   help="threads for episode computation; artifacts do not depend on it")

    p = sub.add_parser("validate", help="re-check the invariants of a run's artifacts")
    p.add_argument("--out-dir", type=Path, required=True)
    return parser


def cmd_partition(args) -> int:
    try:
        cfg = load_config(args.config) if args.config else {}
        space = parse_space(cfg.get("space"))
        if args.miners < 1:
            raise ConfigError("--miners must be >= 1")
        seed = Scenario([], args.seed, seeds=cfg.get("seeds") or {}).seed_for("partition")
        subs = partition(space, args.miners, random.Random(derive_seed(seed, 0)))
    except (ConfigError, SpaceError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    table = subspace_table(space, subs)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(table)
    else:
        sys.stdout.write(table)
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        scenario = scenario_from_config(load_config(args.config), args.seed)
        scenario.validate()
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
    except (ConfigError, InvalidScenario) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        art = run(scenario, workers=args.workers)
        art.write(args.out_dir)
    except Exception as exc:  # noqa: BLE001 - any failure inside the run maps to exit 3
        log.exception("run failed")
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    s = art.summary
    print(f"best_global {s['best_global']:.6f}" if s["best_global"] is not None else "best_global none")
    print(f"winner {s['winner'] or 'none'} (height {s['height']} of {s['intervals']} intervals)")
    print(f"{'block':>5}  {'recipient':<14} {'amount':>12} {'fraction':>9}")
    reward = {b["height"]: b["block_reward"] for b in art.blocks}
    for height, rid, amount in art.shares:
        print(f"{height:>5}  {rid:<14} {amount:>12.6f} {amount / reward[height]:>9.4%}")
    return EXIT_OK


# -- offline artifact checks ----------------------------------------------

def _read_csv(path: Path) -> list[dict]:
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def _load_blocks(path: Path) -> tuple[list[dict], str | None]:
    blocks = []
    for n, line in enumerate(path.read_text().splitlines(), start=1):
        try:
            blocks.append(json.loads(line))
        except json.JSONDecodeError:
            return blocks, f"line {n} of {path.name} is not a complete record"
    return blocks, None


def check_monotone(episodes: list[dict], summary: dict) -> None:
    last: dict[tuple, float] = {}
    for row in episodes:
        key = (row["block"], row["search"], row["miner"] if row["search"] == "exploit" else "")
        best = float(row["best_so_far"])
        if best < last.get(key, -math.inf):
            raise ArtifactError("monotone best curves",
                                f"block {row['block']} {row['search']} drops to {best} "
                                f"at episode {row['episode']}")
        last[key] = best
    for block, curve in summary.get("best_curves", {}).items():
        for i, (a, b) in enumerate(zip(curve, curve[1:]), start=2):
            if b < a:
                raise ArtifactError("monotone best curves", f"pool curve of block {block} dips at {i}")


def check_commitments(blocks: list[dict], summary: dict) -> None:
    ticks = summary["block_ticks"]
    episodes = summary["episodes"]
    for b in blocks:
        config = Configuration(b["config"])
        digest = commitment_digest(config, b["claim"], b["winner"]).hex()
        if digest != b["commit_digest"]:
            raise ArtifactError("commitment audit", f"block {b['height']} digest does not match reveal")
        t0 = (b["interval"] - 1) * ticks
        if b["commit_phase"] != "Training" or not t0 < b["commit_tick"] <= t0 + episodes:
            raise ArtifactError("commitment audit",
                                f"block {b['height']} committed at tick {b['commit_tick']} "
                                f"({b['commit_phase']}), outside Training")
        if b["validated"] < b["claim"]:
            raise ArtifactError("commitment audit", f"block {b['height']} validated below its claim")


def check_shares(shares: list[dict], blocks: list[dict]) -> None:
    reward = {b["height"]: b["block_reward"] for b in blocks}
    totals: dict[int, float] = defaultdict(float)
    for row in shares:
        amount = float(row["amount"])
        if amount < 0:
            raise ArtifactError("share conservation", f"negative share for {row['recipient']}")
        totals[int(row["block"])] += amount
    for height, total in totals.items():
        if height not in reward:
            continue  # a missing block is reported by the linkage check
        if abs(total - reward[height]) > 1e-9 * reward[height]:
            raise ArtifactError("share conservation",
                                f"block {height} shares sum to {total!r}, reward {reward[height]!r}")
    for height in reward:
        if height not in totals:
            raise ArtifactError("share conservation", f"block {height} has no shares")


def check_linkage(blocks: list[dict], summary: dict, corrupt: str | None) -> None:
    if corrupt:
        raise ArtifactError("chain linkage", corrupt)
    prev = GENESIS_DIGEST.hex()
    for i, b in enumerate(blocks, start=1):
        if b["height"] != i:
            raise ArtifactError("chain linkage", f"expected height {i}, found {b['height']}")
        if b["prev"] != prev:
            raise ArtifactError("chain linkage", f"block {i} does not point at block {i - 1}")
        header = Block(b["height"], b["task"], b["winner"], Configuration(b["config"]), b["claim"],
                       b["validated"], bytes.fromhex(b["prev"]), bytes.fromhex(b["commit_digest"]))
        if header.digest.hex() != b["digest"]:
            raise ArtifactError("chain linkage", f"block {i} header digest mismatch")
        prev = b["digest"]
    if len(blocks) != summary["height"] or prev != summary["tip"]:
        raise ArtifactError("chain linkage",
                            f"log ends at height {len(blocks)}, run recorded height {summary['height']}")


def validate_artifacts(out_dir: str | Path) -> None:
    """Raise ArtifactError for the first invariant the artifacts violate."""
    out = Path(out_dir)
    try:
        summary = json.loads((out / "summary.json").read_text())
        episodes = _read_csv(out / "episodes.csv")
        shares = _read_csv(out / "shares.csv")
        blocks, corrupt = _load_blocks(out / "blocks.log")
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactError("artifacts readable", str(exc)) from exc
    try:
        check_monotone(episodes, summary)
        check_commitments(blocks, summary)
        check_shares(shares, blocks)
        check_linkage(blocks, summary, corrupt)
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactError("artifacts well-formed", repr(exc)) from exc


def cmd_validate(args) -> int:
    try:
        validate_artifacts(args.out_dir)
    except ArtifactError as exc:
        print(f"FAIL {exc.invariant}: {exc.detail}", file=sys.stderr)
        return EXIT_INVALID
    for name in INVARIANTS:
        print(f"ok   {name}")
    return EXIT_OK


COMMANDS = {"partition": cmd_partition, "run": cmd_run, "validate": cmd_validate}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
