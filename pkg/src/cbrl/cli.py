"""Command line entry point: ``cbrl <command> [--config FILE] [--set key=value ...]``.

Commands and the artifacts they write under ``workdir``::

    gen-data       data/manifest.txt and frame files
    fit-vision     vision/background.bin, vision/centroids.txt
    eval-vision    vision/confusion.csv, vision/confusion.txt, vision/scores.csv
    train-ppo      policy/checkpoint.bin, policy/rewards.csv, policy/eval.csv
    distill        rules/rules.txt, rules/fidelity.csv
    eval-agent     eval/agent_<selector>.csv
    inspect-rules  prints the rule set with concept names

Exit status: 0 success, 1 usage error, 2 missing upstream artifact,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path


from cbrl.classify import CentroidSet
from cbrl.config import DOCS, ConfigError, RunConfig, build_config
from cbrl.data import DatasetError, DatasetManifest, generate_dataset
from cbrl.env import ACTIONS, GameId
from cbrl.evaluation import as_selector, evaluate_agent, per_class_scores, summarize
from cbrl.pipeline import (
    ConceptEnv,
    GroundTruthExtractor,
    VisionExtractor,
    collect_states,
    evaluate_vision,
    fit_vision,
)
from cbrl.policy import MLP, NumericalError, train
from cbrl.relations import schema_for
from cbrl.rules import ExtractionReport, RuleSet, extract_rules, fidelity, fmt_number
from cbrl.vision import BackgroundModel

log = logging.getLogger("cbrl")

EXIT_OK, EXIT_USAGE, EXIT_MISSING, EXIT_NUMERIC = 0, 1, 2, 3


class MissingArtifact(RuntimeError):
    def __init__(self, path: Path, producer: str):
        super().__init__(f"missing {path}; run `cbrl {producer}` first")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class Paths:
    def __init__(self, cfg: RunConfig):
        w = Path(cfg.workdir)
        self.data = w / "data"
        self.manifest = self.data / "manifest.txt"
        self.vision = w / "vision"
        self.background = self.vision / "background.bin"
        self.centroids = self.vision / "centroids.txt"
        self.policy = w / "policy"
        self.checkpoint = self.policy / "checkpoint.bin"
        self.rules_dir = w / "rules"
        self.rules = self.rules_dir / "rules.txt"
        self.eval = w / "eval"

    @staticmethod
    def need(path: Path, producer: str) -> Path:
        if not path.exists():
            raise MissingArtifact(path, producer)
        return path


def _game(cfg: RunConfig) -> GameId:
    try:
        return GameId.parse(cfg.game)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def _manifest(cfg: RunConfig, paths: Paths) -> DatasetManifest:
    m = DatasetManifest.load(Paths.need(paths.manifest, "gen-data"))
    if m.game != _game(cfg):
        raise ConfigError(f"dataset in {paths.data} is for {m.game.value}, config says {cfg.game}")
    return m


def _vision_models(paths: Paths) -> tuple[BackgroundModel, CentroidSet]:
    bg = BackgroundModel.load(Paths.need(paths.background, "fit-vision"))
    cs = CentroidSet.load(Paths.need(paths.centroids, "fit-vision"))
    return bg, cs


def env_factory(cfg: RunConfig, paths: Paths):
    game = _game(cfg)
    schema = schema_for(game, cfg.schema)
    if cfg.extractor == "vision":
        bg, cs = _vision_models(paths)
        extractor = VisionExtractor(game, bg, cs, cfg.tau, cfg.min_area)
    else:
        extractor = GroundTruthExtractor()
    return lambda *_: ConceptEnv(game, extractor, schema, cfg.d_max, cfg.history)


def _eval_seeds(cfg: RunConfig) -> list[int]:
    return [cfg.eval_seed + i for i in range(cfg.eval_episodes)]


def cmd_gen_data(cfg: RunConfig, paths: Paths, args) -> None:
    sizes = (cfg.train_sequences, cfg.val_sequences, cfg.test_sequences)
    m = generate_dataset(_game(cfg), paths.data, sizes, cfg.seed)
    log.info("wrote %s (%d frames)", paths.manifest, len(m.frames))


def cmd_fit_vision(cfg: RunConfig, paths: Paths, args) -> None:
    m = _manifest(cfg, paths)
    try:
        bg, cs = fit_vision(m, cfg.seed, cfg.tau, cfg.min_area, cfg.k_nn, cfg.calibration_frames)
    except ValueError as exc:
        # too few labelled references for k_nn: the validation split is too small
        raise ConfigError(f"{exc}; raise val_sequences or lower k_nn") from None
    paths.vision.mkdir(parents=True, exist_ok=True)
    bg.save(paths.background)
    cs.save(paths.centroids)
    log.info("centroid labels: %s", ", ".join(cs.labels))


def cmd_eval_vision(cfg: RunConfig, paths: Paths, args) -> None:
    m = _manifest(cfg, paths)
    bg, cs = _vision_models(paths)
    cm = evaluate_vision(m, bg, cs, "test", cfg.tau, cfg.min_area)
    p, r, f = summarize(cm)
    lines = ["class,precision,recall,f_score", f"all,{fmt_number(p)},{fmt_number(r)},{fmt_number(f)}"]
    for label, (cp, cr, cf) in per_class_scores(cm).items():
        lines.append(f"{label},{fmt_number(cp)},{fmt_number(cr)},{fmt_number(cf)}")
    _write(paths.vision / "confusion.csv", cm.to_csv())
    _write(paths.vision / "confusion.txt", cm.to_text())
    _write(paths.vision / "scores.csv", "\n".join(lines) + "\n")
    print(cm.to_text(), end="")
    print(f"precision {p:.4f}  recall {r:.4f}  F {f:.4f}")


def cmd_train_ppo(cfg: RunConfig, paths: Paths, args) -> None:
    make_env = env_factory(cfg, paths)
    seeds = _eval_seeds(cfg)

    def evaluate(net: MLP) -> tuple[float, float]:
        mean, std, _ = evaluate_agent(make_env, net, len(seeds), seeds)
        return mean, std

    result = train(make_env, cfg.ppo(), evaluate if cfg.eval_interval > 0 else None)
    paths.policy.mkdir(parents=True, exist_ok=True)
    result.net.save(paths.checkpoint)
    log.info("wrote %s", paths.checkpoint)
    _write(
        paths.policy / "rewards.csv",
        "frames,episode_reward\n" + "".join(f"{fr},{fmt_number(r)}\n" for fr, r in result.episode_rewards),
    )
    _write(
        paths.policy / "eval.csv",
        "frames,mean,std\n" + "".join(f"{fr},{fmt_number(m)},{fmt_number(s)}\n" for fr, m, s in result.eval_log),
    )


def cmd_distill(cfg: RunConfig, paths: Paths, args) -> None:
    net = MLP.load(Paths.need(paths.checkpoint, "train-ppo"))
    make_env = env_factory(cfg, paths)
    schema = schema_for(_game(cfg), cfg.schema)
    if net.input_dim != len(schema):
        raise ConfigError(f"checkpoint expects {net.input_dim} concepts, schema {cfg.schema!r} has {len(schema)}")
    greedy = as_selector(net)
    X = collect_states(make_env, greedy, cfg.distill_states, cfg.eps, cfg.seed)
    H = collect_states(make_env, greedy, cfg.holdout_states, cfg.eps, cfg.seed + 1)
    report = ExtractionReport()
    rs = extract_rules(
        net, X, cfg.mu, schema.names, ACTIONS[_game(cfg)], schema.digest(), cfg.substitution_cap, report
    )
    _write(paths.rules, rs.to_text())
    fid_train, fid_hold = fidelity(rs, net, X), fidelity(rs, net, H)
    _write(
        paths.rules_dir / "fidelity.csv",
        "set,states,fidelity\n"
        f"train,{len(X)},{fmt_number(fid_train)}\n"
        f"holdout,{len(H)},{fmt_number(fid_hold)}\n",
    )
    print(f"{len(rs.rules)} rules; fidelity train {fid_train:.4f}, held-out {fid_hold:.4f}")
    if report.dropped_for_cap:
        print(f"{report.dropped_for_cap} hidden-layer rules exceeded the substitution cap")


def cmd_eval_agent(cfg: RunConfig, paths: Paths, args) -> None:
    make_env = env_factory(cfg, paths)
    selectors = []
    if args.selector in ("neural", "both"):
        selectors.append(("neural", MLP.load(Paths.need(paths.checkpoint, "train-ppo"))))
    if args.selector in ("rules", "both"):
        selectors.append(("rules", RuleSet.from_text(Paths.need(paths.rules, "distill").read_text())))
    seeds = _eval_seeds(cfg)
    lines = ["selector,seed,reward,mean,std"]
    for name, sel in selectors:
        mean, std, rewards = evaluate_agent(make_env, sel, len(seeds), seeds)
        lines += [f"{name},{s},{fmt_number(r)},," for s, r in zip(seeds, rewards)]
        lines.append(f"{name},all,,{fmt_number(mean)},{fmt_number(std)}")
        print(f"{cfg.game} {cfg.extractor} {cfg.schema} {name}: {mean:.2f} +- {std:.2f}")
    _write(paths.eval / f"agent_{args.selector}.csv", "\n".join(lines) + "\n")


def cmd_inspect_rules(cfg: RunConfig, paths: Paths, args) -> None:
    path = Path(args.rules) if args.rules else Paths.need(paths.rules, "distill")
    if not path.exists():
        raise MissingArtifact(path, "distill")
    rs = RuleSet.from_text(path.read_text())
    schema = schema_for(_game(cfg), cfg.schema)
    if rs.schema_digest and rs.schema_digest != schema.digest():
        log.warning("rule file schema %s differs from configured %s schema", rs.schema_digest, cfg.schema)
    print(rs.to_text(), end="")


COMMANDS = {
    "gen-data": (cmd_gen_data, "generate frame sequences with ground truth"),
    "fit-vision": (cmd_fit_vision, "build the background model and the labelled centroids"),
    "eval-vision": (cmd_eval_vision, "confusion matrix and P/R/F of the vision pipeline on the test split"),
    "train-ppo": (cmd_train_ppo, "train the neural policy on concept vectors"),
    "distill": (cmd_distill, "extract a rule set from the trained policy"),
    "eval-agent": (cmd_eval_agent, "seeded reward evaluation of the neural and/or rule policy"),
    "inspect-rules": (cmd_inspect_rules, "print a rule set with concept names"),
}


def make_parser() -> argparse.ArgumentParser:
    keys = "\n".join(f"  {k} (default {getattr(RunConfig(), k)!r}): {d}" for k, d in DOCS.items())
    parser = _Parser(
        prog="cbrl",
        description="Concept-bottleneck agents: frames to objects to concepts to rules.",
        epilog="config keys:\n" + keys,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON file with config keys")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        if name == "eval-agent":
            p.add_argument("--selector", choices=("neural", "rules", "both"), default="both")
        if name == "inspect-rules":
            p.add_argument("--rules", help="rule file (default: workdir/rules/rules.txt)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args.config, args.set)
        COMMANDS[args.command][0](cfg, Paths(cfg), args)
    except ConfigError as exc:
        print(f"cbrl: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MissingArtifact, DatasetError) as exc:
        print(f"cbrl: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (NumericalError, FloatingPointError) as exc:
        print(f"cbrl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
