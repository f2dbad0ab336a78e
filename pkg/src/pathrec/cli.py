"""Command-line front end: offline training, policy training, evaluation, chat, serve.

Configuration precedence is CLI flag over config-file entry over built-in
default; defaults follow the experiment constants baked into the library
(k=10, 15 turns, 7:1.5:1.5 split, the published reward values, and so on).
Exit codes: 0 success, 1 internal error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    prune_rare_attributes,
    split_interactions,
)
from .embeddings import TrainConfig, load_embeddings, save_embeddings, train_embeddings
from .engine import (
    AbsGreedyPolicy,
    EpisodeSpec,
    MaxEntropyPolicy,
    ScprPolicy,
    ask_template,
    build_eval_specs,
    rec_template,
    run_episode,
    train_policy,
    write_episode_logs,
)
from .metrics import build_report, write_report_csv, write_report_json
from .policy import DqnConfig, load_policy, save_policy
from .service import ServiceConfig, SessionService, serve


class UsageError(Exception):
    pass


def _load_config(path: str | None) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    if path:
        if not Path(path).is_file():
            raise UsageError(f"config file not found: {path}")
        cfg.read(path, encoding="utf-8")
    return cfg


def _resolve(flag_value, cfg: configparser.ConfigParser, section: str, key: str, default, cast):
    if flag_value is not None:
        return flag_value
    if cfg.has_option(section, key):
        return cast(cfg.get(section, key))
    return default


def _load_graph(args, cfg) -> tuple:
    data = _resolve(args.data, cfg, "run", "data", None, str)
    synthetic = _resolve(args.synthetic, cfg, "run", "synthetic", None, str)
    seed = _resolve(args.seed, cfg, "run", "seed", 0, int)
    if bool(data) == bool(synthetic):
        raise UsageError("exactly one of --data or --synthetic is required")
    if data:
        if not Path(data).is_file():
            raise UsageError(f"dataset not found: {data}")
        g, interactions = load_dataset(data)
    else:
        if not Path(synthetic).is_file():
            raise UsageError(f"synthetic spec file not found: {synthetic}")
        g, interactions = generate_synthetic(_read_synthetic_spec(synthetic, seed))
    min_freq = _resolve(args.min_attr_freq, cfg, "run", "min_attr_freq", 1, int)
    if min_freq > 1:
        # Attribute pruning keeps user and item indices, so interactions survive.
        g = prune_rare_attributes(g, min_freq)
    return g, interactions, seed


def _read_synthetic_spec(path: str, seed: int) -> SyntheticSpec:
    cfg = configparser.ConfigParser()
    cfg.read(path, encoding="utf-8")
    if not cfg.has_section("synthetic"):
        raise UsageError(f"{path}: missing [synthetic] section")
    s = cfg["synthetic"]
    lo_hi = s.get("attrs_per_item", "3 6").split()
    return SyntheticSpec(
        n_users=s.getint("users", 200),
        n_items=s.getint("items", 500),
        n_attributes=s.getint("attributes", 60),
        attrs_per_item=(int(lo_hi[0]), int(lo_hi[1])),
        favored_per_user=s.getint("favored_per_user", 3),
        interactions_per_user=s.getint("interactions_per_user", 20),
        favored_bias=s.getfloat("favored_bias", 0.8),
        popularity_exponent=s.getfloat("popularity_exponent", 1.0),
        like_prob=s.getfloat("like_prob", 0.0),
        seed=s.getint("seed", seed),
    )


def _out_dir(args, cfg) -> Path:
    out = Path(_resolve(args.out, cfg, "run", "out", "out", str))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_curve(path: Path, header: str, values) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", header])
        for i, v in enumerate(values):
            writer.writerow([i, f"{v:.8f}"])


# -- subcommands -----------------------------------------------------------------


def cmd_train_fm(args, cfg) -> int:
    g, interactions, seed = _load_graph(args, cfg)
    out = _out_dir(args, cfg)
    split = split_interactions(interactions, rng=np.random.default_rng(seed))
    train_cfg = TrainConfig(
        l2=_resolve(args.l2, cfg, "fm", "l2", 0.001, float),
        lr_item=_resolve(args.lr_item, cfg, "fm", "lr_item", 0.01, float),
        lr_attr=_resolve(args.lr_attr, cfg, "fm", "lr_attr", 0.001, float),
        epochs=_resolve(args.epochs, cfg, "fm", "epochs", 5, int),
        dimension=_resolve(args.dimension, cfg, "fm", "dimension", 64, int),
        seed=seed,
    )
    print(f"training embeddings on {len(split.train)} interactions "
          f"({train_cfg.epochs} epochs, d={train_cfg.dimension})")
    emb, curve = train_embeddings(g, split.train, train_cfg)
    ckpt = out / "embeddings.ckpt"
    save_embeddings(ckpt, emb, train_cfg)
    _write_curve(out / "fm_loss_curve.csv", "loss", curve)
    print(f"wrote {ckpt} (final loss {curve[-1]:.4f})" if curve else f"wrote {ckpt}")
    return 0


def _dqn_config(args, cfg, seed: int, max_turns: int) -> DqnConfig:
    return DqnConfig(
        max_turns=max_turns,
        lr=_resolve(getattr(args, "lr", None), cfg, "dqn", "lr", 1e-4, float),
        batch_size=_resolve(getattr(args, "batch_size", None), cfg, "dqn", "batch_size", 128, int),
        seed=seed,
    )


def cmd_train_policy(args, cfg) -> int:
    g, interactions, seed = _load_graph(args, cfg)
    out = _out_dir(args, cfg)
    emb_path = args.embeddings or (out / "embeddings.ckpt")
    if not Path(emb_path).is_file():
        raise UsageError(f"embedding checkpoint not found: {emb_path}")
    emb, _ = load_embeddings(emb_path)
    split = split_interactions(interactions, rng=np.random.default_rng(seed))
    k = _resolve(args.k, cfg, "run", "k", 10, int)
    max_turns = _resolve(args.max_turns, cfg, "run", "max_turns", 15, int)
    episodes = _resolve(args.episodes, cfg, "dqn", "episodes", 2000, int)
    dqn_cfg = _dqn_config(args, cfg, seed, max_turns)
    print(f"training policy for {episodes} episodes on {len(split.validation)} interactions")
    net, curve = train_policy(
        g, emb, split.validation, dqn_cfg, episodes, np.random.default_rng(seed), k=k
    )
    ckpt = out / "policy.ckpt"
    save_policy(ckpt, net, dqn_cfg)
    _write_curve(out / "policy_return_curve.csv", "episode_return", curve)
    print(f"wrote {ckpt}")
    return 0


def _make_policy(name: str, k: int, dqn_cfg: DqnConfig):
    lowered = name.lower()
    if lowered in ("absgreedy", "abs-greedy", "abs_greedy"):
        return "absgreedy", AbsGreedyPolicy(k=k)
    if lowered in ("maxentropy", "max-entropy", "max_entropy"):
        return "maxentropy", MaxEntropyPolicy(k=k)
    if Path(name).is_file():
        net, _ = load_policy(name)
        return "scpr", ScprPolicy(net, dqn_cfg, explore=False, k=k)
    raise UsageError(f"unknown policy {name!r}: use absgreedy, maxentropy, or a checkpoint path")


def cmd_evaluate(args, cfg) -> int:
    g, interactions, seed = _load_graph(args, cfg)
    out = _out_dir(args, cfg)
    emb_path = args.embeddings or (out / "embeddings.ckpt")
    if not Path(emb_path).is_file():
        raise UsageError(f"embedding checkpoint not found: {emb_path}")
    emb, _ = load_embeddings(emb_path)
    split = split_interactions(interactions, rng=np.random.default_rng(seed))
    if not split.test:
        raise UsageError("test split is empty")
    k = _resolve(args.k, cfg, "run", "k", 10, int)
    max_turns = _resolve(args.max_turns, cfg, "run", "max_turns", 15, int)
    dqn_cfg = _dqn_config(args, cfg, seed, max_turns)
    if not args.policy:
        raise UsageError("at least one --policy is required")
    specs = build_eval_specs(
        g, split.test, np.random.default_rng(seed), k=k, max_turns=max_turns
    )
    policy_logs = {}
    for name in args.policy:
        label, policy = _make_policy(name, k, dqn_cfg)
        print(f"evaluating {label} on {len(specs)} episodes")
        logs = [run_episode(g, emb, policy, s, _simulator(g, s), cfg=dqn_cfg) for s in specs]
        policy_logs[label] = logs
        write_episode_logs(logs, out / f"episodes_{label}.jsonl")
    report = build_report(policy_logs, max_turns, reference=args.reference)
    fmt = _resolve(args.report, cfg, "run", "report", "csv", str)
    if fmt not in ("csv", "json"):
        raise UsageError(f"--report must be csv or json, got {fmt!r}")
    if fmt == "csv":
        write_report_csv(report, out / "report.csv")
    else:
        write_report_json(report, out / "report.json")
    write_report_json(report, out / "summary.json")
    for name, entry in sorted(report.policies.items()):
        print(f"  {name}: SR@{max_turns}={entry['sr'][-1]:.3f} AT={entry['at']:.2f}")
    return 0


def _simulator(g, spec: EpisodeSpec):
    from .engine import SimulatedUser

    return SimulatedUser(g, spec)


class TerminalResponder:
    """Human answers y/n on the terminal; EOF aborts the session as a failure."""

    def __init__(self, instream, outstream, attr_names=None, item_names=None):
        self.instream = instream
        self.outstream = outstream
        self.attr_names = attr_names or {}
        self.item_names = item_names or {}

    def _read_yes_no(self) -> bool:
        while True:
            self.outstream.write("[y/n] > ")
            self.outstream.flush()
            line = self.instream.readline()
            if not line:
                raise EOFError("input closed")
            token = line.strip().lower()
            if token in ("y", "yes"):
                return True
            if token in ("n", "no"):
                return False
            self.outstream.write("Please answer y or n.\n")

    def answer_attribute(self, p: int) -> bool:
        self.outstream.write(ask_template(self.attr_names.get(p, f"attribute-{p}")) + "\n")
        return self._read_yes_no()

    def answer_recommendation(self, items) -> bool:
        names = [self.item_names.get(v, f"item-{v}") for v in items]
        self.outstream.write(rec_template(names) + "\n")
        return self._read_yes_no()


def cmd_chat(args, cfg, instream=None, outstream=None) -> int:
    instream = instream or sys.stdin
    outstream = outstream or sys.stdout
    g, interactions, seed = _load_graph(args, cfg)
    out = _out_dir(args, cfg)
    emb_path = args.embeddings or (out / "embeddings.ckpt")
    policy_path = args.policy or (out / "policy.ckpt")
    for path, what in ((emb_path, "embedding"), (policy_path, "policy")):
        if not Path(path).is_file():
            raise UsageError(f"{what} checkpoint not found: {path}")
    emb, _ = load_embeddings(emb_path)
    net, _ = load_policy(policy_path)
    k = _resolve(args.k, cfg, "run", "k", 10, int)
    max_turns = _resolve(args.max_turns, cfg, "run", "max_turns", 15, int)
    if args.attribute is None:
        raise UsageError("--attribute is required to open the conversation")
    g.check_attribute(args.attribute)
    dqn_cfg = DqnConfig(max_turns=max_turns, seed=seed)
    policy = ScprPolicy(net, dqn_cfg, explore=False, k=k)
    spec = EpisodeSpec(
        user=args.user, target_item=None, initial_attribute=args.attribute,
        k=k, max_turns=max_turns,
    )
    responder = TerminalResponder(instream, outstream)
    outstream.write(f"Session opened on attribute-{args.attribute}. Answer y/n.\n")
    try:
        log = run_episode(g, emb, policy, spec, responder, cfg=dqn_cfg)
    except EOFError:
        outstream.write("Input closed; recommendation failed.\n")
        return 0
    path_ids = list(log.final_state.path)
    if log.success:
        accepted = log.turns[-1].payload
        outstream.write(
            f"Recommendation accepted at turn {log.success_turn}.\n"
            f"Explanation path: {path_ids}\n"
            f"Recommended items: {list(accepted)}\n"
        )
    else:
        outstream.write(f"Recommendation failed after {len(log.turns)} turns. "
                        f"Path so far: {path_ids}\n")
    return 0


def cmd_serve(args, cfg) -> int:
    import json as _json

    g, interactions, seed = _load_graph(args, cfg)
    out = _out_dir(args, cfg)
    emb_path = args.embeddings or (out / "embeddings.ckpt")
    policy_path = args.policy or (out / "policy.ckpt")
    for path, what in ((emb_path, "embedding"), (policy_path, "policy")):
        if not Path(path).is_file():
            raise UsageError(f"{what} checkpoint not found: {path}")
    emb, _ = load_embeddings(emb_path)
    net, _ = load_policy(policy_path)
    attr_names, item_names = {}, {}
    if args.names:
        with open(args.names, encoding="utf-8") as fh:
            sidecar = _json.load(fh)
        attr_names = {int(i): n for i, n in sidecar.get("attributes", {}).items()}
        item_names = {int(i): n for i, n in sidecar.get("items", {}).items()}
    svc_cfg = ServiceConfig(
        k=_resolve(args.k, cfg, "run", "k", 10, int),
        max_turns=_resolve(args.max_turns, cfg, "run", "max_turns", 15, int),
        attribute_names=attr_names,
        item_names=item_names,
        static_dir=args.static,
    )
    service = SessionService(g, emb, net, svc_cfg)
    server = serve(service, host=args.host, port=args.port)
    print(f"serving on http://{args.host}:{server.server_address[1]}/")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathrec",
        description="Interactive graph-walking recommender: train, evaluate, chat, serve.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI config file (sections: run, fm, dqn)")
        p.add_argument("--data", help="edge-list dataset file")
        p.add_argument("--synthetic", help="INI file with a [synthetic] section")
        p.add_argument("--out", help="output directory (default ./out)")
        p.add_argument("--seed", type=int, help="master seed (default 0)")
        p.add_argument("--k", type=int, help="items per recommendation (default 10)")
        p.add_argument("--max-turns", type=int, dest="max_turns", help="turn budget (default 15)")
        p.add_argument("--min-attr-freq", type=int, dest="min_attr_freq",
                       help="prune attributes on fewer items than this")

    p = sub.add_parser("train-fm", help="offline embedding training")
    common(p)
    p.add_argument("--epochs", type=int)
    p.add_argument("--dimension", type=int)
    p.add_argument("--l2", type=float)
    p.add_argument("--lr-item", type=float, dest="lr_item")
    p.add_argument("--lr-attr", type=float, dest="lr_attr")
    p.set_defaults(func=cmd_train_fm)

    p = sub.add_parser("train-policy", help="deep Q-learning for the ask/recommend policy")
    common(p)
    p.add_argument("--embeddings", help="embedding checkpoint (default <out>/embeddings.ckpt)")
    p.add_argument("--episodes", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.set_defaults(func=cmd_train_policy)

    p = sub.add_parser("evaluate", help="batch evaluation against the scripted user")
    common(p)
    p.add_argument("--embeddings")
    p.add_argument("--policy", action="append",
                   help="absgreedy, maxentropy, or a policy checkpoint path (repeatable)")
    p.add_argument("--reference", help="policy label used as the relative-SR baseline")
    p.add_argument("--report", choices=("csv", "json"))
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("chat", help="drive one live session on the terminal")
    common(p)
    p.add_argument("--embeddings")
    p.add_argument("--policy", help="policy checkpoint path (default <out>/policy.ckpt)")
    p.add_argument("--attribute", type=int, help="opening attribute id")
    p.add_argument("--user", type=int, default=None, help="known user id (default: cold start)")
    p.set_defaults(func=cmd_chat)

    p = sub.add_parser("serve", help="HTTP session service for the browser client")
    common(p)
    p.add_argument("--embeddings")
    p.add_argument("--policy", help="policy checkpoint path (default <out>/policy.ckpt)")
    p.add_argument("--names", help="JSON sidecar with attribute/item display names")
    p.add_argument("--static", help="directory of static files served at /")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 1
    except Exception as exc:  # internal failure: report and signal distinctly
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
