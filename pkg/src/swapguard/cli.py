"""Command-line interface.

Subcommands: gen-data, train, attack, defend, eval, grid, dump-stopwords.
Exit codes: 0 success, 1 usage error, 2 data or IO error.
"""

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import attack as attack_mod
from . import corpus, defense, embedding, harness
from .seeding import derive_seed
from .victim import CheckpointFormatError, MlpVictim, NoiseSpec

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage errors via exception, not exit(2)."""

    def error(self, message):
        raise UsageError(message)


def _load_config(path) -> dict:
    if path is None:
        return {}
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise corpus.DatasetFormatError(f"{path}: config must be a JSON object")
    return data


def _pick(args_value, config: dict, key: str, default):
    """CLI flag beats config file beats built-in default."""
    if args_value is not None:
        return args_value
    if key in config:
        return config[key]
    return default


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n",
                          encoding="utf-8")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _load_table(args) -> embedding.EmbeddingTable:
    return embedding.load_embeddings(args.embeddings)


def _load_stopwords(args) -> frozenset[str]:
    if getattr(args, "stopwords", None):
        return attack_mod.load_stopwords(args.stopwords)
    return attack_mod.DEFAULT_STOPWORDS


def _noise_from(config: dict) -> NoiseSpec:
    data = config.get("noise", {})
    return NoiseSpec(
        site=data.get("site", "representation"),
        mean=data.get("mean", 0.0),
        std_dev=data.get("std_dev", 1.0),
        seed=data.get("seed", 0),
    )


def _train_config(args, config: dict, loss_mode: str | None = None) -> defense.TrainConfig:
    return defense.TrainConfig(
        batch_size=_pick(getattr(args, "batch_size", None), config, "batch_size", 32),
        learning_rate=_pick(getattr(args, "lr", None), config, "learning_rate", 0.05),
        epochs=_pick(getattr(args, "epochs", None), config, "epochs", 10),
        loss_mode=loss_mode or config.get("loss_mode", "ce"),
        alpha=_pick(getattr(args, "alpha", None), config, "alpha", 0.5),
        noise=_noise_from(config),
        seed=_pick(args.seed, config, "seed", 0),
        shuffle=config.get("shuffle", True),
    )


def _attack_config(args, config: dict) -> attack_mod.AttackConfig:
    lexicon = _pick(getattr(args, "lexicon", None), config, "pos_lexicon", None)
    if isinstance(lexicon, str):
        lexicon = attack_mod.load_lexicon(lexicon)
    elif isinstance(lexicon, list):
        lexicon = frozenset(lexicon)
    return attack_mod.AttackConfig(
        pct_words_to_swap=_pick(args.pct, config, "pct_words_to_swap", 0.9),
        min_cos_sim=_pick(args.min_cos_sim, config, "min_cos_sim", 0.3),
        max_candidates=_pick(args.max_candidates, config, "max_candidates", 100),
        target=_pick(getattr(args, "target", None), config, "target",
                     attack_mod.TARGET_HYPOTHESIS),
        pos_lexicon=lexicon,
        seed=_pick(args.seed, config, "seed", 0),
    )


# --------------------------------------------------------------------------
# Subcommands

def cmd_gen_data(args) -> int:
    config = _load_config(args.config)
    seed = _pick(args.seed, config, "seed", 0)
    n_per_class = _pick(args.n_per_class, config, "n_per_class", 200)
    dim = _pick(args.dim, config, "dim", 50)
    scale = _pick(args.scale, config, "scale", 7.0)
    fractions = _pick(_floats(args.fractions) if args.fractions else None,
                      config, "fractions", (0.7, 0.1, 0.2))
    fractions = tuple(fractions)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = embedding.synthetic_table(dim=dim, seed=derive_seed(seed, "embeddings"),
                                      scale=scale)
    embedding.save_embeddings(table, out / "embeddings.txt")
    full = corpus.generate_synthetic(n_per_class, seed=derive_seed(seed, "examples"),
                                     vocab=table)
    train_ds, dev_ds, test_ds = corpus.split_dataset(full, fractions,
                                                     seed=derive_seed(seed, "split"))
    for ds, stem in ((train_ds, "train"), (dev_ds, "dev"), (test_ds, "test")):
        corpus.save_dataset(ds, out / f"{stem}.json")
    _write_json(out / "manifest.json", {
        "name": full.name,
        "seed": seed,
        "n_per_class": n_per_class,
        "fractions": list(fractions),
        "embedding": {"dim": dim, "scale": scale, "tokens": len(table)},
        "sizes": {"train": len(train_ds.examples), "dev": len(dev_ds.examples),
                  "test": len(test_ds.examples)},
    })
    print(f"wrote {out}/embeddings.txt and splits "
          f"{len(train_ds.examples)}/{len(dev_ds.examples)}/{len(test_ds.examples)}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _load_config(args.config)
    table = _load_table(args)
    train_ds = corpus.load_dataset(args.data)
    dev_ds = corpus.load_dataset(args.dev)
    cfg = _train_config(args, config)
    hidden = _pick(args.hidden_dim, config, "hidden_dim", 64)
    model = MlpVictim.initialize(table, hidden_dim=hidden,
                                 seed=derive_seed(cfg.seed, "init"))
    callback = None
    if args.checkpoint_every:
        out = Path(args.out)

        def callback(epoch, snapshot):
            if (epoch + 1) % args.checkpoint_every == 0:
                snapshot.save(out.with_name(f"{out.stem}-epoch{epoch + 1}{out.suffix}"))

    model, report = defense.train(model, table, train_ds, dev_ds, cfg,
                                  epoch_callback=callback)
    model.save(args.out)
    if args.report:
        payload = {
            "epoch_losses": list(report.epoch_losses),
            "dev_accuracy": report.dev_accuracy,
            "config": _train_config_dict(cfg),
        }
        _write_json(args.report, payload)
    print(f"trained {cfg.epochs} epochs, dev accuracy {report.dev_accuracy:.4f}")
    return EXIT_OK


def _train_config_dict(cfg: defense.TrainConfig) -> dict:
    data = asdict(cfg)
    data["noise"] = asdict(cfg.noise)
    return data


def cmd_attack(args) -> int:
    config = _load_config(args.config)
    table = _load_table(args)
    ds = corpus.load_dataset(args.data)
    victim = MlpVictim.load(args.model, table)
    cfg = _attack_config(args, config)
    stopwords = _load_stopwords(args)
    results, perturbed = attack_mod.attack_dataset(victim, table, ds, cfg, stopwords)
    attack_mod.save_results(results, args.out)
    if args.perturbed_out:
        corpus.save_dataset(perturbed, args.perturbed_out)
    rate = harness.attack_success_rate(results) if results else 0.0
    print(f"attacked {len(results)} examples, success rate {rate:.4f}")
    return EXIT_OK


def cmd_defend(args) -> int:
    config = _load_config(args.config)
    table = _load_table(args)
    train_ds = corpus.load_dataset(args.data)
    dev_ds = corpus.load_dataset(args.dev)

    if args.mode == "finetune":
        if not args.model:
            raise UsageError("defend --mode finetune requires --model")
        baseline = MlpVictim.load(args.model, table)
        cfg = _train_config(args, config)
        model = defense.finetune_on_attacked(baseline, train_ds, dev_ds, cfg)
    elif args.mode == "augment-only":
        cfg = _train_config(args, config)
        hidden = _pick(args.hidden_dim, config, "hidden_dim", 64)
        model = defense.train_augmented_only(table, train_ds, dev_ds, cfg,
                                             hidden_dim=hidden)
    else:  # ep-loss
        cfg = _train_config(args, config, loss_mode="ep")
        hidden = _pick(args.hidden_dim, config, "hidden_dim", 64)
        fresh = MlpVictim.initialize(table, hidden_dim=hidden,
                                     seed=derive_seed(cfg.seed, "init"))
        model, _ = defense.train(fresh, table, train_ds, dev_ds, cfg)
    model.save(args.out)
    acc, _ = harness.evaluate(model, dev_ds)
    print(f"defended ({args.mode}), dev accuracy {acc:.4f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    table = _load_table(args)
    ds = corpus.load_dataset(args.data)
    victim = MlpVictim.load(args.model, table)
    accuracy, matrix = harness.evaluate(victim, ds)
    print(f"accuracy {accuracy:.6f}")
    print(f"tp {matrix.tp}")
    print(f"fp {matrix.fp}")
    print(f"tn {matrix.tn}")
    print(f"fn {matrix.fn}")
    if args.out:
        _write_json(args.out, {"accuracy": accuracy, "tp": matrix.tp,
                               "fp": matrix.fp, "tn": matrix.tn, "fn": matrix.fn})
    return EXIT_OK


def cmd_grid(args) -> int:
    config = _load_config(args.config)
    table = _load_table(args)
    ds = corpus.load_dataset(args.data)
    victim = MlpVictim.load(args.model, table)
    spec = harness.GridSpec(
        pct_words_to_swap=tuple(_pick(
            _floats(args.pct) if args.pct else None, config, "pct_words_to_swap", (0.5,))),
        min_cos_sim=tuple(_pick(
            _floats(args.min_cos_sim) if args.min_cos_sim else None,
            config, "min_cos_sim", (0.6,))),
        max_candidates=tuple(_pick(
            _ints(args.max_candidates) if args.max_candidates else None,
            config, "max_candidates", (100,))),
        repeats=_pick(args.repeats, config, "repeats", 1),
        seed=_pick(args.seed, config, "seed", 0),
        target=config.get("target", attack_mod.TARGET_HYPOTHESIS),
    )
    rows = harness.run_grid(victim, table, ds, spec, _load_stopwords(args),
                            csv_path=args.out)
    print(f"grid wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_dump_stopwords(args) -> int:
    words = sorted(_load_stopwords(args))
    text = "\n".join(words) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {len(words)} stopwords to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser

def build_parser() -> _Parser:
    parser = _Parser(prog="swapguard",
                     description="Synonym-swap attacks and defenses for "
                                 "dialogue entailment classifiers.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", default=None, help="JSON config file")

    p = sub.add_parser("gen-data", help="generate the synthetic benchmark")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-per-class", type=int, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--scale", type=float, default=None)
    p.add_argument("--fractions", default=None, help="train,dev,test e.g. 0.7,0.1,0.2")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train the MLP victim with cross entropy")
    common(p)
    p.add_argument("--data", required=True, help="train split JSON")
    p.add_argument("--dev", required=True, help="dev split JSON")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True, help="model checkpoint path")
    p.add_argument("--report", default=None, help="write a training report JSON")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--hidden-dim", type=int, default=None)
    p.add_argument("--checkpoint-every", type=int, default=None)
    p.set_defaults(func=cmd_train, alpha=None)

    p = sub.add_parser("attack", help="attack a dataset against a model")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True, help="JSONL results path")
    p.add_argument("--perturbed-out", default=None, help="perturbed dataset JSON")
    p.add_argument("--pct", type=float, default=None)
    p.add_argument("--min-cos-sim", type=float, default=None)
    p.add_argument("--max-candidates", type=int, default=None)
    p.add_argument("--target", choices=attack_mod.TARGETS, default=None)
    p.add_argument("--stopwords", default=None, help="stopword list file")
    p.add_argument("--lexicon", default=None, help="allowed-token lexicon file")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("defend", help="train a defended model")
    common(p)
    p.add_argument("--mode", required=True,
                   choices=("finetune", "augment-only", "ep-loss"))
    p.add_argument("--data", required=True,
                   help="train split (attacked for finetune/augment-only)")
    p.add_argument("--dev", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--model", default=None, help="baseline checkpoint (finetune)")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--hidden-dim", type=int, default=None)
    p.set_defaults(func=cmd_defend)

    p = sub.add_parser("eval", help="accuracy and confusion matrix")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", default=None, help="optional JSON report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", help="sweep attack parameters, write CSV")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--pct", default=None, help="comma-separated values")
    p.add_argument("--min-cos-sim", default=None, help="comma-separated values")
    p.add_argument("--max-candidates", default=None, help="comma-separated values")
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--stopwords", default=None)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("dump-stopwords", help="print the built-in stopword list")
    common(p)
    p.add_argument("--out", default=None)
    p.add_argument("--stopwords", default=None, help="dump this file instead")
    p.set_defaults(func=cmd_dump_stopwords)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (corpus.DatasetFormatError, embedding.EmbeddingFormatError,
            CheckpointFormatError, json.JSONDecodeError, OSError,
            UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (UsageError, ValueError, defense.TrainingDivergedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
