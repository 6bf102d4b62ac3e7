"""Command line entry points: ``synth``, ``train`` and ``evaluate``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import evaluation, ingest
from .errors import ConfigurationError, DivergenceError, ModelFormatError, ParseError
from .labeling import WeightingKind
from .model import Hyperparameters, load, save
from .pipeline import fit
from .synthgen import SynthConfig, generate
from .vocab import EntityTypeTable

logger = logging.getLogger("playaffinity")

WEIGHTING_CHOICES = ["uniform", "log", "concave-quad", "linear", "convex-quad"]


def _multipliers(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values or any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("multipliers must be positive")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="playaffinity", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic playback log from planted factors")
    p.add_argument("--users", type=int, default=5000)
    p.add_argument("--entities", type=int, default=2000)
    p.add_argument("--rank", type=int, default=8)
    p.add_argument("--neg-rate", type=float, default=0.25)
    p.add_argument("--days", type=int, default=30)
    p.add_argument("--requests-per-user", type=float, default=SynthConfig.requests_per_user)
    p.add_argument("--noise", type=float, default=SynthConfig.noise_scale)
    p.add_argument("--unattended-rate", type=float, default=SynthConfig.unattended_rate)
    p.add_argument("--interrupt-rate", type=float, default=SynthConfig.interrupt_rate)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--truth-out", type=Path)

    p = sub.add_parser("train", help="fit an affinity model on the training days of a log")
    p.add_argument("--input", required=True, nargs="+", type=Path)
    p.add_argument("--dev-day", type=int, help="default: second-to-last day in the log")
    p.add_argument("--test-day", type=int, help="default: last day in the log")
    p.add_argument("--strict", action="store_true", help="abort on the first malformed line")
    p.add_argument("--thresholds", type=Path, help="JSON object mapping entity type to seconds")
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--eta", type=float, default=0.2)
    p.add_argument("--lambda", dest="lam", type=float, default=0.005)
    p.add_argument("--negatives-per-obs", type=int, default=3)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--init-scale", type=float, default=0.01)
    p.add_argument("--weighting", choices=WEIGHTING_CHOICES, default="convex-quad")
    p.add_argument("--optimizer", choices=["sgd", "adagrad"], default="adagrad")
    p.add_argument("--positives-only", action="store_true", help="drop negative observations")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--shuffle-buffer", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model-out", required=True, type=Path)
    p.add_argument("--summary-out", type=Path, help="JSON training summary")

    p = sub.add_parser("evaluate", help="score a model against held-out playbacks")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--test", required=True, type=Path)
    p.add_argument("--test-day", type=int, help="only rows from this day (default: all rows)")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--thresholds", type=Path, help="override the model's threshold table")
    p.add_argument("--auc-multipliers", type=_multipliers, default=[1.0, 5.0])
    p.add_argument("--per-entity", action="store_true")
    p.add_argument("--min-entity-count", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--seen-unseen", action="store_true")
    p.add_argument("--train", type=Path, help="training log, needed for --seen-unseen")
    p.add_argument("--dev-day", type=int, help="training rows are those before this day")
    p.add_argument("--summary-out", type=Path, help="name<TAB>value<TAB>count lines ('-' for stdout)")
    return parser


def cmd_synth(args) -> int:
    config = SynthConfig(
        user_count=args.users, entity_count=args.entities, rank=args.rank, neg_rate=args.neg_rate,
        days=args.days, requests_per_user=args.requests_per_user, noise_scale=args.noise,
        unattended_rate=args.unattended_rate, interrupt_rate=args.interrupt_rate, seed=args.seed,
    )
    log, truth = generate(config)
    ingest.write_log(log, args.out)
    if args.truth_out:
        save(truth.model, args.truth_out)
    logger.info("wrote %d observations to %s", len(log), args.out)
    return 0


def cmd_train(args) -> int:
    observations, stats = ingest.read_logs(args.input, strict=args.strict)
    if not observations:
        raise ConfigurationError("no observations in input")
    default = ingest.SplitSpec.last_two_days(observations)
    spec = ingest.SplitSpec(args.dev_day if args.dev_day is not None else default.dev_day,
                            args.test_day if args.test_day is not None else default.test_day)
    split = ingest.causal_split(observations, spec)
    table = EntityTypeTable.from_json(args.thresholds) if args.thresholds else EntityTypeTable()
    hp = Hyperparameters(k=args.k, eta=args.eta, lam=args.lam, negatives_per_obs=args.negatives_per_obs,
                         iterations=args.epochs, init_scale=args.init_scale)
    result = fit(split.train, hp, weighting=WeightingKind.parse(args.weighting), type_table=table,
                 min_count=args.min_count, optimizer=args.optimizer, workers=args.workers, seed=args.seed,
                 positives_only=args.positives_only, shuffle_buffer=args.shuffle_buffer)
    for line in result.report.log_lines():
        print(line)
    save(result.model, args.model_out)
    if args.summary_out:
        summary = {
            **result.report.to_dict(),
            "train_rows": len(split.train), "dev_rows": len(split.dev), "test_rows": len(split.test),
            "rejected_lines": stats.rejected, "dev_day": spec.dev_day, "test_day": spec.test_day,
            "user_unk_fraction": result.user_unk_fraction, "entity_unk_fraction": result.entity_unk_fraction,
            "users": len(result.model.user_vocab), "entities": len(result.model.entity_vocab),
        }
        args.summary_out.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def evaluation_lines(model, test, args, train=None) -> tuple[list[str], list[str]]:
    """Returns (machine summary lines, human-readable sections)."""
    table = EntityTypeTable.from_json(args.thresholds) if args.thresholds else None
    report = evaluation.evaluate(model, test, table, args.auc_multipliers)
    summary = report.summary_lines()
    human = [report.table("all test rows")]
    if args.per_entity:
        ent = evaluation.per_entity(model, test, args.min_entity_count, args.alpha)
        summary += ent.summary_lines()
        human.append(f"per-entity: {len(ent.entities)} entities kept, {ent.excluded} excluded")
    if args.seen_unseen:
        seen, unseen = evaluation.seen_unseen_split(model, train, test)
        summary.append(f"unk_involved_fraction\t{evaluation.unk_involved_fraction(model, test)!r}\t{len(test)}")
        for name, part in (("seen", seen), ("unseen", unseen)):
            summary.append(f"{name}.rows\t{len(part)}\t{len(part)}")
            if part:
                sub = evaluation.evaluate(model, part, table, args.auc_multipliers)
                summary += sub.summary_lines(prefix=f"{name}.")
                human.append(sub.table(f"{name} (u,e) pairs"))
    return summary, human


def cmd_evaluate(args) -> int:
    model = load(args.model)
    test, _ = ingest.read_log(args.test, strict=args.strict)
    if args.test_day is not None:
        test = [o for o in test if o.day == args.test_day]
    train = None
    if args.seen_unseen:
        if args.train is None:
            raise ConfigurationError("--seen-unseen needs --train")
        train, _ = ingest.read_log(args.train, strict=args.strict)
        if args.dev_day is not None:
            train = [o for o in train if o.day < args.dev_day]
    summary, human = evaluation_lines(model, test, args, train)
    print("\n\n".join(human))
    if args.summary_out:
        text = "\n".join(summary) + "\n"
        if str(args.summary_out) == "-":
            sys.stdout.write(text)
        else:
            args.summary_out.write_text(text)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"synth": cmd_synth, "train": cmd_train, "evaluate": cmd_evaluate}[args.command]
    try:
        return handler(args)
    except (ConfigurationError, ParseError, ModelFormatError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
