"""Command-line front end.

Subcommands cover the whole pipeline headlessly: generate a dataset, train
and evaluate the classifier, classify a recorded stream, paint a letter to a
PPM image, and serve the streaming gesture service. All output is fixed
format and deterministic for a given seed (serve excepted), so reports can
be golden-tested.

Exit codes: 0 success, 1 environment/IO problems, 2 domain errors (no
gesture in the stream, unknown letter).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import forest, glyph, service, signal as sig, simflight, synth
from .seeds import mix_seed

EXIT_OK = 0
EXIT_ENV = 1
EXIT_DOMAIN = 2

GRID_TREES = (50, 100, 200, 300)
GRID_DEPTHS = (2, 3, 4, 6)


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _parse_grid(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(f"bad grid {text!r}; expected comma-separated integers", EXIT_ENV)
    if not values:
        raise CliError(f"bad grid {text!r}; expected comma-separated integers", EXIT_ENV)
    return values


def _parse_split(text: str) -> tuple[int, int]:
    parts = text.split("/")
    if len(parts) != 2:
        raise CliError(f"bad split {text!r}; expected TRAIN/TEST like 75/50", EXIT_ENV)
    try:
        train_n, test_n = int(parts[0]), int(parts[1])
    except ValueError:
        raise CliError(f"bad split {text!r}; expected TRAIN/TEST like 75/50", EXIT_ENV)
    if train_n < 1 or test_n < 1:
        raise CliError("split counts must be positive", EXIT_ENV)
    return train_n, test_n


def _stratified_split(ds: synth.Dataset, train_n: int, test_n: int, seed: int):
    """Seeded per-class shuffle, then the first train/5 + test/5 of each class."""
    n_classes = len(glyph.LABELS)
    if train_n % n_classes or test_n % n_classes:
        raise CliError(
            f"split {train_n}/{test_n} not stratifiable over {n_classes} classes",
            EXIT_DOMAIN,
        )
    per_train = train_n // n_classes
    per_test = test_n // n_classes
    _, y = ds.matrix()
    rng = np.random.default_rng(mix_seed(seed, 0))
    train_idx: list[int] = []
    test_idx: list[int] = []
    for ci in range(n_classes):
        idx = np.nonzero(y == ci)[0]
        if len(idx) < per_train + per_test:
            raise CliError(
                f"class {glyph.LABELS[ci]} has {len(idx)} samples, "
                f"need {per_train + per_test}",
                EXIT_DOMAIN,
            )
        rng.shuffle(idx)
        train_idx.extend(int(i) for i in idx[:per_train])
        test_idx.extend(int(i) for i in idx[per_train : per_train + per_test])

    def subset(indices: list[int]) -> synth.Dataset:
        return synth.Dataset(samples=tuple(ds.samples[i] for i in sorted(indices)))

    return subset(train_idx), subset(test_idx)


def format_confusion(confusion: np.ndarray) -> str:
    labels = glyph.LABELS
    lines = ["confusion matrix (rows=true, cols=predicted):"]
    lines.append("     " + "".join(f"{lab:>5}" for lab in labels))
    for i, lab in enumerate(labels):
        lines.append(f"{lab:>5}" + "".join(f"{int(v):>5}" for v in confusion[i]))
    return "\n".join(lines)


def format_metrics(metrics: forest.Metrics, n_samples: int) -> str:
    return "\n".join(
        [
            f"test evaluation ({n_samples} samples)",
            f"accuracy: {metrics.accuracy:.4f}",
            f"precision_macro: {metrics.precision_macro:.4f}",
            f"recall_macro: {metrics.recall_macro:.4f}",
            format_confusion(metrics.confusion),
        ]
    )


def _metrics_json(metrics: forest.Metrics) -> dict:
    return {
        "accuracy": metrics.accuracy,
        "precision_macro": metrics.precision_macro,
        "recall_macro": metrics.recall_macro,
        "confusion": [[int(v) for v in row] for row in metrics.confusion],
        "labels": list(glyph.LABELS),
    }


def cmd_gen_data(args) -> int:
    params = synth.SynthParams(seed=args.seed)
    ds = synth.gen_dataset(args.per_class, params)
    synth.save_dataset(ds, args.out)
    counts = ds.class_counts
    print(f"wrote {len(ds)} samples to {args.out}")
    print(" ".join(f"{lab}={counts[lab]}" for lab in glyph.LABELS))
    return EXIT_OK


def cmd_train(args) -> int:
    ds = synth.load_dataset(args.data)
    train_n, test_n = _parse_split(args.split)
    train_ds, test_ds = _stratified_split(ds, train_n, test_n, args.seed)

    trees_grid = _parse_grid(args.trees_grid)
    depth_grid = _parse_grid(args.depth_grid)
    result = forest.grid_search(train_ds, trees_grid, depth_grid, k=args.k, seed=args.seed)

    best = forest.ForestParams(
        n_trees=result.best_n_trees,
        max_depth=result.best_max_depth,
        seed=mix_seed(args.seed, 2),
    )
    model = forest.forest_fit(train_ds, best)
    metrics = forest.evaluate(model, test_ds)
    forest.save_model(model, args.out)

    if args.json:
        print(
            json.dumps(
                {
                    "grid": [
                        {"n_trees": t, "max_depth": d, "cv_accuracy": s}
                        for t, d, s in result.scores
                    ],
                    "best": {"n_trees": result.best_n_trees, "max_depth": result.best_max_depth},
                    "metrics": _metrics_json(metrics),
                    "model_path": args.out,
                }
            )
        )
        return EXIT_OK

    print(f"grid search: {args.k}-fold stratified CV on {len(train_ds)} training samples")
    print("n_trees  max_depth  cv_accuracy")
    for n_trees, depth, score in result.scores:
        print(f"{n_trees:>7}  {depth:>9}  {score:>11.4f}")
    print(
        f"best config: n_trees={result.best_n_trees} "
        f"max_depth={result.best_max_depth} (cv_accuracy={result.best_score:.4f})"
    )
    print(f"model written to {args.out}")
    print(format_metrics(metrics, len(test_ds)))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = forest.load_model(args.model)
    ds = synth.load_dataset(args.data)
    metrics = forest.evaluate(model, ds)
    if args.json:
        print(json.dumps(_metrics_json(metrics)))
    else:
        print(format_metrics(metrics, len(ds)))
    return EXIT_OK


def cmd_paint(args) -> int:
    if args.letter not in glyph.LABELS:
        raise CliError(
            f"unknown letter {args.letter!r}; valid letters: {' '.join(glyph.LABELS)}",
            EXIT_DOMAIN,
        )
    if args.model:
        model = forest.load_model(args.model)
        if args.letter not in model.label_order:
            raise CliError(f"model does not know letter {args.letter!r}", EXIT_DOMAIN)
    frame = glyph.PaintFrame()
    path = glyph.letter_path(args.letter, frame, speed=args.speed)
    trace = simflight.fly_path(path)
    canvas = simflight.render_exposure(trace, simflight.PaintCanvas.from_frame(frame))
    simflight.save_image(canvas, args.out)
    err = simflight.path_tracking_error(trace, path)
    print(f"wrote {args.out}")
    print(f"max tracking error: {err:.3f} m")
    return EXIT_OK


def _read_stream(path: str) -> list[sig.ImuFrame]:
    frames: list[sig.ImuFrame] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                frames.append(
                    sig.ImuFrame(
                        t=float(rec["t"]),
                        accel=(float(rec["ax"]), float(rec["ay"]), float(rec["az"])),
                        flex=float(rec["flex"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise CliError(f"{path}:{lineno}: bad stream record ({e})", EXIT_ENV)
    return frames


def cmd_classify(args) -> int:
    model = forest.load_model(args.model)
    stream = _read_stream(args.input)
    try:
        capture = sig.gate_capture(stream, args.gate_threshold)
    except sig.NoGesture as e:
        raise CliError(f"no gesture detected ({e})", EXIT_DOMAIN)
    features = sig.featurize(capture)
    label, posteriors = forest.forest_predict(model, features)
    if args.json:
        print(json.dumps({"label": label, "posteriors": [float(p) for p in posteriors]}))
    else:
        print(label)
        print(" ".join(f"{lab}={p:.4f}" for lab, p in zip(model.label_order, posteriors)))
    return EXIT_OK


def cmd_serve(args) -> int:
    config = service.ServiceConfig.from_json(args.config)
    try:
        service.run_server(config)
    except FileNotFoundError as e:
        raise CliError(f"file not found ({e})", EXIT_ENV)
    except OSError as e:
        raise CliError(f"port in use or unavailable ({e})", EXIT_ENV)
    return EXIT_OK


def _load_shared_defaults(argv: list[str]) -> dict:
    """A `--config defaults.json` on any subcommand except serve seeds flag
    defaults (explicit flags still win; serve's --config is its own file)."""
    if argv and argv[0] == "serve":
        return {}
    for i, token in enumerate(argv):
        path = None
        if token == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
        if path is not None:
            with open(path, "r", encoding="utf-8") as f:
                loaded = json.load(f)
            if not isinstance(loaded, dict):
                raise CliError("shared config must be a JSON object", EXIT_ENV)
            return loaded
    return {}


def build_parser(shared: dict | None = None) -> argparse.ArgumentParser:
    d = shared or {}
    parser = argparse.ArgumentParser(
        prog="skywriter",
        description="Letter gestures from accelerometer streams, painted in light by a simulated drone.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic labeled dataset (JSONL)")
    p.add_argument("--out", required=True)
    p.add_argument("--per-class", type=int, default=d.get("per_class", 25))
    p.add_argument("--seed", type=int, default=d.get("seed", 42))
    p.add_argument("--config", help="JSON object with shared flag defaults")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="grid-search, train and evaluate a forest")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="model JSON output path")
    p.add_argument("--split", default=d.get("split", "75/50"), help="train/test sample counts")
    p.add_argument("--k", type=int, default=d.get("k", 5), help="CV folds")
    p.add_argument("--seed", type=int, default=d.get("seed", 42))
    p.add_argument("--trees-grid", default=d.get("trees_grid", ",".join(str(v) for v in GRID_TREES)))
    p.add_argument("--depth-grid", default=d.get("depth_grid", ",".join(str(v) for v in GRID_DEPTHS)))
    p.add_argument("--json", action="store_true")
    p.add_argument("--config", help="JSON object with shared flag defaults")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="metrics of a model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--json", action="store_true")
    p.add_argument("--config", help="JSON object with shared flag defaults")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("paint", help="simulate painting one letter to a PPM image")
    p.add_argument("--letter", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", help="optional model; letter must be one of its labels")
    p.add_argument("--speed", type=float, default=d.get("speed", glyph.DEFAULT_SPEED))
    p.add_argument("--config", help="JSON object with shared flag defaults")
    p.set_defaults(func=cmd_paint)

    p = sub.add_parser("classify", help="classify one recorded stream file (JSONL)")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument(
        "--gate-threshold", type=float, default=d.get("gate_threshold", sig.DEFAULT_GATE_THRESHOLD)
    )
    p.add_argument("--json", action="store_true")
    p.add_argument("--config", help="JSON object with shared flag defaults")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("serve", help="run the streaming gesture service")
    p.add_argument("--config", required=True, help="service config JSON")
    p.set_defaults(func=cmd_serve)

    return parser


_DOMAIN_ERRORS = (
    sig.NoGesture,
    forest.TooFewPerClass,
    forest.MissingClass,
    glyph.UnknownLabel,
    glyph.FrameTooLow,
    simflight.DivergenceError,
)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        shared = _load_shared_defaults(argv)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ENV
    args = build_parser(shared).parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except _DOMAIN_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except (synth.FormatError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ENV


if __name__ == "__main__":
    sys.exit(main())
