"""cnn-trainer command line: render, train, predict.

Exit codes: 0 ok, 2 usage error, 1 domain error with a one-line JSON
object on stderr ({"error": <class>, "message": ...}).
"""

import argparse
import json
import sys

from .errors import CnnTrainerError


def _cmd_render(args):
    from .data import build_rendered_dataset

    n = build_rendered_dataset(args.records, args.outdir,
                               stats_path=args.stats, limit=args.limit)
    print(f"rendered {n} samples into {args.outdir}")
    return 0


def _cmd_train(args):
    from .training import TrainConfig, train

    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise CnnTrainerError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise CnnTrainerError(f"config is not JSON: {exc}") from None
    log = train(args.data, TrainConfig.from_dict(cfg), args.outdir,
                progress=None if args.quiet else
                lambda e: print(f"epoch {e['epoch']:3d}  lr {e['lr']:.2e}  "
                                f"train {e['train_loss']:.5f}  "
                                f"val {e['val_loss']:.5f}"))
    print(f"best epoch {log['best_epoch']}  "
          f"val rmse {log['best_val_rmse']:.5f}  -> {args.outdir}")
    return 0


def _cmd_predict(args):
    from .connector import answer_request

    print(answer_request(sys.stdin.read(), args.artifact))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cnn-trainer",
        description="Image-regression estimator for resistive-switching "
                    "I-V curves.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render dataset traces into the "
                                      "training image archive")
    p.add_argument("--records", required=True,
                   help="records JSON-lines file (needs trace_path entries)")
    p.add_argument("--stats", default=None,
                   help="stats sidecar (default: <records>.stats.json)")
    p.add_argument("--outdir", required=True)
    p.add_argument("--limit", type=int, default=None,
                   help="render only the first N records")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("train", help="train on a rendered dataset dir")
    p.add_argument("--data", required=True, help="directory from `render`")
    p.add_argument("--outdir", required=True, help="artifact directory")
    p.add_argument("--config", default=None,
                   help="TrainConfig overrides as JSON")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict",
                       help="estimate connector: request JSON on stdin, "
                            "response JSON on stdout")
    p.add_argument("--artifact", required=True)
    p.set_defaults(func=_cmd_predict)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CnnTrainerError as exc:
        print(json.dumps({"error": type(exc).__name__,
                          "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
