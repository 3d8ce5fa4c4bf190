"""Command-line entry point: ``tamatrack {track,eval,synth,decimate}``.

Exit codes: 0 success, 1 usage error, 2 malformed input, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from functools import reduce
from pathlib import Path

from . import io
from .appearance import EmbeddingScorer, HistogramScorer, OracleScorer, SyntheticPairFeature
from .assoc import AppearanceModel
from .core import LIKELIHOOD_MODES, AppearanceDescriptor, ConfigError, InvalidValue, TrackingError
from .engine import run_sequence
from .evaluation import (ScenarioSpec, clear_mot, crossing_spec, decimate, generate_scenario,
                         identity_metrics, nms, noisy_scene_spec)
from .tama import load_lstm_weights

log = logging.getLogger("tamatrack")

EXIT_USAGE, EXIT_INPUT, EXIT_RUNTIME = 1, 2, 3

BUILTIN_SCENES = {"crossing": crossing_spec, "noisy": noisy_scene_spec}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tamatrack", description="Online multi-target tracker.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("track", help="track a detection file")
    p.add_argument("--det", required=True, help="MOT-format detection file")
    p.add_argument("--config", required=True, help="'key = value' tracker config file")
    p.add_argument("--mode", required=True, choices=LIKELIHOOD_MODES)
    p.add_argument("--scorer", required=True, choices=["histogram", "embedding", "oracle", "file"])
    p.add_argument("--weights", help="LSTM weight file (deep_tama)")
    p.add_argument("--features", help="per-detection feature file")
    p.add_argument("--patches", help="directory of <frame>_<det_index>.ppm crops")
    p.add_argument("--tags", help="frame,det_index,tag identity file (oracle scorer)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="score a result file against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--res", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--json", action="store_true", help="print one JSON object")

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--spec", required=True, help="scenario JSON file, or 'crossing' / 'noisy'")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out-prefix", required=True)

    p = sub.add_parser("decimate", help="drop frames to a lower fixed frame rate")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--fps-orig", required=True, type=int)
    p.add_argument("--fps-new", required=True, type=int)
    p.add_argument("--out", help="output file (default: stdout)")
    return parser


def _frame_stamps(frames) -> list[int]:
    """Every frame the tracker steps through: detection frames spaced by their common stride."""
    if not frames:
        return []
    first, last = min(frames), max(frames)
    stride = reduce(math.gcd, (f - first for f in frames), 0) or 1
    return list(range(first, last + 1, stride))


def _attach(dets_by_frame, args, cfg):
    features = io.parse_feature_file(args.features) if args.features else None
    tags = io.parse_tag_file(args.tags) if args.tags else None
    patches = Path(args.patches) if args.patches else None
    out = {}
    for frame, dets in dets_by_frame.items():
        attached = []
        for det in dets:
            key = (frame, det.index)
            vector = patch = tag = None
            if features is not None:
                if key not in features:
                    raise InvalidValue(f"no feature row for frame {frame}, detection {det.index}")
                vector = features[key]
            elif patches is not None:
                path = patches / f"{frame}_{det.index}.ppm"
                if not path.exists():
                    raise InvalidValue(f"missing patch {path}")
                patch = io.load_patch(path).patch
            if tags is not None:
                tag = tags.get(key)
            if vector is None and patch is None and tag is None:
                attached.append(det)
                continue
            attached.append(replace(det, descriptor=AppearanceDescriptor(patch=patch, vector=vector, tag=tag)))
        out[frame] = attached
    return out


def _model(args, cfg) -> AppearanceModel:
    needs_appearance = cfg.likelihood_mode != "iou_only"
    if args.scorer == "oracle":
        if needs_appearance and not args.tags:
            raise UsageError("--scorer oracle needs --tags")
        scorer = OracleScorer(cfg.oracle_same, cfg.oracle_diff, cfg.oracle_noise)
    elif args.scorer == "histogram":
        if needs_appearance and not (args.patches or args.features):
            raise UsageError("--scorer histogram needs --patches or --features")
        scorer = HistogramScorer()
    else:
        if needs_appearance and not args.features:
            raise UsageError(f"--scorer {args.scorer} needs --features")
        scorer = EmbeddingScorer()
    model = AppearanceModel(scorer=scorer)
    if cfg.likelihood_mode == "deep_tama":
        if not args.weights:
            raise UsageError("--mode deep_tama needs --weights")
        if not (args.features or args.patches):
            raise UsageError("--mode deep_tama needs --features or --patches")
        model.provider = SyntheticPairFeature()
        model.weights = load_lstm_weights(args.weights)
    return model


def cmd_track(args) -> int:
    cfg = io.parse_config(args.config)
    cfg = cfg.with_(likelihood_mode=args.mode)
    model = _model(args, cfg)
    dets = io.parse_detections(args.det)
    dets = {f: nms(d, cfg.nms_iou, cfg.conf_min) for f, d in dets.items()}
    dets = _attach(dets, args, cfg)
    rows = run_sequence(dets, cfg, model, frames=_frame_stamps(list(dets)))
    io.write_results(rows, args.out)
    log.info("wrote %d rows for %d tracks to %s", len(rows), len({r.id for r in rows}), args.out)
    return 0


def cmd_eval(args) -> int:
    gt = io.parse_gt(args.gt)
    res = io.parse_results(args.res)
    mot = clear_mot(gt, res, args.iou)
    ident = identity_metrics(gt, res, args.iou)
    summary = mot.summary()
    summary.update(idf1=ident.idf1, idp=ident.idp, idr=ident.idr)
    summary = {k: (float(v) if isinstance(v, float) else v) for k, v in summary.items()}
    if args.json:
        print(json.dumps(summary, sort_keys=True))
    else:
        for key in ("mota", "motp", "idf1", "idp", "idr", "fp", "fn", "idsw", "fragmentations",
                    "mt", "ml", "num_gt", "num_ids"):
            value = summary[key]
            print(f"{key:>15}: {value:.4f}" if isinstance(value, float) else f"{key:>15}: {value}")
    return 0


def cmd_synth(args) -> int:
    if args.spec in BUILTIN_SCENES:
        spec = BUILTIN_SCENES[args.spec](seed=args.seed)
    else:
        try:
            data = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise io.MalformedRow(exc.lineno, f"bad scenario JSON ({exc.msg})", args.spec) from None
        spec = ScenarioSpec.from_dict({**data, "seed": args.seed})
    scene = generate_scenario(spec)
    prefix = args.out_prefix
    io.write_detections(scene.detections, f"{prefix}det.txt")
    io.write_gt(scene.gt, f"{prefix}gt.txt")
    dets = [d for f in sorted(scene.detections) for d in scene.detections[f]]
    io.write_feature_file({(d.frame, d.index): d.descriptor.vector for d in dets}, f"{prefix}features.txt")
    io.write_tag_file({(d.frame, d.index): d.descriptor.tag for d in dets}, f"{prefix}tags.txt")
    log.info("wrote %d detections over %d frames with prefix %s", len(dets), spec.n_frames, prefix)
    return 0


def cmd_decimate(args) -> int:
    rows = decimate(io.parse_mot_rows(args.input), args.fps_orig, args.fps_new)
    if args.out:
        io.write_mot_rows(rows, args.out)
    else:
        for r in rows:
            print(",".join(io.fmt_num(v) for v in (r.frame, r.id, r.left, r.top, r.width, r.height,
                                                      r.conf, r.x, r.y, r.z)))
    return 0


COMMANDS = {"track": cmd_track, "eval": cmd_eval, "synth": cmd_synth, "decimate": cmd_decimate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"tamatrack {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrackingError, ValueError) as exc:
        print(f"tamatrack {args.command}: malformed input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"tamatrack {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        print(f"tamatrack {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
