"""Command-line entry point: ``panobench <subcommand> ...``.

Exit codes: 0 success, 1 usage or manifest error, 2 partial item failure.
"""

import argparse
import csv
import json
import logging
import math
import os
import sys
from collections import defaultdict
from pathlib import Path

from . import __version__, control, curation, elements, evaluation, geometry, io, metrics, scoring

logger = logging.getLogger("panobench")

EXIT_OK, EXIT_USAGE, EXIT_PARTIAL = 0, 1, 2


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def resolve_seed(seed):
    if seed is not None:
        return seed
    env = os.environ.get("PANOBENCH_SEED")
    if env:
        try:
            return int(env)
        except ValueError as e:
            raise UsageError(f"PANOBENCH_SEED must be an integer, got {env!r}") from e
    return 0


def _registry(path):
    return metrics.ClassRegistry.load(path) if path else metrics.default_registry()


def _csv_list(s):
    return [x.strip() for x in s.split(",") if x.strip()] if s else []


def cmd_project(a):
    pano = io.read_panorama(a.panorama)
    cam = geometry.CameraSpec(math.radians(a.yaw), math.radians(a.pitch), math.radians(a.hfov),
                              a.width, a.height)
    io.write_image(a.out, geometry.render_nfov(pano, cam), bits=a.bits)
    print(a.out)


def cmd_iou(a):
    reg = _registry(a.registry)
    pred = io.read_class_raster(a.pred, reg)
    ref = io.read_class_raster(a.ref, reg)
    classes = _csv_list(a.classes) or list(metrics.DEFAULT_CLASSES)
    rep = metrics.spatial_consistency(pred, ref, classes)
    for name, v in rep.per_class.items():
        print(f"{name}\t{'ABSENT' if v is None else f'{v:.4f}'}")
    print(f"Average\t{rep.average:.4f}")
    if a.csv:
        metrics.append_report_csv(a.csv, a.label or Path(a.pred).stem, rep, classes)


def cmd_fuse_control(a):
    reg = _registry(a.registry)
    normals = io.read_normals(a.normals)
    inst = io.read_class_raster(a.instances, reg)
    sig = control.fuse_control(normals, inst, a.normal_source_id or Path(a.normals).name,
                               a.segmentation_source_id or Path(a.instances).name)
    io.save_control(a.out_dir, sig, a.stem)
    print(Path(a.out_dir) / f"{a.stem}.json")


def cmd_latent_mask(a):
    z = io.read_latent(a.input)
    masked, rec = control.latent_mask(z, a.keep_prob, a.patch, resolve_seed(a.seed))
    io.write_latent(a.out, masked)
    if a.mask_out:
        doc = rec.to_dict()
        doc["blocks"] = rec.blocks.astype(int).tolist()
        Path(a.mask_out).write_text(json.dumps(doc, sort_keys=True) + "\n")
    print(f"kept {int(rec.blocks.sum())}/{rec.blocks.size} blocks")


def _read_jsonl(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def cmd_mask_elements(a):
    cfg = elements.MaskingConfig(a.p_attr_fur, a.p_cat_dec, a.p_attr_dec)
    seed = resolve_seed(a.seed)
    lines = []
    for n, rec in enumerate(_read_jsonl(a.input)):
        E = elements.ElementSet.from_dict(rec)
        target = rec.get("description", "")
        # per-record seed so records stay independent of file order
        out = elements.build_training_record(E, cfg, seed + n, target)
        lines.append(elements.record_to_line(out))
    text = "\n".join(lines) + ("\n" if lines else "")
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_transfer(a):
    E = elements.ElementSet.from_dict(json.loads(Path(a.input).read_text()))
    compat = None
    if a.compatibility:
        compat = json.loads(Path(a.compatibility).read_text())["compatibility"]
    out = elements.transfer_attributes(E, _csv_list(a.place_categories), compat)
    print(json.dumps(out.to_dict(), sort_keys=True))


def cmd_curate(a):
    items = curation.load_items(a.items)
    cfg = curation.CurationConfig(
        quality=curation.QualityConfig(**(a.quality or {})),
        budget=a.budget, k=a.k, rep_ratio=a.rep_ratio, max_iters=a.max_iters,
        seed=resolve_seed(a.seed))
    manifests = curation.run_curation(items, cfg)
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for stage, m in manifests.items():
        (out / f"stage{stage}.json").write_text(m.to_json())
        print(f"stage {stage}: {len(m.items)} items")


def cmd_schedule(a):
    r = scoring.mix_schedule(a.step, a.warmup)
    print(f"{r.p_single!r} {r.p_multi!r}")


def cmd_reward(a):
    v = scoring.RewardVector(a.structural_iou, a.omniaid, a.longclip, a.hpsv3)
    weights = None
    if a.weights:
        w = [float(x) for x in _csv_list(a.weights)]
        if len(w) != 4:
            raise UsageError("--weights needs four comma-separated values")
        weights = dict(zip(scoring.REWARD_CHANNELS, w))
    print(f"{scoring.composite_reward(v, weights):.6f}")


def cmd_expert_score(a):
    total = scoring.expert_total(scoring.ScoreCard(a.aesthetic, a.spatial, a.plausibility))
    print(f"{scoring.display_round(total):.2f} {scoring.grade(total)}")


def cmd_std_report(a):
    samples = defaultdict(list)
    labels = {}
    with open(a.input, newline="") as f:
        for row in csv.DictReader(f):
            samples[row["group_id"]].append(float(row["value"]))
            if row.get("label"):
                labels[row["group_id"]] = row["label"]
    rep = scoring.group_std_report(list(samples.items()), labels, a.numerator, a.denominator)
    out = sys.stdout if not a.out else open(a.out, "w", newline="")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["group_id", "label", "n", "mean", "std"])
        for g in rep.groups:
            w.writerow([g.group_id, g.label, g.n, repr(g.mean), repr(g.std)])
    finally:
        if a.out:
            out.close()
    for label, s in rep.mean_std.items():
        print(f"# mean std [{label}] = {s:.6f}", file=sys.stderr)
    if rep.ratio is not None:
        flag = " (flagged: >1)" if rep.flagged else ""
        print(f"# ratio {rep.numerator}/{rep.denominator} = {rep.ratio:.6f}{flag}", file=sys.stderr)


def cmd_report(a):
    scores = scoring.read_long_scores(a.scores)
    by_model = defaultdict(list)
    for (model, _sid), m in sorted(scores.items()):
        by_model[model].append(m)
    if a.kind == "expert":
        cards = {model: [scoring.ScoreCard(m["aesthetic"], m["spatial_consistency"], m["plausibility"])
                         for m in ms] for model, ms in by_model.items()}
        rows = scoring.expert_table(cards)
        scoring.write_table(a.out, scoring.EXPERT_COLUMNS, rows, places=a.places)
    else:
        cols = ["model", *metrics.DEFAULT_CLASSES, "Average", "hpsv3", "clip", "omniaid"]
        rows = []
        for model, ms in by_model.items():
            row = {"model": model}
            for c in cols[1:]:
                vals = [m[c] for m in ms if c in m]
                row[c] = math.fsum(vals) / len(vals) if vals else None
            if row["Average"] is None:
                per = [row[c] for c in metrics.DEFAULT_CLASSES if row[c] is not None]
                row["Average"] = math.fsum(per) / len(per) if per else None
            rows.append(row)
        scoring.write_table(a.out, cols, rows, places=a.places)
    print(a.out)


def cmd_eval(a):
    try:
        rep = evaluation.run_eval(a.manifest, a.out_dir, a.jobs)
    except evaluation.ManifestError as e:
        print(f"panobench eval: {e}", file=sys.stderr)
        return EXIT_USAGE
    failed = [r for r in rep.items if r.status != "OK"]
    for r in failed:
        print(f"FAILED {r.id}: {r.error}", file=sys.stderr)
    avg = rep.aggregate.get("Average", math.nan)
    print(f"{len(rep.items) - len(failed)}/{len(rep.items)} items ok; Average {avg:.4f}")
    return rep.exit_code


def build_parser():
    p = Parser(prog="panobench", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", help="JSON file; per-subcommand blocks override flag defaults")
    p.add_argument("--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    s = sub.add_parser("project", help="render an NFoV view from a panorama")
    s.add_argument("--panorama", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--yaw", type=float, default=0.0, help="degrees")
    s.add_argument("--pitch", type=float, default=0.0, help="degrees")
    s.add_argument("--hfov", type=float, default=90.0, help="degrees")
    s.add_argument("--width", type=int, default=512)
    s.add_argument("--height", type=int, default=512)
    s.add_argument("--bits", type=int, choices=(8, 16), default=8)
    s.set_defaults(func=cmd_project)

    s = sub.add_parser("iou", help="per-class IoU for one raster pair")
    s.add_argument("--pred", required=True)
    s.add_argument("--ref", required=True)
    s.add_argument("--registry")
    s.add_argument("--classes", help="comma-separated class names")
    s.add_argument("--csv", help="append the report row to this CSV")
    s.add_argument("--label")
    s.set_defaults(func=cmd_iou)

    s = sub.add_parser("fuse-control", help="stack normals and instance raster")
    s.add_argument("--normals", required=True)
    s.add_argument("--instances", required=True)
    s.add_argument("--registry")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--stem", default="control")
    s.add_argument("--normal-source-id")
    s.add_argument("--segmentation-source-id")
    s.set_defaults(func=cmd_fuse_control)

    s = sub.add_parser("latent-mask", help="block-wise mask of a latent blob")
    s.add_argument("--input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--keep-prob", type=float, required=True)
    s.add_argument("--patch", type=int, default=1)
    s.add_argument("--seed", type=int)
    s.add_argument("--mask-out")
    s.set_defaults(func=cmd_latent_mask)

    s = sub.add_parser("mask-elements", help="build masked training records (JSONL in/out)")
    s.add_argument("--input", required=True)
    s.add_argument("--out")
    s.add_argument("--p-attr-fur", type=float, default=0.3)
    s.add_argument("--p-cat-dec", type=float, default=0.5)
    s.add_argument("--p-attr-dec", type=float, default=0.5)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_mask_elements)

    s = sub.add_parser("transfer", help="filter reference elements against a place image")
    s.add_argument("--input", required=True)
    s.add_argument("--place-categories", required=True)
    s.add_argument("--compatibility")
    s.set_defaults(func=cmd_transfer)

    s = sub.add_parser("curate", help="run the three-stage curation")
    s.add_argument("--items", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--budget", type=int, default=0)
    s.add_argument("--k", type=int, default=0)
    s.add_argument("--rep-ratio", type=float, default=0.5)
    s.add_argument("--max-iters", type=int, default=100)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_curate, quality=None)

    s = sub.add_parser("schedule", help="single/multi-condition task mix at a step")
    s.add_argument("--step", type=int, required=True)
    s.add_argument("--warmup", type=int, required=True)
    s.set_defaults(func=cmd_schedule)

    s = sub.add_parser("reward", help="composite reward of four channels")
    s.add_argument("--structural-iou", type=float, required=True)
    s.add_argument("--omniaid", type=float, required=True)
    s.add_argument("--longclip", type=float, required=True)
    s.add_argument("--hpsv3", type=float, required=True)
    s.add_argument("--weights", help="four comma-separated weights")
    s.set_defaults(func=cmd_reward)

    s = sub.add_parser("expert-score", help="weighted expert total and grade")
    s.add_argument("--aesthetic", type=float, required=True)
    s.add_argument("--spatial", type=float, required=True)
    s.add_argument("--plausibility", type=float, required=True)
    s.set_defaults(func=cmd_expert_score)

    s = sub.add_parser("std-report", help="per-group spread from group_id,label,value CSV")
    s.add_argument("--input", required=True)
    s.add_argument("--out")
    s.add_argument("--numerator", default="dpo")
    s.add_argument("--denominator", default="nft")
    s.set_defaults(func=cmd_std_report)

    s = sub.add_parser("report", help="aggregate long-format scores into a table")
    s.add_argument("--scores", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--kind", choices=("expert", "machine"), default="expert")
    s.add_argument("--places", type=int, default=4)
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("eval", help="batch evaluation from a run manifest")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_eval)
    return p, sub


def _load_config(argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    try:
        cfg = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config {known.config}: {e}") from e
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = _load_config(argv)
    except UsageError as e:
        print(f"panobench: {e}", file=sys.stderr)
        return EXIT_USAGE
    parser, sub = build_parser()
    for name, block in cfg.items():
        if name in sub.choices and isinstance(block, dict):
            defaults = {k.replace("-", "_"): v for k, v in block.items()}
            sub.choices[name].set_defaults(**defaults)
            for action in sub.choices[name]._actions:
                if action.dest in defaults:
                    action.required = False  # satisfied by the config block
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        code = args.func(args)
    except (UsageError, ValueError, KeyError, FileNotFoundError) as e:
        print(f"panobench {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
