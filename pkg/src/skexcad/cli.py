"""Batch command-line surface for corpus-scale runs.

Exit codes: 0 success, 1 usage error, 2 validation/parse failure,
3 provider or transport failure.  Failures emit a machine-readable JSON
object on stderr.  All randomness flows from --seed through a per-item hash,
so adding corpus items never changes existing rows and any --jobs value
produces byte-identical output.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import cadify, dsl, geom, ir, metrics, provider, unify, validation
from .errors import CadError, ProviderError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_PROVIDER = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class InvalidProgram(CadError):
    pass


def stream_seed(seed: int, key: str) -> int:
    """Per-item seed derived from the global seed and the item key."""
    digest = hashlib.sha256(f"{seed}:{key}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


def load_program(path: Path) -> ir.CadProgram:
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith(".json"):
        return ir.from_json(text)
    result = dsl.parse(text)
    if result.program is None:
        details = "; ".join(f"line {d.line}: {d.message}" for d in result.errors)
        raise InvalidProgram(f"{path}: {details}")
    return result.program


def compiled(program: ir.CadProgram, args) -> geom.LabeledMesh:
    return geom.compile_program(
        program, tess_tol=args.tess_tol, closure_tol=args.closure_tol
    )


def program_cloud(path: Path, args, seed: int) -> metrics.LabeledPointCloud:
    if str(path).endswith(".xyzl"):
        return metrics.LabeledPointCloud.from_text(Path(path).read_text(encoding="utf-8"))
    mesh = compiled(load_program(path), args)
    return metrics.sample_surface(mesh, args.samples, seed)


def _write_or_print(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# --- subcommands --------------------------------------------------------------

def cmd_parse(args) -> int:
    text = Path(args.input).read_text(encoding="utf-8")
    result = dsl.parse(text)
    for d in result.diagnostics:
        print(f"{d.severity}: line {d.line}: {d.message}", file=sys.stderr)
    if result.program is None:
        return EXIT_INVALID
    _write_or_print(ir.to_json(result.program) + "\n", args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    program = load_program(Path(args.input))
    report = validation.validate(
        program, closure_tol=args.closure_tol, tess_tol=args.tess_tol
    )
    _write_or_print(json.dumps(report.to_dict(), indent=2) + "\n", args.out)
    return EXIT_OK if report.valid else EXIT_INVALID


def cmd_mesh(args) -> int:
    program = load_program(Path(args.input))
    mesh = compiled(program, args)
    obj_path = args.out or str(Path(args.input).with_suffix(".obj"))
    labels_path = args.labels or str(Path(obj_path).with_suffix(".labels.json"))
    geom.export_obj(mesh, obj_path, labels_path)
    print(f"wrote {obj_path} ({len(mesh)} triangles) and {labels_path}")
    return EXIT_OK


def cmd_sample(args) -> int:
    cloud = program_cloud(Path(args.input), args, args.seed)
    _write_or_print(cloud.to_text(), args.out)
    return EXIT_OK


def _matched_seg_scores(pred_prog, gt_prog, pred_cloud, gt_cloud, embedder):
    """Transfer pred labels onto gt points, in the gt part-index space."""
    pred_labels = [p.label for p in pred_prog.parts]
    gt_labels = [p.label for p in gt_prog.parts]
    cost = cadify.label_cost_matrix(pred_labels, gt_labels, embedder)
    assignment = cadify.solve_assignment(cost)
    mapping = {i: j for i, j in assignment.pairs}
    relabeled = [mapping.get(int(label), -1) for label in pred_cloud.labels]
    pred_in_gt_space = metrics.LabeledPointCloud(pred_cloud.points, relabeled)
    transferred = metrics.transfer_labels(gt_cloud.points, pred_in_gt_space)
    return metrics.seg_scores(transferred, gt_cloud)


def _evaluate_pair(pred_path: Path, gt_path: Path, args, seed: int) -> dict:
    gt_prog = load_program(gt_path)
    gt_mesh = compiled(gt_prog, args)
    gt_cloud = metrics.sample_surface(gt_mesh, args.samples, seed)

    row = {"prog_succ": 0, "cd": None, "seg_acc": None, "seg_miou": None, "part_iou": None}
    text = pred_path.read_text(encoding="utf-8")
    result = dsl.parse(text)
    if result.program is None:
        return row
    report = validation.validate(
        result.program, closure_tol=args.closure_tol, tess_tol=args.tess_tol
    )
    if not report.valid:
        return row
    pred_prog = report.repaired or result.program
    row["prog_succ"] = 1

    pred_mesh = compiled(pred_prog, args)
    pred_cloud = metrics.sample_surface(pred_mesh, args.samples, seed)
    embedder = provider.stub_embedder(seed=args.seed)
    acc, miou, _ = _matched_seg_scores(pred_prog, gt_prog, pred_cloud, gt_cloud, embedder)
    row["cd"] = metrics.chamfer(pred_cloud, gt_cloud, squared=args.squared)
    row["seg_acc"] = acc
    row["seg_miou"] = miou
    row["part_iou"] = metrics.part_iou(
        [p.label for p in pred_prog.parts], [p.label for p in gt_prog.parts], embedder
    )
    return row


def cmd_metrics(args) -> int:
    seed = stream_seed(args.seed, f"{args.pred}|{args.gt}")
    pred_cloud = program_cloud(Path(args.pred), args, seed)
    gt_cloud = program_cloud(Path(args.gt), args, seed)

    if str(args.pred).endswith(".xyzl") or str(args.gt).endswith(".xyzl"):
        # raw clouds carry no label text; score in the shared index space
        transferred = metrics.transfer_labels(gt_cloud.points, pred_cloud)
        acc, miou, per_label = metrics.seg_scores(transferred, gt_cloud)
    else:
        pred_prog = load_program(Path(args.pred))
        gt_prog = load_program(Path(args.gt))
        embedder = provider.stub_embedder(seed=args.seed)
        acc, miou, per_label = _matched_seg_scores(
            pred_prog, gt_prog, pred_cloud, gt_cloud, embedder
        )
    report = metrics.MetricsReport(
        chamfer=metrics.chamfer(pred_cloud, gt_cloud, squared=args.squared),
        seg_acc=acc,
        seg_miou=miou,
        per_label_iou=per_label,
        chamfer_mode=metrics.CHAMFER_MODES[1 if args.squared else 0],
    )
    _write_or_print(json.dumps(report.to_dict(), indent=2) + "\n", args.out)
    print("model\tCD\tSeg Acc (%)\tSeg mIoU (%)")
    print(f"{Path(args.pred).stem}\t{report.chamfer:.4f}\t{acc * 100:.2f}\t{miou * 100:.2f}")
    return EXIT_OK


def cmd_cadify(args) -> int:
    corpus = Path(args.input)
    out_dir = Path(args.out or corpus / "cadified")
    out_dir.mkdir(parents=True, exist_ok=True)
    embedder = provider.stub_embedder(seed=args.seed)
    audit = {}
    for pred_path in sorted(corpus.glob("*_pred.cad")):
        key = pred_path.name[: -len("_pred.cad")]
        boxes_path = corpus / f"{key}_gt_boxes.json"
        if not boxes_path.is_file():
            audit[key] = {"error": "missing gt boxes"}
            continue
        program = load_program(pred_path)
        gt_parts = json.loads(boxes_path.read_text(encoding="utf-8"))["parts"]
        gt_labels = [p["label"] for p in gt_parts]
        pred_labels = [p.label for p in program.parts]
        assignment = cadify.solve_assignment(
            cadify.label_cost_matrix(pred_labels, gt_labels, embedder)
        )
        kept = []
        for pred_idx, gt_idx in assignment.pairs:
            box = geom.Box3(
                tuple(gt_parts[gt_idx]["box"]["min"]), tuple(gt_parts[gt_idx]["box"]["max"])
            )
            kept.append(cadify.rescale_part(program.parts[pred_idx], box, args.tess_tol))
        if not kept:
            audit[key] = {"error": "no parts matched"}
            continue
        fixed = ir.CadProgram(parts=tuple(kept))
        (out_dir / f"{key}_cadified.cad").write_text(dsl.print_program(fixed), encoding="utf-8")
        audit[key] = {
            "pairs": [list(p) for p in assignment.pairs],
            "dropped_pred": list(assignment.unmatched_pred),
            "unmatched_gt": list(assignment.unmatched_gt),
            "total_cost": assignment.total_cost,
        }
    (out_dir / "audit.json").write_text(json.dumps(audit, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out_dir}/audit.json ({len(audit)} items)")
    return EXIT_OK


def cmd_infer(args) -> int:
    if args.provider == "fixture":
        if not args.fixtures:
            raise UsageError("--fixtures DIR is required with the fixture provider")
        src = provider.fixture_provider(args.fixtures)
    else:
        src = provider.http_vlm_provider(
            args.endpoint, template_id=args.template, cache_dir=args.cache_dir
        )
    response = src.request(args.key, args.template)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    raw_path = out_dir / f"{args.key}.response.txt"
    raw_path.write_text(response, encoding="utf-8")
    result = dsl.parse(response)
    if result.program is None:
        print(f"wrote {raw_path}; response did not parse", file=sys.stderr)
        return EXIT_INVALID
    json_path = out_dir / f"{args.key}.program.json"
    json_path.write_text(ir.to_json(result.program) + "\n", encoding="utf-8")
    print(f"wrote {raw_path} and {json_path}")
    return EXIT_OK


_EVAL_COLUMNS = ("prog_succ", "cd", "seg_acc", "seg_miou", "part_iou")


def cmd_eval(args) -> int:
    corpus = Path(args.input)
    items = []
    for gt_path in sorted(corpus.glob("*_gt.cad")):
        key = gt_path.name[: -len("_gt.cad")]
        for suffix in ("_pred.cad", "_pred.txt"):
            pred_path = corpus / f"{key}{suffix}"
            if pred_path.is_file():
                items.append((key, pred_path, gt_path))
                break
    if not items:
        raise UsageError(f"no (pred, gt) pairs found in {corpus}")

    def run(item):
        key, pred_path, gt_path = item
        return key, _evaluate_pair(pred_path, gt_path, args, stream_seed(args.seed, key))

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        rows = dict(pool.map(run, items))

    def fmt(value):
        if value is None:
            return ""
        if isinstance(value, int):
            return str(value)
        return f"{value:.6f}"

    lines = ["item," + ",".join(_EVAL_COLUMNS)]
    for key in sorted(rows):
        lines.append(key + "," + ",".join(fmt(rows[key][c]) for c in _EVAL_COLUMNS))
    means = []
    for c in _EVAL_COLUMNS:
        values = [rows[k][c] for k in rows if rows[k][c] is not None]
        means.append(f"{sum(values) / len(values):.6f}" if values else "")
    lines.append("mean," + ",".join(means))
    csv_text = "\n".join(lines) + "\n"
    out_path = Path(args.out) if args.out else corpus / "eval.csv"
    if args.out and Path(args.out).is_dir():
        out_path = Path(args.out) / "eval.csv"
    out_path.write_text(csv_text, encoding="utf-8")
    print(f"wrote {out_path} ({len(items)} items)")
    return EXIT_OK


def cmd_encode(args) -> int:
    program = load_program(Path(args.input))
    box = unify.fit_normalization_box(program, pad=args.pad)
    encoded = unify.encode(program, box)
    extras = {}
    if args.with_embeddings:
        embedder = provider.stub_embedder(seed=args.seed)
        image_key = program.provenance or args.input
        image_embedding = embedder.embed(f"image {image_key}")
        for idx, part in enumerate(program.parts):
            part_box = geom.part_bounding_box(part, tess_tol=args.tess_tol)
            extras[idx] = {
                "center": list(part_box.center),
                "label_embedding": [float(x) for x in embedder.embed(part.label)],
                "image_embedding": [float(x) for x in image_embedding],
            }
    _write_or_print(unify.encoded_to_json(encoded, box, extras or None) + "\n", args.out)
    return EXIT_OK


def cmd_decode(args) -> int:
    encoded, box = unify.encoded_from_json(Path(args.input).read_text(encoding="utf-8"))
    result = unify.decode(encoded, box)
    if result.clamped:
        print(f"warning: clamped {result.clamped} out-of-range slots", file=sys.stderr)
    _write_or_print(dsl.print_program(result.program), args.out)
    return EXIT_OK


# --- argument plumbing ---------------------------------------------------------

def build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tess-tol", type=float, default=None, dest="tess_tol")
    common.add_argument("--closure-tol", type=float, default=None, dest="closure_tol")
    common.add_argument("--samples", type=int, default=8000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out", default=None)
    common.add_argument("--squared", action="store_true", help="use squared chamfer distances")

    parser = _Parser(prog="skexcad", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[common], help="program text to canonical JSON")
    p.add_argument("input")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("validate", parents=[common], help="sketch validity report")
    p.add_argument("input")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("mesh", parents=[common], help="compile to OBJ + label sidecar")
    p.add_argument("input")
    p.add_argument("--labels", default=None)
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("sample", parents=[common], help="surface point cloud (x y z label)")
    p.add_argument("input")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("metrics", parents=[common], help="chamfer + segmentation report")
    p.add_argument("pred")
    p.add_argument("gt")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("cadify", parents=[common], help="match, fit and rescale predictions")
    p.add_argument("input")
    p.set_defaults(func=cmd_cadify)

    p = sub.add_parser("infer", parents=[common], help="query the structure provider")
    p.add_argument("key")
    p.add_argument("--provider", choices=("fixture", "http"), default="fixture")
    p.add_argument("--fixtures", default=None)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--template", default="+cot", choices=provider.TEMPLATE_IDS)
    p.add_argument("--cache-dir", default="cache", dest="cache_dir")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", parents=[common], help="corpus CSV with per-item metrics")
    p.add_argument("input")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("encode", parents=[common], help="program to unified token JSON")
    p.add_argument("input")
    p.add_argument("--pad", type=float, default=0.0)
    p.add_argument("--with-embeddings", action="store_true", dest="with_embeddings")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", parents=[common], help="unified token JSON to program text")
    p.add_argument("input")
    p.set_defaults(func=cmd_decode)

    return parser


def _error_json(kind: str, message: str):
    print(json.dumps({"error": {"type": kind, "message": message}}), file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _error_json("usage", str(exc))
        return EXIT_USAGE
    except ProviderError as exc:
        _error_json(type(exc).__name__, str(exc))
        return EXIT_PROVIDER
    except (CadError, OSError, json.JSONDecodeError) as exc:
        _error_json(type(exc).__name__, str(exc))
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
