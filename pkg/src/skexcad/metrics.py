"""Evaluation suite: Chamfer distance, segmentation transfer scores, part-set
IoU over semantic labels, and the program success rate.

Chamfer here is the symmetric mean of Euclidean nearest-neighbor distances
with a factor of one half; a squared variant is available for comparison
against conventions that report squared distances.  Every report carries the
mode so numbers are never compared across conventions silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import cadify, dsl, validation
from .errors import GeometryError
from .geom import LabeledMesh, triangle_areas

CHAMFER_MODES = ("symmetric-mean-euclidean", "symmetric-mean-squared")


class LabeledPointCloud:
    """Points with one part label each; arrays are read-only."""

    def __init__(self, points, labels):
        self.points = np.ascontiguousarray(points, dtype=float).reshape(-1, 3)
        self.labels = np.ascontiguousarray(labels, dtype=np.int64).reshape(-1)
        if len(self.points) != len(self.labels):
            raise GeometryError("labels length must equal point count")
        if len(self.points) < 1:
            raise GeometryError("point cloud is empty")
        self.points.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.points)

    def to_text(self) -> str:
        lines = [
            f"{x:.17g} {y:.17g} {z:.17g} {label}"
            for (x, y, z), label in zip(self.points, self.labels)
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "LabeledPointCloud":
        points, labels = [], []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            x, y, z, label = line.split()
            points.append((float(x), float(y), float(z)))
            labels.append(int(label))
        return cls(points, labels)


@dataclass(frozen=True)
class MetricsReport:
    chamfer: float
    seg_acc: float
    seg_miou: float
    per_label_iou: dict[int, float] = field(default_factory=dict)
    chamfer_mode: str = CHAMFER_MODES[0]

    def to_dict(self) -> dict:
        return {
            "chamfer": self.chamfer,
            "seg_acc": self.seg_acc,
            "seg_miou": self.seg_miou,
            "per_label_iou": {str(k): v for k, v in sorted(self.per_label_iou.items())},
            "chamfer_mode": self.chamfer_mode,
        }


def sample_surface(mesh: LabeledMesh, n: int, seed: int) -> LabeledPointCloud:
    """Sample n points uniformly by area; points inherit their triangle's label."""
    if n < 1:
        raise GeometryError(f"sample count must be >= 1, got {n}")
    areas = triangle_areas(mesh)
    total = float(areas.sum())
    if total <= 0.0:
        raise GeometryError("mesh has zero surface area")
    rng = np.random.default_rng(seed)
    tri_idx = rng.choice(len(areas), size=n, p=areas / total)
    r1 = rng.random(n)
    r2 = rng.random(n)
    su = np.sqrt(r1)
    w_a = (1.0 - su)[:, None]
    w_b = (su * (1.0 - r2))[:, None]
    w_c = (su * r2)[:, None]
    tris = mesh.triangles[tri_idx]
    v = mesh.vertices
    pts = w_a * v[tris[:, 0]] + w_b * v[tris[:, 1]] + w_c * v[tris[:, 2]]
    return LabeledPointCloud(pts, mesh.tri_labels[tri_idx])


def chamfer(a: LabeledPointCloud, b: LabeledPointCloud, squared: bool = False) -> float:
    """0.5 * (mean NN distance a->b + mean NN distance b->a); labels ignored."""
    d_ab, _ = cKDTree(b.points).query(a.points)
    d_ba, _ = cKDTree(a.points).query(b.points)
    if squared:
        d_ab = d_ab**2
        d_ba = d_ba**2
    return 0.5 * (float(d_ab.mean()) + float(d_ba.mean()))


def nearest_reference_indices(query: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Exact nearest-neighbor indices with ties broken by lowest reference index.

    Brute force in chunks rather than a KD-tree: tree implementations do not
    promise a tie order, and the label-transfer contract does.
    """
    query = np.asarray(query, dtype=float).reshape(-1, 3)
    out = np.empty(len(query), dtype=np.int64)
    chunk = max(1, int(4_000_000 // max(len(reference), 1)))
    for start in range(0, len(query), chunk):
        block = query[start : start + chunk]
        d2 = ((block[:, None, :] - reference[None, :, :]) ** 2).sum(axis=2)
        out[start : start + chunk] = d2.argmin(axis=1)
    return out


def transfer_labels(query, reference: LabeledPointCloud) -> LabeledPointCloud:
    """Label each query point by its Euclidean nearest reference point."""
    pts = query.points if isinstance(query, LabeledPointCloud) else np.asarray(query)
    idx = nearest_reference_indices(pts, reference.points)
    return LabeledPointCloud(pts, reference.labels[idx])


def seg_scores(pred: LabeledPointCloud, gt: LabeledPointCloud):
    """Pointwise accuracy and per-label IoU over a shared point set.

    Both clouds must label the same points (transfer pred onto gt first).
    mIoU averages over the labels present in the ground truth.
    """
    if pred.n != gt.n:
        raise GeometryError("pred and gt must label the same point set")
    acc = float((pred.labels == gt.labels).mean())
    labels = np.unique(gt.labels)
    per_label = {}
    for label in labels:
        p = pred.labels == label
        g = gt.labels == label
        union = int((p | g).sum())
        inter = int((p & g).sum())
        per_label[int(label)] = inter / union if union else 0.0
    miou = float(np.mean(list(per_label.values())))
    return acc, miou, per_label


def part_iou(pred_labels, gt_labels, embedder, sim_threshold: float = 0.8) -> float:
    """Set IoU between label lists under embedding-similarity matching.

    Labels are matched one-to-one by maximum total cosine similarity; a pair
    counts once its similarity reaches the threshold.
    """
    if not gt_labels:
        raise GeometryError("ground-truth label list is empty")
    if not pred_labels:
        return 0.0
    pred_vecs = np.stack([embedder.embed(t) for t in pred_labels])
    gt_vecs = np.stack([embedder.embed(t) for t in gt_labels])
    sims = pred_vecs @ gt_vecs.T
    for i, p in enumerate(pred_labels):
        for j, g in enumerate(gt_labels):
            if p == g:
                sims[i, j] = 1.0
    result = cadify.solve_assignment(1.0 - sims)
    matched = sum(1 for i, j in result.pairs if sims[i, j] >= sim_threshold)
    return matched / (len(pred_labels) + len(gt_labels) - matched)


@dataclass(frozen=True)
class ProgSuccess:
    rate: float
    repair_rate: float
    outcomes: tuple[dict, ...]


def prog_success_details(corpus) -> ProgSuccess:
    """Parse and validate each raw response; repaired programs count as valid."""
    corpus = list(corpus)
    if not corpus:
        raise GeometryError("corpus is empty")
    outcomes = []
    for text in corpus:
        result = dsl.parse(text)
        entry = {"parsed": result.program is not None, "valid": False, "repaired": False}
        if result.program is not None:
            report = validation.validate(result.program)
            entry["valid"] = report.valid
            entry["repaired"] = report.repaired is not None
        outcomes.append(entry)
    rate = sum(1 for o in outcomes if o["valid"]) / len(outcomes)
    repair_rate = sum(1 for o in outcomes if o["repaired"]) / len(outcomes)
    return ProgSuccess(rate=rate, repair_rate=repair_rate, outcomes=tuple(outcomes))


def prog_success(corpus) -> float:
    """Fraction of raw texts that parse and validate."""
    return prog_success_details(corpus).rate
