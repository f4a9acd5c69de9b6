"""Image-level placement records ↔ per-pair sparse pixel annotations, and manifests."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

from .types import AnnotatedPair, DataError, PixelAnnotation

MANIFEST_HEADER = "# pair_id,fg_id,bg_id,scale,x,y,label"

Record = tuple  # (pair_id, fg_id, bg_id, scale, x, y, label)


def convert_annotations(records: Iterable[Record]) -> list[AnnotatedPair]:
    """Group image-level records into one annotated pair per (fg, bg, scale).

    Each record labels a single centre pixel; pixels without a record stay
    unlabelled.  Records may omit the leading pair id (6-tuples), in which case
    ids are assigned in first-seen order.  Repeating a pixel with the same
    label is tolerated; with a different label it is a :class:`DataError`.
    """
    groups: dict[tuple, dict] = {}
    conflicts = []
    for rec in records:
        if len(rec) == 7:
            pid, fg_id, bg_id, scale, x, y, label = rec
        elif len(rec) == 6:
            fg_id, bg_id, scale, x, y, label = rec
            pid = None
        else:
            raise DataError(f"record must have 6 or 7 fields, got {rec!r}")
        label = int(label)
        if label not in (0, 1):
            raise DataError(f"label must be 0 or 1, got {label} in {rec!r}")
        key = (fg_id, bg_id, float(scale))
        g = groups.setdefault(key, {"pid": pid, "pixels": {}})
        if pid is not None and g["pid"] not in (None, pid):
            raise DataError(f"pair {key} appears under ids {g['pid']} and {pid}")
        g["pid"] = g["pid"] or pid
        px = (int(x), int(y))
        prev = g["pixels"].get(px)
        if prev is not None and prev != label:
            conflicts.append(f"{fg_id}/{bg_id}@{scale} pixel {px}: labels {prev} and {label}")
        g["pixels"].setdefault(px, label)
    if conflicts:
        raise DataError("conflicting labels: " + "; ".join(conflicts))

    pairs = []
    for i, ((fg_id, bg_id, scale), g) in enumerate(groups.items()):
        anns = [PixelAnnotation(x, y, lab) for (x, y), lab in g["pixels"].items()]
        pairs.append(AnnotatedPair(g["pid"] or f"p{i:05d}", fg_id, bg_id, scale, anns))
    return pairs


def flatten(pairs: Iterable[AnnotatedPair]) -> list[Record]:
    return [(p.pair_id, p.fg_id, p.bg_id, p.scale, a.x, a.y, a.label) for p in pairs for a in p.annotations]


def write_manifest(path: Path, pairs: Iterable[AnnotatedPair]) -> None:
    lines = [MANIFEST_HEADER]
    for pid, fg_id, bg_id, scale, x, y, label in flatten(pairs):
        lines.append(f"{pid},{fg_id},{bg_id},{scale!r},{x},{y},{label}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path: Path) -> list[AnnotatedPair]:
    records = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise DataError(f"{path}:{lineno}: expected 7 comma-separated fields, got {len(parts)}")
        pid, fg_id, bg_id, scale, x, y, label = parts
        try:
            records.append((pid, fg_id, bg_id, float(scale), int(x), int(y), int(label)))
        except ValueError as e:
            raise DataError(f"{path}:{lineno}: {e}") from None
    return convert_annotations(records)
