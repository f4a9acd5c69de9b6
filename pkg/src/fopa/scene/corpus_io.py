"""Corpus directory layout.

::

    backgrounds/<bg_id>.ppm
    foregrounds/<fg_id>.ppm
    masks/<fg_id>.pgm          (0/255)
    scenes.json                floor rows and obstacle boxes per background
    corpus.cfg                 generation parameters, key=value
    train.csv, test.csv        annotation manifests
"""

from __future__ import annotations

import json
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .annotations import read_manifest, write_manifest
from .generate import Corpus, CorpusSpec
from .netpbm import read_image, write_image
from .types import Background, Box, DataError, ForegroundObject


def save_corpus(corpus: Corpus, out: Path) -> None:
    out = Path(out)
    for sub in ("backgrounds", "foregrounds", "masks"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    scenes = {}
    for bg_id, bg in sorted(corpus.backgrounds.items()):
        write_image(out / "backgrounds" / f"{bg_id}.ppm", bg.pixels)
        scenes[bg_id] = {"floor_top_row": bg.floor_top_row, "obstacles": [list(b) for b in bg.obstacles]}
    for fg_id, fg in sorted(corpus.foregrounds.items()):
        write_image(out / "foregrounds" / f"{fg_id}.ppm", fg.pixels)
        write_image(out / "masks" / f"{fg_id}.pgm", (fg.mask * 255).astype(np.uint8))
    (out / "scenes.json").write_text(json.dumps(scenes, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    (out / "corpus.cfg").write_text(
        "".join(f"{k}={v}\n" for k, v in asdict(corpus.spec).items()), encoding="utf-8"
    )
    write_manifest(out / "train.csv", corpus.train)
    write_manifest(out / "test.csv", corpus.test)


def _read_spec(path: Path) -> CorpusSpec:
    kinds = {f.name: f.type for f in fields(CorpusSpec)}
    values = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        key, _, raw = line.partition("=")
        if key not in kinds:
            raise DataError(f"{path}: unknown key {key!r}")
        values[key] = float(raw) if kinds[key] in ("float", float) else int(raw)
    return CorpusSpec(**values)


def load_corpus(root: Path) -> Corpus:
    root = Path(root)
    if not (root / "scenes.json").exists():
        raise DataError(f"{root} is not a corpus directory (scenes.json missing)")
    scenes = json.loads((root / "scenes.json").read_text(encoding="utf-8"))
    bgs = {}
    for bg_id, meta in scenes.items():
        pix = read_image(root / "backgrounds" / f"{bg_id}.ppm")
        bgs[bg_id] = Background(bg_id, pix, meta["floor_top_row"], [Box(*b) for b in meta["obstacles"]])
    fgs = {}
    for path in sorted((root / "foregrounds").glob("*.ppm")):
        fg_id = path.stem
        mask = read_image(root / "masks" / f"{fg_id}.pgm")
        fgs[fg_id] = ForegroundObject(fg_id, read_image(path), (mask > 127).astype(np.uint8))
    train = read_manifest(root / "train.csv")
    test = read_manifest(root / "test.csv")
    for p in train + test:
        if p.fg_id not in fgs or p.bg_id not in bgs:
            raise DataError(f"pair {p.pair_id} references missing images {p.fg_id}/{p.bg_id}")
    spec = _read_spec(root / "corpus.cfg") if (root / "corpus.cfg").exists() else CorpusSpec()
    return Corpus(spec, bgs, fgs, train, test)
