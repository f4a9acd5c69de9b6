"""Synthetic placement corpus: scenes, oracle labels, compositing, inputs, file IO."""

from .annotations import convert_annotations, flatten, read_manifest, write_manifest
from .corpus_io import load_corpus, save_corpus
from .generate import Corpus, CorpusSpec, generate_corpus
from .inputs import composite_array, prepare_fopa_input, prepare_onehot_input, scale_bin
from .oracle import label_map, oracle_label
from .render import compose, placement_box, resize_nearest, scale_object, scaled_size
from .types import (
    AnnotatedPair,
    Background,
    Box,
    DataError,
    FopaInput,
    ForegroundObject,
    InputError,
    OneHotScaleInput,
    PixelAnnotation,
    Placement,
)

__all__ = [
    "AnnotatedPair",
    "Background",
    "Box",
    "Corpus",
    "CorpusSpec",
    "DataError",
    "FopaInput",
    "ForegroundObject",
    "InputError",
    "OneHotScaleInput",
    "PixelAnnotation",
    "Placement",
    "compose",
    "composite_array",
    "convert_annotations",
    "flatten",
    "generate_corpus",
    "label_map",
    "load_corpus",
    "oracle_label",
    "placement_box",
    "prepare_fopa_input",
    "prepare_onehot_input",
    "read_manifest",
    "resize_nearest",
    "save_corpus",
    "scale_bin",
    "scale_object",
    "scaled_size",
    "write_manifest",
]
