"""Synthetic two-class image datasets and their on-disk formats.

Every image is a 128x128 canvas with background 0, one 8x8 block of high
intensity and a number of 2x2 noise blocks of intensity 1..10. Pixels of
the high block are drawn independently; each noise block has one
intensity. Blocks never overlap or touch (a one-pixel gap), so each block
is its own component until the background enters.

Randomness: sample ``i`` of class ``c`` in dataset ``d`` draws from
``SeedSequence(seed, spawn_key=(d, c, i))``. Adding samples therefore never
changes earlier ones.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .barcode import Barcode, read_barcode, write_barcode
from .homology import h0_superlevel
from .learning import LabeledDataset

CANVAS = 128
HIGH_BLOCK = 8
NOISE_BLOCK = 2
NOISE_INTENSITY = (1, 10)

# (high-block intensity range, noise-count range) per class
DATASETS = {
    1: {"A": ((245, 255), (50, 100)), "B": ((200, 210), (50, 100))},
    2: {"A": ((100, 255), (20, 30)), "B": ((100, 255), (120, 130))},
}


@dataclass(frozen=True)
class SyntheticImage:
    id: str
    label: str
    pixels: np.ndarray
    high_intensity: tuple[int, int]
    n_noise: int


def _place(rng: np.random.Generator, taken: np.ndarray, size: int, max_tries: int = 100_000) -> tuple[int, int]:
    """Top-left corner of a ``size`` block whose one-pixel margin is free."""
    n = taken.shape[0]
    for _ in range(max_tries):
        r, c = rng.integers(0, n - size + 1, size=2)
        r0, c0 = max(r - 1, 0), max(c - 1, 0)
        if not taken[r0:r + size + 1, c0:c + size + 1].any():
            taken[r:r + size, c:c + size] = True
            return int(r), int(c)
    raise RuntimeError("could not place block: canvas too crowded")


def make_image(rng: np.random.Generator, high_range: tuple[int, int], n_noise: int,
               canvas: int = CANVAS) -> np.ndarray:
    img = np.zeros((canvas, canvas), dtype=np.uint8)
    taken = np.zeros((canvas, canvas), dtype=bool)
    r, c = _place(rng, taken, HIGH_BLOCK)
    img[r:r + HIGH_BLOCK, c:c + HIGH_BLOCK] = rng.integers(high_range[0], high_range[1] + 1,
                                                           size=(HIGH_BLOCK, HIGH_BLOCK))
    lo, hi = NOISE_INTENSITY
    for _ in range(n_noise):
        r, c = _place(rng, taken, NOISE_BLOCK)
        img[r:r + NOISE_BLOCK, c:c + NOISE_BLOCK] = rng.integers(lo, hi + 1)
    return img


def sample_rng(seed: int, dataset: int, class_index: int, sample: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(dataset, class_index, sample)))


def generate(dataset: int, n_per_class: int, seed: int) -> list[SyntheticImage]:
    """Images of both classes, class A first, ids ``A000, A001, ..., B000, ...``."""
    if dataset not in DATASETS:
        raise ValueError(f"unknown dataset {dataset}; choose 1 or 2")
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    out = []
    for ci, label in enumerate(("A", "B")):
        high, counts = DATASETS[dataset][label]
        for i in range(n_per_class):
            rng = sample_rng(seed, dataset, ci, i)
            n_noise = int(rng.integers(counts[0], counts[1] + 1))
            out.append(SyntheticImage(f"{label}{i:03d}", label, make_image(rng, high, n_noise), high, n_noise))
    return out


def gen_dataset1(n_per_class: int, seed: int) -> list[SyntheticImage]:
    return generate(1, n_per_class, seed)


def gen_dataset2(n_per_class: int, seed: int) -> list[SyntheticImage]:
    return generate(2, n_per_class, seed)


def image_barcodes(images: Sequence[np.ndarray], jobs: int = 1) -> list[Barcode]:
    """Super-level persistence of each image, in order, optionally on a process pool."""
    if jobs > 1 and len(images) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(h0_superlevel, images, chunksize=max(1, len(images) // (4 * jobs))))
    return [h0_superlevel(im) for im in images]


def to_dataset(images: Sequence[SyntheticImage], jobs: int = 1) -> LabeledDataset:
    bcs = image_barcodes([im.pixels for im in images], jobs=jobs)
    return LabeledDataset(tuple(im.id for im in images), tuple(bcs), tuple(im.label for im in images))


# --- file formats -----------------------------------------------------------


def write_pgm(path: str | Path, image: np.ndarray) -> None:
    """Binary PGM (P5) with maxval 255."""
    img = np.asarray(image)
    if img.ndim != 2 or img.min(initial=0) < 0 or img.max(initial=0) > 255:
        raise ValueError("PGM export needs a 2-D image with values in 0..255")
    h, w = img.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + img.astype(np.uint8).tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary P5 PGM with maxval < 256. Header comments are allowed."""
    data = Path(path).read_bytes()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5)")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval > 255:
        raise ValueError(f"{path}: 16-bit PGM not supported")
    body = data[pos + 1:pos + 1 + w * h]
    if len(body) != w * h:
        raise ValueError(f"{path}: expected {w * h} pixel bytes, got {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()


def write_dataset(images: Sequence[SyntheticImage], out_dir: str | Path, *, dataset: int, seed: int,
                  jobs: int = 1) -> Path:
    """Write images, their barcodes and ``manifest.json``; returns the manifest path."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "barcodes").mkdir(parents=True, exist_ok=True)
    bcs = image_barcodes([im.pixels for im in images], jobs=jobs)
    samples = []
    for im, bc in zip(images, bcs):
        img_rel = f"images/{im.id}.pgm"
        bc_rel = f"barcodes/{im.id}.csv"
        write_pgm(out / img_rel, im.pixels)
        write_barcode(bc, out / bc_rel)
        samples.append({"id": im.id, "label": im.label, "image": img_rel, "barcode": bc_rel,
                        "n_noise": im.n_noise})
    manifest = {"dataset": dataset, "seed": seed, "n_per_class": len(images) // 2, "samples": samples}
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def load_manifest(path: str | Path, jobs: int = 1) -> LabeledDataset:
    """Load a dataset from a manifest, preferring stored barcodes over images."""
    path = Path(path)
    manifest = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent
    ids, labels, bcs, pending = [], [], [], []
    for i, s in enumerate(manifest["samples"]):
        ids.append(str(s["id"]))
        labels.append(s["label"])
        if s.get("barcode"):
            bcs.append(read_barcode(base / s["barcode"]))
        elif s.get("image"):
            bcs.append(None)
            pending.append((i, read_pgm(base / s["image"])))
        else:
            raise ValueError(f"{path}: sample {s['id']} has neither barcode nor image")
    for (i, _), bc in zip(pending, image_barcodes([im for _, im in pending], jobs=jobs)):
        bcs[i] = bc
    return LabeledDataset(tuple(ids), tuple(bcs), tuple(labels))
