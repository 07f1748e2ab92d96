"""Dataset manifests, stratified splitting, image decoding and batch iteration.

A manifest is an ordered list of (path, label, split) records. Labels are
0 = normal, 1 = covid. The on-disk form is a small CSV (`path,label,split`,
UTF-8, LF) so splits can be diffed and versioned.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .seeding import rng_for
from .tensor import Tensor

LABEL_NORMAL = 0
LABEL_COVID = 1
LABEL_NAMES = {LABEL_NORMAL: "normal", LABEL_COVID: "covid"}

SPLITS = ("train", "val", "test")
UNASSIGNED = "unassigned"
DEFAULT_RATIOS = (0.8, 0.1, 0.1)
DEFAULT_IMAGE_HW = 200
MIN_CLASS_SIZE = 10

MANIFEST_HEADER = ("path", "label", "split")


class ImageFormatError(ValueError):
    """File decoded, but is not in the expected PNG format."""


@dataclass(frozen=True)
class SampleRecord:
    path: str
    label: int
    split: str = UNASSIGNED

    def __post_init__(self):
        if self.label not in (LABEL_NORMAL, LABEL_COVID):
            raise ValueError(f"label must be 0 or 1, got {self.label!r} for {self.path}")
        if self.split not in SPLITS and self.split != UNASSIGNED:
            raise ValueError(f"unknown split {self.split!r} for {self.path}")


@dataclass
class DatasetManifest:
    """Ordered records plus the directory their relative paths resolve against."""

    records: list[SampleRecord]
    root: Optional[Path] = field(default=None, compare=False)

    def select(self, split: str) -> list[SampleRecord]:
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        return [r for r in self.records if r.split == split]

    def class_counts(self) -> dict[str, dict[int, int]]:
        """split -> {label: count} over all assigned records."""
        counts: dict[str, dict[int, int]] = {s: {0: 0, 1: 0} for s in SPLITS}
        for r in self.records:
            if r.split in counts:
                counts[r.split][r.label] += 1
        return counts

    def resolve(self, record: SampleRecord) -> Path:
        base = self.root if self.root is not None else Path(".")
        return Path(base) / record.path


def _split_sizes(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    # floor on val and test, remainder to train; round() guards against
    # float products like 361.5999...9 for what is exactly n/10
    n_val = int(math.floor(round(n * ratios[1], 6)))
    n_test = int(math.floor(round(n * ratios[2], 6)))
    return n - n_val - n_test, n_val, n_test


def stratified_split(records: Iterable[SampleRecord],
                     ratios: Sequence[float] = DEFAULT_RATIOS,
                     seed: int = 0) -> DatasetManifest:
    """Assign train/val/test per class, preserving class proportions.

    Each class is shuffled with its own seed-derived stream, then the first
    floor(ratio_val*n) samples go to val, the next floor(ratio_test*n) to
    test, and the remainder to train. Output records are ordered by path so
    the manifest is a pure function of (record set, seed).
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) <= 0:
        raise ValueError(f"ratios must be three positive fractions summing to 1, got {ratios}")

    by_label: dict[int, list[SampleRecord]] = {LABEL_NORMAL: [], LABEL_COVID: []}
    for rec in records:
        by_label[rec.label].append(rec)

    assigned: list[SampleRecord] = []
    for label, group in by_label.items():
        if not group:
            continue
        if len(group) < MIN_CLASS_SIZE:
            raise ValueError(
                f"class {LABEL_NAMES[label]!r} has {len(group)} samples, "
                f"need at least {MIN_CLASS_SIZE} to split"
            )
        group = sorted(group, key=lambda r: r.path)
        rng = rng_for(seed, f"split-{label}")
        order = rng.permutation(len(group))
        _, n_val, n_test = _split_sizes(len(group), ratios)
        for rank, idx in enumerate(order):
            if rank < n_val:
                split = "val"
            elif rank < n_val + n_test:
                split = "test"
            else:
                split = "train"
            assigned.append(replace(group[idx], split=split))

    assigned.sort(key=lambda r: r.path)
    return DatasetManifest(records=assigned)


def save_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for r in manifest.records:
            writer.writerow([r.path, r.label, r.split])


def load_manifest(path) -> DatasetManifest:
    """Read a manifest CSV; relative record paths resolve against its directory."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != MANIFEST_HEADER:
            raise ValueError(f"{path}: expected header {','.join(MANIFEST_HEADER)!r}, got {header}")
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            rec_path, label_s, split = row
            try:
                label = int(label_s)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: label must be an integer, got {label_s!r}")
            records.append(SampleRecord(rec_path, label, split))
    return DatasetManifest(records=records, root=path.parent)


def scan_class_directories(input_dir) -> list[SampleRecord]:
    """Collect unassigned records from <input_dir>/{normal,covid}/*.png."""
    input_dir = Path(input_dir)
    records = []
    for label, name in ((LABEL_NORMAL, "normal"), (LABEL_COVID, "covid")):
        sub = input_dir / name
        if not sub.is_dir():
            raise FileNotFoundError(f"missing class directory: {sub}")
        for p in sorted(sub.iterdir()):
            if p.suffix.lower() == ".png":
                records.append(SampleRecord(str(p.relative_to(input_dir)), label))
    return records


def decode_and_prepare(path, hw: int = DEFAULT_IMAGE_HW) -> Tensor:
    """Decode a PNG to a [hw, hw, 3] tensor of floats in [0, 1].

    Grayscale images are replicated across channels; resizing is bilinear.
    Missing or undecodable files raise OSError carrying the path; decodable
    files that are not PNG raise ImageFormatError.
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            if img.format != "PNG":
                raise ImageFormatError(f"{path}: expected PNG, got {img.format}")
            rgb = img.convert("RGB")
            if rgb.size != (hw, hw):
                rgb = rgb.resize((hw, hw), Image.Resampling.BILINEAR)
            arr = np.asarray(rgb, dtype=np.float32) / 255.0
    except UnidentifiedImageError as exc:
        raise OSError(f"{path}: cannot decode image: {exc}") from exc
    return Tensor(arr)


def load_split_arrays(manifest: DatasetManifest, split: str,
                      hw: int = DEFAULT_IMAGE_HW) -> tuple[Tensor, np.ndarray]:
    """Decode every image of a split into one [N, hw, hw, 3] tensor."""
    records = manifest.select(split)
    if not records:
        raise ValueError(f"split {split!r} has no records")
    images = np.empty((len(records), hw, hw, 3), dtype=np.float32)
    labels = np.empty(len(records), dtype=np.int64)
    for i, rec in enumerate(records):
        images[i] = decode_and_prepare(manifest.resolve(rec), hw=hw).array
        labels[i] = rec.label
    return Tensor(images), labels


def batch_iterator(manifest: DatasetManifest, split: str, batch_size: int,
                   seed: int, epoch: int,
                   hw: int = DEFAULT_IMAGE_HW) -> Iterator[tuple[Tensor, np.ndarray]]:
    """Yield shuffled (images, labels) minibatches covering the split once.

    The order is a pure function of (seed, epoch); the final short batch is
    included.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    records = manifest.select(split)
    if not records:
        raise ValueError(f"split {split!r} has no records")
    order = rng_for(seed, f"batch-{split}-epoch-{epoch}").permutation(len(records))
    for start in range(0, len(records), batch_size):
        chunk = [records[i] for i in order[start:start + batch_size]]
        images = np.empty((len(chunk), hw, hw, 3), dtype=np.float32)
        labels = np.empty(len(chunk), dtype=np.int64)
        for j, rec in enumerate(chunk):
            images[j] = decode_and_prepare(manifest.resolve(rec), hw=hw).array
            labels[j] = rec.label
        yield Tensor(images), labels


def generate_synthetic_dataset(out_dir, per_class: int = 32, hw: int = 32,
                               seed: int = 0) -> Path:
    """Write a tiny two-class PNG set separable by mean brightness.

    covid/ images are bright (mean intensity > 0.7 after normalization),
    normal/ images dark (mean < 0.3), with mild per-pixel noise so the
    problem is not literally constant. Grayscale on purpose: exercises the
    channel replication path. Returns the dataset directory.
    """
    out_dir = Path(out_dir)
    rng = rng_for(seed, "synthetic-images")
    for name, base in (("normal", 45.0), ("covid", 210.0)):
        sub = out_dir / name
        sub.mkdir(parents=True, exist_ok=True)
        for i in range(per_class):
            noise = rng.uniform(-25.0, 25.0, size=(hw, hw))
            pixels = np.clip(base + noise, 0, 255).astype(np.uint8)
            Image.fromarray(pixels, mode="L").save(sub / f"{name}_{i:03d}.png")
    return out_dir


def split_table(manifest: DatasetManifest) -> str:
    """Per-class split counts in the usual classes-by-sets layout."""
    counts = manifest.class_counts()
    rows = [("Classes", "Training Set", "Validation Set", "Testing Set", "Total")]
    for label, title in ((LABEL_COVID, "COVID-19"), (LABEL_NORMAL, "NORMAL")):
        tr = counts["train"][label]
        va = counts["val"][label]
        te = counts["test"][label]
        rows.append((title, str(tr), str(va), str(te), str(tr + va + te)))
    widths = [max(len(r[c]) for r in rows) for c in range(5)]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
                     for row in rows)
