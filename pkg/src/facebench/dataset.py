"""Image collections: manifest loading, subject sampling, splits, synthetic data.

All randomized operations take an explicit integer seed and draw from
numpy's PCG64 generator (``numpy.random.default_rng``), so subset draws
reproduce bit-for-bit across platforms and runs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DataError

MANIFEST_COLUMNS = (
    "subject_id",
    "gender",
    "image_path",
    "eye_left_row",
    "eye_left_col",
    "eye_right_row",
    "eye_right_col",
)

GENDERS = ("M", "F")


@dataclass(frozen=True, eq=False)
class ImageRecord:
    """One face image: identity, gender, pixel source, optional eye positions.

    ``image_ref`` is either a filesystem path (PGM file) or an inline
    uint8 pixel array of shape (height, width).  Eye coordinates are
    (row, col) in the source image; either both are given or neither.
    Records with no eye coordinates are taken to be already aligned.
    """

    subject_id: str
    gender: str
    image_ref: Path | np.ndarray
    eye_left: tuple[float, float] | None = None
    eye_right: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.subject_id:
            raise ValueError("subject_id must be non-empty")
        if self.gender not in GENDERS:
            raise ValueError(f"gender must be one of {GENDERS}, got {self.gender!r}")
        if (self.eye_left is None) != (self.eye_right is None):
            raise ValueError("eye coordinates must be given for both eyes or neither")
        if self.eye_left is not None and tuple(self.eye_left) == tuple(self.eye_right):
            raise ValueError("eye coordinates must be distinct")

    @property
    def has_eyes(self) -> bool:
        return self.eye_left is not None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered collection of ImageRecords with a subject index.

    ``index`` maps subject_id -> positions into ``records`` (row order of
    the source manifest is preserved).  A subject's gender is the gender
    of its first record.
    """

    records: tuple[ImageRecord, ...]
    index: dict[str, list[int]] = field(init=False)

    def __post_init__(self):
        idx: dict[str, list[int]] = {}
        for pos, rec in enumerate(self.records):
            idx.setdefault(rec.subject_id, []).append(pos)
        object.__setattr__(self, "index", idx)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def subject_ids(self) -> list[str]:
        """Subject ids in first-appearance order."""
        return list(self.index)

    def subject_gender(self, subject_id: str) -> str:
        return self.records[self.index[subject_id][0]].gender

    def subject_records(self, subject_id: str) -> list[ImageRecord]:
        return [self.records[p] for p in self.index[subject_id]]


@dataclass(frozen=True)
class SamplingSpec:
    """How many subjects of each gender to draw, and how many images each."""

    n_female: int
    n_male: int
    images_per_subject: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_female < 0 or self.n_male < 0:
            raise ValueError("subject counts must be >= 0")
        if self.images_per_subject < 2:
            raise ValueError("images_per_subject must be >= 2 to admit a split")


class SplitRatio(Enum):
    """Per-subject train:test partition, 9:1 or 5:5 as in the protocols."""

    R9_1 = "9:1"
    R5_5 = "5:5"


@dataclass(frozen=True, eq=False)
class Split:
    """Disjoint train/test record collections; every test subject is enrolled."""

    train: tuple[ImageRecord, ...]
    test: tuple[ImageRecord, ...]
    ratio: SplitRatio


def load_manifest(path: str | Path) -> Dataset:
    """Read a manifest CSV into a Dataset.

    Columns (header required, in order):
    ``subject_id,gender,image_path,eye_left_row,eye_left_col,eye_right_row,eye_right_col``.
    Eye fields may all be empty.  Image paths are resolved relative to
    the manifest's directory.  Malformed rows are rejected with their
    file line number.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    base = path.parent
    records = []
    seen: set[tuple[str, str]] = set()
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"manifest {path} is empty (header required)") from None
        if tuple(h.strip() for h in header) != MANIFEST_COLUMNS:
            raise DataError(
                f"manifest {path} has unexpected header {header!r}; "
                f"expected {','.join(MANIFEST_COLUMNS)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(MANIFEST_COLUMNS):
                raise DataError(
                    f"{path} row {lineno}: expected {len(MANIFEST_COLUMNS)} "
                    f"columns, got {len(row)}"
                )
            subject_id, gender, image_path, *eyes = (c.strip() for c in row)
            if gender not in GENDERS:
                raise DataError(
                    f"{path} row {lineno}: gender must be M or F, got {gender!r}"
                )
            if not subject_id:
                raise DataError(f"{path} row {lineno}: empty subject_id")
            key = (subject_id, image_path)
            if key in seen:
                raise DataError(
                    f"{path} row {lineno}: duplicate (subject_id, image_path) {key}"
                )
            seen.add(key)
            filled = [e for e in eyes if e != ""]
            if len(filled) == 0:
                eye_left = eye_right = None
            elif len(filled) == 4:
                try:
                    vals = [float(e) for e in eyes]
                except ValueError:
                    raise DataError(
                        f"{path} row {lineno}: eye coordinates must be numeric"
                    ) from None
                eye_left, eye_right = (vals[0], vals[1]), (vals[2], vals[3])
            else:
                raise DataError(
                    f"{path} row {lineno}: eye fields must be all empty or all given"
                )
            try:
                records.append(
                    ImageRecord(
                        subject_id=subject_id,
                        gender=gender,
                        image_ref=(base / image_path),
                        eye_left=eye_left,
                        eye_right=eye_right,
                    )
                )
            except ValueError as exc:
                raise DataError(f"{path} row {lineno}: {exc}") from None
    return Dataset(records=tuple(records))


def filter_min_images(d: Dataset, k: int) -> Dataset:
    """Keep exactly the subjects that have at least k records; order preserved.

    Idempotent: filtering twice equals filtering once.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    keep = {sid for sid, pos in d.index.items() if len(pos) >= k}
    return Dataset(records=tuple(r for r in d.records if r.subject_id in keep))


def sample_subjects(d: Dataset, spec: SamplingSpec) -> Dataset:
    """Draw a gender-stratified subject subset with a fixed image count each.

    Subjects are drawn uniformly without replacement among those with at
    least ``spec.images_per_subject`` records; each kept subject then
    contributes exactly ``spec.images_per_subject`` records, again drawn
    uniformly without replacement.  Output order follows the input
    dataset (subjects in first-appearance order, records in row order).
    Deterministic for a fixed (dataset, spec).
    """
    rng = np.random.default_rng(spec.seed)
    eligible = {"F": [], "M": []}
    for sid in d.subject_ids:
        if len(d.index[sid]) >= spec.images_per_subject:
            eligible[d.subject_gender(sid)].append(sid)

    chosen: set[str] = set()
    for gender, want in (("F", spec.n_female), ("M", spec.n_male)):
        pool = eligible[gender]
        if len(pool) < want:
            raise DataError(
                f"need {want} {'female' if gender == 'F' else 'male'} subjects "
                f"with >= {spec.images_per_subject} images, found {len(pool)}"
            )
        if want > 0:
            picks = rng.choice(len(pool), size=want, replace=False)
            chosen.update(pool[i] for i in picks)

    out_positions: list[int] = []
    for sid in d.subject_ids:
        if sid not in chosen:
            continue
        positions = d.index[sid]
        picks = rng.choice(len(positions), size=spec.images_per_subject, replace=False)
        out_positions.extend(positions[i] for i in sorted(picks))
    out_positions.sort()
    return Dataset(records=tuple(d.records[p] for p in out_positions))


def split_train_test(d: Dataset, ratio: SplitRatio, seed: int = 0) -> Split:
    """Partition each subject's records into train and test per the ratio.

    R9_1 keeps one of every ten records for testing (subject image count
    must be divisible by 10); R5_5 keeps half (count must be even).  With
    the protocol count of 10 images this is 9+1 or 5+5 exactly.  Test
    records are drawn uniformly without replacement per subject;
    deterministic for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    train_pos: list[int] = []
    test_pos: list[int] = []
    for sid in d.subject_ids:
        positions = d.index[sid]
        n = len(positions)
        if ratio is SplitRatio.R9_1:
            if n % 10 != 0:
                raise DataError(
                    f"subject {sid}: {n} images, need a multiple of 10 for 9:1"
                )
            n_test = n // 10
        else:
            if n % 2 != 0:
                raise DataError(f"subject {sid}: {n} images, need an even count for 5:5")
            n_test = n // 2
        picks = set(rng.choice(n, size=n_test, replace=False).tolist())
        for i, p in enumerate(positions):
            (test_pos if i in picks else train_pos).append(p)
    return Split(
        train=tuple(d.records[p] for p in train_pos),
        test=tuple(d.records[p] for p in test_pos),
        ratio=ratio,
    )


# Synthetic faces: a per-subject low-frequency cosine pattern plus i.i.d.
# Gaussian pixel noise.  Two mode means are shifted by gender so that
# gender-conditional structure exists for the gender-split protocols.
_SYNTH_MODES = [(k, l) for k in range(4) for l in range(4) if (k, l) != (0, 0)]
_SYNTH_COEFF_STD = 16.0
_SYNTH_GENDER_SHIFT = 10.0
_SYNTH_SHIFTED_MODES = ((0, 1), (1, 0))


def canonical_eye_positions(height: int, width: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """Eye (row, col) pairs at the canonical fractions of an image frame.

    In the 70x60 output frame these are exactly (24, 18) and (24, 41).
    """
    row = round(24 / 70 * height)
    return (row, round(18 / 60 * width)), (row, round(41 / 60 * width))


def generate_synthetic(
    n_female: int,
    n_male: int,
    images_per_subject: int = 10,
    image_height: int = 70,
    image_width: int = 60,
    intra_noise: float = 20.0,
    seed: int = 0,
) -> Dataset:
    """Generate a desk-scale dataset of procedural faces with inline pixels.

    Each subject gets a distinct base pattern (random coefficients on a
    2-D cosine basis, means gender-shifted on two modes); each image is
    the base plus Gaussian noise of scale ``intra_noise``, rounded and
    clamped to [0, 255].  Eye coordinates are emitted at the canonical
    positions, so alignment is the identity for 70x60 output.
    Deterministic for a fixed seed.
    """
    if image_height < 8 or image_width < 8:
        raise ValueError("image dimensions must be at least 8x8")
    if intra_noise < 0:
        raise ValueError("intra_noise must be >= 0")
    rng = np.random.default_rng(seed)

    rows = (np.arange(image_height) + 0.5) / image_height
    cols = (np.arange(image_width) + 0.5) / image_width
    basis = np.stack(
        [
            np.cos(np.pi * k * rows)[:, None] * np.cos(np.pi * l * cols)[None, :]
            for k, l in _SYNTH_MODES
        ]
    )
    eye_left, eye_right = canonical_eye_positions(image_height, image_width)

    records = []
    subjects = [("F", i) for i in range(n_female)] + [("M", i) for i in range(n_male)]
    for gender, i in subjects:
        sign = 1.0 if gender == "M" else -1.0
        means = np.array(
            [
                sign * _SYNTH_GENDER_SHIFT if mode in _SYNTH_SHIFTED_MODES else 0.0
                for mode in _SYNTH_MODES
            ]
        )
        coeffs = rng.normal(means, _SYNTH_COEFF_STD)
        base = 128.0 + np.tensordot(coeffs, basis, axes=1)
        for _ in range(images_per_subject):
            noise = rng.normal(0.0, intra_noise, size=base.shape) if intra_noise > 0 else 0.0
            pixels = np.clip(np.floor(base + noise + 0.5), 0, 255).astype(np.uint8)
            records.append(
                ImageRecord(
                    subject_id=f"{gender}{i:04d}",
                    gender=gender,
                    image_ref=pixels,
                    eye_left=eye_left,
                    eye_right=eye_right,
                )
            )
    return Dataset(records=tuple(records))
