"""Synthetic worlds with known geometry, plus the ablation runner.

A world is a dataset on disk (manifest + tensor files) whose correct
answers are known by construction: class feature directions are built
from a target Gram matrix, every reference and test image paints
axis-aligned rectangles of per-class subcluster directions over a
shared background direction, and the ground-truth label maps are the
painted rectangles themselves.

With ``noise_sigma == 0`` and no confusability the world is exact in
float32: class means are basis vectors (identity Gram has an identity
Cholesky factor), constant rectangles pool to their own vector bit for
bit under float64 accumulation, and attention maps use power-of-two
per-map scales so max-normalization is division by a power of two.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import NumericError, ValidationError
from .evaluation import emit_report
from .interchange import load_manifest, write_tensor
from .matching import MatchConfig
from .reference import DEFAULT_ATTENTION_THRESHOLD

ATTENTION_LAYERS = 2
ATTENTION_STEPS = 2
# Per-map scales are powers of two: dividing by the map maximum then only
# shifts exponents, so normalized maps reproduce the pattern exactly.
_ATTENTION_SCALES = (1.0, 2.0, 0.5, 4.0)
_OUTSIDE_PEAK = 0.6  # keeps off-rectangle attention strictly below 0.7
_BLEED_MIN_COSINE = 0.75  # distractor bleed only acts between strongly confusable pairs


@dataclass(frozen=True)
class WorldSpec:
    """Geometry and sampling knobs of one synthetic world.

    ``confusability`` lists ``(i, j, cosine)`` targets between the mean
    directions of class ids ``i`` and ``j``; unlisted pairs are
    orthogonal, and the background direction is orthogonal to every
    class. ``subcluster_count`` per-class directions at angular spread
    ``subcluster_spread`` around each mean play the role of intra-class
    appearance modes; reference image ``i`` of a class uses subcluster
    ``i mod T``. With ``antipodal_modes`` the modes come in +/- pairs
    around the mean, so they cancel out of the class's holistic mean and
    only mode-level matching can tell coincident-mean classes apart.

    ``proposal_halo`` widens every test proposal mask by a soft ring of
    that many pixels at weight ``proposal_halo_weight`` (< 0.5, so the
    ring never survives binarization). Pooled region features then mix
    in background signal, imitating imprecise mask proposals, while the
    rendered label maps stay exact.

    With ``novel_test_modes`` test regions are painted with fresh random
    directions at the same spread around their class mean instead of
    reusing the reference modes, so classifiers must generalize across
    an appearance gap rather than recall an exact reference direction.

    ``distractor_bleed`` mixes that fraction of the strongest confusable
    partner's mean (pairs at cosine >= 0.75 only) into every test region
    of the affected classes before normalization. The true class stays
    dominant in the mixture, but its margin over the partner shrinks
    while relations to uninvolved classes move far less.
    """

    class_count: int = 10
    feature_dim: int = 64
    images_per_class: int = 20
    subcluster_count: int = 8
    subcluster_spread: float = 0.12
    antipodal_modes: bool = False
    novel_test_modes: bool = False
    confusability: tuple[tuple[int, int, float], ...] = ()
    distractor_bleed: float = 0.0
    noise_sigma: float = 0.0
    canvas: tuple[int, int] = (32, 32)
    regions_per_image: int = 4
    proposal_halo: int = 0
    proposal_halo_weight: float = 0.0
    test_image_count: int = 8
    seed: int = 0

    def __post_init__(self):
        def put(name, value):
            object.__setattr__(self, name, value)

        for name in (
            "class_count",
            "feature_dim",
            "images_per_class",
            "subcluster_count",
            "regions_per_image",
            "proposal_halo",
            "test_image_count",
            "seed",
        ):
            put(name, int(getattr(self, name)))
        put("subcluster_spread", float(self.subcluster_spread))
        put("antipodal_modes", bool(self.antipodal_modes))
        put("novel_test_modes", bool(self.novel_test_modes))
        put("proposal_halo_weight", float(self.proposal_halo_weight))
        put("distractor_bleed", float(self.distractor_bleed))
        put("noise_sigma", float(self.noise_sigma))
        put("canvas", (int(self.canvas[0]), int(self.canvas[1])))
        put(
            "confusability",
            tuple((int(i), int(j), float(c)) for i, j, c in self.confusability),
        )

        def check(cond, msg):
            if not cond:
                raise ValidationError(msg)

        check(self.class_count >= 2, f"need at least 2 classes, got {self.class_count}")
        check(self.feature_dim >= 8, f"feature dim must be at least 8, got {self.feature_dim}")
        check(
            self.feature_dim >= self.class_count + 1,
            f"feature dim {self.feature_dim} cannot hold {self.class_count} class "
            "directions plus background with controlled pairwise cosines",
        )
        check(self.images_per_class >= 1, "need at least one reference image per class")
        check(
            1 <= self.subcluster_count <= self.images_per_class,
            f"subcluster count {self.subcluster_count} must lie in "
            f"1..images_per_class={self.images_per_class}",
        )
        check(self.subcluster_spread >= 0.0, "subcluster spread must be nonnegative")
        check(
            0.0 <= self.distractor_bleed < 1.0,
            "distractor bleed must lie in [0, 1); at 1 and above the painted "
            "mixture would no longer be dominated by the true class",
        )
        check(self.noise_sigma >= 0.0, "noise sigma must be nonnegative")
        check(
            self.canvas[0] >= 8 and self.canvas[1] >= 8,
            f"canvas {self.canvas} is too small, need at least 8x8",
        )
        check(self.regions_per_image >= 1, "need at least one region per test image")
        check(self.proposal_halo >= 0, "proposal halo width must be nonnegative")
        check(
            0.0 <= self.proposal_halo_weight < 0.5,
            "proposal halo weight must lie in [0, 0.5); at 0.5 and above the "
            "halo would survive mask binarization and corrupt the rendering",
        )
        side = _grid_side(self.regions_per_image)
        min_cell = 2 * (1 + self.proposal_halo) + 1
        check(
            self.canvas[0] // side >= min_cell and self.canvas[1] // side >= min_cell,
            f"canvas {self.canvas} cannot hold a {side}x{side} grid of regions "
            f"with a {1 + self.proposal_halo}-pixel margin",
        )
        check(self.test_image_count >= 1, "need at least one test image")
        check(
            self.test_image_count * self.regions_per_image >= self.class_count,
            "test split is too small to show every class at least once",
        )
        seen = set()
        for i, j, c in self.confusability:
            check(
                0 <= i < j < self.class_count,
                f"confusability pair ({i}, {j}) must satisfy 0 <= i < j < C",
            )
            check(-1.0 < c < 1.0, f"confusability cosine {c} must lie in (-1, 1)")
            check((i, j) not in seen, f"duplicate confusability pair ({i}, {j})")
            seen.add((i, j))

    def to_dict(self) -> dict:
        return {
            "class_count": self.class_count,
            "feature_dim": self.feature_dim,
            "images_per_class": self.images_per_class,
            "subcluster_count": self.subcluster_count,
            "subcluster_spread": self.subcluster_spread,
            "antipodal_modes": self.antipodal_modes,
            "novel_test_modes": self.novel_test_modes,
            "confusability": [list(t) for t in self.confusability],
            "distractor_bleed": self.distractor_bleed,
            "noise_sigma": self.noise_sigma,
            "canvas": list(self.canvas),
            "regions_per_image": self.regions_per_image,
            "proposal_halo": self.proposal_halo,
            "proposal_halo_weight": self.proposal_halo_weight,
            "test_image_count": self.test_image_count,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "WorldSpec":
        if not isinstance(doc, dict):
            raise ValidationError("world spec document must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ValidationError(f"world spec has unknown fields {unknown}")
        return cls(**doc)

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path) -> "WorldSpec":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}: world spec is not valid JSON: {e}") from e
        return cls.from_dict(doc)


def _grid_side(regions: int) -> int:
    return int(math.ceil(math.sqrt(regions)))


def class_means(spec: WorldSpec) -> np.ndarray:
    """[C+1, D] float32 unit rows (row 0 is background) whose pairwise
    cosines realize the requested Gram matrix via its Cholesky factor."""
    c1 = spec.class_count + 1
    gram = np.eye(c1, dtype=np.float64)
    for i, j, c in spec.confusability:
        gram[i + 1, j + 1] = gram[j + 1, i + 1] = c
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as e:
        raise NumericError(
            f"confusability targets are not jointly realizable as unit vectors: {e}"
        ) from e
    means = np.zeros((c1, spec.feature_dim), dtype=np.float64)
    means[:, :c1] = chol
    return means.astype(np.float32)


def subcluster_directions(
    spec: WorldSpec, means: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """[C, T, D] float32 unit directions around each class mean.

    With ``antipodal_modes`` the offsets come in +/- pairs (the last
    mode of an odd count stays unpaired), so a balanced mean over the
    modes recovers the class mean exactly.
    """
    c, t, d = spec.class_count, spec.subcluster_count, spec.feature_dim
    dirs = np.empty((c, t, d), dtype=np.float32)
    for k in range(c):
        mean = means[k + 1].astype(np.float64)

        def place(slot: int, offset: np.ndarray) -> None:
            w = mean + spec.subcluster_spread * offset
            dirs[k, slot] = (w / np.linalg.norm(w)).astype(np.float32)

        if spec.subcluster_spread == 0.0:
            dirs[k, :] = means[k + 1]
            continue
        if spec.antipodal_modes:
            for pair in range(t // 2):
                v = rng.standard_normal(d)
                v /= np.linalg.norm(v)
                place(2 * pair, v)
                place(2 * pair + 1, -v)
            if t % 2:
                v = rng.standard_normal(d)
                v /= np.linalg.norm(v)
                place(t - 1, v)
        else:
            for s in range(t):
                v = rng.standard_normal(d)
                v /= np.linalg.norm(v)
                place(s, v)
    return dirs


def _paired_confusability(
    base: float, pair: float, witness_close: float, witness_far: float
) -> tuple[tuple[int, int, float], ...]:
    """Ten-class Gram targets: pairs (0,1), (2,3), (4,5) at ``pair``,
    witness classes 6, 7, 8 tied to the even member of their pair at
    ``witness_close`` and to the odd member at ``witness_far``, and
    ``base`` everywhere else (class 9 has only base relations)."""
    grid = {(i, j): base for i in range(10) for j in range(i + 1, 10)}
    for a, b, w in ((0, 1, 6), (2, 3, 7), (4, 5, 8)):
        grid[(a, b)] = pair
        grid[(a, w)] = witness_close
        grid[(b, w)] = witness_far
    return tuple((i, j, v) for (i, j), v in sorted(grid.items()))


def confusable_pair_world(seed: int = 0) -> WorldSpec:
    """Ten classes with three near-twin pairs whose members differ in
    how strongly they relate to a witness class. Antipodal modes keep
    each class's holistic mean free of mode leakage, so the pair margin
    is thin for a plain nearest-reference decision while the witness
    coordinate still separates the twins."""
    return WorldSpec(
        class_count=10,
        feature_dim=64,
        images_per_class=20,
        subcluster_count=8,
        subcluster_spread=0.45,
        antipodal_modes=True,
        confusability=_paired_confusability(0.25, 0.92, 0.55, 0.25),
        noise_sigma=0.30,
        canvas=(32, 32),
        regions_per_image=16,
        test_image_count=12,
        seed=seed,
    )


def multi_modal_world(seed: int = 0) -> WorldSpec:
    """The same relational structure as ``confusable_pair_world`` but
    with wide appearance modes and test regions painted with fresh
    directions never seen in the references. Matching against one
    holistic mean per class is coarse here; per-mode prototypes carry
    the remaining signal."""
    return WorldSpec(
        class_count=10,
        feature_dim=64,
        images_per_class=20,
        subcluster_count=8,
        subcluster_spread=0.90,
        antipodal_modes=False,
        novel_test_modes=True,
        confusability=_paired_confusability(0.25, 0.92, 0.55, 0.25),
        noise_sigma=0.30,
        canvas=(32, 32),
        regions_per_image=16,
        test_image_count=12,
        seed=seed,
    )


def _fresh_mode(
    mean: np.ndarray, spread: float, rng: np.random.Generator
) -> np.ndarray:
    """A unit direction at the given spread around ``mean``, drawn fresh."""
    mean = mean.astype(np.float64)
    if spread == 0.0:
        return mean.astype(np.float32)
    v = rng.standard_normal(mean.shape[0])
    v /= np.linalg.norm(v)
    w = mean + spread * v
    return (w / np.linalg.norm(w)).astype(np.float32)


def _sample_rect(rng: np.random.Generator, h: int, w: int) -> tuple[int, int, int, int]:
    rh = int(rng.integers(max(2, h // 4), h // 2 + 1))
    rw = int(rng.integers(max(2, w // 4), w // 2 + 1))
    r0 = int(rng.integers(0, h - rh + 1))
    c0 = int(rng.integers(0, w - rw + 1))
    return r0, c0, rh, rw


def _rect_mask(h: int, w: int, rect: tuple[int, int, int, int]) -> np.ndarray:
    r0, c0, rh, rw = rect
    mask = np.zeros((h, w), dtype=np.float32)
    mask[r0 : r0 + rh, c0 : c0 + rw] = 1.0
    return mask


def _halo_mask(
    h: int, w: int, rect: tuple[int, int, int, int], halo: int, weight: float
) -> np.ndarray:
    """Rectangle at weight 1 with a soft ring of ``halo`` pixels around it."""
    r0, c0, rh, rw = rect
    mask = np.zeros((h, w), dtype=np.float32)
    if halo > 0 and weight > 0.0:
        mask[
            max(0, r0 - halo) : min(h, r0 + rh + halo),
            max(0, c0 - halo) : min(w, c0 + rw + halo),
        ] = weight
    mask[r0 : r0 + rh, c0 : c0 + rw] = 1.0
    return mask


def _attention_stack(h: int, w: int, rect: tuple[int, int, int, int]) -> np.ndarray:
    """Attention bump: 1.0 on the rectangle, a sub-0.7 exponential tail
    outside, replicated over layers/steps at power-of-two scales."""
    r0, c0, rh, rw = rect
    rows = np.arange(h, dtype=np.float64)[:, None]
    cols = np.arange(w, dtype=np.float64)[None, :]
    dr = np.maximum(np.maximum(r0 - rows, rows - (r0 + rh - 1)), 0.0)
    dc = np.maximum(np.maximum(c0 - cols, cols - (c0 + rw - 1)), 0.0)
    dist = np.maximum(dr, dc)
    pattern = np.where(
        dist == 0.0, 1.0, _OUTSIDE_PEAK * np.exp(-dist / 4.0)
    ).astype(np.float32)
    maps = np.empty((ATTENTION_LAYERS, ATTENTION_STEPS, h, w), dtype=np.float32)
    idx = 0
    for layer in range(ATTENTION_LAYERS):
        for step in range(ATTENTION_STEPS):
            scale = _ATTENTION_SCALES[idx % len(_ATTENTION_SCALES)]
            maps[layer, step] = (pattern.astype(np.float64) * scale).astype(np.float32)
            idx += 1
    return maps


def _paint_features(
    h: int,
    w: int,
    background: np.ndarray,
    rects: list[tuple[tuple[int, int, int, int], np.ndarray]],
    rng: np.random.Generator,
    sigma: float,
) -> np.ndarray:
    fmap = np.empty((h, w, background.shape[0]), dtype=np.float32)
    fmap[:] = background
    for rect, vec in rects:
        r0, c0, rh, rw = rect
        fmap[r0 : r0 + rh, c0 : c0 + rw] = vec
    if sigma > 0.0:
        noisy = fmap.astype(np.float64) + rng.normal(0.0, sigma, fmap.shape)
        fmap = noisy.astype(np.float32)
    return fmap


def generate_world(spec: WorldSpec, out_dir) -> Path:
    """Materialize a world under ``out_dir``; returns the manifest path.

    Layout: ``refs/`` and ``tests/`` tensor files, ``manifest.json``
    linking them, and ``truth.json`` holding the world spec plus the
    per-proposal correct labels (what a perfect classifier must output).
    """
    out = Path(out_dir)
    (out / "refs").mkdir(parents=True, exist_ok=True)
    (out / "tests").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    means = class_means(spec)
    dirs = subcluster_directions(spec, means, rng)
    background = means[0]
    h, w = spec.canvas

    categories = [
        {"id": k, "name": f"class_{k:02d}", "prompt": f"a photo of a class_{k:02d}"}
        for k in range(spec.class_count)
    ]
    references = []
    for k in range(spec.class_count):
        for i in range(spec.images_per_class):
            rect = _sample_rect(rng, h, w)
            vec = dirs[k, i % spec.subcluster_count]
            base = f"refs/cat_{k:03d}_img_{i:03d}"
            write_tensor(
                _paint_features(h, w, background, [(rect, vec)], rng, spec.noise_sigma),
                out / f"{base}_features.rimt",
            )
            write_tensor(_attention_stack(h, w, rect), out / f"{base}_attention.rimt")
            write_tensor(_rect_mask(h, w, rect), out / f"{base}_mask.rimt")
            references.append(
                {
                    "category_id": k,
                    "features": f"{base}_features.rimt",
                    "attention": f"{base}_attention.rimt",
                    "mask": f"{base}_mask.rimt",
                }
            )

    bleed_mean: dict[int, np.ndarray] = {}
    if spec.distractor_bleed > 0.0:
        best: dict[int, tuple[float, int]] = {}
        for i, j, c in spec.confusability:
            if c < _BLEED_MIN_COSINE:
                continue
            for a, b in ((i, j), (j, i)):
                if c > best.get(a, (-1.0, -1))[0]:
                    best[a] = (c, b)
        bleed_mean = {a: means[b + 1] for a, (_, b) in best.items()}

    side = _grid_side(spec.regions_per_image)
    cell_h, cell_w = h // side, w // side
    inset = 1 + spec.proposal_halo  # halos of neighboring regions never collide
    tests = []
    truth_images = []
    region_index = 0
    for ti in range(spec.test_image_count):
        image_id = f"test_{ti:03d}"
        rects = []
        regions = []
        for ri in range(spec.regions_per_image):
            row, col = divmod(ri, side)
            rect = (
                row * cell_h + inset,
                col * cell_w + inset,
                cell_h - 2 * inset,
                cell_w - 2 * inset,
            )
            cls = region_index % spec.class_count
            if spec.novel_test_modes:
                sub = -1  # no reference mode reused
                vec = _fresh_mode(means[cls + 1], spec.subcluster_spread, rng)
            else:
                sub = region_index % spec.subcluster_count
                vec = dirs[cls, sub]
            partner = bleed_mean.get(cls)
            if partner is not None:
                mixed = vec.astype(np.float64) + spec.distractor_bleed * partner
                vec = (mixed / np.linalg.norm(mixed)).astype(np.float32)
            rects.append((rect, vec))
            regions.append(
                {"proposal": ri, "category_id": cls, "label": cls + 1, "subcluster": sub}
            )
            region_index += 1
        base = f"tests/{image_id}"
        write_tensor(
            _paint_features(h, w, background, rects, rng, spec.noise_sigma),
            out / f"{base}_features.rimt",
        )
        gt = np.zeros((h, w), dtype=np.float32)
        proposal_paths = []
        for ri, (rect, _) in enumerate(rects):
            r0, c0, rh, rw = rect
            gt[r0 : r0 + rh, c0 : c0 + rw] = float(regions[ri]["label"])
            prop = f"{base}_prop_{ri:02d}.rimt"
            write_tensor(
                _halo_mask(h, w, rect, spec.proposal_halo, spec.proposal_halo_weight),
                out / prop,
            )
            proposal_paths.append(prop)
        write_tensor(gt, out / f"{base}_gt.rimt")
        tests.append(
            {
                "image_id": image_id,
                "features": f"{base}_features.rimt",
                "proposals": proposal_paths,
                "label_map": f"{base}_gt.rimt",
            }
        )
        truth_images.append({"image_id": image_id, "regions": regions})

    manifest_path = out / "manifest.json"
    manifest_path.write_text(
        json.dumps(
            {"categories": categories, "references": references, "tests": tests},
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    (out / "truth.json").write_text(
        json.dumps({"world": spec.to_dict(), "images": truth_images}, indent=2) + "\n",
        encoding="utf-8",
    )
    return manifest_path


def load_truth(world_dir) -> dict:
    """Parse ``truth.json`` from a generated world directory."""
    path = Path(world_dir) / "truth.json"
    if not path.is_file():
        raise ValidationError(f"truth file not found: {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def true_labels(truth: dict) -> dict[str, tuple[int, ...]]:
    """Per-image correct proposal labels, in proposal order."""
    result = {}
    for img in truth["images"]:
        regions = sorted(img["regions"], key=lambda r: r["proposal"])
        result[img["image_id"]] = tuple(int(r["label"]) for r in regions)
    return result


@dataclass(frozen=True)
class AblationArm:
    """One configuration row of an ablation run."""

    name: str
    naive: bool = False
    config: MatchConfig = field(default_factory=MatchConfig)
    use_foreground_mask: bool = True


@dataclass(frozen=True)
class AblationRow:
    name: str
    miou: float
    delta_vs_first: float


def default_arms(config: MatchConfig | None = None) -> tuple[AblationArm, ...]:
    """The canonical ladder: nearest-reference baseline, ranking match
    without subcategory voting, ranking match with subcategory voting."""
    cfg = config or MatchConfig()
    return (
        AblationArm("naive", naive=True, config=cfg),
        AblationArm("ranking", config=replace(cfg, use_subcategories=False)),
        AblationArm("ranking_subcats", config=replace(cfg, use_subcategories=True)),
    )


def run_ablation(
    manifest_path,
    arms: tuple[AblationArm, ...] | list[AblationArm],
    out_dir,
    *,
    attn_threshold: float = DEFAULT_ATTENTION_THRESHOLD,
    seed: int = 0,
    threads: int = 1,
) -> tuple[AblationRow, ...]:
    """Run every arm on one dataset and emit a delta table.

    References are built once per distinct (subcategory count, mask
    source) pair and shared across arms; each arm classifies, renders
    and scores on its own, writing a report under ``out_dir/<name>/``.
    Deltas are mIoU differences against the first arm.
    """
    from .pipeline import build_reference_set, classify_manifest, evaluate_predictions

    arms = tuple(arms)
    if not arms:
        raise ValidationError("ablation needs at least one arm")
    names = [a.name for a in arms]
    if len(set(names)) != len(names):
        raise ValidationError(f"ablation arm names must be unique, got {names}")
    for name in names:
        if not name or "/" in name or "\\" in name or name in (".", ".."):
            raise ValidationError(f"arm name {name!r} is not a safe directory name")

    manifest = load_manifest(manifest_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ref_cache = {}
    rows = []
    arm_docs = []
    for arm in arms:
        key = (arm.config.subcategory_count, arm.use_foreground_mask)
        if key not in ref_cache:
            ref_cache[key] = build_reference_set(
                manifest,
                subcategory_count=arm.config.subcategory_count,
                attn_threshold=attn_threshold,
                seed=seed,
                use_foreground_mask=arm.use_foreground_mask,
            )
        refs = ref_cache[key].references
        predictions = classify_manifest(
            manifest, refs, arm.config, naive=arm.naive, threads=threads
        )
        report = evaluate_predictions(manifest, predictions, refs.class_names())
        echo = {
            "arm": arm.name,
            "naive": arm.naive,
            "agent_count": arm.config.agent_count,
            "use_subcategories": arm.config.use_subcategories,
            "subcategory_count": arm.config.subcategory_count,
            "use_foreground_mask": arm.use_foreground_mask,
            "attn_threshold": attn_threshold,
            "seed": seed,
        }
        emit_report(report, out / arm.name, config_echo=echo)
        rows.append((arm, report.miou, echo))
        arm_docs.append(echo)

    first = rows[0][1]
    result = tuple(
        AblationRow(arm.name, miou, miou - first) for arm, miou, _ in rows
    )
    doc = {
        "arms": [
            {**echo, "miou": miou, "delta_vs_first": miou - first}
            for (_, miou, echo) in rows
        ]
    }
    (out / "ablation.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    name_w = max(len("arm"), max(len(n) for n in names))
    lines = [f"{'arm':<{name_w}}  {'mIoU %':>8}  {'delta':>8}"]
    for row in result:
        lines.append(
            f"{row.name:<{name_w}}  {row.miou * 100:8.2f}  {row.delta_vs_first * 100:+8.2f}"
        )
    (out / "ablation.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return result
