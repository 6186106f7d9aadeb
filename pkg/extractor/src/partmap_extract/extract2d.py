"""Image keypoints -> interchange problem records.

Images are resized to 224x224 and split into 16x16 patches; the backbone
returns one embedding per patch. Keypoints given in original image pixels
are scaled into the resized frame and sampled from the patch grid with
edge-clamped bilinear interpolation, patch centers aligned (a keypoint at
the exact center of a patch reproduces that patch's embedding). Emitted
node coordinates stay in the original pixel space.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from .manifest import ExtractionManifest, ManifestError, check_embedding_dim
from .vit import (
    IMAGE_SIZE,
    PATCH_SIZE,
    DryRunPatchBackbone,
    ViTPatchBackbone,
    bilinear_sample,
    load_vit_checkpoint,
    vit_large_16,
)

COORD_CONVENTION = (
    "keypoints scaled to 224x224, patch grid sampled at patch centers, "
    "edge-clamped bilinear interpolation"
)


def atomic_write_json(path, obj) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            json.dump(obj, f, indent=2)
            f.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def keypoint_embeddings(
    backbone, image: Image.Image, keypoints: np.ndarray
) -> np.ndarray:
    """Embed `keypoints` ((n, 2) original-pixel xy) from one image."""
    width, height = image.size
    resized = np.asarray(
        image.convert("RGB").resize((IMAGE_SIZE, IMAGE_SIZE), Image.BILINEAR),
        dtype=np.uint8,
    )
    grid = backbone.embed_patches(resized)
    out = np.empty((len(keypoints), backbone.dim))
    for i, (x, y) in enumerate(np.asarray(keypoints, dtype=float)):
        gx = (x * IMAGE_SIZE / width) / PATCH_SIZE - 0.5
        gy = (y * IMAGE_SIZE / height) / PATCH_SIZE - 0.5
        out[i] = bilinear_sample(grid, gx, gy)
    return out


def _side_block(backbone, manifest: ExtractionManifest, side: dict, context: str):
    if "image" not in side or "keypoints" not in side:
        raise ManifestError(f"{context}: needs 'image' and 'keypoints'")
    image_path = manifest.resolve(side["image"])
    image = Image.open(image_path)
    keypoints = np.asarray(side["keypoints"], dtype=float)
    if keypoints.ndim != 2 or keypoints.shape[1] != 2 or len(keypoints) < 2:
        raise ManifestError(f"{context}: keypoints must be a (n>=2, 2) list")
    embeddings = keypoint_embeddings(backbone, image, keypoints)
    labels = side.get("labels")
    if labels is not None and len(labels) != len(keypoints):
        raise ManifestError(f"{context}: {len(labels)} labels for "
                            f"{len(keypoints)} keypoints")
    nodes = []
    for i in range(len(keypoints)):
        node = {
            "id": i,
            "embedding": embeddings[i].tolist(),
            "coords": keypoints[i].tolist(),
        }
        if labels is not None:
            node["label"] = labels[i]
        nodes.append(node)
    block = {"nodes": nodes}
    if side.get("centroid") is not None:
        block["centroid"] = [float(v) for v in side["centroid"]]
    return block


def build_backbone_2d(manifest: ExtractionManifest):
    kind = manifest.options.get("backbone", "vit")
    if kind == "dry-run":
        return DryRunPatchBackbone(manifest.expected_dim)
    if kind != "vit":
        raise ManifestError(f"unknown 2-D backbone {kind!r}")
    if manifest.checkpoint is None:
        raise ManifestError(
            "model 'ibot-vit-l16' needs a 'checkpoint' path "
            "(or \"backbone\": \"dry-run\" for pipeline validation)"
        )
    model = vit_large_16()
    load_vit_checkpoint(model, manifest.checkpoint)
    return ViTPatchBackbone(model)


def extract_2d(manifest: ExtractionManifest, backbone=None) -> dict:
    """Run extraction for every problem in the manifest; returns the
    interchange document (also written to manifest.output)."""
    backbone = backbone or build_backbone_2d(manifest)
    check_embedding_dim(manifest.model, backbone.dim)
    records = []
    for idx, problem in enumerate(manifest.problems):
        pid = str(problem.get("id", f"#{idx}"))
        record = {
            "id": pid,
            "category": problem.get("category", ""),
            "source": _side_block(backbone, manifest, problem["source"],
                                  f"problem '{pid}' source"),
            "target": _side_block(backbone, manifest, problem["target"],
                                  f"problem '{pid}' target"),
        }
        if problem.get("gt_correspondence") is not None:
            record["gt_correspondence"] = [int(v) for v in
                                           problem["gt_correspondence"]]
        records.append(record)
    document = {
        "schema_version": "1",
        "coord_dim": 2,
        "embedding_dim": backbone.dim,
        "relation_recipe": "2d-full",
        "metadata": {"model": manifest.model,
                     "coordinate_convention": COORD_CONVENTION},
        "problems": records,
    }
    manifest.output.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_json(manifest.output, document)
    return document
