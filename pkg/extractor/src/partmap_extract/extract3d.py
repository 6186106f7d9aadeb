"""Point clouds -> interchange point-set payloads.

Each object contributes its raw coordinates plus a 64-dimensional embedding
per point from the third EdgeConv stage; grouping points into part nodes
happens downstream when the file is loaded. Marker and camera blocks pass
through untouched.
"""

from __future__ import annotations

import numpy as np

from .dgcnn import (
    DGCNNPartSeg,
    DGCNNPointBackbone,
    load_dgcnn_checkpoint,
    random_init_model,
)
from .extract2d import atomic_write_json
from .manifest import ExtractionManifest, ManifestError, check_embedding_dim

DEFAULT_KNN = 40


def load_points(manifest: ExtractionManifest, entry, context: str) -> np.ndarray:
    if isinstance(entry, (list, tuple)):
        pts = np.asarray(entry, dtype=float)
    else:
        path = manifest.resolve(entry)
        if not path.exists():
            raise ManifestError(f"{context}: point file not found: {path}")
        if path.suffix == ".npy":
            pts = np.load(path)
        else:
            pts = np.loadtxt(path)
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ManifestError(f"{context}: expected (N, 3) points, got {pts.shape}")
    return pts


def build_backbone_3d(manifest: ExtractionManifest, max_points: int):
    knn_k = int(manifest.options.get("knn_k", DEFAULT_KNN))
    knn_k = min(knn_k, max_points)  # topk cannot exceed the cloud size
    normalize = bool(manifest.options.get("normalize", True))
    if manifest.checkpoint is not None:
        model = DGCNNPartSeg(k=knn_k)
        load_dgcnn_checkpoint(model, manifest.checkpoint)
    elif "random_init_seed" in manifest.options:
        model = random_init_model(knn_k, int(manifest.options["random_init_seed"]))
    else:
        raise ManifestError(
            "model 'dgcnn-partseg' needs a 'checkpoint' path "
            "(or 'random_init_seed' for pipeline dry runs)"
        )
    return DGCNNPointBackbone(model, normalize=normalize)


def extract_3d(manifest: ExtractionManifest, backbone=None) -> dict:
    clouds = {}
    max_points = 2
    for idx, problem in enumerate(manifest.problems):
        pid = str(problem.get("id", f"#{idx}"))
        for side in ("source", "target"):
            if side not in problem or "points" not in problem[side]:
                raise ManifestError(f"problem '{pid}': missing {side} points")
            pts = load_points(manifest, problem[side]["points"],
                              f"problem '{pid}' {side}")
            clouds[(pid, side)] = pts
            max_points = max(max_points, len(pts))

    backbone = backbone or build_backbone_3d(manifest, max_points)
    check_embedding_dim(manifest.model, backbone.dim)

    records = []
    for idx, problem in enumerate(manifest.problems):
        pid = str(problem.get("id", f"#{idx}"))
        record = {"id": pid, "category": problem.get("category", "")}
        for side in ("source", "target"):
            pts = clouds[(pid, side)]
            embeddings = backbone.embed_points(pts)
            record[side] = {
                "points": {
                    "coords": pts.tolist(),
                    "embeddings": embeddings.tolist(),
                }
            }
        for passthrough in ("markers", "camera", "gt_correspondence"):
            if problem.get(passthrough) is not None:
                record[passthrough] = problem[passthrough]
        records.append(record)

    document = {
        "schema_version": "1",
        "coord_dim": 3,
        "embedding_dim": backbone.dim,
        "relation_recipe": "3d-angular",
        "metadata": {
            "model": manifest.model,
            "normalized_for_inference": backbone.normalize,
        },
        "problems": records,
    }
    manifest.output.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_json(manifest.output, document)
    return document
