"""Thin export scripts: pretrained vision backbones -> interchange files."""

from .dgcnn import (
    DGCNNPartSeg,
    DGCNNPointBackbone,
    load_dgcnn_checkpoint,
    random_init_model,
)
from .extract2d import extract_2d, keypoint_embeddings
from .extract3d import extract_3d, load_points
from .manifest import (
    EXPECTED_DIMS,
    ExtractionManifest,
    ManifestError,
    check_embedding_dim,
    load_manifest,
)
from .vit import (
    DryRunPatchBackbone,
    ViTPatchBackbone,
    VisionTransformer,
    bilinear_sample,
    load_vit_checkpoint,
    vit_large_16,
)

__version__ = "0.1.0"
