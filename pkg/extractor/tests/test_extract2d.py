import json

import numpy as np
import pytest
import torch
from PIL import Image

from partmap import RunConfig, load_problem_file, validate_graph
from partmap.cli import main as partmap_main
from partmap_extract import (
    ManifestError,
    ViTPatchBackbone,
    VisionTransformer,
    check_embedding_dim,
    extract_2d,
    keypoint_embeddings,
    load_manifest,
)
from partmap_extract.vit import IMAGE_SIZE, PATCH_SIZE


def write_image(path, seed, size=(300, 200)):
    rng = np.random.default_rng(seed)
    arr = rng.integers(0, 256, (size[1], size[0], 3), dtype=np.uint8)
    Image.fromarray(arr).save(path)
    return path


def make_manifest(tmp_path, backbone="dry-run", checkpoint=None, labels=True):
    write_image(tmp_path / "a.png", 0)
    write_image(tmp_path / "b.png", 1)
    keypoints = [[30.0, 40.0], [120.0, 60.0], [200.0, 150.0], [80.0, 120.0]]
    source = {"image": "a.png", "keypoints": keypoints, "centroid": [110.0, 90.0]}
    if labels:
        source["labels"] = ["head", "torso", "tail", "leg"]
    manifest = {
        "model": "ibot-vit-l16",
        "output": "out/problems2d.json",
        "problems": [
            {
                "id": "img-pair-0",
                "category": "cat",
                "source": source,
                "target": {"image": "b.png", "keypoints": keypoints},
                "gt_correspondence": [0, 1, 2, 3],
            }
        ],
    }
    if backbone is not None:
        manifest["backbone"] = backbone
    if checkpoint is not None:
        manifest["checkpoint"] = checkpoint
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


class TestManifest:
    def test_unknown_model_rejected(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"model": "resnet", "output": "o.json",
                                    "problems": [{}]}))
        with pytest.raises(ManifestError, match="model tag"):
            load_manifest(path)

    def test_dimension_check(self):
        check_embedding_dim("ibot-vit-l16", 1024)
        check_embedding_dim("dgcnn-partseg", 64)
        with pytest.raises(ManifestError, match="1024"):
            check_embedding_dim("ibot-vit-l16", 16)

    def test_missing_checkpoint_surfaced(self, tmp_path):
        manifest = load_manifest(make_manifest(tmp_path, backbone="vit"))
        with pytest.raises(ManifestError, match="checkpoint"):
            extract_2d(manifest)


class TestDryRunPipeline:
    def test_output_passes_primary_validation(self, tmp_path):
        manifest = load_manifest(make_manifest(tmp_path))
        document = extract_2d(manifest)
        assert document["embedding_dim"] == 1024
        pf = load_problem_file(manifest.output, RunConfig())
        problem = pf.problems[0].problem
        assert validate_graph(problem.source) == []
        assert validate_graph(problem.target) == []
        assert problem.source.embedding_matrix().shape == (4, 1024)
        assert [n.label for n in problem.source.nodes] == [
            "head", "torso", "tail", "leg"
        ]
        assert (problem.source.centroid == np.array([110.0, 90.0])).all()

    def test_deterministic_output_bytes(self, tmp_path):
        manifest = load_manifest(make_manifest(tmp_path))
        extract_2d(manifest)
        first = manifest.output.read_bytes()
        extract_2d(manifest)
        assert manifest.output.read_bytes() == first

    def test_primary_solves_extracted_file(self, tmp_path):
        manifest = load_manifest(make_manifest(tmp_path))
        extract_2d(manifest)
        out = tmp_path / "mappings.json"
        assert partmap_main(["solve", str(manifest.output), str(out)]) == 0
        record = json.loads(out.read_text())["results"][0]
        assert len(record["hard_assignment"]) == 4
        assert "labels" in record

    def test_wrong_dim_backbone_rejected(self, tmp_path):
        manifest = load_manifest(make_manifest(tmp_path))
        torch.manual_seed(0)
        tiny = ViTPatchBackbone(VisionTransformer(embed_dim=16, depth=1,
                                                  num_heads=2))
        with pytest.raises(ManifestError, match="1024"):
            extract_2d(manifest, backbone=tiny)


class TestKeypointEmbeddings:
    def test_patch_center_identity(self, tmp_path):
        torch.manual_seed(3)
        backbone = ViTPatchBackbone(VisionTransformer(embed_dim=16, depth=2,
                                                      num_heads=2))
        rng = np.random.default_rng(4)
        arr = rng.integers(0, 256, (IMAGE_SIZE, IMAGE_SIZE, 3), dtype=np.uint8)
        image = Image.fromarray(arr)
        grid = backbone.embed_patches(arr)
        row, col = 5, 9
        center = [(col + 0.5) * PATCH_SIZE, (row + 0.5) * PATCH_SIZE]
        emb = keypoint_embeddings(backbone, image, np.array([center, [0.0, 0.0]]))
        assert emb[0] == pytest.approx(grid[row, col], abs=1e-12)

    def test_same_image_twice_identical_records(self, tmp_path):
        manifest_path = make_manifest(tmp_path)
        data = json.loads(manifest_path.read_text())
        # target becomes the same image as source
        data["problems"][0]["target"]["image"] = "a.png"
        manifest_path.write_text(json.dumps(data))
        document = extract_2d(load_manifest(manifest_path))
        problem = document["problems"][0]
        assert problem["source"]["nodes"][0]["embedding"] == \
            problem["target"]["nodes"][0]["embedding"]
