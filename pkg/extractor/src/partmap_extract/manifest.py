"""Extraction manifests: which model, which inputs, where to write.

A manifest is a JSON file; relative paths inside it resolve against the
manifest's own directory. The model tag pins the embedding dimension the
emitted interchange file must carry (1024 for the ViT-L/16 image backbone,
64 for the point-cloud network's third edge-convolution layer); extraction
aborts rather than write records at any other width.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

EXPECTED_DIMS = {"ibot-vit-l16": 1024, "dgcnn-partseg": 64}


class ManifestError(ValueError):
    pass


@dataclass
class ExtractionManifest:
    model: str
    output: Path
    problems: list[dict]
    checkpoint: Path | None = None
    base_dir: Path = Path(".")
    options: dict = field(default_factory=dict)

    @property
    def expected_dim(self) -> int:
        return EXPECTED_DIMS[self.model]

    def resolve(self, path_like) -> Path:
        p = Path(path_like)
        return p if p.is_absolute() else self.base_dir / p


def load_manifest(path) -> ExtractionManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {path}")
    except json.JSONDecodeError as e:
        raise ManifestError(f"{path}: not valid JSON: {e}")

    model = data.get("model")
    if model not in EXPECTED_DIMS:
        raise ManifestError(
            f"{path}: unknown model tag {model!r}; expected one of "
            f"{sorted(EXPECTED_DIMS)}"
        )
    if "output" not in data:
        raise ManifestError(f"{path}: missing 'output'")
    problems = data.get("problems")
    if not problems:
        raise ManifestError(f"{path}: no problems listed")

    base = path.parent
    checkpoint = data.get("checkpoint")
    known = {"model", "output", "problems", "checkpoint"}
    return ExtractionManifest(
        model=model,
        output=base / data["output"] if not Path(data["output"]).is_absolute()
        else Path(data["output"]),
        problems=problems,
        checkpoint=(base / checkpoint if not Path(checkpoint).is_absolute()
                    else Path(checkpoint)) if checkpoint else None,
        base_dir=base,
        options={k: v for k, v in data.items() if k not in known},
    )


def check_embedding_dim(model: str, dim: int) -> None:
    expected = EXPECTED_DIMS[model]
    if dim != expected:
        raise ManifestError(
            f"model {model!r} must emit {expected}-dimensional embeddings, "
            f"got {dim}"
        )
