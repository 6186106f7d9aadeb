"""Vision transformer backbone for patch-level image embeddings.

Standard pre-norm ViT with the parameter naming used by the self-supervised
ViT checkpoints this feeds from (patch_embed.proj, blocks.N.attn.qkv, ...),
so published weights load directly. Only the backbone is implemented; the
projection head is dropped on load. Output is the grid of patch tokens
after the final block and backbone LayerNorm.
"""

from __future__ import annotations

import math
import zlib

import numpy as np
import torch
import torch.nn as nn

IMAGE_SIZE = 224
PATCH_SIZE = 16
IMAGENET_MEAN = np.array([0.485, 0.456, 0.406])
IMAGENET_STD = np.array([0.229, 0.224, 0.225])


class Mlp(nn.Module):
    def __init__(self, dim, hidden):
        super().__init__()
        self.fc1 = nn.Linear(dim, hidden)
        self.act = nn.GELU()
        self.fc2 = nn.Linear(hidden, dim)

    def forward(self, x):
        return self.fc2(self.act(self.fc1(x)))


class Attention(nn.Module):
    def __init__(self, dim, num_heads):
        super().__init__()
        self.num_heads = num_heads
        self.scale = (dim // num_heads) ** -0.5
        self.qkv = nn.Linear(dim, dim * 3, bias=True)
        self.proj = nn.Linear(dim, dim)

    def forward(self, x):
        b, n, c = x.shape
        qkv = (
            self.qkv(x)
            .reshape(b, n, 3, self.num_heads, c // self.num_heads)
            .permute(2, 0, 3, 1, 4)
        )
        q, k, v = qkv[0], qkv[1], qkv[2]
        attn = (q @ k.transpose(-2, -1)) * self.scale
        attn = attn.softmax(dim=-1)
        x = (attn @ v).transpose(1, 2).reshape(b, n, c)
        return self.proj(x)


class Block(nn.Module):
    def __init__(self, dim, num_heads, mlp_ratio=4.0):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim, eps=1e-6)
        self.attn = Attention(dim, num_heads)
        self.norm2 = nn.LayerNorm(dim, eps=1e-6)
        self.mlp = Mlp(dim, int(dim * mlp_ratio))

    def forward(self, x):
        x = x + self.attn(self.norm1(x))
        return x + self.mlp(self.norm2(x))


class PatchEmbed(nn.Module):
    def __init__(self, dim):
        super().__init__()
        self.proj = nn.Conv2d(3, dim, kernel_size=PATCH_SIZE, stride=PATCH_SIZE)

    def forward(self, x):
        return self.proj(x).flatten(2).transpose(1, 2)  # (B, N, D)


class VisionTransformer(nn.Module):
    def __init__(self, embed_dim=1024, depth=24, num_heads=16, mlp_ratio=4.0):
        super().__init__()
        self.embed_dim = embed_dim
        self.grid = IMAGE_SIZE // PATCH_SIZE
        num_patches = self.grid * self.grid
        self.patch_embed = PatchEmbed(embed_dim)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, embed_dim))
        self.pos_embed = nn.Parameter(torch.zeros(1, num_patches + 1, embed_dim))
        self.blocks = nn.ModuleList(
            [Block(embed_dim, num_heads, mlp_ratio) for _ in range(depth)]
        )
        self.norm = nn.LayerNorm(embed_dim, eps=1e-6)
        nn.init.trunc_normal_(self.pos_embed, std=0.02)
        nn.init.trunc_normal_(self.cls_token, std=0.02)

    def forward_patches(self, x: torch.Tensor) -> torch.Tensor:
        """(B, 3, 224, 224) -> (B, grid, grid, D) patch tokens."""
        b = x.shape[0]
        x = self.patch_embed(x)
        cls = self.cls_token.expand(b, -1, -1)
        x = torch.cat([cls, x], dim=1) + self.pos_embed
        for blk in self.blocks:
            x = blk(x)
        x = self.norm(x)
        return x[:, 1:, :].reshape(b, self.grid, self.grid, self.embed_dim)


def vit_large_16() -> VisionTransformer:
    return VisionTransformer(embed_dim=1024, depth=24, num_heads=16)


def _unwrap_state_dict(obj) -> dict:
    if isinstance(obj, dict):
        for key in ("teacher", "model", "state_dict"):
            if key in obj and isinstance(obj[key], dict):
                return _unwrap_state_dict(obj[key])
    return obj


def load_vit_checkpoint(model: VisionTransformer, path) -> None:
    """Load published backbone weights; raises on any missing parameter."""
    raw = torch.load(path, map_location="cpu", weights_only=False)
    state = _unwrap_state_dict(raw)
    cleaned = {}
    for key, value in state.items():
        for prefix in ("module.", "backbone."):
            if key.startswith(prefix):
                key = key[len(prefix):]
        if key.startswith("head."):
            continue
        cleaned[key] = value
    result = model.load_state_dict(cleaned, strict=False)
    if result.missing_keys:
        raise RuntimeError(
            f"checkpoint {path} is missing backbone parameters: "
            f"{result.missing_keys[:8]}"
        )


class ViTPatchBackbone:
    """Patch-grid embeddings from a (possibly pretrained) ViT."""

    def __init__(self, model: VisionTransformer):
        self.model = model.eval()
        self.dim = model.embed_dim

    @torch.no_grad()
    def embed_patches(self, image: np.ndarray) -> np.ndarray:
        """uint8 RGB (224, 224, 3) -> float (grid, grid, D)."""
        if image.shape[:2] != (IMAGE_SIZE, IMAGE_SIZE):
            raise ValueError(f"expected {IMAGE_SIZE}x{IMAGE_SIZE} input")
        x = (image.astype(np.float64) / 255.0 - IMAGENET_MEAN) / IMAGENET_STD
        t = torch.from_numpy(x.transpose(2, 0, 1)[None]).float()
        out = self.model.forward_patches(t)[0]
        return out.numpy().astype(np.float64)


class DryRunPatchBackbone:
    """Deterministic placeholder embeddings at the real output width.

    Lets the full manifest -> interchange-file pipeline run (and be
    validated downstream) without downloading checkpoints. Embeddings are
    seeded from the image bytes, so identical images produce identical
    records and different images do not.
    """

    def __init__(self, dim: int):
        self.dim = dim
        self.grid = IMAGE_SIZE // PATCH_SIZE

    def embed_patches(self, image: np.ndarray) -> np.ndarray:
        rng = np.random.default_rng(zlib.crc32(image.tobytes()))
        base = rng.standard_normal((self.grid, self.grid, self.dim))
        # mix in local brightness so the grid is image-dependent per patch
        cell = IMAGE_SIZE // self.grid
        lum = image.astype(np.float64).mean(axis=2)
        patch_lum = lum.reshape(self.grid, cell, self.grid, cell).mean(axis=(1, 3))
        return base + patch_lum[:, :, None] / 255.0


def bilinear_sample(grid: np.ndarray, gx: float, gy: float) -> np.ndarray:
    """Edge-clamped bilinear lookup on a (rows, cols, D) grid.

    Coordinates are in grid units with (0, 0) at the center of the first
    patch, so an input landing exactly on a patch center returns that
    patch's embedding unchanged.
    """
    rows, cols = grid.shape[:2]
    gx = min(max(gx, 0.0), cols - 1.0)
    gy = min(max(gy, 0.0), rows - 1.0)
    x0 = int(math.floor(gx))
    y0 = int(math.floor(gy))
    x1 = min(x0 + 1, cols - 1)
    y1 = min(y0 + 1, rows - 1)
    fx = gx - x0
    fy = gy - y0
    top = (1 - fx) * grid[y0, x0] + fx * grid[y0, x1]
    bottom = (1 - fx) * grid[y1, x0] + fx * grid[y1, x1]
    return (1 - fy) * top + fy * bottom
