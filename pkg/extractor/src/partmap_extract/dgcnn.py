"""Dynamic graph CNN for point clouds, part-segmentation variant.

Faithful reimplementation of the widely used PyTorch architecture (input
spatial transform, three EdgeConv stages, global feature, segmentation
head) with matching module names, so the published part-segmentation
checkpoint loads with strict key checking. Extraction uses the per-point
64-dimensional output of the third EdgeConv stage.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

EMBED_DIM = 64  # width of the third EdgeConv output


def knn(x: torch.Tensor, k: int) -> torch.Tensor:
    inner = -2 * torch.matmul(x.transpose(2, 1), x)
    xx = torch.sum(x**2, dim=1, keepdim=True)
    pairwise = -xx - inner - xx.transpose(2, 1)
    return pairwise.topk(k=k, dim=-1)[1]


def get_graph_feature(x: torch.Tensor, k: int, idx=None) -> torch.Tensor:
    """(B, D, N) -> (B, 2D, N, k) neighbor features (x_j - x_i, x_i)."""
    batch_size, num_dims, num_points = x.size()
    if idx is None:
        idx = knn(x, k=k)
    idx_base = torch.arange(0, batch_size, device=x.device).view(-1, 1, 1) * num_points
    idx = (idx + idx_base).view(-1)
    x = x.transpose(2, 1).contiguous()
    feature = x.view(batch_size * num_points, -1)[idx, :]
    feature = feature.view(batch_size, num_points, k, num_dims)
    x = x.view(batch_size, num_points, 1, num_dims).repeat(1, 1, k, 1)
    return torch.cat((feature - x, x), dim=3).permute(0, 3, 1, 2).contiguous()


class Transform_Net(nn.Module):
    def __init__(self):
        super().__init__()
        self.bn1 = nn.BatchNorm2d(64)
        self.bn2 = nn.BatchNorm2d(128)
        self.bn3 = nn.BatchNorm1d(1024)
        self.conv1 = nn.Sequential(
            nn.Conv2d(6, 64, kernel_size=1, bias=False),
            self.bn1,
            nn.LeakyReLU(negative_slope=0.2),
        )
        self.conv2 = nn.Sequential(
            nn.Conv2d(64, 128, kernel_size=1, bias=False),
            self.bn2,
            nn.LeakyReLU(negative_slope=0.2),
        )
        self.conv3 = nn.Sequential(
            nn.Conv1d(128, 1024, kernel_size=1, bias=False),
            self.bn3,
            nn.LeakyReLU(negative_slope=0.2),
        )
        self.linear1 = nn.Linear(1024, 512, bias=False)
        self.bn4 = nn.BatchNorm1d(512)
        self.linear2 = nn.Linear(512, 256, bias=False)
        self.bn5 = nn.BatchNorm1d(256)
        self.transform = nn.Linear(256, 3 * 3)
        nn.init.constant_(self.transform.weight, 0)
        nn.init.eye_(self.transform.bias.view(3, 3))

    def forward(self, x):
        batch_size = x.size(0)
        x = self.conv1(x)
        x = self.conv2(x)
        x = x.max(dim=-1, keepdim=False)[0]
        x = self.conv3(x)
        x = x.max(dim=-1, keepdim=False)[0]
        x = F.leaky_relu(self.bn4(self.linear1(x)), negative_slope=0.2)
        x = F.leaky_relu(self.bn5(self.linear2(x)), negative_slope=0.2)
        return self.transform(x).view(batch_size, 3, 3)


class DGCNNPartSeg(nn.Module):
    def __init__(self, k: int = 40, emb_dims: int = 1024, dropout: float = 0.5,
                 seg_num_all: int = 50):
        super().__init__()
        self.k = k
        self.seg_num_all = seg_num_all
        self.transform_net = Transform_Net()

        self.bn1 = nn.BatchNorm2d(64)
        self.bn2 = nn.BatchNorm2d(64)
        self.bn3 = nn.BatchNorm2d(64)
        self.bn4 = nn.BatchNorm2d(64)
        self.bn5 = nn.BatchNorm2d(64)
        self.bn6 = nn.BatchNorm1d(emb_dims)
        self.bn7 = nn.BatchNorm1d(64)
        self.bn8 = nn.BatchNorm1d(256)
        self.bn9 = nn.BatchNorm1d(256)
        self.bn10 = nn.BatchNorm1d(128)

        self.conv1 = nn.Sequential(
            nn.Conv2d(6, 64, kernel_size=1, bias=False),
            self.bn1,
            nn.LeakyReLU(negative_slope=0.2),
        )
        self.conv2 = nn.Sequential(
            nn.Conv2d(64, 64, kernel_size=1, bias=False),
            self.bn2,
            nn.LeakyReLU(negative_slope=0.2),
        )
        self.conv3 = nn.Sequential(
            nn.Conv2d(64 * 2, 64, kernel_size=1, bias=False),
            self.bn3,
            nn.LeakyReLU(negative_slope=0.2),
        )
        self.conv4 = nn.Sequential(
            nn.Conv2d(64, 64, kernel_size=1, bias=False),
            self.bn4,
            nn.LeakyReLU(negative_slope=0.2),
        )
        self.conv5 = nn.Sequential(
            nn.Conv2d(64 * 2, 64, kernel_size=1, bias=False),
            self.bn5,
            nn.LeakyReLU(negative_slope=0.2),
        )
        self.conv6 = nn.Sequential(
            nn.Conv1d(192, emb_dims, kernel_size=1, bias=False),
            self.bn6,
            nn.LeakyReLU(negative_slope=0.2),
        )
        self.conv7 = nn.Sequential(
            nn.Conv1d(16, 64, kernel_size=1, bias=False),
            self.bn7,
            nn.LeakyReLU(negative_slope=0.2),
        )
        self.conv8 = nn.Sequential(
            nn.Conv1d(1280, 256, kernel_size=1, bias=False),
            self.bn8,
            nn.LeakyReLU(negative_slope=0.2),
        )
        self.dp1 = nn.Dropout(p=dropout)
        self.conv9 = nn.Sequential(
            nn.Conv1d(256, 256, kernel_size=1, bias=False),
            self.bn9,
            nn.LeakyReLU(negative_slope=0.2),
        )
        self.dp2 = nn.Dropout(p=dropout)
        self.conv10 = nn.Sequential(
            nn.Conv1d(256, 128, kernel_size=1, bias=False),
            self.bn10,
            nn.LeakyReLU(negative_slope=0.2),
        )
        self.conv11 = nn.Conv1d(128, seg_num_all, kernel_size=1, bias=False)

    def _edgeconv_stack(self, x: torch.Tensor):
        """Spatial transform plus the three EdgeConv stages."""
        x0 = get_graph_feature(x, k=self.k)
        t = self.transform_net(x0)
        x = torch.bmm(x.transpose(2, 1), t).transpose(2, 1)

        x = get_graph_feature(x, k=self.k)
        x = self.conv1(x)
        x = self.conv2(x)
        x1 = x.max(dim=-1, keepdim=False)[0]

        x = get_graph_feature(x1, k=self.k)
        x = self.conv3(x)
        x = self.conv4(x)
        x2 = x.max(dim=-1, keepdim=False)[0]

        x = get_graph_feature(x2, k=self.k)
        x = self.conv5(x)
        x3 = x.max(dim=-1, keepdim=False)[0]
        return x1, x2, x3

    def point_embeddings(self, x: torch.Tensor) -> torch.Tensor:
        """(B, 3, N) -> (B, 64, N): third EdgeConv output per point."""
        return self._edgeconv_stack(x)[2]

    def forward(self, x: torch.Tensor, l: torch.Tensor) -> torch.Tensor:
        batch_size, _, num_points = x.size()
        x1, x2, x3 = self._edgeconv_stack(x)
        x = torch.cat((x1, x2, x3), dim=1)
        x = self.conv6(x)
        x = x.max(dim=-1, keepdim=True)[0]

        l = l.view(batch_size, -1, 1)
        l = self.conv7(l)
        x = torch.cat((x, l), dim=1).repeat(1, 1, num_points)
        x = torch.cat((x, x1, x2, x3), dim=1)
        x = self.conv8(x)
        x = self.dp1(x)
        x = self.conv9(x)
        x = self.dp2(x)
        x = self.conv10(x)
        return self.conv11(x)


def load_dgcnn_checkpoint(model: DGCNNPartSeg, path) -> None:
    """Strict load of published weights; data-parallel prefixes stripped."""
    state = torch.load(path, map_location="cpu", weights_only=False)
    if isinstance(state, dict) and "model_state_dict" in state:
        state = state["model_state_dict"]
    cleaned = {
        (k[len("module."):] if k.startswith("module.") else k): v
        for k, v in state.items()
    }
    model.load_state_dict(cleaned, strict=True)


class DGCNNPointBackbone:
    """Per-point embeddings from a (possibly pretrained) part-seg network."""

    def __init__(self, model: DGCNNPartSeg, normalize: bool = True):
        self.model = model.eval()
        self.dim = EMBED_DIM
        self.normalize = normalize

    @torch.no_grad()
    def embed_points(self, coords: np.ndarray) -> np.ndarray:
        """(N, 3) model-unit coordinates -> (N, 64) embeddings.

        When `normalize` is set, the cloud is centered and scaled to the
        unit sphere before inference (matching the network's training
        distribution); emitted coordinates are untouched either way.
        """
        pts = np.asarray(coords, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"expected (N, 3) coordinates, got {pts.shape}")
        if len(pts) < 2:
            raise ValueError("need at least 2 points")
        if self.normalize:
            pts = pts - pts.mean(axis=0)
            scale = np.linalg.norm(pts, axis=1).max()
            if scale > 0:
                pts = pts / scale
        x = torch.from_numpy(pts.T[None]).float()
        emb = self.model.point_embeddings(x)[0]  # (64, N)
        return emb.numpy().T.astype(np.float64)


def random_init_model(k: int, seed: int) -> DGCNNPartSeg:
    """Seeded randomly initialized network for pipeline dry runs."""
    torch.manual_seed(seed)
    return DGCNNPartSeg(k=k)
