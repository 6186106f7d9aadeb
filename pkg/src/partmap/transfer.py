"""Turning a solved mapping into task outputs.

2-D problems: copy part labels from each target's strongest source node.
3-D problems: carry a marker's offset from its source cluster center onto
the mapped target cluster center, then project the 3-D location into image
pixels with a look-at pinhole camera.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence, Union

import numpy as np

from .clustering import Clustering, closest_cluster
from .errors import InvalidInputError, ProjectionError
from .graph import MappingMatrix
from .solver import hard_assignment

if TYPE_CHECKING:
    from .evaluate import ProblemInstance


@dataclass
class Marker:
    """A colored point annotation in model space and/or pixel space."""

    color: str
    coords3d: Optional[np.ndarray] = None
    coords2d: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.coords3d is None and self.coords2d is None:
            raise InvalidInputError(f"marker '{self.color}' has no coordinates")
        if self.coords3d is not None:
            self.coords3d = np.asarray(self.coords3d, dtype=float)
        if self.coords2d is not None:
            self.coords2d = np.asarray(self.coords2d, dtype=float)


@dataclass
class Camera:
    """Look-at pinhole camera with focal length in pixels.

    Camera axes: z along view direction, x = normalize(z x up) (image
    right), y = z x x (image down), matching pixel coordinates that grow
    rightward and downward.
    """

    position: np.ndarray
    look_at: np.ndarray
    up: np.ndarray
    focal_px: float
    principal_point: np.ndarray
    image_size: tuple[int, int]  # (width, height)

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.look_at = np.asarray(self.look_at, dtype=float)
        self.up = np.asarray(self.up, dtype=float)
        self.principal_point = np.asarray(self.principal_point, dtype=float)
        if self.focal_px <= 0:
            raise InvalidInputError(f"focal_px must be positive, got {self.focal_px}")
        forward = self.look_at - self.position
        if np.linalg.norm(np.cross(forward, self.up)) < 1e-9 * (
            np.linalg.norm(forward) * np.linalg.norm(self.up)
        ):
            raise InvalidInputError("camera up vector is parallel to view direction")

    def basis(self) -> np.ndarray:
        """Rows are the x (right), y (down), z (forward) camera axes."""
        z = self.look_at - self.position
        z = z / np.linalg.norm(z)
        x = np.cross(z, self.up)
        x = x / np.linalg.norm(x)
        y = np.cross(z, x)
        return np.stack([x, y, z])


def transfer_labels(m: MappingMatrix, source_labels: Sequence[str]) -> list[str]:
    """Label each target node with its assigned source node's label."""
    if len(source_labels) != m.ns:
        raise InvalidInputError(
            f"got {len(source_labels)} labels for {m.ns} source nodes"
        )
    return [source_labels[s] for s in hard_assignment(m)]


def transfer_marker(src_marker, src_center, tgt_center) -> np.ndarray:
    """Copy the center-to-marker offset onto the target center, unscaled."""
    src_marker = np.asarray(src_marker, dtype=float)
    src_center = np.asarray(src_center, dtype=float)
    tgt_center = np.asarray(tgt_center, dtype=float)
    return tgt_center + (src_marker - src_center)


def project_point(p, cam: Camera) -> np.ndarray:
    """Pinhole-project a world point to pixel coordinates.

    Raises ProjectionError for points at or behind the camera plane.
    """
    p = np.asarray(p, dtype=float)
    q = cam.basis() @ (p - cam.position)
    if q[2] <= 0:
        raise ProjectionError(f"point {p.tolist()} is behind the camera")
    return cam.principal_point + cam.focal_px * q[:2] / q[2]


def _coord_centers(clustering: Union[Clustering, np.ndarray]) -> np.ndarray:
    if isinstance(clustering, Clustering):
        return clustering.coord_centers
    return np.asarray(clustering, dtype=float)


def mapped_target_cluster(m: MappingMatrix, source_cluster: int) -> int:
    """Target cluster corresponding to a source cluster under the mapping.

    Inverts the per-target hard assignment at `source_cluster`; among
    multiple preimages the strongest mapping wins. If no target selects
    this source (assignment was many-to-one elsewhere), fall back to the
    target with the strongest mapping to it.
    """
    hard = hard_assignment(m)
    candidates = np.flatnonzero(hard == source_cluster)
    if len(candidates) > 0:
        return int(candidates[np.argmax(m.values[source_cluster, candidates])])
    return int(np.argmax(m.values[source_cluster]))


def map_marker_end_to_end(
    problem: "ProblemInstance",
    m: MappingMatrix,
    clusterings: tuple[Union[Clustering, np.ndarray], Union[Clustering, np.ndarray]],
    cam: Camera,
    marker_index: int = 0,
) -> Marker:
    """Source marker -> nearest source cluster -> mapped target cluster ->
    offset transfer -> pixel projection."""
    if not problem.markers or marker_index >= len(problem.markers):
        raise InvalidInputError(f"problem {problem.id} has no marker {marker_index}")
    marker = problem.markers[marker_index]
    if marker.coords3d is None:
        raise InvalidInputError(
            f"marker '{marker.color}' has no 3-D coordinates to transfer"
        )
    src_centers = _coord_centers(clusterings[0])
    tgt_centers = _coord_centers(clusterings[1])
    s = closest_cluster(marker.coords3d, src_centers)
    t = mapped_target_cluster(m, s)
    p3 = transfer_marker(marker.coords3d, src_centers[s], tgt_centers[t])
    return Marker(color=marker.color, coords3d=p3, coords2d=project_point(p3, cam))
