"""Interchange files and run configuration.

One JSON schema serves both problem flavors. 2-D problems ship node-level
records (precomputed keypoint embeddings + pixel coordinates); 3-D problems
may instead ship raw per-point payloads that get clustered into nodes at
load time. Edges are never stored: they are rebuilt deterministically from
coordinates, which keeps files small and round-trips exact (floats
serialize as shortest round-trip decimals via the standard json module).

Top-level problem file layout (schema_version "1"):

    {
      "schema_version": "1",
      "coord_dim": 2 | 3,
      "embedding_dim": <int>,
      "relation_recipe": "2d-full" | "3d-angular",
      "problems": [
        {
          "id": "...", "category": "...",
          "source": <graph block>, "target": <graph block>,
          "gt_correspondence": [<source index per target>],   # optional
          "markers": [{"color": "...", "coords3d": [...],     # optional
                       "coords2d": [...]}],
          "camera": {"position": [...], "look_at": [...],     # optional
                     "up": [...], "focal_px": <f>,
                     "principal_point": [...], "image_size": [w, h]}
        }
      ]
    }

A graph block is either
    {"nodes": [{"id": i, "embedding": [...], "coords": [...],
                "label": "..."}], "centroid": [...]}
(centroid optional; defaults to the mean of node coordinates) or, for 3-D,
    {"points": {"coords": [[x,y,z], ...], "embeddings": [[...], ...]}}
in which case points are clustered (k, restarts, rng_seed from the run
configuration) and the centroid is the mean of all raw points.

Writes are atomic: content goes to a temp file in the destination
directory and is renamed into place, so failed commands leave nothing
partial behind.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .clustering import Clustering, PointSet, clusters_to_nodes, kmeans_fit
from .edges import build_edges_2d, build_edges_3d, compute_centroid
from .errors import ProblemFileError
from .evaluate import ProblemInstance
from .graph import AttributedGraph, NodeAttr, SolverConfig, validate_graph
from .transfer import Camera, Marker

SCHEMA_VERSION = "1"
RECIPES = {2: "2d-full", 3: "3d-angular"}


@dataclass
class RunConfig:
    """Solver settings plus clustering knobs and the evaluation scheme."""

    solver: SolverConfig = field(default_factory=SolverConfig)
    k: int = 8
    restarts: int = 10
    rng_seed: int = 0
    scheme: str = "pooled"
    human_k: int = 2
    jobs: int = 1
    emit_soft: bool = False

    def to_dict(self) -> dict:
        return {
            "alpha": self.solver.alpha,
            "beta0": self.solver.beta0,
            "iterations": self.solver.iterations,
            "beta_increment": self.solver.beta_increment,
            "early_stop_delta": self.solver.early_stop_delta,
            "k": self.k,
            "restarts": self.restarts,
            "rng_seed": self.rng_seed,
            "scheme": self.scheme,
            "human_k": self.human_k,
            "jobs": self.jobs,
            "emit_soft": self.emit_soft,
        }


@dataclass
class LoadedProblem:
    """A problem instance plus per-problem extras carried by the file."""

    problem: ProblemInstance
    camera: Optional[Camera] = None


@dataclass
class ProblemFile:
    schema_version: str
    coord_dim: int
    embedding_dim: int
    relation_recipe: str
    problems: list[LoadedProblem]

    def instances(self) -> list[ProblemInstance]:
        return [lp.problem for lp in self.problems]


def atomic_write_json(path, obj) -> None:
    """Serialize to a temp file in the target directory, then rename."""
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


def _load_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ProblemFileError(f"file not found: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ProblemFileError(
            f"{path}: parse error at line {e.lineno}, column {e.colno}: {e.msg}"
        ) from e


def _require(record: dict, key: str, context: str):
    if key not in record:
        raise ProblemFileError(f"{context}: missing required field '{key}'")
    return record[key]


def _parse_marker(block: dict, context: str) -> Marker:
    color = _require(block, "color", context)
    c3 = block.get("coords3d")
    c2 = block.get("coords2d")
    if c3 is None and c2 is None:
        raise ProblemFileError(f"{context}: marker '{color}' has no coordinates")
    return Marker(color=color, coords3d=c3, coords2d=c2)


def _parse_camera(block: dict, context: str) -> Camera:
    size = _require(block, "image_size", context)
    return Camera(
        position=_require(block, "position", context),
        look_at=_require(block, "look_at", context),
        up=_require(block, "up", context),
        focal_px=float(_require(block, "focal_px", context)),
        principal_point=_require(block, "principal_point", context),
        image_size=(int(size[0]), int(size[1])),
    )


def _graph_from_block(
    block: dict, coord_dim: int, recipe: str, config: RunConfig, context: str
) -> AttributedGraph:
    if "nodes" in block:
        nodes = []
        for nb in block["nodes"]:
            nodes.append(
                NodeAttr(
                    id=int(_require(nb, "id", context)),
                    embedding=_require(nb, "embedding", context),
                    coords=_require(nb, "coords", context),
                    label=nb.get("label"),
                )
            )
        centroid = block.get("centroid")
        if centroid is None:
            centroid = compute_centroid([n.coords for n in nodes])
        else:
            centroid = np.asarray(centroid, dtype=float)
    elif "points" in block:
        if coord_dim != 3:
            raise ProblemFileError(
                f"{context}: point payloads are only valid for 3-D problems"
            )
        pb = block["points"]
        ps = PointSet(
            coords=_require(pb, "coords", context),
            embeddings=_require(pb, "embeddings", context),
        )
        cl = kmeans_fit(
            ps.embeddings,
            config.k,
            config.rng_seed,
            restarts=config.restarts,
            coords=ps.coords,
        )
        nodes, centroid = clusters_to_nodes(ps, cl)
    else:
        raise ProblemFileError(f"{context}: graph block needs 'nodes' or 'points'")

    builder = build_edges_2d if recipe == "2d-full" else build_edges_3d
    graph = AttributedGraph(nodes, builder(nodes, centroid), centroid)
    violations = validate_graph(graph)
    if violations:
        raise ProblemFileError(f"{context}: invalid graph: {violations[0]}")
    return graph


def load_problem_file(path, config: Optional[RunConfig] = None) -> ProblemFile:
    """Parse, build graphs (clustering 3-D point payloads), and validate."""
    config = config or RunConfig()
    data = _load_json(path)
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ProblemFileError(
            f"{path}: unsupported schema_version {version!r}, expected "
            f"{SCHEMA_VERSION!r}"
        )
    coord_dim = int(_require(data, "coord_dim", str(path)))
    embedding_dim = int(_require(data, "embedding_dim", str(path)))
    recipe = _require(data, "relation_recipe", str(path))
    if RECIPES.get(coord_dim) != recipe:
        raise ProblemFileError(
            f"{path}: relation recipe {recipe!r} inconsistent with "
            f"coord_dim {coord_dim}"
        )

    problems = []
    for idx, record in enumerate(data.get("problems", [])):
        pid = record.get("id", f"#{idx}")
        context = f"{path}: problem '{pid}'"
        source = _graph_from_block(
            _require(record, "source", context), coord_dim, recipe, config, context
        )
        target = _graph_from_block(
            _require(record, "target", context), coord_dim, recipe, config, context
        )
        if source.embedding_matrix().shape[1] != embedding_dim:
            raise ProblemFileError(
                f"{context}: embedding dimension "
                f"{source.embedding_matrix().shape[1]} != header {embedding_dim}"
            )
        markers = None
        if record.get("markers"):
            markers = [_parse_marker(mb, context) for mb in record["markers"]]
        camera = None
        if record.get("camera"):
            camera = _parse_camera(record["camera"], context)
        try:
            problem = ProblemInstance(
                id=str(_require(record, "id", context)),
                source=source,
                target=target,
                gt_correspondence=record.get("gt_correspondence"),
                markers=markers,
                category_tag=record.get("category", ""),
            )
        except ValueError as e:
            raise ProblemFileError(f"{context}: {e}") from e
        problems.append(LoadedProblem(problem=problem, camera=camera))
    return ProblemFile(version, coord_dim, embedding_dim, recipe, problems)


def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def _graph_to_block(g: AttributedGraph) -> dict:
    nodes = []
    for n in g.nodes:
        nb = {"id": n.id, "embedding": _floats(n.embedding), "coords": _floats(n.coords)}
        if n.label is not None:
            nb["label"] = n.label
        nodes.append(nb)
    return {"nodes": nodes, "centroid": _floats(g.centroid)}


def _camera_to_block(cam: Camera) -> dict:
    return {
        "position": _floats(cam.position),
        "look_at": _floats(cam.look_at),
        "up": _floats(cam.up),
        "focal_px": float(cam.focal_px),
        "principal_point": _floats(cam.principal_point),
        "image_size": [int(cam.image_size[0]), int(cam.image_size[1])],
    }


def save_problem_file(
    path, problems: list[Union[LoadedProblem, ProblemInstance]]
) -> None:
    """Write problems in node-level form (points payloads are not recreated)."""
    loaded = [
        p if isinstance(p, LoadedProblem) else LoadedProblem(problem=p)
        for p in problems
    ]
    if not loaded:
        raise ProblemFileError("refusing to write an empty problem file")
    first = loaded[0].problem.source
    coord_dim = len(first.nodes[0].coords)
    embedding_dim = len(first.nodes[0].embedding)
    records = []
    for lp in loaded:
        p = lp.problem
        record = {
            "id": p.id,
            "category": p.category_tag,
            "source": _graph_to_block(p.source),
            "target": _graph_to_block(p.target),
        }
        if p.gt_correspondence is not None:
            record["gt_correspondence"] = [int(i) for i in p.gt_correspondence]
        if p.markers:
            record["markers"] = [
                {
                    "color": mk.color,
                    **(
                        {"coords3d": _floats(mk.coords3d)}
                        if mk.coords3d is not None
                        else {}
                    ),
                    **(
                        {"coords2d": _floats(mk.coords2d)}
                        if mk.coords2d is not None
                        else {}
                    ),
                }
                for mk in p.markers
            ]
        if lp.camera is not None:
            record["camera"] = _camera_to_block(lp.camera)
        records.append(record)
    atomic_write_json(
        path,
        {
            "schema_version": SCHEMA_VERSION,
            "coord_dim": coord_dim,
            "embedding_dim": embedding_dim,
            "relation_recipe": RECIPES[coord_dim],
            "problems": records,
        },
    )


@dataclass
class PlacementItem:
    """Human marker placements for one (problem, marker) pair."""

    problem_id: str
    marker: str
    condition: str
    points: np.ndarray  # (n, 2) pixels

    @property
    def key(self) -> str:
        return f"{self.problem_id}/{self.marker}"


def load_placements(path) -> list[PlacementItem]:
    """Read a human-placement file: {"items": [{problem_id, marker,
    condition, points}, ...]}."""
    data = _load_json(path)
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ProblemFileError(f"{path}: unsupported placements schema_version")
    items = []
    for idx, block in enumerate(data.get("items", [])):
        context = f"{path}: item #{idx}"
        pts = np.asarray(_require(block, "points", context), dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
            raise ProblemFileError(f"{context}: points must be a nonempty (n,2) list")
        items.append(
            PlacementItem(
                problem_id=str(_require(block, "problem_id", context)),
                marker=str(_require(block, "marker", context)),
                condition=str(block.get("condition", "all")),
                points=pts,
            )
        )
    if not items:
        raise ProblemFileError(f"{path}: no placement items")
    return items
