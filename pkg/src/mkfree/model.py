"""Problem data model: node clouds, background grids, materials, boundary
conditions, modifications, and the union DOF bookkeeping.

All types are immutable after construction and can be shared freely.  The
union DOF space covers ``initial U modified`` nodes so that the initial and
modified stiffness matrices have one fixed size; DOFs absent from a
configuration decouple through a unit diagonal and a zero load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from .errors import ParseError, ValidationError

__all__ = [
    "NodeCloud",
    "BackgroundGrid",
    "MaterialModel",
    "Traction",
    "BoundaryConditions",
    "Modification",
    "DofMap",
    "load_model",
    "load_modification",
    "model_to_dict",
    "modification_to_dict",
    "apply_modification",
]


@dataclass(frozen=True)
class NodeCloud:
    """Scattered nodes of one configuration: stable integer ids + coordinates."""

    ids: np.ndarray        # (n,) int
    coords: np.ndarray     # (n, dim) float
    dim: int

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        coords = np.asarray(self.coords, dtype=float)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "coords", coords)
        if self.dim not in (2, 3):
            raise ValidationError(f"dim must be 2 or 3, got {self.dim}")
        if coords.ndim != 2 or coords.shape[1] != self.dim:
            raise ValidationError("coords must be (n, dim)")
        if len(ids) != len(coords):
            raise ValidationError("ids and coords length mismatch")
        if len(np.unique(ids)) != len(ids):
            raise ValidationError("node ids must be unique")
        if not np.all(np.isfinite(coords)):
            raise ValidationError("node coordinates must be finite")
        if len(coords) >= 2:
            d, _ = self.tree.query(coords, k=2)
            if np.min(d[:, 1]) <= 0.0:
                raise ValidationError("coincident nodes detected")

    @property
    def n_nodes(self) -> int:
        return len(self.ids)

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.coords)

    @cached_property
    def id_to_row(self) -> dict:
        return {int(i): k for k, i in enumerate(self.ids)}

    def coord_of(self, node_id: int) -> np.ndarray:
        return self.coords[self.id_to_row[int(node_id)]]

    def has_node(self, node_id: int) -> bool:
        return int(node_id) in self.id_to_row


@dataclass(frozen=True)
class BackgroundGrid:
    """Axis-aligned quadrature cell structure, independent of the nodes."""

    origin: np.ndarray      # (dim,)
    cell_size: np.ndarray   # (dim,)
    counts: tuple           # (dim,) ints
    active_cells: frozenset | None = None   # None -> every cell is active

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float)
        cell_size = np.asarray(self.cell_size, dtype=float)
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "cell_size", cell_size)
        object.__setattr__(self, "counts", counts)
        if np.any(cell_size <= 0):
            raise ValidationError("cell_size must be positive on every axis")
        if any(c <= 0 for c in counts):
            raise ValidationError("cell counts must be positive")
        if self.active_cells is not None:
            for idx in self.active_cells:
                if len(idx) != len(counts) or any(
                    not (0 <= i < c) for i, c in zip(idx, counts)
                ):
                    raise ValidationError(f"active cell {idx} out of range")

    @property
    def dim(self) -> int:
        return len(self.counts)

    def all_cells(self):
        return list(np.ndindex(*self.counts))

    def cells(self):
        """Cells to integrate over (active set, or all when unset)."""
        if self.active_cells is None:
            return self.all_cells()
        return sorted(self.active_cells)

    def cell_bounds(self, idx):
        lo = self.origin + np.asarray(idx, dtype=float) * self.cell_size
        return lo, lo + self.cell_size

    def cell_of(self, point) -> tuple:
        """Cell index containing ``point`` (clipped to the grid range)."""
        rel = (np.asarray(point, dtype=float) - self.origin) / self.cell_size
        idx = np.floor(rel).astype(int)
        idx = np.clip(idx, 0, np.asarray(self.counts) - 1)
        return tuple(int(i) for i in idx)

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        hi = self.origin + np.asarray(self.counts) * self.cell_size
        return bool(np.all(p >= self.origin - 1e-12) and np.all(p <= hi + 1e-12))


@dataclass(frozen=True)
class MaterialModel:
    """Isotropic linear-elastic material."""

    young_modulus: float
    poisson_ratio: float
    mode: str = "plane_stress"   # "plane_stress" | "solid_3d"

    def __post_init__(self):
        if self.young_modulus <= 0:
            raise ValidationError("Young's modulus must be positive")
        if not (0.0 <= self.poisson_ratio < 0.5):
            raise ValidationError("Poisson ratio must satisfy 0 <= nu < 0.5")
        if self.mode not in ("plane_stress", "solid_3d"):
            raise ValidationError(f"unknown material mode {self.mode!r}")

    @property
    def dim(self) -> int:
        return 2 if self.mode == "plane_stress" else 3


@dataclass(frozen=True)
class Traction:
    """Uniform distributed load ``q`` along the straight segment start->end."""

    start: np.ndarray
    end: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        for name in ("start", "end", "q"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))


@dataclass(frozen=True)
class BoundaryConditions:
    fixed_dofs: tuple = ()       # ((node_id, axis), ...)
    point_loads: tuple = ()      # ((node_id, axis, value), ...)
    tractions: tuple = ()        # (Traction, ...)

    def __post_init__(self):
        object.__setattr__(
            self, "fixed_dofs", tuple((int(n), int(a)) for n, a in self.fixed_dofs)
        )
        object.__setattr__(
            self,
            "point_loads",
            tuple((int(n), int(a), float(v)) for n, a, v in self.point_loads),
        )
        object.__setattr__(self, "tractions", tuple(self.tractions))

    def validate_against(self, cloud: NodeCloud):
        fixed = set(self.fixed_dofs)
        for node_id, axis in self.fixed_dofs:
            if not cloud.has_node(node_id):
                raise ValidationError(f"fixed DOF references unknown node {node_id}")
            if not (0 <= axis < cloud.dim):
                raise ValidationError(f"fixed DOF axis {axis} out of range")
        for node_id, axis, _ in self.point_loads:
            if not cloud.has_node(node_id):
                raise ValidationError(f"point load references unknown node {node_id}")
            if not (0 <= axis < cloud.dim):
                raise ValidationError(f"point load axis {axis} out of range")
            if (node_id, axis) in fixed:
                raise ValidationError(
                    f"DOF (node {node_id}, axis {axis}) is both fixed and loaded"
                )


@dataclass(frozen=True)
class Modification:
    """A local redesign: added nodes, removed nodes, and optional material or
    boundary-condition replacement."""

    added_ids: tuple = ()
    added_coords: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    removed_ids: frozenset = frozenset()
    material_change: MaterialModel | None = None
    bc_change: BoundaryConditions | None = None

    def __post_init__(self):
        object.__setattr__(self, "added_ids", tuple(int(i) for i in self.added_ids))
        object.__setattr__(
            self, "added_coords", np.asarray(self.added_coords, dtype=float)
        )
        object.__setattr__(
            self, "removed_ids", frozenset(int(i) for i in self.removed_ids)
        )
        if set(self.added_ids) & self.removed_ids:
            raise ValidationError("added and removed node sets overlap")
        if len(self.added_ids) != len(self.added_coords):
            raise ValidationError("added_ids and added_coords length mismatch")

    @property
    def changes_nodes(self) -> bool:
        return bool(self.added_ids) or bool(self.removed_ids)

    @property
    def is_empty(self) -> bool:
        return (
            not self.changes_nodes
            and self.material_change is None
            and self.bc_change is None
        )

    @property
    def is_dof_constant(self) -> bool:
        """True when the node set is unchanged (pure material/BC change)."""
        return not self.changes_nodes


@dataclass(frozen=True)
class DofMap:
    """Deterministic DOF ordering over the union of initial and modified
    node sets: sorted by node id, then axis."""

    node_ids: np.ndarray       # sorted union, (N,)
    dim: int
    active_initial: np.ndarray    # (N*dim,) bool
    active_modified: np.ndarray   # (N*dim,) bool

    @property
    def n_dofs(self) -> int:
        return len(self.node_ids) * self.dim

    @cached_property
    def id_to_pos(self) -> dict:
        return {int(i): k for k, i in enumerate(self.node_ids)}

    def dof(self, node_id: int, axis: int) -> int:
        return self.id_to_pos[int(node_id)] * self.dim + axis

    def node_of_dof(self, dof: int) -> tuple:
        return int(self.node_ids[dof // self.dim]), dof % self.dim

    def dofs_of(self, node_ids) -> np.ndarray:
        pos = np.array([self.id_to_pos[int(i)] for i in node_ids], dtype=np.int64)
        return (pos[:, None] * self.dim + np.arange(self.dim)[None, :]).ravel()


def identity_dof_map(cloud: NodeCloud) -> DofMap:
    """DofMap for a single configuration (both masks all-true)."""
    order = np.argsort(cloud.ids)
    ids = cloud.ids[order]
    mask = np.ones(len(ids) * cloud.dim, dtype=bool)
    return DofMap(node_ids=ids, dim=cloud.dim, active_initial=mask,
                  active_modified=mask.copy())


def apply_modification(cloud: NodeCloud, mod: Modification,
                       bc: BoundaryConditions | None = None):
    """Apply a modification, returning the modified cloud and the union DofMap.

    ``bc`` is the initial boundary conditions; removing a node that carries a
    fixed DOF or point load is rejected unless the modification replaces the
    boundary conditions.
    """
    for nid in mod.removed_ids:
        if not cloud.has_node(nid):
            raise ValidationError(f"removed node {nid} does not exist")
    for nid in mod.added_ids:
        if cloud.has_node(nid):
            raise ValidationError(f"added node id {nid} already exists")
    if bc is not None and mod.bc_change is None and mod.removed_ids:
        for node_id, axis in bc.fixed_dofs:
            if node_id in mod.removed_ids:
                raise ValidationError(
                    f"node {node_id} carries a fixed DOF; removal requires bc_change"
                )
        for node_id, axis, _ in bc.point_loads:
            if node_id in mod.removed_ids:
                raise ValidationError(
                    f"node {node_id} carries a point load; removal requires bc_change"
                )

    keep = ~np.isin(cloud.ids, list(mod.removed_ids)) if mod.removed_ids \
        else np.ones(cloud.n_nodes, dtype=bool)
    new_ids = np.concatenate([cloud.ids[keep], np.asarray(mod.added_ids, dtype=np.int64)])
    added_coords = mod.added_coords.reshape(len(mod.added_ids), cloud.dim)
    new_coords = np.vstack([cloud.coords[keep], added_coords])
    modified = NodeCloud(ids=new_ids, coords=new_coords, dim=cloud.dim)

    union_ids = np.union1d(cloud.ids, new_ids)
    d = cloud.dim
    in_initial = np.isin(union_ids, cloud.ids)
    in_modified = np.isin(union_ids, new_ids)
    active_initial = np.repeat(in_initial, d)
    active_modified = np.repeat(in_modified, d)
    dof_map = DofMap(node_ids=union_ids, dim=d,
                     active_initial=active_initial,
                     active_modified=active_modified)
    return modified, dof_map


# ---------------------------------------------------------------------------
# JSON (de)serialization


def _parse_model_dict(data: dict):
    try:
        dim = int(data["dim"])
        nodes = data["nodes"]
        ids = [n["id"] for n in nodes]
        coords = [n["x"] for n in nodes]
        grid_d = data["grid"]
        mat_d = data["material"]
        bc_d = data.get("bc", {})
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed model file: missing {exc}") from exc

    cloud = NodeCloud(ids=np.asarray(ids), coords=np.asarray(coords, dtype=float),
                      dim=dim)
    grid = BackgroundGrid(origin=grid_d["origin"], cell_size=grid_d["cell_size"],
                          counts=grid_d["counts"])
    if grid.dim != dim:
        raise ValidationError("grid dimensionality does not match model dim")
    material = MaterialModel(young_modulus=float(mat_d["E"]),
                             poisson_ratio=float(mat_d["nu"]),
                             mode=mat_d.get("mode",
                                            "plane_stress" if dim == 2 else "solid_3d"))
    if material.dim != dim:
        raise ValidationError("material mode does not match model dim")
    bc = BoundaryConditions(
        fixed_dofs=tuple((n, a) for n, a in bc_d.get("fixed", [])),
        point_loads=tuple((n, a, v) for n, a, v in bc_d.get("point_loads", [])),
        tractions=tuple(
            Traction(start=t["from"], end=t["to"], q=t["q"])
            for t in bc_d.get("tractions", [])
        ),
    )
    bc.validate_against(cloud)
    return cloud, grid, material, bc


def load_model(path):
    """Load and validate a model JSON file."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"cannot parse {path}: {exc}") from exc
    return _parse_model_dict(data)


def model_to_dict(cloud: NodeCloud, grid: BackgroundGrid, material: MaterialModel,
                  bc: BoundaryConditions) -> dict:
    return {
        "dim": cloud.dim,
        "nodes": [{"id": int(i), "x": list(map(float, x))}
                  for i, x in zip(cloud.ids, cloud.coords)],
        "grid": {
            "origin": list(map(float, grid.origin)),
            "cell_size": list(map(float, grid.cell_size)),
            "counts": list(grid.counts),
        },
        "material": {"E": material.young_modulus, "nu": material.poisson_ratio,
                     "mode": material.mode},
        "bc": {
            "fixed": [[n, a] for n, a in bc.fixed_dofs],
            "point_loads": [[n, a, v] for n, a, v in bc.point_loads],
            "tractions": [
                {"from": list(map(float, t.start)), "to": list(map(float, t.end)),
                 "q": list(map(float, t.q))}
                for t in bc.tractions
            ],
        },
    }


def _parse_modification_dict(data: dict, dim: int) -> Modification:
    added = data.get("add", [])
    material = None
    if data.get("material") is not None:
        mat_d = data["material"]
        material = MaterialModel(young_modulus=float(mat_d["E"]),
                                 poisson_ratio=float(mat_d["nu"]),
                                 mode=mat_d.get("mode",
                                                "plane_stress" if dim == 2
                                                else "solid_3d"))
    bc = None
    if data.get("bc") is not None:
        bc_d = data["bc"]
        bc = BoundaryConditions(
            fixed_dofs=tuple((n, a) for n, a in bc_d.get("fixed", [])),
            point_loads=tuple((n, a, v) for n, a, v in bc_d.get("point_loads", [])),
            tractions=tuple(
                Traction(start=t["from"], end=t["to"], q=t["q"])
                for t in bc_d.get("tractions", [])
            ),
        )
    return Modification(
        added_ids=tuple(n["id"] for n in added),
        added_coords=np.asarray([n["x"] for n in added], dtype=float).reshape(
            len(added), dim),
        removed_ids=frozenset(data.get("remove", [])),
        material_change=material,
        bc_change=bc,
    )


def load_modification(path, dim: int) -> Modification:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"cannot parse {path}: {exc}") from exc
    return _parse_modification_dict(data, dim)


def modification_to_dict(mod: Modification) -> dict:
    out = {
        "add": [{"id": int(i), "x": list(map(float, x))}
                for i, x in zip(mod.added_ids, mod.added_coords)],
        "remove": sorted(mod.removed_ids),
    }
    if mod.material_change is not None:
        m = mod.material_change
        out["material"] = {"E": m.young_modulus, "nu": m.poisson_ratio, "mode": m.mode}
    if mod.bc_change is not None:
        bc = mod.bc_change
        out["bc"] = {
            "fixed": [[n, a] for n, a in bc.fixed_dofs],
            "point_loads": [[n, a, v] for n, a, v in bc.point_loads],
            "tractions": [
                {"from": list(map(float, t.start)), "to": list(map(float, t.end)),
                 "q": list(map(float, t.q))}
                for t in bc.tractions
            ],
        }
    return out
