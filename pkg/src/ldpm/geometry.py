"""Mesh data structures for discrete particle systems.

Holds nodes (particles), facets (the potential crack interfaces between
adjacent cells), tetrahedra (for volumetric strain), and the DoF/constraint
bookkeeping.  Meshes are either loaded from facet-data files produced by an
external preprocessor or synthesized as small verification fixtures and
desk-scale block specimens.

Unit system: mm, N, MPa, tonne, s.  Density is stored as entered (kg/m^3)
and converted to tonne/mm^3 where mass is computed.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# kg/m^3 -> tonne/mm^3
DENSITY_TO_TONNE_MM3 = 1.0e-12

# Facet invariant tolerances.
TOL_ORTHONORMAL = 1e-10
TOL_NORMAL_ALIGN = 1e-10
TOL_PROJECTED_AREA = 1e-10
TOL_CENTROID = 1e-9
TOL_EDGE_LENGTH = 1e-10
TOL_VOLUME_SUM = 1e-8


class MeshError(Exception):
    """Raised when a mesh file cannot be parsed or violates invariants."""


@dataclass(frozen=True)
class Node:
    id: int
    position: np.ndarray          # (3,) mm
    particle_diameter: float      # mm, may be zero for boundary/virtual nodes

    def __post_init__(self):
        if not np.all(np.isfinite(self.position)):
            raise MeshError(f"node {self.id}: non-finite position")
        if self.particle_diameter < 0:
            raise MeshError(f"node {self.id}: negative particle diameter")


@dataclass(frozen=True)
class Facet:
    id: int
    node_i: int
    node_j: int
    edge_length: float            # mm, |x_J - x_I|
    centroid: np.ndarray          # (3,) mm
    raw_area: float               # mm^2, true facet area
    projected_area: float         # mm^2, raw_area * (n . n0)
    normal: np.ndarray            # n, along the edge I->J
    tangent_m: np.ndarray
    tangent_l: np.ndarray
    true_normal: np.ndarray       # n0, normal of the actual facet plane
    c_i: np.ndarray               # centroid - x_I
    c_j: np.ndarray               # centroid - x_J
    parent_tet: int = -1          # tet supplying the volumetric strain

    @property
    def frame(self) -> np.ndarray:
        """3x3 matrix with columns [n, m, l]."""
        return np.column_stack([self.normal, self.tangent_m, self.tangent_l])


@dataclass
class Mesh:
    nodes: list[Node]
    facets: list[Facet]
    tets: np.ndarray              # (nt, 4) int node indices
    tet_volumes: np.ndarray       # (nt,) reference volumes mm^3
    cell_volumes: np.ndarray      # (nn,) per-node volume share mm^3
    density: float = 2380.0       # kg/m^3

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    @property
    def n_dofs(self) -> int:
        return 6 * len(self.nodes)

    @property
    def positions(self) -> np.ndarray:
        return np.array([n.position for n in self.nodes])

    @property
    def particle_diameters(self) -> np.ndarray:
        return np.array([n.particle_diameter for n in self.nodes])

    def mesh_hash(self) -> str:
        """Digest of all geometric content, used to reject cross-mesh
        comparison of per-facet fields."""
        h = hashlib.sha256()
        for n in self.nodes:
            h.update(np.asarray(n.position, float).tobytes())
            h.update(np.float64(n.particle_diameter).tobytes())
        for f in self.facets:
            h.update(np.int64([f.node_i, f.node_j]).tobytes())
            h.update(np.float64([f.raw_area]).tobytes())
            h.update(np.asarray(f.centroid, float).tobytes())
        h.update(np.asarray(self.tets, np.int64).tobytes())
        return h.hexdigest()[:16]

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        p = self.positions
        return p.min(axis=0), p.max(axis=0)


# ---------------------------------------------------------------------------
# DoF map and constraints
# ---------------------------------------------------------------------------

DOF_NAMES = ("ux", "uy", "uz", "rx", "ry", "rz")


class DofMap:
    """Six DoFs per node: three translations then three rotations,
    numbered contiguously node by node."""

    def __init__(self, n_nodes: int):
        self.n_nodes = n_nodes
        self.n_dofs = 6 * n_nodes

    @staticmethod
    def index(node: int, comp: int) -> int:
        return 6 * node + comp

    def partition(self, constraints: "ConstraintSet"):
        """Return (free, prescribed) index arrays."""
        prescribed = np.array(
            sorted(self.index(c.node, c.comp) for c in constraints), dtype=int
        )
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[prescribed] = False
        return np.nonzero(mask)[0], prescribed


class ConstraintKind(Enum):
    FIXED = "fixed"
    VELOCITY = "velocity"
    FORCE = "force"


@dataclass(frozen=True)
class Constraint:
    node: int
    comp: int                     # 0..5 per DOF_NAMES
    kind: ConstraintKind
    velocity: float = 0.0         # target velocity for VELOCITY
    t_ramp: float = 0.0           # linear ramp 0 -> velocity
    history: tuple = ()           # ((t, f), ...) piecewise-linear for FORCE


class ConstraintSet:
    """A collection of constraints; a (node, component) pair may carry at
    most one kinematic constraint.  FORCE entries act on free DoFs."""

    def __init__(self, constraints=()):
        self._kinematic: list[Constraint] = []
        self._forces: list[Constraint] = []
        seen = set()
        for c in constraints:
            if c.kind is ConstraintKind.FORCE:
                self._forces.append(c)
                continue
            key = (c.node, c.comp)
            if key in seen:
                raise MeshError(
                    f"duplicate constraint on node {c.node} dof {DOF_NAMES[c.comp]}"
                )
            seen.add(key)
            self._kinematic.append(c)

    def __iter__(self):
        return iter(self._kinematic)

    def __len__(self):
        return len(self._kinematic)

    @property
    def forces(self) -> list[Constraint]:
        return list(self._forces)

    @property
    def kinematic(self) -> list[Constraint]:
        return list(self._kinematic)


# ---------------------------------------------------------------------------
# Facet construction helpers
# ---------------------------------------------------------------------------

def default_tangent(normal: np.ndarray) -> np.ndarray:
    """First tangent vector: normalized projection of the global z axis onto
    the plane orthogonal to `normal`, falling back to the y axis when the
    normal is within 1e-6 of +-z."""
    z = np.array([0.0, 0.0, 1.0])
    if abs(abs(normal @ z) - 1.0) < 1e-6:
        z = np.array([0.0, 1.0, 0.0])
    m = z - (z @ normal) * normal
    return m / np.linalg.norm(m)


def make_facet(fid, node_i, node_j, x_i, x_j, raw_area, centroid,
               true_normal, tangent_m=None, tangent_l=None, parent_tet=-1):
    """Derive the dependent facet quantities (edge vector, frame, projected
    area, centroid offsets) from the primary data."""
    edge = np.asarray(x_j, float) - np.asarray(x_i, float)
    length = float(np.linalg.norm(edge))
    if length <= 0:
        raise MeshError(f"facet {fid}: coincident nodes {node_i}, {node_j}")
    n = edge / length
    n0 = np.asarray(true_normal, float)
    n0 = n0 / np.linalg.norm(n0)
    if n @ n0 < 0:
        n0 = -n0
    if tangent_m is None:
        m = default_tangent(n)
    else:
        m = np.asarray(tangent_m, float)
    if tangent_l is None:
        l = np.cross(n, m)
    else:
        l = np.asarray(tangent_l, float)
    centroid = np.asarray(centroid, float)
    return Facet(
        id=fid, node_i=node_i, node_j=node_j,
        edge_length=length, centroid=centroid,
        raw_area=float(raw_area),
        projected_area=float(raw_area) * float(n @ n0),
        normal=n, tangent_m=m, tangent_l=l, true_normal=n0,
        c_i=centroid - np.asarray(x_i, float),
        c_j=centroid - np.asarray(x_j, float),
        parent_tet=parent_tet,
    )


def tet_volume(p0, p1, p2, p3) -> float:
    return float(np.linalg.det(np.array([p1 - p0, p2 - p0, p3 - p0]))) / 6.0


def _tet_facets(first_id, tet_nodes, positions, parent_tet):
    """Twelve facets of one tetrahedron: for each of the six edges and each
    of the two faces adjacent to that edge, the triangle spanned by the edge
    midpoint, the face centroid, and the tet centroid."""
    facets = []
    xs = positions[list(tet_nodes)]
    g = xs.mean(axis=0)
    fid = first_id
    for a, b in itertools.combinations(range(4), 2):
        others = [c for c in range(4) if c not in (a, b)]
        mid = 0.5 * (xs[a] + xs[b])
        for c in others:
            face = (xs[a] + xs[b] + xs[c]) / 3.0
            tri = np.array([mid, face, g])
            cross = np.cross(tri[1] - tri[0], tri[2] - tri[0])
            area = 0.5 * np.linalg.norm(cross)
            n0 = cross / np.linalg.norm(cross)
            facets.append(make_facet(
                fid, tet_nodes[a], tet_nodes[b], xs[a], xs[b],
                raw_area=area, centroid=tri.mean(axis=0), true_normal=n0,
                parent_tet=parent_tet,
            ))
            fid += 1
    return facets


def _finalize_cell_volumes(n_nodes, tets, tet_volumes):
    v = np.zeros(n_nodes)
    for t, vol in zip(tets, tet_volumes):
        v[list(t)] += vol / 4.0
    return v


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    entity: str
    message: str

    def __str__(self):
        return f"[{self.kind}] {self.entity}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind, entity, message):
        self.violations.append(Violation(kind, entity, message))

    def __str__(self):
        if self.ok:
            return "mesh valid"
        return "\n".join(str(v) for v in self.violations)


def validate_mesh(mesh: Mesh) -> ValidationReport:
    """Check every facet and mesh invariant; violations are reported as
    data, not raised."""
    rep = ValidationReport()
    nn = mesh.n_nodes
    pos = mesh.positions
    for f in mesh.facets:
        ent = f"facet {f.id}"
        if not (0 <= f.node_i < nn and 0 <= f.node_j < nn):
            rep.add("node-ref", ent, f"references nodes ({f.node_i}, {f.node_j})")
            continue
        P = f.frame
        dev = np.abs(P.T @ P - np.eye(3)).max()
        if dev > TOL_ORTHONORMAL:
            rep.add("orthonormal", ent, f"|P^T P - I| = {dev:.3e}")
        edge = pos[f.node_j] - pos[f.node_i]
        length = np.linalg.norm(edge)
        if abs(f.edge_length - length) > TOL_EDGE_LENGTH * max(1.0, length):
            rep.add("edge-length", ent,
                    f"stored {f.edge_length!r} vs |x_J - x_I| = {length!r}")
        if length > 0:
            align = np.linalg.norm(np.cross(edge / length, f.normal))
            if align > TOL_NORMAL_ALIGN:
                rep.add("normal-align", ent,
                        f"normal off edge direction by {align:.3e}")
        a_expected = f.raw_area * float(f.normal @ f.true_normal)
        if abs(f.projected_area - a_expected) > TOL_PROJECTED_AREA * max(1.0, f.raw_area):
            rep.add("projected-area", ent,
                    f"stored {f.projected_area!r}, expected {a_expected!r}")
        gap = np.linalg.norm((pos[f.node_i] + f.c_i) - (pos[f.node_j] + f.c_j))
        if gap > TOL_CENTROID * max(1.0, f.edge_length):
            rep.add("centroid", ent,
                    f"x_I + c_I and x_J + c_J differ by {gap:.3e}")
    for t, (tet, vol) in enumerate(zip(mesh.tets, mesh.tet_volumes)):
        v = tet_volume(*pos[list(tet)])
        if v <= 0:
            rep.add("tet-volume", f"tet {t}", f"volume {v:.3e} <= 0")
        elif abs(v - vol) > 1e-8 * v:
            rep.add("tet-volume", f"tet {t}",
                    f"stored volume {vol!r} vs computed {v!r}")
    if len(mesh.tet_volumes):
        total = float(np.sum(mesh.tet_volumes))
        cell_sum = float(np.sum(mesh.cell_volumes))
        if abs(cell_sum - total) > TOL_VOLUME_SUM * total:
            rep.add("volume-sum", "mesh",
                    f"sum V_I = {cell_sum!r} vs total {total!r}")
    return rep


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def load_mesh(path, density: float = 2380.0) -> Mesh:
    """Read a facet-data file (see `write_mesh` for the layout) and return a
    validated Mesh.  Raises MeshError with a line number on parse problems
    and with the failing check on invariant violations."""
    nodes, tets, tet_vols, facets = [], [], [], []
    raw_facets = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()

    def perr(lineno, msg):
        raise MeshError(f"{path}:{lineno}: {msg}")

    section, remaining = None, 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] in ("NODES", "TETS", "FACETS"):
            if remaining:
                perr(lineno, f"section {section} short by {remaining} entries")
            section = tok[0]
            try:
                remaining = int(tok[1])
            except (IndexError, ValueError):
                perr(lineno, f"malformed section header {line!r}")
            continue
        if section is None or remaining <= 0:
            perr(lineno, f"unexpected data line {line!r}")
        remaining -= 1
        try:
            if section == "NODES":
                if len(tok) != 5:
                    perr(lineno, "node line needs: id x y z d_p")
                nodes.append(Node(int(tok[0]),
                                  np.array([float(v) for v in tok[1:4]]),
                                  float(tok[4])))
            elif section == "TETS":
                if len(tok) != 5:
                    perr(lineno, "tet line needs: id n1 n2 n3 n4")
                tets.append(tuple(int(v) for v in tok[1:5]))
            else:
                if len(tok) != 16:
                    perr(lineno, "facet line needs 16 fields")
                raw_facets.append((lineno, [float(v) for v in tok]))
        except ValueError as exc:
            perr(lineno, f"bad number: {exc}")
    if remaining:
        raise MeshError(f"{path}: section {section} short by {remaining} entries")

    if [n.id for n in nodes] != list(range(len(nodes))):
        raise MeshError(f"{path}: node ids must be contiguous from 0")
    pos = np.array([n.position for n in nodes]) if nodes else np.zeros((0, 3))
    tets_arr = np.array(tets, dtype=int).reshape(-1, 4)
    tet_vols = np.array([tet_volume(*pos[list(t)]) for t in tets])

    for lineno, vals in raw_facets:
        fid = int(vals[0])
        ni, nj = int(vals[1]), int(vals[2])
        if not (0 <= ni < len(nodes) and 0 <= nj < len(nodes)):
            raise MeshError(f"{path}:{lineno}: facet {fid} references "
                            f"missing node ({ni}, {nj})")
        f = make_facet(
            fid, ni, nj, pos[ni], pos[nj],
            raw_area=vals[3], centroid=np.array(vals[4:7]),
            true_normal=np.array(vals[7:10]),
            tangent_m=np.array(vals[10:13]), tangent_l=np.array(vals[13:16]),
            parent_tet=_parent_tet(ni, nj, np.array(vals[4:7]), tets_arr, pos),
        )
        facets.append(f)

    mesh = Mesh(nodes=nodes, facets=facets, tets=tets_arr,
                tet_volumes=tet_vols,
                cell_volumes=_finalize_cell_volumes(len(nodes), tets, tet_vols),
                density=density)
    report = validate_mesh(mesh)
    if not report.ok:
        raise MeshError(f"{path}: invalid mesh\n{report}")
    return mesh


def _parent_tet(ni, nj, centroid, tets, pos) -> int:
    """Pick the tet containing both facet nodes whose centroid is closest to
    the facet centroid.  The constitutive volumetric strain of the facet is
    read from this tet."""
    if not len(tets):
        return -1
    mask = np.any(tets == ni, axis=1) & np.any(tets == nj, axis=1)
    candidates = np.nonzero(mask)[0]
    if not len(candidates):
        return -1
    centers = pos[tets[candidates]].mean(axis=1)
    return int(candidates[np.argmin(np.linalg.norm(centers - centroid, axis=1))])


def write_mesh(mesh: Mesh, path) -> None:
    """Write the facet-data file.  Floats use repr so a load round-trips
    bit-identically."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"NODES {mesh.n_nodes}\n")
        for n in mesh.nodes:
            x, y, z = (float(v) for v in n.position)
            fh.write(f"{n.id} {x!r} {y!r} {z!r} "
                     f"{float(n.particle_diameter)!r}\n")
        fh.write(f"TETS {len(mesh.tets)}\n")
        for t, tet in enumerate(mesh.tets):
            fh.write(f"{t} {tet[0]} {tet[1]} {tet[2]} {tet[3]}\n")
        fh.write(f"FACETS {mesh.n_facets}\n")
        for f in mesh.facets:
            vals = [f.raw_area, *f.centroid, *f.true_normal,
                    *f.tangent_m, *f.tangent_l]
            fh.write(f"{f.id} {f.node_i} {f.node_j} "
                     + " ".join(repr(float(v)) for v in vals) + "\n")


# ---------------------------------------------------------------------------
# Fixtures and synthetic specimens
# ---------------------------------------------------------------------------

def build_fixture(kind: str, n: int = 1, length: float = 100.0,
                  area: float = 100.0, d_p: float = 20.0,
                  density: float = 2380.0) -> Mesh:
    """Small analytically tractable meshes.

    Kinds:
      single-facet        two nodes joined by one facet along x; the normal
                          stiffness is E_0 A / l
      two-particle-chain  n collinear facets, n + 1 nodes
      single-tet          one regular tetrahedron tessellated into 12 facets
    """
    if kind == "single-facet":
        kind, n = "two-particle-chain", 1
    if kind == "two-particle-chain":
        if n < 1:
            raise ValueError("chain needs at least one facet")
        nodes = [Node(i, np.array([i * length, 0.0, 0.0]), d_p)
                 for i in range(n + 1)]
        facets = []
        for i in range(n):
            mid = 0.5 * (nodes[i].position + nodes[i + 1].position)
            facets.append(make_facet(
                i, i, i + 1, nodes[i].position, nodes[i + 1].position,
                raw_area=area, centroid=mid,
                true_normal=np.array([1.0, 0.0, 0.0])))
        # no tets: the node volume share is half an edge cell each side
        v = np.zeros(n + 1)
        for i in range(n):
            v[i] += area * length / 2
            v[i + 1] += area * length / 2
        return Mesh(nodes=nodes, facets=facets,
                    tets=np.zeros((0, 4), dtype=int),
                    tet_volumes=np.zeros(0), cell_volumes=v, density=density)
    if kind == "single-tet":
        a = length
        pts = np.array([
            [0.0, 0.0, 0.0],
            [a, 0.0, 0.0],
            [a / 2, a * np.sqrt(3) / 2, 0.0],
            [a / 2, a * np.sqrt(3) / 6, a * np.sqrt(2.0 / 3.0)],
        ])
        nodes = [Node(i, pts[i], d_p) for i in range(4)]
        facets = _tet_facets(0, (0, 1, 2, 3), pts, parent_tet=0)
        tets = np.array([[0, 1, 2, 3]])
        vols = np.array([tet_volume(*pts)])
        return Mesh(nodes=nodes, facets=facets, tets=tets, tet_volumes=vols,
                    cell_volumes=_finalize_cell_volumes(4, tets, vols),
                    density=density)
    raise ValueError(f"unknown fixture kind {kind!r}")


def build_block_specimen(size, divisions, d_p=None, jitter=0.15, seed=0,
                         keep=None, map_fn=None,
                         density: float = 2380.0) -> Mesh:
    """Desk-scale specimen: a structured grid of hexahedral cells, each split
    into six tetrahedra, with 12 facets per tet.  Interior grid nodes are
    jittered deterministically to break symmetry (mimicking material
    heterogeneity).  `keep(center) -> bool` drops cells (notches); `map_fn`
    remaps node coordinates after jitter (waisted shapes).
    """
    size = np.asarray(size, float)
    nx, ny, nz = divisions
    spacing = size / np.array([nx, ny, nz])
    rng = np.random.default_rng(seed)

    grid_idx = {}
    coords = []
    for i in range(nx + 1):
        for j in range(ny + 1):
            for k in range(nz + 1):
                grid_idx[(i, j, k)] = len(coords)
                coords.append(np.array([i, j, k]) * spacing)
    coords = np.array(coords)

    # jitter only nodes strictly interior to the full grid
    for (i, j, k), idx in grid_idx.items():
        delta = rng.uniform(-0.5, 0.5, size=3) * jitter * spacing
        if 0 < i < nx and 0 < j < ny and 0 < k < nz:
            coords[idx] += delta

    cells = []
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                center = (np.array([i, j, k]) + 0.5) * spacing
                if keep is not None and not keep(center):
                    continue
                cells.append((i, j, k))

    if map_fn is not None:
        coords = np.array([map_fn(c) for c in coords])

    # Kuhn split: six tets per hex, conforming across neighbors
    axis_perms = list(itertools.permutations(range(3)))
    tets = []
    for (i, j, k) in cells:
        base = np.array([i, j, k])
        v0 = grid_idx[tuple(base)]
        v7 = grid_idx[tuple(base + 1)]
        for perm in axis_perms:
            off = np.array([0, 0, 0])
            path = [v0]
            for ax in perm:
                off = off.copy()
                off[ax] = 1
                path.append(grid_idx[tuple(base + off)])
            tets.append(tuple(path))
    # compact node numbering over used nodes only
    used = sorted({v for t in tets for v in t})
    renum = {old: new for new, old in enumerate(used)}
    pos = coords[used]
    tets = [tuple(renum[v] for v in t) for t in tets]

    # flip inverted tets (possible after jitter/map), then demand positivity
    fixed_tets, vols = [], []
    for t in tets:
        v = tet_volume(*pos[list(t)])
        if v < 0:
            t = (t[0], t[2], t[1], t[3])
            v = -v
        if v <= 0:
            raise MeshError("degenerate tetrahedron in block specimen; "
                            "reduce jitter or mapping severity")
        fixed_tets.append(t)
        vols.append(v)
    vols = np.array(vols)
    tets_arr = np.array(fixed_tets, dtype=int)

    if d_p is None:
        d_p = 0.4 * float(spacing.min())
    nodes = [Node(i, pos[i], d_p) for i in range(len(pos))]
    facets = []
    for t, tet in enumerate(fixed_tets):
        facets.extend(_tet_facets(len(facets), tet, pos, parent_tet=t))
    return Mesh(nodes=nodes, facets=facets, tets=tets_arr, tet_volumes=vols,
                cell_volumes=_finalize_cell_volumes(len(pos), fixed_tets, vols),
                density=density)


# ---------------------------------------------------------------------------
# Node selection helpers (used by run configs and benchmark presets)
# ---------------------------------------------------------------------------

SURFACE_TOL = 1e-6


def select_nodes(mesh: Mesh, selector: str) -> list[int]:
    """Resolve a node selector string to a sorted list of node ids.

    Selectors: all, xmin/xmax/ymin/ymax/zmin/zmax (coordinate extremes),
    lateral (on a x/y bounding face), center-zmin / center-zmax (node
    closest to the face center), node:<id>, nodes:<id,id,...>.
    """
    pos = mesh.positions
    lo, hi = mesh.bounding_box()
    tol = SURFACE_TOL * max(1.0, float(np.max(hi - lo)))

    def on(axis, value):
        return np.nonzero(np.abs(pos[:, axis] - value) < tol)[0]

    if selector == "all":
        return list(range(mesh.n_nodes))
    if "&" in selector:
        parts = selector.split("&")
        ids = set(select_nodes(mesh, parts[0]))
        for part in parts[1:]:
            ids &= set(select_nodes(mesh, part))
        return sorted(ids)
    faces = {"xmin": (0, lo[0]), "xmax": (0, hi[0]),
             "ymin": (1, lo[1]), "ymax": (1, hi[1]),
             "zmin": (2, lo[2]), "zmax": (2, hi[2])}
    if selector in faces:
        return sorted(on(*faces[selector]).tolist())
    if selector == "lateral":
        ids = set()
        for key in ("xmin", "xmax", "ymin", "ymax"):
            ids.update(on(*faces[key]).tolist())
        return sorted(ids)
    if selector in ("center-zmin", "center-zmax"):
        axis_val = lo[2] if selector.endswith("zmin") else hi[2]
        ids = on(2, axis_val)
        if not len(ids):
            raise MeshError(f"no nodes on face for {selector}")
        center = np.array([(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, axis_val])
        d = np.linalg.norm(pos[ids] - center, axis=1)
        return [int(ids[np.argmin(d)])]
    if selector.startswith("node:"):
        return [int(selector[5:])]
    if selector.startswith("nodes:"):
        return sorted(int(v) for v in selector[6:].split(","))
    raise MeshError(f"unknown node selector {selector!r}")
