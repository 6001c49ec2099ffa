"""Global operators: facet strains from DoFs, internal force assembly,
elastic stiffness, lumped mass, volumetric strains, crack openings, and the
element-eigenvalue estimate of the critical explicit time step.

The kinematics is linear (small strains/displacements/rotations), so the
strain operator B with e_k = B_k q is built once per mesh and reused; the
volumetric strain of a tetrahedron is the one geometric nonlinearity kept
(it is evaluated from the displaced vertex positions).
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .geometry import DofMap, Mesh
from .material import MaterialParams, FacetStateArray, facet_update, \
    elastic_tractions


class AssemblyError(Exception):
    pass


def _skew(c):
    return np.array([[0.0, -c[2], c[1]],
                     [c[2], 0.0, -c[0]],
                     [-c[1], c[0], 0.0]])


def _facet_blocks(facet):
    """The four 3x3 blocks of B_k: (u_I, theta_I, u_J, theta_J)."""
    Pt = facet.frame.T / facet.edge_length
    return (-Pt, Pt @ _skew(facet.c_i), Pt, -Pt @ _skew(facet.c_j))


def facet_operator(facet, n_dofs: int) -> sp.csr_matrix:
    """Sparse 3 x n_dofs linearization of the facet strain."""
    bi, bti, bj, btj = _facet_blocks(facet)
    rows, cols, vals = [], [], []
    for block, node, off in ((bi, facet.node_i, 0), (bti, facet.node_i, 3),
                             (bj, facet.node_j, 0), (btj, facet.node_j, 3)):
        for r in range(3):
            for c in range(3):
                rows.append(r)
                cols.append(6 * node + off + c)
                vals.append(block[r, c])
    return sp.csr_matrix((vals, (rows, cols)), shape=(3, n_dofs))


def facet_strain(q, facet, dofmap: DofMap) -> np.ndarray:
    """Strain vector (e_N, e_M, e_L) of one facet for the DoF vector q."""
    q = np.asarray(q, float)
    u_i = q[6 * facet.node_i: 6 * facet.node_i + 3]
    th_i = q[6 * facet.node_i + 3: 6 * facet.node_i + 6]
    u_j = q[6 * facet.node_j: 6 * facet.node_j + 3]
    th_j = q[6 * facet.node_j + 3: 6 * facet.node_j + 6]
    jump = u_j + np.cross(th_j, facet.c_j) - u_i - np.cross(th_i, facet.c_i)
    return facet.frame.T @ jump / facet.edge_length


def build_strain_operator(mesh: Mesh) -> sp.csr_matrix:
    """Stacked strain operator B (3 nf x n_dofs) with B q = all facet
    strains, flattened facet-major."""
    n = mesh.n_dofs
    rows, cols, vals = [], [], []
    for k, f in enumerate(mesh.facets):
        for block, node, off in zip(_facet_blocks(f),
                                    (f.node_i, f.node_i, f.node_j, f.node_j),
                                    (0, 3, 0, 3)):
            for r in range(3):
                for c in range(3):
                    rows.append(3 * k + r)
                    cols.append(6 * node + off + c)
                    vals.append(block[r, c])
    return sp.csr_matrix((vals, (rows, cols)), shape=(3 * mesh.n_facets, n))


class DiagMass:
    """Diagonal mass/inertia per DoF (tonne, tonne mm^2)."""

    def __init__(self, values: np.ndarray):
        self.values = np.asarray(values, float)

    def __len__(self):
        return len(self.values)

    def require_positive(self, dof_indices) -> None:
        bad = np.asarray(dof_indices)[self.values[dof_indices] <= 0.0]
        if len(bad):
            nodes = sorted({int(d) // 6 for d in bad})
            raise AssemblyError(
                f"zero mass on unconstrained DoFs of nodes {nodes[:10]}; "
                "explicit integration impossible")


def assemble_lumped_mass(mesh: Mesh) -> DiagMass:
    """Translational mass from the per-node cell volume share, rotatory
    inertia from the solid-sphere formula m d_p^2 / 10."""
    if mesh.density <= 0:
        raise AssemblyError("density must be positive")
    rho = mesh.density * 1.0e-12  # tonne/mm^3
    m = rho * mesh.cell_volumes
    inertia = m * mesh.particle_diameters ** 2 / 10.0
    values = np.zeros(mesh.n_dofs)
    for comp in range(3):
        values[comp::6] = m
        values[comp + 3::6] = inertia
    return DiagMass(values)


def assemble_stiffness(mesh: Mesh, params: MaterialParams,
                       B: sp.csr_matrix | None = None) -> sp.csr_matrix:
    """Elastic stiffness K = sum_k A_k l_k B_k^T E B_k (symmetric PSD)."""
    if B is None:
        B = build_strain_operator(mesh)
    w = facet_weights(mesh)
    d = np.repeat(w, 3) * np.tile(
        np.array([1.0, params.alpha, params.alpha]) * params.E0, mesh.n_facets)
    K = (B.T @ sp.diags(d) @ B).tocsr()
    return ((K + K.T) * 0.5).tocsr()


def facet_weights(mesh: Mesh) -> np.ndarray:
    """Work weight A_k l_k per facet."""
    return np.array([f.projected_area * f.edge_length for f in mesh.facets])


def volumetric_strain(q, mesh: Mesh) -> np.ndarray:
    """Per-tetrahedron volumetric strain (V - V0) / (3 V0) from displaced
    vertex positions."""
    if not len(mesh.tets):
        return np.zeros(0)
    q = np.asarray(q, float)
    disp = q.reshape(-1, 6)[:, :3]
    x = mesh.positions + disp
    p = x[mesh.tets]
    v = np.linalg.det(p[:, 1:] - p[:, :1]) / 6.0
    if np.any(v <= 0):
        bad = np.nonzero(v <= 0)[0]
        raise AssemblyError(f"inverted tetrahedra {bad.tolist()[:10]}")
    return (v - mesh.tet_volumes) / (3.0 * mesh.tet_volumes)


class SystemOperators:
    """Per-mesh cache: strain operator, facet weights, geometry arrays and
    the facet -> parent-tet map.  Shared read-only by the solvers."""

    def __init__(self, mesh: Mesh, params: MaterialParams):
        self.mesh = mesh
        self.params = params
        self.B = build_strain_operator(mesh)
        self.weights = facet_weights(mesh)
        self.lengths = np.array([f.edge_length for f in mesh.facets])
        self.parent_tet = np.array([f.parent_tet for f in mesh.facets],
                                   dtype=int)
        self._has_parent = self.parent_tet >= 0
        self.K = assemble_stiffness(mesh, params, self.B)

    def strains(self, q) -> np.ndarray:
        return (self.B @ np.asarray(q, float)).reshape(-1, 3)

    def facet_volumetric(self, q) -> np.ndarray:
        e_v = np.zeros(self.mesh.n_facets)
        if len(self.mesh.tets):
            tet_ev = volumetric_strain(q, self.mesh)
            e_v[self._has_parent] = tet_ev[self.parent_tet[self._has_parent]]
        return e_v

    def gather_forces(self, tractions) -> np.ndarray:
        return self.B.T @ (self.weights[:, None] * tractions).ravel()


def internal_forces(q, ops: SystemOperators, states: FacetStateArray,
                    elastic_only: bool = False):
    """Assemble nodal internal forces.

    Returns (f_int, trial_states, tractions, strains); trial states are not
    committed here.
    """
    e = ops.strains(q)
    if elastic_only:
        t = elastic_tractions(e, ops.params)
        trial = states
    else:
        t, trial = facet_update(states, e, ops.facet_volumetric(q),
                                ops.lengths, ops.params)
    return ops.gather_forces(t), trial, t, e


def crack_openings(mesh: Mesh, strains, tractions,
                   params: MaterialParams) -> np.ndarray:
    """Per-facet inelastic opening (w_N, w_M, w_L, w); only the positive
    normal part opens a crack."""
    e = np.asarray(strains, float)
    t = np.asarray(tractions, float)
    l = np.array([f.edge_length for f in mesh.facets])
    w_n = l * np.maximum(0.0, e[:, 0] - t[:, 0] / params.E0)
    w_m = l * (e[:, 1] - t[:, 1] / (params.alpha * params.E0))
    w_l = l * (e[:, 2] - t[:, 2] / (params.alpha * params.E0))
    w = np.sqrt(w_n ** 2 + w_m ** 2 + w_l ** 2)
    return np.column_stack([w_n, w_m, w_l, w])


def critical_timestep(mesh: Mesh, params: MaterialParams,
                      mass: DiagMass | None = None,
                      constraints=None) -> float:
    """Largest stable explicit step 2/omega_max, with omega_max the largest
    element eigenfrequency.  Elements are tetrahedra (their 12 facets, 24
    DoFs) when present, otherwise single facets (12 DoFs).  Element masses
    are local shares so that they sum to the global lumped mass.
    """
    if mass is None:
        mass = assemble_lumped_mass(mesh)
    fixed = set()
    if constraints is not None:
        from .geometry import ConstraintKind
        for c in constraints:
            if c.kind in (ConstraintKind.FIXED, ConstraintKind.VELOCITY):
                fixed.add(6 * c.node + c.comp)

    rho = mesh.density * 1.0e-12
    dp = mesh.particle_diameters
    D = np.array([1.0, params.alpha, params.alpha]) * params.E0
    omega_max = 0.0

    groups: dict[int, list] = {}
    orphans = []
    for f in mesh.facets:
        if len(mesh.tets) and f.parent_tet >= 0:
            groups.setdefault(f.parent_tet, []).append(f)
        else:
            orphans.append(f)

    for t, facets in groups.items():
        nodes = sorted({n for f in facets for n in (f.node_i, f.node_j)})
        local = {n: i for i, n in enumerate(nodes)}
        nd = 6 * len(nodes)
        K = np.zeros((nd, nd))
        for f in facets:
            blocks = _facet_blocks(f)
            owners = (f.node_i, f.node_i, f.node_j, f.node_j)
            offs = (0, 3, 0, 3)
            w = f.projected_area * f.edge_length
            for (ba, na, oa) in zip(blocks, owners, offs):
                ia = 6 * local[na] + oa
                for (bb, nb, ob) in zip(blocks, owners, offs):
                    ib = 6 * local[nb] + ob
                    K[ia:ia + 3, ib:ib + 3] += w * ba.T @ (D[:, None] * bb)
        m_node = rho * mesh.tet_volumes[t] / 4.0
        M = np.zeros(nd)
        for n in nodes:
            i = 6 * local[n]
            M[i:i + 3] = m_node
            M[i + 3:i + 6] = m_node * dp[n] ** 2 / 10.0
        omega_max = max(omega_max, _element_omega(K, M, nodes, fixed))

    if orphans:
        incident = np.zeros(mesh.n_nodes)
        for f in orphans:
            incident[f.node_i] += 1
            incident[f.node_j] += 1
        for f in orphans:
            nodes = [f.node_i, f.node_j]
            blocks = _facet_blocks(f)
            offs = (0, 3, 0, 3)
            owners = (0, 0, 1, 1)
            K = np.zeros((12, 12))
            w = f.projected_area * f.edge_length
            for (ba, na, oa) in zip(blocks, owners, offs):
                ia = 6 * na + oa
                for (bb, nb, ob) in zip(blocks, owners, offs):
                    ib = 6 * nb + ob
                    K[ia:ia + 3, ib:ib + 3] += w * ba.T @ (D[:, None] * bb)
            M = np.zeros(12)
            for i, n in enumerate(nodes):
                m_node = mass.values[6 * n] / incident[n]
                M[6 * i:6 * i + 3] = m_node
                M[6 * i + 3:6 * i + 6] = m_node * dp[n] ** 2 / 10.0
            omega_max = max(omega_max, _element_omega(K, M, nodes, fixed))

    if omega_max <= 0:
        raise AssemblyError("no dynamic DoFs; cannot estimate a time step")
    return 2.0 / omega_max


def _element_omega(K, M, nodes, fixed) -> float:
    """Largest sqrt-eigenvalue of the free, massive part of M^-1 K."""
    keep = []
    for i, n in enumerate(nodes):
        for c in range(6):
            d = 6 * i + c
            if 6 * n + c in fixed or M[d] <= 0:
                continue
            keep.append(d)
    if not keep:
        return 0.0
    keep = np.array(keep)
    Ks = K[np.ix_(keep, keep)]
    inv_sqrt = 1.0 / np.sqrt(M[keep])
    A = inv_sqrt[:, None] * Ks * inv_sqrt[None, :]
    ev = scipy.linalg.eigvalsh(A)
    lam = max(0.0, float(ev[-1]))
    return float(np.sqrt(lam))
