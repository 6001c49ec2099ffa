import numpy as np
import pytest
from numpy.testing import assert_allclose

from ldpm.geometry import (
    Constraint,
    ConstraintKind,
    ConstraintSet,
    DofMap,
    MeshError,
    Node,
    build_block_specimen,
    build_fixture,
    load_mesh,
    make_facet,
    select_nodes,
    tet_volume,
    validate_mesh,
    write_mesh,
)


@pytest.fixture
def single_facet():
    return build_fixture("single-facet", length=100.0, area=100.0)


@pytest.fixture
def single_tet():
    return build_fixture("single-tet")


class TestFixtures:
    def test_single_facet_layout(self, single_facet):
        assert single_facet.n_nodes == 2
        assert single_facet.n_facets == 1
        f = single_facet.facets[0]
        assert_allclose(f.normal, [1.0, 0.0, 0.0])
        assert f.edge_length == 100.0
        assert f.projected_area == 100.0

    def test_chain_layout(self):
        mesh = build_fixture("two-particle-chain", n=3)
        assert mesh.n_nodes == 4
        assert mesh.n_facets == 3
        for f in mesh.facets:
            assert_allclose(f.normal, [1.0, 0.0, 0.0])

    def test_chain_needs_positive_n(self):
        with pytest.raises(ValueError):
            build_fixture("two-particle-chain", n=0)

    def test_single_tet_layout(self, single_tet):
        assert single_tet.n_nodes == 4
        assert single_tet.n_facets == 12
        assert len(single_tet.tets) == 1

    def test_single_tet_centroid_consistency(self, single_tet):
        pos = single_tet.positions
        for f in single_tet.facets:
            assert_allclose(pos[f.node_i] + f.c_i, pos[f.node_j] + f.c_j,
                            atol=1e-12)

    def test_fixtures_validate_clean(self, single_facet, single_tet):
        assert validate_mesh(single_facet).ok
        assert validate_mesh(single_tet).ok

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            build_fixture("dodecahedron")

    def test_facet_frames_orthonormal(self, single_tet):
        for f in single_tet.facets:
            P = f.frame
            assert np.abs(P.T @ P - np.eye(3)).max() < 1e-12

    def test_tet_facet_areas_tile_the_faces(self, single_tet):
        # the 12 facet triangles partition the tet interior surface built
        # from edge midpoints, face centroids, and the centroid; their raw
        # areas must be positive and the projected areas not exceed them
        for f in single_tet.facets:
            assert f.raw_area > 0
            assert 0 < f.projected_area <= f.raw_area + 1e-12


class TestValidation:
    def test_bad_edge_length_reported(self, single_facet):
        f = single_facet.facets[0]
        bad = f.__class__(**{**f.__dict__, "edge_length": 90.0})
        single_facet.facets[0] = bad
        rep = validate_mesh(single_facet)
        assert not rep.ok
        assert any(v.kind == "edge-length" for v in rep.violations)

    def test_rotated_frame_reported(self, single_facet):
        f = single_facet.facets[0]
        c, s = np.cos(np.radians(1.0)), np.sin(np.radians(1.0))
        n_rot = np.array([c, s, 0.0])
        bad = f.__class__(**{**f.__dict__, "normal": n_rot,
                             "tangent_m": np.array([-s, c, 0.0])})
        single_facet.facets[0] = bad
        rep = validate_mesh(single_facet)
        assert any(v.kind == "normal-align" for v in rep.violations)

    def test_projected_area_mismatch_reported(self, single_facet):
        f = single_facet.facets[0]
        bad = f.__class__(**{**f.__dict__, "projected_area": 95.0,
                             "true_normal": np.array([0.9, np.sqrt(0.19), 0.0])})
        single_facet.facets[0] = bad
        rep = validate_mesh(single_facet)
        assert any(v.kind == "projected-area" for v in rep.violations)

    def test_node_out_of_range_reported(self, single_facet):
        f = single_facet.facets[0]
        bad = f.__class__(**{**f.__dict__, "node_j": 5})
        single_facet.facets[0] = bad
        rep = validate_mesh(single_facet)
        assert any(v.kind == "node-ref" for v in rep.violations)


class TestFileIO:
    def test_round_trip_bit_identical(self, tmp_path, single_tet):
        p1 = tmp_path / "a.mesh"
        p2 = tmp_path / "b.mesh"
        write_mesh(single_tet, p1)
        mesh2 = load_mesh(p1)
        write_mesh(mesh2, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_round_trip_preserves_geometry(self, tmp_path):
        mesh = build_block_specimen((20, 20, 20), (1, 1, 1), seed=4)
        p = tmp_path / "block.mesh"
        write_mesh(mesh, p)
        mesh2 = load_mesh(p)
        assert_allclose(mesh2.positions, mesh.positions, rtol=0)
        for f1, f2 in zip(mesh.facets, mesh2.facets):
            assert_allclose(f2.centroid, f1.centroid, rtol=0)
            assert f2.raw_area == f1.raw_area
            assert f2.parent_tet == f1.parent_tet
        assert mesh2.mesh_hash() == mesh.mesh_hash()

    def test_parse_error_has_line_number(self, tmp_path):
        p = tmp_path / "bad.mesh"
        p.write_text("NODES 1\n0 0.0 0.0 oops 1.0\n")
        with pytest.raises(MeshError, match=r"bad\.mesh:2"):
            load_mesh(p)

    def test_short_section_rejected(self, tmp_path):
        p = tmp_path / "short.mesh"
        p.write_text("NODES 3\n0 0 0 0 1\n1 1 0 0 1\n")
        with pytest.raises(MeshError, match="short by 1"):
            load_mesh(p)

    def test_invalid_frame_rejected_on_load(self, tmp_path, single_facet):
        p = tmp_path / "warped.mesh"
        write_mesh(single_facet, p)
        lines = p.read_text().splitlines()
        tok = lines[-1].split()
        tok[10:13] = ["0.9", "0.1", "0.0"]     # m no longer unit/orthogonal
        lines[-1] = " ".join(tok)
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(MeshError, match="orthonormal"):
            load_mesh(p)

    def test_comments_and_blank_lines_ignored(self, tmp_path, single_facet):
        p = tmp_path / "c.mesh"
        write_mesh(single_facet, p)
        text = "# header comment\n\n" + p.read_text()
        p.write_text(text)
        mesh = load_mesh(p)
        assert mesh.n_facets == 1


class TestBlockSpecimen:
    def test_valid_and_deterministic(self):
        m1 = build_block_specimen((40, 40, 80), (2, 2, 4), seed=3)
        m2 = build_block_specimen((40, 40, 80), (2, 2, 4), seed=3)
        assert validate_mesh(m1).ok
        assert m1.mesh_hash() == m2.mesh_hash()
        m3 = build_block_specimen((40, 40, 80), (2, 2, 4), seed=4)
        assert m3.mesh_hash() != m1.mesh_hash()

    def test_facet_count_is_12_per_tet(self):
        m = build_block_specimen((30, 30, 30), (2, 2, 2), seed=1)
        assert m.n_facets == 12 * len(m.tets)

    def test_cell_volumes_sum_to_total(self):
        m = build_block_specimen((40, 40, 80), (2, 2, 4), seed=3, jitter=0.0)
        assert_allclose(m.cell_volumes.sum(), 40 * 40 * 80, rtol=1e-10)

    def test_boundary_nodes_stay_on_faces(self):
        m = build_block_specimen((40, 40, 80), (2, 2, 4), seed=3)
        lo, hi = m.bounding_box()
        assert_allclose(lo, [0, 0, 0], atol=1e-12)
        assert_allclose(hi, [40, 40, 80], atol=1e-12)

    def test_keep_predicate_removes_cells(self):
        full = build_block_specimen((40, 40, 40), (2, 2, 2), seed=0)
        notched = build_block_specimen(
            (40, 40, 40), (2, 2, 2), seed=0,
            keep=lambda c: c[2] > 20 or abs(c[0] - 20) > 10)
        assert len(notched.tets) < len(full.tets)
        assert validate_mesh(notched).ok


class TestConstraints:
    def test_duplicate_kinematic_rejected(self):
        with pytest.raises(MeshError, match="duplicate"):
            ConstraintSet([
                Constraint(0, 2, ConstraintKind.FIXED),
                Constraint(0, 2, ConstraintKind.VELOCITY, velocity=1.0),
            ])

    def test_forces_do_not_collide_with_kinematic(self):
        cs = ConstraintSet([
            Constraint(0, 2, ConstraintKind.FIXED),
            Constraint(0, 2, ConstraintKind.FORCE, history=((0, 0), (1, 5))),
        ])
        assert len(cs) == 1
        assert len(cs.forces) == 1

    def test_partition_disjoint_and_complete(self):
        dm = DofMap(3)
        cs = ConstraintSet([Constraint(1, 0, ConstraintKind.FIXED),
                            Constraint(2, 5, ConstraintKind.FIXED)])
        free, pres = dm.partition(cs)
        assert set(free) | set(pres) == set(range(18))
        assert not set(free) & set(pres)
        assert list(pres) == [6, 17]


class TestSelectors:
    @pytest.fixture
    def block(self):
        return build_block_specimen((40, 40, 80), (2, 2, 4), seed=3)

    def test_faces(self, block):
        pos = block.positions
        for sel, axis, val in (("zmin", 2, 0.0), ("zmax", 2, 80.0),
                               ("xmin", 0, 0.0), ("ymax", 1, 40.0)):
            ids = select_nodes(block, sel)
            assert ids
            assert_allclose(pos[ids][:, axis], val, atol=1e-9)

    def test_lateral_excludes_interior(self, block):
        lateral = set(select_nodes(block, "lateral"))
        interior = [n.id for n in block.nodes
                    if 0 < n.position[0] < 40 and 0 < n.position[1] < 40]
        assert lateral.isdisjoint(interior)

    def test_center_face_node(self, block):
        (nid,) = select_nodes(block, "center-zmax")
        p = block.nodes[nid].position
        assert p[2] == pytest.approx(80.0)
        assert abs(p[0] - 20) < 15 and abs(p[1] - 20) < 15

    def test_intersection(self, block):
        ids = select_nodes(block, "xmin&zmin")
        pos = block.positions[ids]
        assert_allclose(pos[:, 0], 0.0, atol=1e-9)
        assert_allclose(pos[:, 2], 0.0, atol=1e-9)

    def test_explicit_ids(self, block):
        assert select_nodes(block, "node:7") == [7]
        assert select_nodes(block, "nodes:3,1,2") == [1, 2, 3]

    def test_unknown_selector(self, block):
        with pytest.raises(MeshError):
            select_nodes(block, "everywhere")


def test_node_rejects_nonfinite_position():
    with pytest.raises(MeshError):
        Node(0, np.array([0.0, np.nan, 0.0]), 1.0)


def test_tet_volume_signed():
    p = np.eye(3)
    assert tet_volume(np.zeros(3), p[0], p[1], p[2]) == pytest.approx(1 / 6)
    assert tet_volume(np.zeros(3), p[1], p[0], p[2]) == pytest.approx(-1 / 6)


def test_make_facet_rejects_coincident_nodes():
    x = np.zeros(3)
    with pytest.raises(MeshError):
        make_facet(0, 0, 1, x, x, 1.0, x, np.array([1.0, 0, 0]))
