"""
Tests for the 3D proto-transform: local gains, vertex regions, evaluation
against the brute-force oracle, rotation and the ECTP text format.
"""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from src.mesh.mesh import euler_characteristic, mesh_from_arrays, restriction_chi, star
from src.transform.proto_transform import (
    ProtoTransform,
    Term,
    build_proto_transform,
    evaluate_ect,
    local_gain,
    merge_terms,
    rotate_transform,
    vertex_regions,
)
from src.transform.serialization import (
    dumps_ectp,
    format_term,
    loads_ectp,
    read_ectp,
    write_ectp,
)
from src.utils.errors import (
    DegenerateMeshError,
    DimensionMismatchError,
    HeightTieError,
    SerializationError,
)

E3 = np.array([0.0, 0.0, 1.0])


def random_directions(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def assert_matches_oracle(m, t, rng, samples=100):
    for v in random_directions(rng, samples):
        h = rng.uniform(-1.1, 1.1)
        assert evaluate_ect(t, v, h) == restriction_chi(m, v, h)


@pytest.fixture
def vertical_edge():
    return mesh_from_arrays([[0, 0, 0.5], [0, 0, -0.5]], edges=[(0, 1)], mesh_id="vertical")


class TestLocalGain:
    """Test the Euler-curve jump at a single vertex."""

    def test_isolated_vertex(self, point_mesh):
        s = star(point_mesh, 0)
        for v in random_directions(np.random.default_rng(0), 5):
            assert local_gain(s, point_mesh.vertices, v) == 1

    def test_edge_endpoint(self, vertical_edge):
        top, bottom = star(vertical_edge, 0), star(vertical_edge, 1)
        assert local_gain(top, vertical_edge.vertices, E3) == 0
        assert local_gain(bottom, vertical_edge.vertices, E3) == 1

    def test_triangle_apex_above_both(self):
        m = mesh_from_arrays([[0, 0, 0.9], [0.5, 0, -0.3], [-0.5, 0.1, -0.2]], [(0, 1, 2)])
        assert local_gain(star(m, 0), m.vertices, E3) == 0

    def test_height_tie(self):
        m = mesh_from_arrays([[0.5, 0, 0], [-0.5, 0, 0]], edges=[(0, 1)])
        with pytest.raises(HeightTieError):
            local_gain(star(m, 0), m.vertices, E3)

    def test_gains_sum_to_euler_characteristic(self, torus_mesh, fan_mesh, octahedron_mesh):
        rng = np.random.default_rng(2)
        for m in (torus_mesh, fan_mesh, octahedron_mesh):
            for v in random_directions(rng, 20):
                total = sum(local_gain(star(m, i), m.vertices, v) for i in range(m.n_vertices))
                assert total == euler_characteristic(m)


class TestVertexRegions:
    def test_isolated_vertex_covers_the_sphere(self, point_mesh):
        regions = vertex_regions(point_mesh, 0)
        assert [gain for _, gain in regions] == [1, 1]
        assert sum(cell.area for cell, _ in regions) == pytest.approx(4 * np.pi, abs=1e-12)

    def test_edge_endpoint_gets_hemisphere(self, vertical_edge):
        regions = vertex_regions(vertical_edge, 1)
        assert len(regions) == 1
        cell, gain = regions[0]
        assert gain == 1
        assert cell.area == pytest.approx(2 * np.pi, abs=1e-12)
        # the other endpoint lies above on this side
        assert cell.moment @ E3 > 0

    def test_tetrahedron_vertex_cell_count(self, tetrahedron_mesh):
        for i in range(4):
            assert len(vertex_regions(tetrahedron_mesh, i)) <= 8

    def test_merge_never_adds_regions(self, octahedron_mesh):
        for i in range(octahedron_mesh.n_vertices):
            plain = vertex_regions(octahedron_mesh, i, merge=False)
            merged = vertex_regions(octahedron_mesh, i, merge=True)
            assert len(merged) <= len(plain)
            for gain in {g for _, g in plain}:
                area = sum(c.area for c, g in plain if g == gain)
                merged_area = sum(c.area for c, g in merged if g == gain)
                assert merged_area == pytest.approx(area, abs=1e-10)


class TestBuildProtoTransform:
    """Test proto-transform construction and evaluation."""

    def test_single_point(self, point_mesh):
        t = build_proto_transform(point_mesh)
        assert len(t) == 2
        for term in t.terms:
            assert term.gain == 1
            np.testing.assert_array_equal(term.anchor, point_mesh.vertices[0])
        assert t.mesh_id == "point"

    def test_tetrahedron_term_bound(self, tetrahedron_mesh):
        assert len(build_proto_transform(tetrahedron_mesh)) <= 32

    def test_planar_mesh_rejected(self, planar_example_mesh):
        with pytest.raises(DimensionMismatchError):
            build_proto_transform(planar_example_mesh)

    def test_mesh_outside_unit_ball_rejected(self):
        m = mesh_from_arrays([[2, 0, 0], [0, 0, 0]], edges=[(0, 1)])
        with pytest.raises(DegenerateMeshError):
            build_proto_transform(m)

    @pytest.mark.parametrize(
        "fixture",
        ["point_mesh", "edge_mesh", "triangle_mesh", "tetrahedron_mesh", "octahedron_mesh",
         "torus_mesh", "fan_mesh"],
    )
    def test_extreme_heights(self, request, fixture):
        m = request.getfixturevalue(fixture)
        t = build_proto_transform(m)
        rng = np.random.default_rng(5)
        for v in random_directions(rng, 20):
            assert evaluate_ect(t, v, 1.0 + 1e-6) == euler_characteristic(m)
            assert evaluate_ect(t, v, -1.0 - 1e-6) == 0

    @pytest.mark.parametrize(
        "fixture", ["edge_mesh", "triangle_mesh", "tetrahedron_mesh", "torus_mesh", "fan_mesh"]
    )
    def test_matches_oracle_on_fixtures(self, request, fixture):
        m = request.getfixturevalue(fixture)
        assert_matches_oracle(m, build_proto_transform(m), np.random.default_rng(6))

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_oracle_on_random_meshes(self, make_random_mesh, seed):
        m = make_random_mesh(seed, n_vertices=4 + seed % 5)
        assert_matches_oracle(m, build_proto_transform(m), np.random.default_rng(100 + seed))

    def test_merging_preserves_values(self, torus_mesh):
        plain = build_proto_transform(torus_mesh, merge=False)
        merged = build_proto_transform(torus_mesh, merge=True)
        assert len(merged) <= len(plain)
        rng = np.random.default_rng(8)
        for v in random_directions(rng, 100):
            h = rng.uniform(-1.0, 1.0)
            assert evaluate_ect(merged, v, h) == evaluate_ect(plain, v, h)

    def test_merge_terms_matches_merged_build(self, octahedron_mesh):
        merged = merge_terms(build_proto_transform(octahedron_mesh, merge=False))
        assert_matches_oracle(octahedron_mesh, merged, np.random.default_rng(9))

    def test_parallel_build_keeps_order(self, octahedron_mesh):
        serial = build_proto_transform(octahedron_mesh, jobs=1)
        parallel = build_proto_transform(octahedron_mesh, jobs=2)
        assert dumps_ectp(serial) == dumps_ectp(parallel)
        assert [t.vertex for t in serial.terms] == sorted(t.vertex for t in serial.terms)


@pytest.mark.slow
class TestOracleAgreement:
    """Exact agreement with the brute-force oracle over fifty random complexes."""

    @pytest.mark.parametrize("seed", range(50))
    def test_random_complex(self, make_random_mesh, seed):
        m = make_random_mesh(1000 + seed, n_vertices=4 + seed % 9)
        assert m.n_vertices <= 12
        assert_matches_oracle(m, build_proto_transform(m), np.random.default_rng(2000 + seed))


class TestRotateTransform:
    def test_identity(self, tetrahedron_mesh):
        t = build_proto_transform(tetrahedron_mesh)
        assert dumps_ectp(rotate_transform(t, np.eye(3))) == dumps_ectp(t)

    def test_equivariance(self, tetrahedron_mesh):
        t = build_proto_transform(tetrahedron_mesh)
        rng = np.random.default_rng(10)
        for _ in range(50):
            R = Rotation.random(random_state=rng).as_matrix()
            rotated = rotate_transform(t, R)
            v = random_directions(rng, 1)[0]
            h = rng.uniform(-1.0, 1.0)
            assert evaluate_ect(rotated, R @ v, h) == evaluate_ect(t, v, h)

    def test_rotated_transform_matches_rotated_mesh(self, octahedron_mesh):
        R = Rotation.from_euler("zyx", [0.3, -1.1, 2.0]).as_matrix()
        rotated_mesh = mesh_from_arrays(
            octahedron_mesh.vertices @ R.T, octahedron_mesh.triangles
        )
        t = rotate_transform(build_proto_transform(octahedron_mesh), R)
        assert_matches_oracle(rotated_mesh, t, np.random.default_rng(11))


class TestTermValidation:
    def test_zero_gain_rejected(self, point_mesh):
        support = build_proto_transform(point_mesh).terms[0].support
        with pytest.raises(ValueError):
            Term(gain=0, anchor=np.zeros(3), support=support)

    def test_anchor_outside_ball_rejected(self, point_mesh):
        support = build_proto_transform(point_mesh).terms[0].support
        with pytest.raises(ValueError):
            Term(gain=1, anchor=[2.0, 0.0, 0.0], support=support)


class TestSerialization:
    """Test the ECTP text format."""

    def test_round_trip_is_bit_stable(self, torus_mesh):
        t = build_proto_transform(torus_mesh)
        text = dumps_ectp(t)
        back = loads_ectp(text)
        assert dumps_ectp(back) == text
        assert back.mesh_id == "torus"
        for a, b in zip(t.terms, back.terms):
            assert a.gain == b.gain
            np.testing.assert_array_equal(a.anchor, b.anchor)
            np.testing.assert_array_equal(a.support.vertices, b.support.vertices)

    def test_header(self, point_mesh):
        lines = dumps_ectp(build_proto_transform(point_mesh)).splitlines()
        assert lines[0] == "ECTP 1 3 2"
        assert lines[2].startswith("g= 1 a= ")

    def test_file_round_trip_defaults_id_to_stem(self, tmp_path, point_mesh):
        t = ProtoTransform(terms=build_proto_transform(point_mesh).terms)
        path = tmp_path / "out" / "shape_a.ectp"
        write_ectp(t, path)
        assert read_ectp(path).mesh_id == "shape_a"

    def test_negative_zero_is_written_as_zero(self, point_mesh):
        support = build_proto_transform(point_mesh).terms[0].support
        term = Term(gain=1, anchor=np.array([-0.0, 0.5, -0.0]), support=support)
        line = format_term(term)
        assert line.startswith("g= 1 a= 0 0.5 0 p= ")
        assert "-0 " not in line + " "

    def test_bad_magic(self):
        with pytest.raises(SerializationError, match="line 1"):
            loads_ectp("ECT 1 3 0\n")

    def test_unsupported_version(self):
        with pytest.raises(SerializationError, match="version"):
            loads_ectp("ECTP 2 3 0\n")

    def test_planar_dimension_rejected(self):
        with pytest.raises(SerializationError, match="dimension"):
            loads_ectp("ECTP 1 2 0\n")

    def test_term_count_mismatch(self, point_mesh):
        text = dumps_ectp(build_proto_transform(point_mesh)).replace("ECTP 1 3 2", "ECTP 1 3 3")
        with pytest.raises(SerializationError, match="declares 3 terms"):
            loads_ectp(text)

    def test_malformed_term_names_line(self, point_mesh):
        lines = dumps_ectp(build_proto_transform(point_mesh)).splitlines()
        lines[3] = lines[3].replace("g= 1", "g= one")
        with pytest.raises(SerializationError, match="line 4"):
            loads_ectp("\n".join(lines))

    def test_vertex_count_mismatch(self):
        text = "ECTP 1 3 1\ng= 1 a= 0 0 0 p= 3 1 0 0 0 1 0\n"
        with pytest.raises(SerializationError, match="line 2"):
            loads_ectp(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SerializationError):
            read_ectp(tmp_path / "absent.ectp")
