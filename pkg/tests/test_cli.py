"""
Tests for the digital-ect command line.
"""

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from src.alignment.rotations import euler_to_matrix, random_rotation
from src.main import cli
from src.metrics.export import DistanceMatrix, from_csv, to_csv
from src.transform.proto_transform import rotate_transform
from src.transform.serialization import read_ectp, write_ectp

TETRAHEDRON = [
    [0.95, 0.12, -0.21],
    [-0.33, 0.88, 0.17],
    [-0.41, -0.62, 0.48],
    [0.07, -0.18, -0.93],
]
TETRAHEDRON_FACES = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]


@pytest.fixture
def cli_config(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(
        yaml.safe_dump({"logging": {"level": "WARNING", "file": None}, "run": {"seed": 3}})
    )
    return path


@pytest.fixture
def run(cli_config):
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(cli, ["--config", str(cli_config), *map(str, args)])

    return invoke


@pytest.fixture
def triangle_off(write_off):
    return write_off("triangle.off", [[0.9, 0.1, -0.2], [-0.3, 0.8, 0.25], [-0.35, -0.7, 0.05]],
                     [(0, 1, 2)])


class TestTransformCommand:
    def test_writes_ectp(self, run, write_off, tmp_path):
        mesh = write_off("tet.off", TETRAHEDRON, TETRAHEDRON_FACES)
        out = tmp_path / "tet.ectp"
        result = run("transform", mesh, "--out", out, "--jobs", 1)
        assert result.exit_code == 0, result.output
        assert "euler characteristic: 2" in result.output
        t = read_ectp(out)
        assert f"terms: {len(t)}" in result.output

    def test_corrupted_mesh_exits_with_parse_code(self, run, tmp_path):
        path = tmp_path / "bad.off"
        path.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 9\n")
        result = run("transform", path, "--out", tmp_path / "bad.ectp")
        assert result.exit_code == 3
        assert "index out of range" in " ".join(result.output.split())
        assert not (tmp_path / "bad.ectp").exists()


class TestPlanarCommands:
    @pytest.fixture
    def planar_off(self, write_off):
        vertices = [(-2.0, -1.0, 0.0), (0.0, 1.0, 0.0), (0.0, 4.0, 0.0), (2.0, 0.0, 0.0)]
        return write_off("planar.off", vertices, [(0, 1, 2), (1, 2, 3)])

    def test_arc_table(self, run, planar_off, tmp_path):
        out = tmp_path / "arcs.csv"
        result = run("transform2d", planar_off, "--radius", 4.0, "--out", out)
        assert result.exit_code == 0, result.output
        assert "12 arcs" in result.output
        assert len(out.read_text().strip().splitlines()) == 13

    def test_self_product(self, run, planar_off):
        result = run("inner2d", planar_off, "--radius", 4.0)
        assert result.exit_code == 0, result.output
        expected = 8 * np.pi + 6 * np.sqrt(2) + 5 * np.sqrt(5) - 2 * np.sqrt(17) + np.sqrt(29)
        assert float(result.output.strip().splitlines()[-1]) == pytest.approx(expected, abs=1e-9)


@pytest.fixture
def ectp_dir(run, write_off, tmp_path):
    """Three jittered tetrahedra transformed into one directory."""
    directory = tmp_path / "ectp"
    rng = np.random.default_rng(0)
    for k in range(3):
        vertices = np.array(TETRAHEDRON) + rng.normal(scale=0.1, size=(4, 3))
        mesh = write_off(f"m{k}.off", vertices, TETRAHEDRON_FACES)
        result = run("transform", mesh, "--out", directory / f"m{k}.ectp", "--jobs", 1)
        assert result.exit_code == 0, result.output
    return directory


class TestDistanceCommands:
    """Test distmat, discretize and mantel."""

    def test_distmat_and_mantel(self, run, ectp_dir, tmp_path):
        out = tmp_path / "d.csv"
        result = run("distmat", ectp_dir, "--out", out, "--jobs", 1)
        assert result.exit_code == 0, result.output
        matrix = from_csv(out)
        assert matrix.labels == ("m0", "m1", "m2")
        assert np.all(matrix.condensed() > 0)

        result = run("mantel", out, out)
        assert result.exit_code == 0, result.output
        assert "1.0000" in result.output

    def test_mantel_label_mismatch(self, run, tmp_path):
        values = [[0, 1, 2], [1, 0, 3], [2, 3, 0]]
        to_csv(DistanceMatrix(labels=("a", "b", "c"), values=values), tmp_path / "a.csv")
        to_csv(DistanceMatrix(labels=("a", "b", "d"), values=values), tmp_path / "b.csv")
        result = run("mantel", tmp_path / "a.csv", tmp_path / "b.csv")
        assert result.exit_code == 2

    def test_distmat_needs_two_files(self, run, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        result = run("distmat", empty, "--out", tmp_path / "d.csv")
        assert result.exit_code == 2

    def test_discretize_pair(self, run, write_off, triangle_off, tmp_path):
        tet = write_off("tet.off", TETRAHEDRON, TETRAHEDRON_FACES)
        out = tmp_path / "ect.csv"
        result = run("discretize", tet, triangle_off, "--k", 2, "--heights", 11, "--out", out)
        assert result.exit_code == 0, result.output
        assert "grid: 18 directions x 11 heights" in result.output
        assert "discrete distance:" in result.output
        header = out.read_text().splitlines()[0].split(",")
        assert header[:3] == ["x", "y", "z"]
        assert len(header) == 14


class TestAlignCommand:
    def test_self_alignment_is_the_identity(self, run, triangle_off, tmp_path):
        ectp = tmp_path / "tri.ectp"
        assert run("transform", triangle_off, "--out", ectp, "--jobs", 1).exit_code == 0
        trace = tmp_path / "trace.csv"
        result = run(
            "align", ectp, ectp, "--method", "grid", "--iters", 1,
            "--truth", 0, 0, 0, "--out", trace, "--jobs", 1,
        )
        assert result.exit_code == 0, result.output
        assert "angles: 0.000000 0.000000 0.000000" in result.output
        assert "so3 distance: 0.000000" in result.output
        assert len(trace.read_text().strip().splitlines()) == 2

    def test_grid_then_gradient(self, run, triangle_off, tmp_path):
        ectp = tmp_path / "tri.ectp"
        assert run("transform", triangle_off, "--out", ectp, "--jobs", 1).exit_code == 0
        grid = run("align", ectp, ectp, "--method", "grid", "--iters", 1, "--jobs", 1)
        refined = run(
            "align", ectp, ectp, "--method", "grid+gradient", "--iters", 1, "--jobs", 1,
        )
        assert refined.exit_code == 0, refined.output

        def objective(result):
            line = next(s for s in result.output.splitlines() if s.startswith("objective:"))
            return float(line.split()[1])

        assert objective(refined) >= objective(grid) - 1e-12


class TestRunOutput:
    """Outputs default to the configured run directory."""

    @pytest.fixture
    def run_in(self, tmp_path):
        runner = CliRunner()

        def invoke(output, *args):
            path = tmp_path / "run.yaml"
            settings = {"logging": {"level": "WARNING", "file": None}}
            if output is not None:
                settings["run"] = {"output": str(output)}
            path.write_text(yaml.safe_dump(settings))
            return runner.invoke(cli, ["--config", str(path), *map(str, args)])

        return invoke

    def test_transform_writes_into_run_directory(self, run_in, triangle_off, tmp_path):
        results = tmp_path / "results"
        result = run_in(results, "transform", triangle_off, "--jobs", 1)
        assert result.exit_code == 0, result.output
        assert len(read_ectp(results / "triangle.ectp")) > 0

    def test_explicit_out_wins(self, run_in, triangle_off, tmp_path):
        out = tmp_path / "explicit.ectp"
        result = run_in(tmp_path / "results", "transform", triangle_off, "--out", out)
        assert result.exit_code == 0, result.output
        assert out.exists()
        assert not (tmp_path / "results").exists()

    def test_missing_output_is_a_usage_error(self, run_in, triangle_off):
        result = run_in(None, "transform", triangle_off)
        assert result.exit_code == 2


@pytest.mark.slow
class TestDeterminism:
    """Repeated runs write byte-identical files for one and two workers."""

    @pytest.fixture
    def run_short(self, tmp_path):
        path = tmp_path / "short.yaml"
        path.write_text(
            yaml.safe_dump(
                {
                    "logging": {"level": "WARNING", "file": None},
                    "alignment": {"gradient_iterations": 3, "grid_candidates": 2},
                    "performance": {"deterministic": True},
                    "run": {"seed": 3},
                }
            )
        )
        runner = CliRunner()
        return lambda *args: runner.invoke(cli, ["--config", str(path), *map(str, args)])

    @pytest.mark.parametrize("command", ["distmat", "align"])
    def test_repeated_runs_are_byte_identical(self, run_short, ectp_dir, tmp_path, command):
        outputs = []
        for k, jobs in enumerate([1, 1, 1, 2, 2, 2]):
            out = tmp_path / f"{command}_{k}.csv"
            if command == "distmat":
                args = ["distmat", ectp_dir]
            else:
                args = [
                    "align", ectp_dir / "m0.ectp", ectp_dir / "m1.ectp",
                    "--method", "grid+gradient", "--iters", 2,
                ]
            result = run_short(*args, "--out", out, "--jobs", jobs)
            assert result.exit_code == 0, result.output
            outputs.append(out.read_bytes())
        assert all(output == outputs[0] for output in outputs)


@pytest.mark.slow
class TestAlignRecovery:
    def test_grid_then_gradient_recovers_a_random_rotation(self, run, write_off, tmp_path):
        mesh = write_off("tet.off", TETRAHEDRON, TETRAHEDRON_FACES)
        x_path, y_path = tmp_path / "x.ectp", tmp_path / "y.ectp"
        assert run("transform", mesh, "--out", x_path, "--jobs", 1).exit_code == 0
        truth = random_rotation(4)
        write_ectp(rotate_transform(read_ectp(x_path), euler_to_matrix(truth).T), y_path)
        result = run(
            "align", x_path, y_path, "--method", "grid+gradient",
            "--truth", *truth, "--jobs", 1,
        )
        assert result.exit_code == 0, result.output
        line = next(s for s in result.output.splitlines() if s.startswith("so3 distance:"))
        assert float(line.split()[-1]) <= 0.01
