"""Model files, validation, round trips, refinement driver and the CLI."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from igabem import (
    ValidationError,
    load_bundled,
    load_model,
    model_document,
    parse_number,
    refine_model,
    write_model,
)
from igabem.cli import main as cli_main
from igabem.model_io import parse_document
from conftest import ARC_CENTRE, ARC_RADIUS


@pytest.fixture(scope="module")
def vessel_pair():
    return load_bundled("pressure_vessel")


@pytest.fixture()
def vessel_doc(vessel_pair):
    return model_document(*vessel_pair)


@pytest.fixture(scope="module")
def vessel_path(tmp_path_factory, vessel_pair):
    path = tmp_path_factory.mktemp("models") / "vessel.json"
    write_model(path, *vessel_pair)
    return path


class TestParseNumber:
    def test_plain_numbers(self):
        assert parse_number(3) == 3.0
        assert parse_number(2.5) == 2.5

    def test_expressions(self):
        assert parse_number("sqrt(2)/2") == pytest.approx(math.sqrt(2) / 2)
        assert parse_number("-1/3") == pytest.approx(-1 / 3)
        assert parse_number("pi/4") == pytest.approx(math.pi / 4)

    def test_rejects_arbitrary_code(self):
        for bad in ("__import__('os')", "knots", "sqrt(2); 1", "[1]", True):
            with pytest.raises(ValidationError):
                parse_number(bad)


class TestLoadModel:
    def test_bundled_vessel_matches_published_data(self, vessel_pair):
        model, settings = vessel_pair
        curve = model.curve
        assert curve.n == 23
        assert len(model.elements) == 11
        assert curve.weights[3] == pytest.approx(math.sqrt(2) / 2)
        assert curve.points[3] == pytest.approx([40.0, 60.0])
        assert settings.method == "igabem"

    def test_vessel_geometry_fidelity(self, vessel_pair):
        model, _ = vessel_pair
        for xi in np.linspace(1, 2, 17):
            point = model.curve.point(xi)
            assert abs(np.linalg.norm(point - ARC_CENTRE) - ARC_RADIUS) < 1e-10

    def test_clockwise_copy_rejected(self, vessel_doc):
        doc = dict(vessel_doc)
        doc["control_points"] = doc["control_points"][::-1]
        with pytest.raises(ValidationError, match="counter-clockwise"):
            parse_document(doc)

    def test_missing_bc_range_rejected(self, vessel_doc):
        doc = dict(vessel_doc)
        doc["boundary_conditions"] = [
            bc for bc in doc["boundary_conditions"] if bc["param_range"] != [3, 11]
        ]
        with pytest.raises(ValidationError, match="no boundary condition covers"):
            parse_document(doc)

    def test_unknown_keys_rejected(self, vessel_doc):
        doc = dict(vessel_doc)
        doc["extra"] = 1
        with pytest.raises(ValidationError, match="unknown key"):
            parse_document(doc)
        doc = dict(vessel_doc)
        doc["material"] = dict(doc["material"], density=1.0)
        with pytest.raises(ValidationError, match="unknown key"):
            parse_document(doc)

    def test_version_checked(self, vessel_doc):
        doc = dict(vessel_doc)
        doc["version"] = 2
        with pytest.raises(ValidationError, match="version"):
            parse_document(doc)

    def test_parse_error_carries_line_info(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "version": 1,\n  "degree": ,\n}\n')
        with pytest.raises(ValidationError, match="line 3"):
            load_model(path)

    def test_youngs_modulus_accepted(self, vessel_doc):
        doc = dict(vessel_doc)
        doc["material"] = {
            "youngs_modulus": 2600.0,
            "poisson": 0.3,
            "regime": "plane-strain",
        }
        model, _ = parse_document(doc)
        assert model.material.shear_modulus == pytest.approx(1000.0)


class TestRoundTrip:
    @pytest.mark.parametrize("name", ["pressure_vessel", "annulus_quadrant"])
    def test_write_parse_value_identical(self, tmp_path, name):
        model, settings = load_bundled(name)
        path = tmp_path / f"{name}.json"
        write_model(path, model, settings)
        reloaded, resettings = load_model(path)
        assert np.array_equal(reloaded.curve.knots, model.curve.knots)
        assert np.array_equal(reloaded.curve.points, model.curve.points)
        assert np.array_equal(reloaded.curve.weights, model.curve.weights)
        assert reloaded.material == model.material
        assert reloaded.bcs == model.bcs
        assert reloaded.analytic_reference == model.analytic_reference
        assert resettings == settings


class TestRefineModel:
    def test_h_doubles_elements(self, vessel_pair):
        model, _ = vessel_pair
        refined = refine_model(model, "h", 1)
        assert len(refined.elements) == 22

    def test_p_preserves_geometry(self, vessel_pair):
        model, _ = vessel_pair
        refined = refine_model(model, "p", 1)
        assert refined.curve.degree == 3
        for xi in np.linspace(0, 11, 128):
            assert np.linalg.norm(
                refined.curve.point(xi) - model.curve.point(xi)
            ) < 1e-10

    def test_h_then_p_differs_from_p_then_h(self, vessel_pair):
        model, _ = vessel_pair
        hp = refine_model(refine_model(model, "h", 1), "p", 1)
        ph = refine_model(refine_model(model, "p", 1), "h", 1)
        assert hp.curve.n != ph.curve.n  # the refinements do not commute

    def test_bc_ranges_survive_refinement(self, vessel_pair):
        model, _ = vessel_pair
        refined = refine_model(model, "h", 2)
        assert refined.bcs == model.bcs


class TestCli:
    def test_solve_writes_outputs_and_roundtrips(self, tmp_path, vessel_path):
        out = tmp_path / "run"
        code = cli_main(
            ["solve", str(vessel_path), "--out", str(out), "--samples", "6"]
        )
        assert code == 0
        samples = (out / "boundary_samples.csv").read_text().splitlines()
        assert samples[0] == "xi,x,y,u_x,u_y,t_x,t_y"
        parsed = [list(map(float, line.split(","))) for line in samples[1:]]
        assert len(parsed) == 6 * 11 + 1
        assert (out / "deformed_boundary.csv").exists()
        assert (out / "deformed_boundary.png").exists()

    def test_solve_deterministic(self, tmp_path, vessel_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert cli_main(["solve", str(vessel_path), "--out", str(out_a)]) == 0
        assert cli_main(["solve", str(vessel_path), "--out", str(out_b)]) == 0
        for name in ("boundary_samples.csv", "deformed_boundary.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_solve_zero_pressure_variant(self, tmp_path, vessel_pair):
        model, settings = vessel_pair
        doc = model_document(model, settings)
        for bc in doc["boundary_conditions"]:
            if bc["direction"] == "normal":
                bc["value"] = 0.0
        path = tmp_path / "quiet.json"
        path.write_text(json.dumps(doc))
        out = tmp_path / "quiet_out"
        assert cli_main(["solve", str(path), "--out", str(out)]) == 0
        rows = (out / "boundary_samples.csv").read_text().splitlines()[1:]
        for row in rows:
            values = list(map(float, row.split(",")))
            assert abs(values[3]) < 1e-10 and abs(values[4]) < 1e-10

    def test_validation_error_exit_code(self, tmp_path, vessel_doc):
        doc = dict(vessel_doc)
        doc["control_points"] = doc["control_points"][::-1]
        path = tmp_path / "cw.json"
        path.write_text(json.dumps(doc))
        assert cli_main(["solve", str(path)]) == 2

    def test_parse_error_exit_code(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text("{nope}")
        assert cli_main(["info", str(path)]) == 2

    def test_info_prints_layout(self, capsys, vessel_path):
        assert cli_main(["info", str(vessel_path)]) == 0
        out = capsys.readouterr().out
        assert "basis (21, 22, 1)" in out  # closure wrap of the last element
        assert "control points:  23" in out
        assert "xi'=0.5" in out

    def test_converge_runs_single_method(self, tmp_path, capsys):
        annulus_model, annulus_settings = load_bundled("annulus_quadrant")
        path = tmp_path / "ring.json"
        write_model(path, annulus_model, annulus_settings)
        out = tmp_path / "conv"
        code = cli_main(
            ["converge", str(path), "--levels", "2", "--methods", "igabem",
             "--out", str(out)]
        )
        assert code == 0
        table = (out / "convergence.csv").read_text().splitlines()
        assert table[0] == "method,level,dofs,l2_norm,rel_error,wall_time_s"
        assert len(table) == 3  # two levels, one method
        assert (out / "convergence.png").exists()
        errors = [float(line.split(",")[4]) for line in table[1:]]
        assert errors[1] < errors[0]

    def test_console_script_entry_point(self, vessel_path):
        result = subprocess.run(
            [sys.executable, "-m", "igabem.cli", "info", str(vessel_path)],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert "pressure_vessel" in result.stdout
