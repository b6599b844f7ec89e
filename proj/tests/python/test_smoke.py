"""Smoke tests for the flowlab python module."""

import json
import math

import pytest

import flowlab


def test_lambda_moments():
    assert flowlab.lambda_moment(2.0) == pytest.approx(1.0, abs=1e-10)
    assert flowlab.lambda_moment(1.0) == pytest.approx(math.sqrt(2.0 / math.pi), abs=1e-9)
    assert flowlab.lambda_moment(4.0) == pytest.approx(3.0 ** 0.25, abs=1e-9)


def test_expectation_against_gaussian_moments():
    quad = flowlab.make_quadrature("gauss_hermite", 1, 8)
    assert flowlab.expectation(lambda x: 1.0, quad) == pytest.approx(1.0, abs=1e-12)
    assert flowlab.expectation(lambda x: x[0] ** 2, quad) == pytest.approx(1.0, abs=1e-10)
    assert flowlab.expectation(lambda x: x[0] ** 4, quad) == pytest.approx(3.0, abs=1e-9)


def test_monte_carlo_determinism():
    a = flowlab.make_quadrature("monte_carlo", 3, 500, seed=42)
    b = flowlab.make_quadrature("monte_carlo", 3, 500, seed=42)
    f = lambda x: x[0] * x[1] + x[2] ** 2
    assert flowlab.expectation(f, a) == flowlab.expectation(f, b)


def test_mehler_closed_forms():
    t = math.log(2.0)
    # T_t x^2 = e^{-2t} x^2 + 1 - e^{-2t} equals 1 at x = 1.
    assert flowlab.mehler_apply(lambda x: x[0] ** 2, t, [1.0]) == pytest.approx(1.0, abs=1e-10)
    grad = flowlab.mehler_gradient(lambda x: x[0] ** 2, t, [1.0])
    assert grad[0] == pytest.approx(0.5, abs=1e-10)


def test_gaussian_rotation_isometry():
    z, w = flowlab.gaussian_rotation([1.0, 0.5], [-0.25, 2.0], 0.7)
    before = 1.0 + 0.5 ** 2 + 0.25 ** 2 + 4.0
    after = sum(v * v for v in z) + sum(v * v for v in w)
    assert after == pytest.approx(before, rel=1e-12)


def test_field_and_divergence():
    field = flowlab.make_field(json.dumps({"kind": "rotation", "params": {"dim": 2}}))
    assert field.dim == 2
    assert field.kind == "rotation"
    assert field(0.0, [0.4, -1.2]) == pytest.approx([1.2, 0.4])
    assert flowlab.gaussian_divergence(field, 0.0, [0.4, -1.2]) == pytest.approx(0.0, abs=1e-12)
    assert "rotation" in flowlab.catalogue()

    with pytest.raises(flowlab.FlowlabConfigError):
        flowlab.make_field("{\"kind\": \"no_such\"}")


def test_flow_density_matches_gaussian_mgf():
    field = flowlab.make_field(json.dumps({"kind": "constant", "params": {"vector": [1.0]}}))
    batch = flowlab.integrate_flow(field, 20000, 7, 1.0, 50)
    assert batch.particles() == 20000
    assert batch.dead_count() == 0
    estimate, std_error = flowlab.density_lr_norm(batch, 2.0, 50)
    assert abs(estimate - math.e) <= 3.0 * std_error


def test_commutator_closed_form():
    field = flowlab.make_field(json.dumps({"kind": "linear", "params": {"matrix": [[1.0]]}}))
    for eps in (0.5, 0.1):
        for x in (-1.1, 0.3, 1.8):
            got = flowlab.commutator_eval(lambda z: 1.0, field, eps, [x], gh_nodes=40)
            expected = -math.exp(-2.0 * eps) * (1.0 - x * x)
            assert got == pytest.approx(expected, abs=1e-8)


def test_backward_density_cameron_martin():
    field = flowlab.make_field(json.dumps({"kind": "constant", "params": {"vector": [0.7]}}))
    density, origin, dead = flowlab.backward_density(field, 1.0, [1.5], steps=80)
    assert not dead
    assert origin[0] == pytest.approx(1.5 - 0.7, abs=1e-10)
    assert density == pytest.approx(math.exp(0.7 * 1.5 - 0.5 * 0.7 ** 2), abs=1e-8)


def test_semigroup_discrepancy_constant_field():
    field = flowlab.make_field(json.dumps({"kind": "constant", "params": {"vector": [1.0, -0.5]}}))
    assert flowlab.semigroup_discrepancy(field, 0.0, 0.5, 1.0, 500, 7) <= 1e-10


def test_run_experiment(tmp_path):
    cfg = tmp_path / "rot.json"
    cfg.write_text(json.dumps({
        "experiment": "density_bound",
        "field": {"kind": "rotation", "params": {"dim": 2}},
        "horizon": 1.0,
        "quadrature": {"kind": "gauss_hermite", "nodes_per_axis": 10},
        "time_steps": 5,
        "particles": 200,
        "seed": 1,
    }))
    out = tmp_path / "rot_out"
    assert flowlab.run_experiment(str(cfg), str(out)) == 0
    report = json.loads((tmp_path / "rot_out.report.json").read_text())
    assert report["pass"] is True
    assert (tmp_path / "rot_out.table.csv").exists()
