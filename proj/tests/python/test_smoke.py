"""Smoke tests for the python bindings."""

import json
import math

import numpy as np
import pytest

import gradmetric as gm


def _symmetrize_lower(R):
    order = R.ndim - 1
    out = np.zeros_like(R)
    perms = __import__("itertools").permutations(range(1, order + 1))
    count = 0
    for p in perms:
        out += np.transpose(R, (0,) + p)
        count += 1
    return out / count


def test_tensor_equation_residual():
    rng = np.random.default_rng(0)
    for n, order in [(2, 2), (3, 3), (4, 4)]:
        U = rng.standard_normal((n, n)) + 3 * np.eye(n)
        R = _symmetrize_lower(rng.standard_normal((n,) * (order + 1)))
        T = gm.solve_order_n(U, R, order)
        assert T.shape == (n, n) + (n,) * (order - 1)
        residual = gm.equation_residual(U, T, R, order)
        scale = max(1.0, np.abs(R).max())
        assert residual <= 1e-10 * scale
        # symmetric in the upper pair
        assert np.array_equal(T, np.swapaxes(T, 0, 1))


def test_brute_force_agrees_by_residual():
    rng = np.random.default_rng(1)
    U = rng.standard_normal((2, 2)) + 3 * np.eye(2)
    R = _symmetrize_lower(rng.standard_normal((2, 2, 2, 2)))
    T = gm.solve_order_n(U, R, 3)
    B = gm.brute_force_solve(U, R, 3)
    assert gm.equation_residual(U, B, R, 3) <= gm.equation_residual(U, T, R, 3) + 1e-10


def test_metric_series_from_spec():
    spec = {
        "dim": 1,
        "order": 6,
        "base_point": [0.0],
        "domain": {"min": [-1.0], "max": [1.0]},
        "X": [
            {"component": 0, "monomial": [1], "coefficient": 1.0},
            {"component": 0, "monomial": [2], "coefficient": 1.0},
        ],
        "Y": [{"component": 0, "monomial": [1], "coefficient": 1.0}],
    }
    out = gm.build_metric_series(json.dumps(spec), 4)
    assert out["verify_defect"] <= 1e-12
    series = json.loads(out["series"])
    coeffs = [c[0] for c in series["coefficients"]]
    assert coeffs[0] == pytest.approx(1.0)
    assert coeffs[1] == pytest.approx(1.0)
    assert abs(coeffs[2]) <= 1e-12
    g_half = gm.eval_metric_series(out["series"], np.array([0.5]))
    assert g_half[0, 0] == pytest.approx(1.5)


def test_noncritical_metric_bounds():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = rng.integers(2, 6)
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        if x @ y <= 1e-6:
            continue
        out = gm.noncritical_metric(x, y)
        eigs = np.linalg.eigvalsh(out["G"])
        assert eigs.min() >= 0.5 * out["X1"] - 1e-12
        assert np.linalg.norm(out["G_std"] @ y - x) <= 1e-10 * max(1.0, np.linalg.norm(x))


def test_nonpositive_pairing_raises():
    with pytest.raises(gm.GradmetricError):
        gm.noncritical_metric(np.array([1.0, 0.0]), np.array([-1.0, 0.0]))


def test_counterexample_probe():
    probe = gm.counterexample_probe()
    assert probe["limit_axis"] == pytest.approx(0.0, abs=1e-4)
    assert probe["limit_diagonal"] == pytest.approx(-0.5, abs=1e-4)
    assert probe["g11_at_ones"] == pytest.approx(1.25, abs=1e-10)
    assert probe["nondifferentiable"]


def _birth_death(a, b):
    up = np.zeros((2, 2), dtype=complex)
    up[0, 1] = math.sqrt(a)
    down = np.zeros((2, 2), dtype=complex)
    down[1, 0] = math.sqrt(b)
    return [up, down]


def test_quantum_layer():
    jumps = _birth_death(0.7, 0.4)
    H = np.zeros((2, 2), dtype=complex)
    sigma = gm.stationary_state(H, jumps)
    assert sigma[0, 0].real == pytest.approx(0.7 / 1.1)

    passed, defect = gm.check_bkm_detailed_balance(H, jumps)
    assert passed and defect <= 1e-12

    B = np.array([[0.2, 0.5 - 0.1j], [0.5 + 0.1j, -0.2]])
    roundtrip = gm.bkm_inv_apply(sigma, gm.bkm_apply(sigma, B))
    assert np.abs(roundtrip - B).max() <= 1e-12

    rho = np.diag([0.75, 0.25]).astype(complex)
    href = gm.relative_entropy(rho, np.eye(2, dtype=complex) / 2)
    assert href == pytest.approx(0.75 * math.log(1.5) + 0.25 * math.log(0.5))

    report = gm.check_gradient_structure(H, jumps, samples=64, seed=3)
    assert report["verdict"] is True
    assert report["bkm_pass"] is True

    Hz = np.diag([1.0, -1.0]).astype(complex)
    report_bad = gm.check_gradient_structure(Hz, jumps, samples=64, seed=3)
    assert report_bad["verdict"] is False
    assert report_bad["bkm_pass"] is False
