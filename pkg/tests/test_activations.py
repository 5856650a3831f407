import numpy as np
import pytest

from cgrnn.activations import (GateFnKind, NonlinKind, gate_forward, hirose,
                               mod_sigmoid, modrelu)
from cgrnn.ctensor import ComplexMatrix, to_polar
from cgrnn.wirtinger import grad_check

RNG = np.random.default_rng(42)


def polar_points(rng, n, b, lo=0.3, hi=2.5):
    mag = rng.uniform(lo, hi, (n, b))
    ph = rng.uniform(-np.pi, np.pi, (n, b))
    return ComplexMatrix(np.stack([mag * np.cos(ph), mag * np.sin(ph)]))


class TestHirose:
    def test_zero_at_origin(self):
        out = hirose(ComplexMatrix.zeros(3, 2), m=1.0)
        np.testing.assert_array_equal(out.data, 0.0)

    def test_scalar_value(self):
        out = hirose(ComplexMatrix.from_parts([[10.0]], [[0.0]]), m=1.0)
        assert out.re[0, 0] == pytest.approx(np.tanh(10.0), rel=1e-9)
        assert out.im[0, 0] == pytest.approx(0.0, abs=1e-15)

    def test_phase_preserved_at_1000_points(self):
        z = polar_points(RNG, 40, 25)
        out = hirose(z, m=1.0)
        np.testing.assert_allclose(to_polar(out).phase, to_polar(z).phase, atol=1e-12)

    def test_bounded(self):
        z = polar_points(RNG, 20, 20, lo=0.1, hi=1000.0)
        assert np.all(to_polar(hirose(z, m=1.0)).magnitude < 1.0)
        # beyond ~1e4 the bound saturates to 1.0 exactly in float64
        huge = hirose(ComplexMatrix.from_parts([[1e6]], [[0.0]]), m=1.0)
        assert to_polar(huge).magnitude[0, 0] <= 1.0

    def test_monotone_in_magnitude(self):
        mags = np.linspace(0.01, 20.0, 300)
        z = ComplexMatrix.from_parts((mags * np.cos(0.8))[None, :], (mags * np.sin(0.8))[None, :])
        out_mag = to_polar(hirose(z, m=1.3)).magnitude.ravel()
        assert np.all(np.diff(out_mag) >= -1e-12)

    def test_rejects_bad_m(self):
        with pytest.raises(ValueError):
            hirose(ComplexMatrix.zeros(1, 1), m=0.0)
        with pytest.raises(ValueError):
            NonlinKind("hirose", m=-1.0)


class TestModrelu:
    def test_scalar_value(self):
        out = modrelu(ComplexMatrix.from_parts([[1.0]], [[0.0]]), np.array([-0.5]))
        assert out.re[0, 0] == pytest.approx(0.5, rel=1e-9)

    def test_dead_zone(self):
        z = polar_points(RNG, 5, 8, lo=0.01, hi=0.49)
        out = modrelu(z, np.full(5, -0.5))
        np.testing.assert_array_equal(out.data, 0.0)

    def test_zero_bias_is_identity(self):
        z = polar_points(RNG, 6, 7)
        out = modrelu(z, np.zeros(6))
        np.testing.assert_allclose(out.data, z.data, rtol=1e-9, atol=1e-11)

    def test_unbounded(self):
        big = 1e4
        z = ComplexMatrix.from_parts([[big]], [[0.0]])
        out = modrelu(z, np.array([-0.5]))
        assert to_polar(out).magnitude[0, 0] > big / 2

    def test_phase_preserved_outside_dead_zone(self):
        z = polar_points(RNG, 40, 25, lo=0.6)
        out = modrelu(z, np.full(40, -0.5))
        np.testing.assert_allclose(to_polar(out).phase, to_polar(z).phase, atol=1e-9)

    def test_monotone_in_magnitude(self):
        mags = np.linspace(0.0, 20.0, 400)
        z = ComplexMatrix.from_parts((mags * np.cos(-2.0))[None, :],
                                     (mags * np.sin(-2.0))[None, :])
        out_mag = to_polar(modrelu(z, np.array([-0.7]))).magnitude.ravel()
        assert np.all(np.diff(out_mag) >= -1e-12)


class TestGates:
    def test_mod_sigmoid_at_zero(self):
        out = mod_sigmoid(ComplexMatrix.zeros(4, 3), 0.5, 0.5)
        np.testing.assert_allclose(out, 0.5)

    def test_mod_sigmoid_projection(self):
        z = polar_points(RNG, 6, 5)
        out = mod_sigmoid(z, 1.0, 0.0)
        want = 1.0 / (1.0 + np.exp(-z.re))
        np.testing.assert_allclose(out, want, rtol=1e-12)

    def test_mod_sigmoid_half_half(self):
        z = ComplexMatrix.from_parts([[2.0]], [[2.0]])
        assert mod_sigmoid(z, 0.5, 0.5)[0, 0] == pytest.approx(1.0 / (1.0 + np.exp(-2.0)))

    def test_mod_sigmoid_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            mod_sigmoid(ComplexMatrix.zeros(1, 1), 1.5, 0.0)

    def test_product_at_zero(self):
        out = gate_forward(GateFnKind("product"), ComplexMatrix.zeros(2, 2))
        np.testing.assert_allclose(out, 0.25)

    def test_tied1_endpoint(self):
        z = polar_points(RNG, 4, 4)
        out = gate_forward(GateFnKind("tied1"), z, alpha=1.0)
        want = 1.0 / (1.0 + np.exp(-z.re))
        np.testing.assert_allclose(out, want, rtol=1e-12)

    def test_tied2_scalar(self):
        z = ComplexMatrix.from_parts([[1.0]], [[2.0]])
        out = gate_forward(GateFnKind("tied2"), z, alpha=0.3)
        assert out[0, 0] == pytest.approx(1.0 / (1.0 + np.exp(-1.7)))

    def test_real_sigmoid_ignores_imag(self):
        z = polar_points(RNG, 3, 3)
        z2 = ComplexMatrix(np.stack([z.re, -5.0 * z.im]))
        k = GateFnKind("real_sigmoid")
        np.testing.assert_array_equal(gate_forward(k, z), gate_forward(k, z2))

    def test_missing_parameter_errors(self):
        with pytest.raises(ValueError):
            gate_forward(GateFnKind("tied2"), ComplexMatrix.zeros(1, 1))
        with pytest.raises(ValueError):
            gate_forward(GateFnKind("free"), ComplexMatrix.zeros(1, 1), alpha=0.5)

    @pytest.mark.parametrize("kind,params", [
        ("product", {}), ("tied1", dict(alpha=0.3)), ("tied2", dict(alpha=0.7)),
        ("free", dict(alpha=0.2, beta=0.9)), ("real_sigmoid", {}),
    ])
    def test_outputs_in_unit_interval(self, kind, params):
        # sigma saturates to exactly 1.0 in float64 past ~|37|; stay below
        z = polar_points(RNG, 8, 9, lo=0.01, hi=30.0)
        out = gate_forward(GateFnKind(kind), z, **params)
        assert np.all(out > 0.0) and np.all(out < 1.0)

    def test_coefficient_counts(self):
        assert GateFnKind("product").n_coeffs == 0
        assert GateFnKind("tied1").n_coeffs == 1
        assert GateFnKind("tied2").n_coeffs == 1
        assert GateFnKind("free").n_coeffs == 2


class TestBackwardRules:
    """Tape versions of the activations against finite differences."""

    def test_modrelu_with_learnable_bias(self):
        z0 = polar_points(RNG, 3, 4, lo=0.6, hi=2.0).data
        w = RNG.standard_normal((2, 3, 4))

        def build(tape, leaves):
            out = tape.modrelu(leaves["z"], leaves["b"])
            return tape.sum(tape.mul(out, tape.const(w)))

        report = grad_check(build, {"z": z0, "b": np.full((3, 1), -0.25)}, tol=1e-6)
        assert report.passed, report.max_rel_err

    def test_gate_composites(self):
        z0 = polar_points(RNG, 3, 4).data
        w = RNG.standard_normal((3, 4))

        def build(tape, leaves):
            z = leaves["z"]
            a = tape.sigmoid(leaves["a_raw"])
            b = tape.sigmoid(leaves["b_raw"])
            zr = tape.channel(z, 0)
            zi = tape.channel(z, 1)
            g = tape.sigmoid(tape.add(tape.mul(zr, a), tape.mul(zi, b)))
            return tape.sum(tape.mul(g, tape.const(w)))

        report = grad_check(build, {"z": z0, "a_raw": np.array(0.1), "b_raw": np.array(-0.2)},
                            tol=1e-6)
        assert report.passed, report.max_rel_err
