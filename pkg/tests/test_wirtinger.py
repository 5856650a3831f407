import numpy as np
import pytest

from cgrnn.wirtinger import cauchy_riemann_residual, grad_check, wirtinger_numeric

RNG = np.random.default_rng(77)


class TestWirtingerNumeric:
    def test_z_squared_is_holomorphic(self):
        pair = wirtinger_numeric(lambda z: z * z, 1 + 1j)
        assert pair.d_z == pytest.approx(2 + 2j, abs=1e-8)
        assert abs(pair.d_zbar) < 1e-8

    def test_conjugate_swaps_the_pair(self):
        pair = wirtinger_numeric(lambda z: z.conjugate(), 0.3 - 0.7j)
        assert abs(pair.d_z) < 1e-10
        assert pair.d_zbar == pytest.approx(1.0, abs=1e-10)

    def test_real_part_splits_evenly(self):
        pair = wirtinger_numeric(lambda z: complex(z.real), 2.0 + 3.0j)
        assert pair.d_z == pytest.approx(0.5, abs=1e-10)
        assert pair.d_zbar == pytest.approx(0.5, abs=1e-10)

    def test_rejects_nonpositive_step(self):
        with pytest.raises(ValueError):
            wirtinger_numeric(lambda z: z, 0j, h=0.0)

    def test_nonfinite_function_reported(self):
        def f(z):
            with np.errstate(divide="ignore", invalid="ignore"):
                return complex(np.log(z.real))

        with pytest.raises(FloatingPointError):
            wirtinger_numeric(f, 0j, h=1e-5)

    @pytest.mark.parametrize("f,name", [
        (lambda z: z * z, "z^2"),
        (lambda z: z * z * z - 2 * z + 1, "cubic"),
        (lambda z: (1 + 2j) * z * z + z, "scaled"),
    ])
    def test_holomorphy_battery(self, f, name):
        for _ in range(20):
            z = complex(RNG.uniform(-2, 2), RNG.uniform(-2, 2))
            pair = wirtinger_numeric(f, z, h=1e-5)
            assert abs(pair.d_zbar) < 1e-7, (name, z)
            assert cauchy_riemann_residual(f, z, h=1e-5) < 1e-7, (name, z)

    def test_nonholomorphic_fails_cauchy_riemann(self):
        assert cauchy_riemann_residual(lambda z: complex(abs(z) ** 2), 1 + 2j) > 0.1


class TestGradCheck:
    def test_linear_loss_is_exact(self):
        w = RNG.standard_normal(6)

        def build(tape, leaves):
            return tape.sum(tape.mul(leaves["x"], tape.const(w)))

        report = grad_check(build, {"x": RNG.standard_normal(6)}, tol=1e-10)
        assert report.passed
        assert report.worst < 1e-10

    def test_report_carries_per_block_errors(self):
        def build(tape, leaves):
            return tape.add(tape.sum(tape.square(leaves["a"])),
                            tape.sum(tape.tanh(leaves["b"])))

        report = grad_check(build, {"a": RNG.standard_normal(3),
                                    "b": RNG.standard_normal(2)}, tol=1e-6)
        assert set(report.max_rel_err) == {"a", "b"}
        assert report.passed

    def test_detects_wrong_gradient(self):
        # sabotage: forward computes x^2 but pretends to be 3x via mul_const
        def build(tape, leaves):
            x = leaves["x"]
            y = tape.square(x)
            return tape.sum(tape.select(np.ones(4, dtype=bool), y, tape.mul_const(x, 3.0)))

        good = grad_check(build, {"x": RNG.uniform(1.0, 2.0, 4)}, tol=1e-6)
        assert good.passed  # select picks the honest branch

        def build_bad(tape, leaves):
            x = leaves["x"]
            # tape thinks loss depends on detached const, so AD grad is zero
            return tape.sum(tape.mul(tape.const(x.value.copy()), x))

        bad = grad_check(build_bad, {"x": RNG.uniform(1.0, 2.0, 4)}, tol=1e-6)
        assert not bad.passed
