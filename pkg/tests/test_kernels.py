import numpy as np
import pytest

from optparity import kernels


def backends():
    out = [("numpy", kernels.NUMPY_BACKEND)]
    if kernels.NUMBA_BACKEND is not None:
        out.append(("numba", kernels.NUMBA_BACKEND))
    return out


@pytest.mark.parametrize("name,backend", backends())
class TestBackendAgreement:
    """The jitted loops and the vectorized fallbacks compute the same thing."""

    def data(self, n=257, seed=0):
        rng = np.random.default_rng(seed)
        return (rng.normal(size=n), rng.normal(size=n), rng.normal(size=n))

    def test_heavy_ball(self, name, backend):
        theta, g, v = self.data()
        ref_t, ref_v = theta.copy(), v.copy()
        kernels.NUMPY_BACKEND["heavy_ball_step"](ref_t, g, ref_v, 0.1, 0.9, 1e-4)
        backend["heavy_ball_step"](theta, g, v, 0.1, 0.9, 1e-4)
        np.testing.assert_allclose(theta, ref_t, atol=1e-15)
        np.testing.assert_allclose(v, ref_v, atol=1e-15)

    def test_nesterov(self, name, backend):
        theta, g, v = self.data(seed=1)
        ref_t, ref_v = theta.copy(), v.copy()
        kernels.NUMPY_BACKEND["nesterov_step"](ref_t, g, ref_v, 0.05, 0.97, 0.0)
        backend["nesterov_step"](theta, g, v, 0.05, 0.97, 0.0)
        np.testing.assert_allclose(theta, ref_t, atol=1e-15)

    def test_adam_pipeline(self, name, backend):
        theta, g, m = self.data(seed=2)
        s = np.abs(np.random.default_rng(3).normal(size=theta.size))
        ref_m, ref_s = m.copy(), s.copy()
        kernels.NUMPY_BACKEND["adam_moments"](ref_m, ref_s, g, 0.9, 0.999)
        backend["adam_moments"](m, s, g, 0.9, 0.999)
        np.testing.assert_allclose(m, ref_m, atol=1e-15)
        np.testing.assert_allclose(s, ref_s, atol=1e-15)
        out = np.empty_like(m)
        ref_out = np.empty_like(m)
        kernels.NUMPY_BACKEND["adam_direction"](ref_out, ref_m, ref_s, 1e-8, 0.1, 0.001)
        backend["adam_direction"](out, m, s, 1e-8, 0.1, 0.001)
        np.testing.assert_allclose(out, ref_out, atol=1e-14)

    def test_trust_momentum(self, name, backend):
        theta, g, v = self.data(seed=4)
        ref_t, ref_v = theta.copy(), v.copy()
        kernels.NUMPY_BACKEND["trust_momentum_step"](ref_t, g, ref_v, 0.02, 0.9)
        backend["trust_momentum_step"](theta, g, v, 0.02, 0.9)
        np.testing.assert_allclose(theta, ref_t, atol=1e-15)


def test_env_flag_selects_numpy_backend():
    import subprocess
    import sys

    code = "from optparity import kernels; print(kernels.BACKEND)"
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"PATH": "/usr/bin:/bin", "OPTPARITY_NO_NUMBA": "1"},
        capture_output=True, text=True,
    )
    assert out.stdout.strip() == "numpy"
