import numpy as np
import pytest
from scipy.integrate import quad

from zakfd.pulses import KINDS, PulseShape, raised_cosine, response, response_energy


class TestPulseShape:
    @pytest.mark.parametrize("kind", KINDS)
    def test_defaults_validate(self, kind):
        p = PulseShape.default(kind)
        assert p.kind == kind
        assert p.compact == (kind != "sinc")

    @pytest.mark.parametrize("kwargs", [
        dict(kind="rrc"),
        dict(kind="rrc", beta_tau=0.5, beta_nu=1.5),
        dict(kind="rrc", beta_tau=0.5, beta_nu=0.5, alpha_tau=1.0),
        dict(kind="gauss", alpha_tau=1.0),
        dict(kind="gauss", alpha_tau=-1.0, alpha_nu=1.0),
        dict(kind="sinc", beta_tau=0.2),
        dict(kind="hann"),
    ])
    def test_rejects_bad_parameters(self, kwargs):
        with pytest.raises(ValueError):
            PulseShape(**kwargs)


class TestResponses:
    @pytest.mark.parametrize("kind", KINDS)
    def test_unit_peak_and_symmetry(self, kind):
        p = PulseShape.default(kind)
        u = np.linspace(-6, 6, 121)
        g = p.delay_response(u)
        assert p.delay_response(np.array([0.0]))[0] == pytest.approx(1.0, abs=1e-9)
        np.testing.assert_allclose(g, g[::-1], atol=1e-9)

    @pytest.mark.parametrize("kind", ["sinc", "rrc"])
    def test_nyquist_zeros(self, kind):
        k = np.arange(1, 20)
        np.testing.assert_allclose(PulseShape.default(kind).delay_response(k), 0.0, atol=1e-12)

    def test_gauss_leaks_into_neighbours(self):
        assert PulseShape.default("gauss").delay_response(np.array([1.0]))[0] > 0.1

    @pytest.mark.parametrize("beta", [0.25, 0.6, 1.0])
    def test_raised_cosine_removable_singularity(self, beta):
        u0 = 1.0 / (2 * beta)
        near = raised_cosine(np.array([u0 - 1e-6, u0 + 1e-6]), beta).mean()
        assert raised_cosine(np.array([u0]), beta)[0] == pytest.approx(near, abs=1e-6)

    def test_gauss_is_self_convolution(self):
        # end-to-end response of exp(-a t^2) with itself, normalised at 0
        a = 1.584
        w = lambda t: np.exp(-a * t ** 2)  # noqa: E731
        num = lambda u: quad(lambda t: w(t) * w(u - t), -10, 10)[0]  # noqa: E731
        for u in (0.3, 1.0, 2.2):
            assert response("gauss", np.array([u]), a)[0] == pytest.approx(num(u) / num(0), rel=1e-8)

    def test_gauss_sinc_is_self_convolution(self):
        a = 0.044
        w = lambda t: np.sinc(t) * np.exp(-a * t ** 2)  # noqa: E731

        def conv(u):
            return sum(quad(lambda t: w(t) * w(u - t), lo, lo + 1, limit=100)[0]
                       for lo in range(-40, 40))

        for u in (0.5, 1.0, 3.7):
            assert response("gauss-sinc", np.array([u]), a)[0] == pytest.approx(
                conv(u) / conv(0), abs=2e-4)

    def test_energies_against_closed_forms(self):
        assert response_energy("sinc") == pytest.approx(1.0, abs=2e-3)
        # the raised cosine squared integrates to 1 - beta / 4
        assert response_energy("rrc", 0.6) == pytest.approx(1 - 0.6 / 4, rel=1e-4)
        assert response_energy("gauss", 1.584) == pytest.approx(np.sqrt(np.pi / 1.584), rel=1e-6)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            response("hann", np.zeros(1))
