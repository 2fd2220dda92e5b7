import math

import numpy as np
import pytest

import turbulux as tx


def test_channel_and_analytic():
    c = tx.ChannelConfig(length_m=2000)
    d = tx.derive_channel(c)
    assert d.fresnel == pytest.approx(1.0)
    assert d.rytov == pytest.approx(1.23e-15 * d.k ** (7 / 6) * 2000 ** (11 / 6))
    an = tx.beam_stats_analytic(c)
    assert an.w_lt == pytest.approx(0.0290, rel=5e-3)
    assert an.weak_turbulence
    assert c.to_dict()["length_m"] == 2000


def test_errors_map_to_python():
    with pytest.raises(tx.InvalidArgument):
        tx.ChannelConfig(length_m=-1)
    with pytest.raises(tx.Error):
        tx.ChannelConfig(colour="red")
    with pytest.raises(tx.InvalidMoments):
        tx.lognormal_from_s_moments(1e-4, 5e-9)


def test_pdt_round_trip():
    an = tx.beam_stats_analytic(tx.ChannelConfig(length_m=1000))
    model = tx.calibrate_s_moments(an.stats, 0.012)
    eta = np.linspace(0.0, 1.0, 11)
    cdf = model.cdf(eta)
    assert cdf.shape == eta.shape
    assert cdf[0] == 0.0 and cdf[-1] == 1.0
    assert np.all(np.diff(cdf) >= 0.0)
    assert model.pdf(np.array([[0.5, 0.6]])).shape == (1, 2)
    again = tx.CircularBeamPdt.from_json(model.to_json())
    assert again.s.mu == model.s.mu

    targets = tx.model_eta_moments(model.sigma_bw2, 0.012, model.s)
    fitted, match = tx.calibrate_eta_moments(an.stats, targets, 0.012)
    assert match.feasible
    assert fitted.s.sigma2 == pytest.approx(model.s.sigma2, abs=1e-6)

    sample = model.sample(4000, seed=1)
    assert tx.ks_pdt(sample, model) < 1.63 / math.sqrt(4000)


def test_small_ensemble():
    c = tx.ChannelConfig(length_m=1000)
    g = tx.GridSpec(n=128, modes=64)
    s = tx.run_ensemble(c, g, 8, seed=3, apertures=[0.012, 0.015])
    assert len(s) == 8
    assert s.eta(0).shape == (8,)
    assert s.eta(0).strides == (8,)
    assert len(set(s.S)) == 8
    assert np.all(s.eta(1) >= s.eta(0))
    summary = tx.summarize_set(s, 1)
    assert summary.n == 8
    again = tx.run_ensemble(c, g, 8, seed=3, apertures=[0.012, 0.015], workers=2)
    np.testing.assert_array_equal(s.S, again.S)


def test_quantum_layer():
    state = tx.GaussianInputState(6.0, 0.4)
    moments = tx.input_gaussian_moments(state)
    assert moments.mean_n == pytest.approx(36.0 + math.sinh(0.4) ** 2)
    assert tx.squeezing_out(tx.GaussianInputState(0.0), tx.EtaAverager.point(0.3)) == 0.5
    clicks = tx.click_statistics(tx.GaussianInputState(1.5), 7, tx.EtaAverager.point(0.6))
    q = math.exp(-0.6 * 2.25 / 7)
    assert clicks["p"][0] == pytest.approx(q**7, abs=1e-12)
    avg = tx.EtaAverager.from_samples(np.full(10, 0.5))
    assert tx.mandel_q_out(moments.mandel_q, moments.mean_n, avg) == pytest.approx(0.5 * moments.mandel_q)
