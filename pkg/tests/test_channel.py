"""Channel model tests: PDP, Doppler correlation, fading statistics."""
import mpmath
import numpy as np
import pytest

from dot11p.channel import (
    DopplerSpec,
    apply_channel,
    effective_rms_delay,
    esn0_to_sigma2,
    exp_pdp,
    freq_response,
    gen_fading,
    jakes_rt,
    pdp_rf,
)
from dot11p.params import T_SYM


def test_exp_pdp_normalization_and_ratio():
    pdp = exp_pdp()
    assert pdp.n_taps == 15
    assert pdp.powers.sum() == pytest.approx(1.0, abs=1e-12)
    assert pdp.delays[-1] == pytest.approx(1.4e-6)
    assert pdp.powers[1] / pdp.powers[0] == pytest.approx(np.exp(-0.25), rel=1e-12)


def test_single_tap_pdp():
    pdp = exp_pdp(n_taps=1)
    assert pdp.powers[0] == pytest.approx(1.0)
    assert effective_rms_delay(pdp) == 0.0


def test_effective_rms_delay_reference():
    # truncation and sampling shrink the nominal 0.4 us spread
    assert effective_rms_delay(exp_pdp()) == pytest.approx(0.322e-6, abs=1e-9)


def test_two_equal_taps_rms():
    from dot11p.channel import PowerDelayProfile

    pdp = PowerDelayProfile(
        delays=np.array([0.0, 1e-6]), powers=np.array([0.5, 0.5])
    )
    assert effective_rms_delay(pdp) == pytest.approx(0.5e-6)


# ---------------------------------------------------------------------------
# Correlation functions
# ---------------------------------------------------------------------------

def test_doppler_frequency():
    dop = DopplerSpec.from_kmph(100.0)
    assert dop.f_d == pytest.approx(546.66, abs=0.5)


def test_jakes_against_mpmath():
    dop = DopplerSpec.from_kmph(100.0)
    assert jakes_rt(0, dop) == pytest.approx(1.0)
    for dm in (1, 5, 17, 60):
        x = 2 * np.pi * dop.f_d * dm * T_SYM
        assert jakes_rt(dm, dop) == pytest.approx(float(mpmath.besselj(0, x)), abs=1e-10)


def test_jakes_first_zero():
    # r_t crosses zero where the lag hits the first Bessel-J0 root
    dop = DopplerSpec.from_kmph(100.0)
    root = 2.404825557695773
    tau = root / (2 * np.pi * dop.f_d)
    assert jakes_rt(tau / T_SYM, dop) == pytest.approx(0.0, abs=1e-10)


def test_pdp_rf_basics():
    pdp = exp_pdp()
    assert pdp_rf(0, pdp) == pytest.approx(1.0)
    for dk in (1, 7, 26):
        assert pdp_rf(-dk, pdp) == pytest.approx(np.conj(pdp_rf(dk, pdp)))
    assert abs(pdp_rf(13, pdp)) < abs(pdp_rf(1, pdp))


def test_pdp_rf_against_monte_carlo():
    """Ensemble correlation of simulated frequency responses at dk=1."""
    pdp = exp_pdp()
    rng = np.random.default_rng(11)
    taps = (
        rng.standard_normal((100_000, 15)) + 1j * rng.standard_normal((100_000, 15))
    ) * np.sqrt(pdp.powers / 2)
    h = freq_response(taps, pdp)
    emp = np.mean(h[:, 1] * np.conj(h[:, 2]))  # adjacent occupied bins
    assert abs(emp - pdp_rf(-1, pdp)) < 0.01


# ---------------------------------------------------------------------------
# Fading generation
# ---------------------------------------------------------------------------

def test_zero_doppler_constant_taps():
    chan = gen_fading(exp_pdp(), DopplerSpec(0.0), 20, np.random.default_rng(0))
    assert np.allclose(chan.taps, chan.taps[0])


def test_tap_power_and_temporal_acf():
    pdp = exp_pdp()
    dop = DopplerSpec.from_kmph(100.0)
    rng = np.random.default_rng(1)
    frames_ = 4000
    m_total = 30
    taps = np.stack(
        [gen_fading(pdp, dop, m_total, rng).taps for _ in range(frames_)]
    )  # [frames, m, taps]
    # within-frame samples are correlated, so build the 3-sigma band from
    # the spread of independent per-frame means
    per_frame = np.mean(np.abs(taps) ** 2, axis=1)  # [frames, taps]
    power = per_frame.mean(axis=0)
    tol = 3 * per_frame.std(axis=0) / np.sqrt(frames_)
    assert np.all(np.abs(power - pdp.powers) < tol)
    assert np.mean(np.abs(taps.mean(axis=(0, 1)))) < 0.01

    strongest = taps[:, :, 0]
    acf1 = np.mean(strongest[:, 1:] * np.conj(strongest[:, :-1])) / pdp.powers[0]
    assert abs(acf1 - jakes_rt(1, dop)) < 0.01


def test_separable_space_time_correlation():
    """E{H[m,k] H*[m+dm,k+dk]} factors into r_t r_f within 2%."""
    pdp = exp_pdp()
    dop = DopplerSpec.from_kmph(100.0)
    rng = np.random.default_rng(2)
    n_frames = 3000
    m_total = 40
    h = np.stack(
        [gen_fading(pdp, dop, m_total, rng).h_freq for _ in range(n_frames)]
    )  # [frames, m, 64]
    for dm in (0, 1, 4, 8):
        for dk in (0, 1, 5, 13):
            emp = np.mean(
                h[:, : m_total - dm, 1 : 30 - dk]
                * np.conj(h[:, dm:, 1 + dk : 30])
            )
            model = jakes_rt(dm, dop) * pdp_rf(-dk, pdp)
            assert abs(emp - model) < 0.02, (dm, dk, emp, model)


def test_freq_response_flat_and_delay():
    from dot11p.channel import PowerDelayProfile

    flat = PowerDelayProfile(delays=np.array([0.0]), powers=np.array([1.0]))
    h = freq_response(np.array([[1.0 + 0j]]), flat)
    assert np.allclose(h, 1.0)

    delayed = PowerDelayProfile(delays=np.array([0.1e-6]), powers=np.array([1.0]))
    h = freq_response(np.array([[1.0 + 0j]]), delayed)
    assert np.allclose(np.abs(h), 1.0)
    # one-sample delay = one full phase turn across the 64 bins
    phases = np.unwrap(np.angle(h[0]))
    assert np.allclose(np.diff(phases), -2 * np.pi / 64, atol=1e-9)


def test_two_path_response_has_periodic_notches():
    from dot11p.channel import PowerDelayProfile

    # equal paths 0.4 us apart null out every 16th bin, starting at bin 8
    pdp = PowerDelayProfile(
        delays=np.array([0.0, 0.4e-6]), powers=np.array([0.5, 0.5])
    )
    h = freq_response(np.array([[1.0 + 0j, 1.0 + 0j]]), pdp)[0]
    notches = np.flatnonzero(np.abs(h) < 1e-9)
    assert notches.tolist() == [8, 24, 40, 56]
    peaks = np.flatnonzero(np.abs(h) > 2 - 1e-9)
    assert peaks.tolist() == [0, 16, 32, 48]


def test_apply_channel_identity_and_noise_stats():
    rng = np.random.default_rng(3)
    values = np.ones((40, 64), dtype=np.complex128)
    from dot11p.channel import ChannelRealization

    flat = ChannelRealization(
        taps=np.ones((40, 1), dtype=np.complex128),
        h_freq=np.ones((40, 64), dtype=np.complex128),
        sigma2=0.0,
    )
    assert np.array_equal(apply_channel(values, flat, rng), values)

    noisy = ChannelRealization(taps=flat.taps, h_freq=flat.h_freq, sigma2=0.25)
    r = apply_channel(np.zeros((40, 64), dtype=np.complex128), noisy, rng)
    var = np.var(r)
    assert abs(var - 0.25) < 3 * 0.25 / np.sqrt(r.size)


def test_esn0_wiring():
    assert esn0_to_sigma2(0.0) == pytest.approx(1.0)
    assert esn0_to_sigma2(10.0) == pytest.approx(0.1)
    assert esn0_to_sigma2(20.0, es=2.0) == pytest.approx(0.02)
