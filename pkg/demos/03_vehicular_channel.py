#!/usr/bin/env python3
"""The vehicular channel model and its second-order statistics.

Draws fading realizations and compares the measured temporal correlation
with the Jakes model J0(2 pi f_d tau), and the measured tap powers with the
exponential power delay profile.
"""
import numpy as np

from dot11p.channel import (
    DopplerSpec,
    effective_rms_delay,
    exp_pdp,
    gen_fading,
    jakes_rt,
    pdp_rf,
)

pdp = exp_pdp(n_taps=15, spacing=0.1e-6, tau_rms=0.4e-6)
print(f"exponential PDP: {pdp.n_taps} taps over 0..{pdp.delays[-1]*1e6:.1f} us")
print(f"  nominal rms delay 0.400 us, effective after truncation+sampling: "
      f"{effective_rms_delay(pdp)*1e6:.3f} us")
print(f"  tap powers: {np.round(pdp.powers[:5], 4)} ...")

for v in (100.0, 200.0):
    dop = DopplerSpec.from_kmph(v)
    print(f"\nv = {v:g} km/h -> max Doppler {dop.f_d:.1f} Hz "
          f"(f_d*T_sym = {dop.f_d*8e-6:.4f})")
    rng = np.random.default_rng(42)
    frames = 2000
    taps = np.stack([gen_fading(pdp, dop, 30, rng).taps for _ in range(frames)])
    print("  lag   empirical ACF   J0 model")
    for lag in (1, 4, 8, 16):
        prod = taps[:, :-lag or None, :] * np.conj(taps[:, lag:, :])
        emp = prod.sum().real / (np.abs(taps[:, :-lag, :]) ** 2).sum()
        print(f"  {lag:3d}   {emp:13.4f}   {jakes_rt(lag, dop):8.4f}")

print("\nfrequency correlation across subcarriers (Fourier transform of PDP):")
for dk in (1, 4, 13, 26):
    print(f"  dk={dk:2d}  |r_f| = {abs(pdp_rf(dk, pdp)):.4f}")
print("\nCoherence falls off within ~13 subcarriers and a few tens of symbols;")
print("that is the structure the LMMSE interpolator exploits.")
