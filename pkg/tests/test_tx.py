"""Transmit chain tests: interleaver, mapping, SIGNAL, grid, OFDM."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dot11p import frames
from dot11p.coding import encoder_state_after, scrambler_sequence
from dot11p.params import N_MACH, N_MEM, N_SERV, OCCUPIED_BINS, mcs_table
from dot11p.tx import (
    build_signal_symbol,
    deinterleave,
    dump_complex_array,
    encode_frame,
    interleave,
    interleaver_permutation,
    load_complex_array,
    map_bits,
    ofdm_demodulate,
    ofdm_modulate,
    signal_field_bits,
)


# ---------------------------------------------------------------------------
# Interleaver
# ---------------------------------------------------------------------------

def test_qpsk_permutation_values():
    perm = interleaver_permutation(96, 2)
    assert perm[0] == 0
    assert perm[1] == 6
    assert perm[16] == 1


def test_permutations_are_bijections():
    for i in range(8):
        mcs = mcs_table(i)
        perm = interleaver_permutation(mcs.n_cbps, mcs.n_bpsc)
        assert sorted(perm.tolist()) == list(range(mcs.n_cbps))


@given(mcs_index=st.integers(0, 7), seed=st.integers(0, 2**32 - 1))
def test_interleave_roundtrip(mcs_index, seed):
    mcs = mcs_table(mcs_index)
    block = np.random.default_rng(seed).integers(0, 2, mcs.n_cbps, dtype=np.uint8)
    assert np.array_equal(deinterleave(interleave(block, mcs), mcs), block)


def test_interleave_wrong_length():
    with pytest.raises(ValueError):
        interleave(np.zeros(50, dtype=np.uint8), mcs_table(2))


# ---------------------------------------------------------------------------
# Constellations
# ---------------------------------------------------------------------------

def test_bpsk_mapping():
    out = map_bits(np.array([0, 1]), "BPSK")
    assert out[0] == -1 and out[1] == +1


def test_qpsk_mapping():
    assert map_bits(np.array([1, 1]), "QPSK")[0] == pytest.approx((1 + 1j) / np.sqrt(2))
    assert map_bits(np.array([0, 0]), "QPSK")[0] == pytest.approx((-1 - 1j) / np.sqrt(2))


@pytest.mark.parametrize("modulation,n_bpsc", [
    ("BPSK", 1), ("QPSK", 2), ("QAM16", 4), ("QAM64", 6),
])
def test_unit_average_energy(modulation, n_bpsc):
    # all constellation points, each once
    n_points = 2**n_bpsc
    bits = ((np.arange(n_points)[:, None] >> np.arange(n_bpsc - 1, -1, -1)) & 1)
    symbols = map_bits(bits.reshape(-1), modulation)
    assert np.mean(np.abs(symbols) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_gray_neighbors_differ_by_one_bit():
    # adjacent 16-QAM I levels differ in exactly one of the two I bits
    bits = ((np.arange(16)[:, None] >> np.arange(3, -1, -1)) & 1)
    symbols = map_bits(bits.reshape(-1), "QAM16")
    by_i = {}
    for b, s in zip(bits, symbols):
        by_i.setdefault(round(s.real, 6), set()).add(tuple(b[:2]))
    levels = sorted(by_i)
    for lo, hi in zip(levels, levels[1:]):
        (a,), (b,) = by_i[lo], by_i[hi]
        assert sum(x != y for x, y in zip(a, b)) == 1


# ---------------------------------------------------------------------------
# SIGNAL symbol
# ---------------------------------------------------------------------------

def test_signal_field_layout():
    bits = signal_field_bits(100, mcs_table(2), is_mf=False)
    assert bits[0:17].sum() % 2 == bits[17]  # even parity by construction
    assert bits[17] == bits[0:17].sum() % 2
    assert not bits[18:].any()  # tail zeros
    flipped = signal_field_bits(100, mcs_table(2), is_mf=True)
    diff = np.flatnonzero(bits != flipped)
    assert diff.tolist() == [4, 17]  # reserved bit and parity only


def test_signal_parity_even():
    bits = signal_field_bits(4095, mcs_table(7), is_mf=True)
    assert bits[0:18].sum() % 2 == 0


def test_signal_length_overflow():
    with pytest.raises(ValueError):
        signal_field_bits(4096, mcs_table(2))


def test_signal_symbol_is_bpsk():
    sym = build_signal_symbol(146, mcs_table(2))
    assert sym.shape == (48,)
    assert np.all(np.isin(sym, [-1.0, 1.0]))


# ---------------------------------------------------------------------------
# Grid assembly
# ---------------------------------------------------------------------------

def make_frame(kind="SF", mcs_index=2, n_fb=1168, seed=93, m_p=8, fb_seed=0):
    mcs = mcs_table(mcs_index)
    fb = np.random.default_rng(fb_seed).integers(0, 2, n_fb, dtype=np.uint8)
    return encode_frame(fb, mcs, seed, kind, m_p)


def test_grid_structure():
    frame = make_frame("SF")
    grid = frame.grid
    assert grid.m_total == 35
    assert np.array_equal(grid.values[0], grid.values[1])  # identical LTs
    for m in range(2, grid.m_total):
        row = grid.values[m]
        occupied = np.flatnonzero(row != 0)
        assert occupied.size == 52
        assert grid.pilot_mask[m].sum() == 4
        assert grid.data_mask[m].sum() == 48
    # masks disjoint, null subcarriers empty
    assert not (grid.pilot_mask & grid.data_mask).any()
    assert not grid.values[:, ~np.isin(np.arange(64), OCCUPIED_BINS)].any()


def test_grid_energy():
    # QPSK frame: every occupied cell has exactly unit energy
    frame = make_frame("SF")
    grid = frame.grid
    occ = grid.occupied_mask
    assert np.mean(np.abs(grid.values[occ]) ** 2) == pytest.approx(1.0, abs=1e-9)


def test_tx_determinism():
    a = make_frame("MF", fb_seed=7)
    b = make_frame("MF", fb_seed=7)
    assert np.array_equal(a.grid.values, b.grid.values)


def test_training_symbol_boundary_state_known_from_seed():
    """The encoder state after each training termination equals the
    scrambled termination bits, predictable from (seed, PTb) alone."""
    mcs = mcs_table(2)
    for seed, fb_seed in [(93, 0), (5, 1), (127, 2)]:
        frame = make_frame("MF", seed=seed, fb_seed=fb_seed)
        layout = frame.layout
        ptb = frames.default_ptb(mcs)
        stream = scrambler_sequence(seed, frame.scrambled.size)
        for off in layout.ptb_offsets:
            term_at = N_SERV + N_MACH + off
            scr_term = ptb[:N_MEM] ^ stream[term_at : term_at + N_MEM]
            got = encoder_state_after(frame.scrambled[: term_at + N_MEM])
            assert got == encoder_state_after(scr_term)


def test_training_rows_independent_of_payload():
    """Differential test: training-row cells never depend on FB content."""
    mcs = mcs_table(2)
    rows = None
    for fb_seed in range(4):
        frame = make_frame("MF", seed=42, fb_seed=fb_seed)
        vals = frame.grid.values[frame.layout.training_rows]
        if rows is None:
            rows = vals
        else:
            assert np.array_equal(rows, vals)
    # while data rows do change
    a = make_frame("MF", seed=42, fb_seed=0).grid.values
    b = make_frame("MF", seed=42, fb_seed=1).grid.values
    assert not np.array_equal(a, b)


def test_data_unit_and_scrambling_layout():
    frame = make_frame("MF")
    layout = frame.layout
    # SERVICE advertises the modified frame and its spacing
    assert frames.parse_service_bits(frame.data_unit[:N_SERV]) == (True, 8)
    # TAIL zeroed after scrambling
    tail_at = N_SERV + 8 * layout.psdu_octets
    assert not frame.scrambled[tail_at : tail_at + N_MEM].any()


# ---------------------------------------------------------------------------
# OFDM modulation
# ---------------------------------------------------------------------------

def test_ofdm_roundtrip():
    frame = make_frame("SF")
    samples = ofdm_modulate(frame.grid.values)
    assert samples.shape == (35, 80)
    back = ofdm_demodulate(samples)
    assert np.max(np.abs(back - frame.grid.values)) < 1e-12


def test_cyclic_prefix_property():
    samples = ofdm_modulate(make_frame("SF").grid.values)
    assert np.allclose(samples[:, :16], samples[:, -16:])


def test_single_subcarrier_is_complex_exponential():
    values = np.zeros((1, 64), dtype=np.complex128)
    values[0, 5] = 1.0
    samples = ofdm_modulate(values)[0, 16:]
    n = np.arange(64)
    expected = np.exp(2j * np.pi * 5 * n / 64) / np.sqrt(64)
    assert np.allclose(samples, expected)


def test_grid_dump_roundtrip(tmp_path):
    frame = make_frame("SF")
    path = tmp_path / "grid.bin"
    dump_complex_array(path, frame.grid.values)
    assert np.array_equal(load_complex_array(path), frame.grid.values)
