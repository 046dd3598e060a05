"""Codec chain tests against independent oracles.

The oracles here are deliberately written in a different style from the
package code (pure-Python bit lists, explicit long division / shift
registers / exhaustive search) so they cannot share a bug with it.
"""

import numpy as np
import pytest

from pdcchlab import codec
from pdcchlab.codec import (
    CodecConfig,
    conv_encode,
    crc16,
    decode_dci,
    encode_dci,
    rate_match,
    rate_recover,
    scramble_crc,
    viterbi_decode,
)


# ---------------------------------------------------------------------------
# oracles


def crc16_long_division(bits):
    """CRC-16-CCITT as explicit GF(2) polynomial long division."""
    divisor = [1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1]
    work = list(int(b) for b in bits) + [0] * 16
    for i in range(len(bits)):
        if work[i]:
            for j, d in enumerate(divisor):
                work[i + j] ^= d
    return int("".join(str(b) for b in work[-16:]), 2)


def conv_encode_shift_register(bits):
    """Tail-biting rate-1/3 encoder as an explicit shift-register walk.

    The register is a plain list [u(t-1), ..., u(t-6)], seeded with the
    last six input bits so the start and end states coincide. The three
    parity streams come back concatenated (g0 block, g1 block, g2 block).
    """
    taps = {
        0o133: [0, 2, 3, 5, 6],     # 1011011
        0o171: [0, 1, 2, 3, 6],     # 1111001
        0o165: [0, 1, 2, 4, 6],     # 1110101
    }
    bits = [int(b) for b in bits]
    reg = [bits[-1], bits[-2], bits[-3], bits[-4], bits[-5], bits[-6]]
    streams = {g: [] for g in taps}
    for u in bits:
        window = [u] + reg  # window[d] = input d steps ago
        for g in (0o133, 0o171, 0o165):
            acc = 0
            for d in taps[g]:
                acc ^= window[d]
            streams[g].append(acc)
        reg = [u] + reg[:-1]
    return streams[0o133] + streams[0o171] + streams[0o165]


_ORACLE_BOOKS: dict = {}


def _oracle_codebook(n_info):
    """All 2**n_info tail-biting codewords as +/-1 rows, built from the
    shift-register oracle (not the package encoder)."""
    if n_info not in _ORACLE_BOOKS:
        book = np.empty((1 << n_info, 3 * n_info))
        for msg in range(1 << n_info):
            bits = [(msg >> (n_info - 1 - i)) & 1 for i in range(n_info)]
            enc = np.array(conv_encode_shift_register(bits), dtype=np.float64)
            book[msg] = 1.0 - 2.0 * enc
        _ORACLE_BOOKS[n_info] = book
    return _ORACLE_BOOKS[n_info]


def ml_tailbiting_oracle(llr, n_info):
    """Exhaustive maximum-likelihood decode over all 2**n_info codewords."""
    best = int(np.argmax(_oracle_codebook(n_info) @ llr))
    return np.array([(best >> (n_info - 1 - i)) & 1 for i in range(n_info)],
                    dtype=np.uint8)


# ---------------------------------------------------------------------------
# crc16 / scramble_crc


def test_crc16_all_zero_payload():
    assert crc16(np.zeros(28, dtype=np.uint8)) == 0x0000


def test_crc16_impulse_payload_matches_long_division():
    payload = np.zeros(28, dtype=np.uint8)
    payload[0] = 1
    expected = crc16_long_division(payload)
    assert expected == 0x85C3  # frozen from the oracle
    assert crc16(payload) == expected


def test_crc16_known_vector_xmodem():
    # "123456789" under poly 0x1021 / zero init is the classic 0x31C3
    bits = []
    for ch in b"123456789":
        bits.extend((ch >> k) & 1 for k in range(7, -1, -1))
    assert crc16(np.array(bits, dtype=np.uint8)) == 0x31C3


def test_crc16_random_payloads_match_long_division():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(1, 64))
        payload = rng.integers(0, 2, n).astype(np.uint8)
        assert crc16(payload) == crc16_long_division(payload)


def test_crc16_deterministic():
    rng = np.random.default_rng(3)
    p = rng.integers(0, 2, 28).astype(np.uint8)
    assert crc16(p) == crc16(p)


def test_crc16_rejects_empty_payload():
    with pytest.raises(ValueError):
        crc16(np.zeros(0, dtype=np.uint8))


def test_scramble_crc_identity_and_complement():
    assert scramble_crc(0xABCD, 0x0000) == 0xABCD
    assert scramble_crc(0xABCD, 0xFFFF) == 0x5432


def test_scramble_crc_involution():
    rng = np.random.default_rng(11)
    for _ in range(100):
        c = int(rng.integers(0, 1 << 16))
        r = int(rng.integers(0, 1 << 16))
        assert scramble_crc(scramble_crc(c, r), r) == c


# ---------------------------------------------------------------------------
# conv_encode


def test_conv_encode_all_zero_input():
    out = conv_encode(np.zeros(44, dtype=np.uint8))
    assert out.size == 132
    assert not out.any()


def test_conv_encode_rate_one_third():
    rng = np.random.default_rng(5)
    for n in (6, 17, 44, 60):
        bits = rng.integers(0, 2, n).astype(np.uint8)
        assert conv_encode(bits).size == 3 * n


def test_conv_encode_impulse_matches_shift_register_oracle():
    for pos in (0, 10, 43):
        bits = np.zeros(44, dtype=np.uint8)
        bits[pos] = 1
        expected = conv_encode_shift_register(bits)
        assert conv_encode(bits).tolist() == expected


def test_conv_encode_random_matches_shift_register_oracle():
    rng = np.random.default_rng(13)
    for _ in range(100):
        n = int(rng.integers(6, 64))
        bits = rng.integers(0, 2, n).astype(np.uint8)
        assert conv_encode(bits).tolist() == conv_encode_shift_register(bits)


def test_conv_encode_rejects_short_input():
    with pytest.raises(ValueError):
        conv_encode(np.ones(5, dtype=np.uint8))


# ---------------------------------------------------------------------------
# rate_match / rate_recover


def test_rate_match_wraps_short_block():
    enc = np.arange(60, dtype=np.uint8) % 2
    out = rate_match(enc, 1)
    assert out.size == 72
    assert np.array_equal(out[:60], enc)
    assert np.array_equal(out[60:], enc[:12])


def test_rate_match_repeats_full_copies():
    rng = np.random.default_rng(17)
    enc = rng.integers(0, 2, 132).astype(np.uint8)
    out = rate_match(enc, 4)
    assert out.size == 288
    assert np.array_equal(out[132:264], out[:132])
    assert np.array_equal(out[264:], enc[: 288 - 264])


def test_rate_match_exact_fit():
    rng = np.random.default_rng(19)
    enc = rng.integers(0, 2, 144).astype(np.uint8)
    out = rate_match(enc, 2)
    assert np.array_equal(out, enc)


def test_rate_match_rejects_bad_level():
    with pytest.raises(ValueError):
        rate_match(np.ones(12, dtype=np.uint8), 3)


def test_rate_recover_identity():
    soft = np.full(72, 4.0)
    out = rate_recover(soft, 72)
    assert np.allclose(out, 4.0)


def test_rate_recover_accumulates_copies():
    soft = np.full(144, 1.0)
    out = rate_recover(soft, 72)
    assert np.allclose(out, 2.0)


def test_rate_recover_erasure_fill():
    # shortened half-location: 72 soft values against a 132-bit codeword
    soft = np.full(72, 1.5)
    out = rate_recover(soft, 132)
    assert np.allclose(out[:72], 1.5)
    assert np.allclose(out[72:], 0.0)


def test_rate_match_then_recover_preserves_sign():
    rng = np.random.default_rng(23)
    for L in (1, 2, 4, 8):
        enc = rng.integers(0, 2, 132).astype(np.uint8)
        tx = rate_match(enc, L)
        soft = 1.0 - 2.0 * tx.astype(np.float64)
        rec = rate_recover(soft, 132)
        seen = min(72 * L, 132)
        assert np.array_equal(np.signbit(rec[:seen]), enc[:seen].astype(bool))


def test_rate_recover_rejects_bad_lengths():
    with pytest.raises(ValueError):
        rate_recover(np.ones(70), 132)
    with pytest.raises(ValueError):
        rate_recover(np.ones(72), 0)


# ---------------------------------------------------------------------------
# viterbi_decode


def _noiseless_llr(bits):
    return 4.0 * (1.0 - 2.0 * bits.astype(np.float64))


def test_viterbi_noiseless_roundtrip():
    rng = np.random.default_rng(29)
    for _ in range(50):
        info = rng.integers(0, 2, 44).astype(np.uint8)
        dec = viterbi_decode(_noiseless_llr(conv_encode(info)), 28)
        assert np.array_equal(dec, info)


def test_viterbi_exhaustive_small_k_roundtrip():
    # every 10-bit message survives encode->decode noiselessly
    for msg in range(1 << 10):
        info = np.array([(msg >> (9 - i)) & 1 for i in range(10)], dtype=np.uint8)
        dec = viterbi_decode(_noiseless_llr(conv_encode(info)), 10, crc_bits=0)
        assert np.array_equal(dec, info)


def test_viterbi_matches_exhaustive_ml_oracle_at_0db():
    rng = np.random.default_rng(31)
    n_info = 12
    agree = 0
    trials = 1000
    for _ in range(trials):
        info = rng.integers(0, 2, n_info).astype(np.uint8)
        enc = conv_encode(info)
        llr = (1.0 - 2.0 * enc.astype(np.float64)) + rng.normal(0.0, 1.0, enc.size)
        ours = viterbi_decode(llr, n_info, crc_bits=0)
        oracle = ml_tailbiting_oracle(llr, n_info)
        agree += int(np.array_equal(ours, oracle))
    assert agree >= 0.99 * trials


def test_viterbi_rejects_length_mismatch():
    with pytest.raises(ValueError):
        viterbi_decode(np.ones(100), 28)


# ---------------------------------------------------------------------------
# encode_dci / decode_dci


def test_encode_dci_output_length():
    rng = np.random.default_rng(37)
    payload = rng.integers(0, 2, 28).astype(np.uint8)
    for L in (1, 2, 4, 8):
        assert encode_dci(payload, 0x1234, L).size == 72 * L


def test_encode_dci_same_payload_distinct_rntis_differ():
    payload = np.zeros(28, dtype=np.uint8)
    a = encode_dci(payload, 0x0F0F, 2)
    b = encode_dci(payload, 0x1234, 2)
    assert not np.array_equal(a, b)


def test_dci_roundtrip_noiseless():
    rng = np.random.default_rng(41)
    for L in (1, 2, 4, 8):
        for _ in range(25):
            payload = rng.integers(0, 2, 28).astype(np.uint8)
            rnti = int(rng.integers(1, 1 << 16))
            tx = encode_dci(payload, rnti, L)
            soft = 1.0 - 2.0 * tx.astype(np.float64)
            got_payload, got_rnti = decode_dci(soft, 28)
            assert np.array_equal(got_payload, payload)
            assert got_rnti == rnti


def test_crc_detects_any_single_payload_bit_flip():
    rng = np.random.default_rng(43)
    payload = rng.integers(0, 2, 28).astype(np.uint8)
    rnti = 0x2B67
    tx = encode_dci(payload, rnti, 2)
    soft = 1.0 - 2.0 * tx.astype(np.float64)
    _, good_rnti = decode_dci(soft, 28)
    assert good_rnti == rnti
    for pos in range(28):
        corrupt = payload.copy()
        corrupt[pos] ^= 1
        # a corrupted payload with the original CRC maps to a wrong RNTI
        crc = scramble_crc(crc16(payload), rnti)
        derived = scramble_crc(crc16(corrupt), crc)
        assert derived != rnti


def test_shortcut_enabler_half_location_decodes_identically():
    # with a 132-bit codeword the first 36*L soft values hold a full copy
    # for L in {4, 8}, so a half-location decode recovers the same bits
    rng = np.random.default_rng(47)
    for L in (4, 8):
        payload = rng.integers(0, 2, 28).astype(np.uint8)
        rnti = int(rng.integers(1, 1 << 16))
        tx = encode_dci(payload, rnti, L)
        soft = 1.0 - 2.0 * tx.astype(np.float64)
        half = soft[: 36 * L]
        got_payload, got_rnti = decode_dci(half, 28)
        assert np.array_equal(got_payload, payload)
        assert got_rnti == rnti


def test_codec_config_validation():
    with pytest.raises(ValueError):
        CodecConfig(constraint_length=5)
    with pytest.raises(ValueError):
        CodecConfig(cce_bits=36)
    with pytest.raises(ValueError):
        CodecConfig(generators=(0o133, 0o171))
