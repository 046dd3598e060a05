import numpy as np
import pytest

from pdcchlab.dci import (
    DciFormat,
    RntiClass,
    build_grant_payload,
    build_rar_payload,
    classify_rnti,
    parse_grant_payload,
    parse_rar_payload,
    riv_decode,
    riv_encode,
)


def test_rnti_classes_disjoint_and_total():
    counts = {cls: 0 for cls in RntiClass}
    for v in range(0x10000):
        counts[classify_rnti(v)] += 1
    assert counts[RntiClass.SI] == 1
    assert counts[RntiClass.PAGING] == 1
    assert counts[RntiClass.RA] == 10
    assert counts[RntiClass.C] == 0xFFF3 - 0x003D + 1
    assert sum(counts.values()) == 0x10000


def test_rnti_class_landmarks():
    assert classify_rnti(0xFFFF) is RntiClass.SI
    assert classify_rnti(0xFFFE) is RntiClass.PAGING
    assert classify_rnti(0x0001) is RntiClass.RA
    assert classify_rnti(0x000A) is RntiClass.RA
    assert classify_rnti(0x003D) is RntiClass.C
    assert classify_rnti(0x0000) is RntiClass.RESERVED
    assert classify_rnti(0x0010) is RntiClass.RESERVED
    assert classify_rnti(0xFFF4) is RntiClass.RESERVED


def test_riv_roundtrip_exhaustive_50_rb():
    n_rb = 50
    seen = set()
    for rb_len in range(1, n_rb + 1):
        for rb_start in range(0, n_rb - rb_len + 1):
            riv = riv_encode(rb_start, rb_len, n_rb)
            assert riv not in seen  # injective
            seen.add(riv)
            assert riv < (1 << 12)
            start, length, valid = riv_decode(riv, n_rb)
            assert valid
            assert (start, length) == (rb_start, rb_len)


def test_riv_decode_flags_illegal_values():
    n_rb = 50
    legal = {riv_encode(s, l, n_rb)
             for l in range(1, n_rb + 1) for s in range(0, n_rb - l + 1)}
    invalid = [riv for riv in range(1 << 12) if riv not in legal]
    assert invalid  # spurious DCIs can carry illegal allocations
    for riv in invalid[:200]:
        _, _, valid = riv_decode(riv, n_rb)
        assert not valid


def test_riv_encode_rejects_out_of_range():
    with pytest.raises(ValueError):
        riv_encode(45, 10, 50)
    with pytest.raises(ValueError):
        riv_encode(0, 0, 50)


def test_grant_payload_roundtrip():
    for fmt in DciFormat:
        for riv in (0, 1, 137, 2499, 4095):
            payload = build_grant_payload(fmt, riv, 28)
            assert payload.size == 28
            got_fmt, got_riv = parse_grant_payload(payload)
            assert got_fmt is fmt
            assert got_riv == riv
    assert build_grant_payload(DciFormat.UL_GRANT, 9, 28)[0] == 0
    assert build_grant_payload(DciFormat.DL_GRANT, 9, 28)[0] == 1


def test_grant_payload_padding_is_zero():
    payload = build_grant_payload(DciFormat.DL_GRANT, 4095, 28)
    assert not payload[13:].any()


def test_rar_payload_roundtrip():
    for crnti in (0x003D, 0x1234, 0xFFF3):
        payload = build_rar_payload(crnti, 28)
        assert payload.size == 28
        assert parse_rar_payload(payload) == crnti
        assert not payload[16:].any()
