"""DCI field-level definitions: RNTI classes, allocation encoding, payloads.

The simplified DCI body is a fixed-size bit vector (28 bits by default):
a leading direction flag, a 12-bit resource indication value for the
contiguous RB allocation, and zero padding. DCIs addressed to a random
access RNTI instead carry the newly assigned C-RNTI in the first 16 bits.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

SI_RNTI = 0xFFFF
P_RNTI = 0xFFFE
RA_RNTI_FIRST, RA_RNTI_LAST = 0x0001, 0x000A
C_RNTI_FIRST, C_RNTI_LAST = 0x003D, 0xFFF3

RIV_BITS = 12  # covers cells up to 64 RBs


class RntiClass(Enum):
    SI = "si"
    PAGING = "paging"
    RA = "ra"
    C = "c"
    RESERVED = "reserved"


class DciFormat(Enum):
    """Wire formats; the leading payload bit distinguishes them."""

    UL_GRANT = "ul_grant"
    DL_GRANT = "dl_grant"


def classify_rnti(value: int) -> RntiClass:
    if not 0 <= value <= 0xFFFF:
        raise ValueError(f"RNTI {value:#x} out of 16-bit range")
    if value == SI_RNTI:
        return RntiClass.SI
    if value == P_RNTI:
        return RntiClass.PAGING
    if RA_RNTI_FIRST <= value <= RA_RNTI_LAST:
        return RntiClass.RA
    if C_RNTI_FIRST <= value <= C_RNTI_LAST:
        return RntiClass.C
    return RntiClass.RESERVED


def riv_encode(rb_start: int, rb_len: int, n_rb: int) -> int:
    """Type-2 contiguous resource indication value."""
    if rb_len < 1 or rb_start < 0 or rb_start + rb_len > n_rb:
        raise ValueError(f"allocation ({rb_start},{rb_len}) exceeds {n_rb} RBs")
    if rb_len - 1 <= n_rb // 2:
        return n_rb * (rb_len - 1) + rb_start
    return n_rb * (n_rb - rb_len + 1) + (n_rb - 1 - rb_start)


def riv_decode(riv: int, n_rb: int) -> tuple[int, int, bool]:
    """Invert the type-2 encoding.

    Returns (rb_start, rb_len, valid). Arbitrary 12-bit values decoded from
    spurious DCI frequently map onto no legal allocation; those come back
    with valid=False and the primary-form fields for reporting.
    """
    len1 = riv // n_rb + 1
    start1 = riv % n_rb
    if len1 - 1 <= n_rb // 2 and start1 + len1 <= n_rb:
        return start1, len1, True
    len2 = n_rb - riv // n_rb + 1
    start2 = n_rb - 1 - riv % n_rb
    if len2 - 1 > n_rb // 2 and 0 <= start2 and start2 + len2 <= n_rb:
        return start2, len2, True
    return start1, len1, False


def _int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)],
                    dtype=np.uint8)


def _bits_to_int(bits: np.ndarray) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def build_grant_payload(fmt: DciFormat, riv: int, payload_len: int) -> np.ndarray:
    """[direction flag][12-bit RIV][zero padding]."""
    if payload_len < 1 + RIV_BITS:
        raise ValueError("payload too small for flag + RIV")
    if not 0 <= riv < (1 << RIV_BITS):
        raise ValueError(f"RIV {riv} exceeds {RIV_BITS} bits")
    payload = np.zeros(payload_len, dtype=np.uint8)
    payload[0] = 1 if fmt is DciFormat.DL_GRANT else 0
    payload[1:1 + RIV_BITS] = _int_to_bits(riv, RIV_BITS)
    return payload


def parse_grant_payload(payload: np.ndarray) -> tuple[DciFormat, int]:
    fmt = DciFormat.DL_GRANT if payload[0] else DciFormat.UL_GRANT
    return fmt, _bits_to_int(payload[1:1 + RIV_BITS])


def build_rar_payload(crnti: int, payload_len: int) -> np.ndarray:
    """[16-bit assigned C-RNTI][zero padding]."""
    if payload_len < 16:
        raise ValueError("payload too small for an RNTI assignment")
    payload = np.zeros(payload_len, dtype=np.uint8)
    payload[:16] = _int_to_bits(crnti, 16)
    return payload


def parse_rar_payload(payload: np.ndarray) -> int:
    return _bits_to_int(payload[:16])
