"""Bit-exact DCI channel coding chain and its soft-decision inverse.

Forward direction: CRC-16 attachment scrambled by the addressee's RNTI,
tail-biting rate-1/3 convolutional encoding (K=7, generators 133/171/165
octal), and circular-buffer rate matching into L consecutive CCEs of 72
bits each. Reverse direction: circular soft-combining back to codeword
length and a two-pass wrap-around Viterbi decode.

The codeword is laid out stream-major (the g0 parity block, then g1,
then g2). When an aggregation level truncates the circular buffer below
one full codeword, that order still leaves every trellis step observable
through the complete g0 stream, so shortened locations stay decodable.

All functions are pure; payloads and coded blocks are numpy arrays of
0/1 (uint8), soft values are real log-likelihood-ratio-like floats where
positive means "bit 0 more likely".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _kernels
from ._kernels import OUT_SYM, PRED_SYM0, PRED_SYM1

CCE_BITS = 72
CRC_BITS = 16
MAX_PAYLOAD_BITS = 128
AGGREGATION_LEVELS = (1, 2, 4, 8)
DEFAULT_PAYLOAD_BITS = 28


@dataclass(frozen=True)
class CodecConfig:
    """Coding parameters; defaults follow the LTE control-channel chain."""

    constraint_length: int = 7
    generators: tuple[int, ...] = (0o133, 0o171, 0o165)
    cce_bits: int = CCE_BITS
    # payload bits by (format name, downlink resource blocks); a single
    # 28-bit size for both simulated formats at the default 50-PRB cell
    payload_size_table: Mapping[tuple[str, int], int] = field(
        default_factory=lambda: {
            ("ul_grant", 50): DEFAULT_PAYLOAD_BITS,
            ("dl_grant", 50): DEFAULT_PAYLOAD_BITS,
        }
    )

    def __post_init__(self):
        if self.constraint_length != 7:
            raise ValueError("constraint length is fixed at 7")
        if self.cce_bits != CCE_BITS:
            raise ValueError("a CCE carries exactly 72 bits")
        if len(self.generators) != 3:
            raise ValueError("exactly 3 generator polynomials required")

    def payload_size(self, fmt: str = "dl_grant", n_rb: int = 50) -> int:
        return self.payload_size_table[(fmt, n_rb)]


DEFAULT_CODEC = CodecConfig()


def _as_bits(payload) -> np.ndarray:
    bits = np.ascontiguousarray(payload, dtype=np.uint8)
    if bits.ndim != 1:
        raise ValueError("payload must be a 1-D bit sequence")
    return bits


def crc16(payload) -> int:
    """CRC-16-CCITT (poly 0x1021, zero initial state) of a bit sequence."""
    bits = _as_bits(payload)
    if bits.size == 0:
        raise ValueError("payload must be non-empty")
    if bits.size > MAX_PAYLOAD_BITS:
        raise ValueError("payload exceeds the 128-bit sanity bound")
    return int(_kernels.crc16_kernel(bits))


def scramble_crc(crc: int, rnti: int) -> int:
    """XOR-scramble a 16-bit checksum with a 16-bit identity (self-inverse)."""
    return (crc ^ rnti) & 0xFFFF


def conv_encode(bits, cfg: CodecConfig = DEFAULT_CODEC) -> np.ndarray:
    """Tail-biting convolutional encode at rate 1/3.

    The encoder register is seeded with the last six input bits, so the
    trellis start and end states coincide and no tail is appended.
    """
    data = _as_bits(bits)
    if data.size < cfg.constraint_length - 1:
        raise ValueError("input shorter than the encoder memory (6 bits)")
    return _kernels.conv_encode_kernel(data, OUT_SYM)


def rate_match(encoded, level: int) -> np.ndarray:
    """Circularly write a codeword into ``level`` CCEs (72*level bits)."""
    if level not in AGGREGATION_LEVELS:
        raise ValueError(f"aggregation level must be one of {AGGREGATION_LEVELS}")
    enc = _as_bits(encoded)
    if enc.size == 0:
        raise ValueError("encoded sequence must be non-empty")
    n_out = CCE_BITS * level
    reps = -(-n_out // enc.size)
    return np.tile(enc, reps)[:n_out]


def rate_recover(soft, encoded_len: int) -> np.ndarray:
    """Sum circular copies back onto codeword positions.

    Positions that never got a copy (shortened blocks) stay 0.0, which the
    Viterbi treats as an erasure.
    """
    if encoded_len <= 0:
        raise ValueError("encoded length must be positive")
    values = np.asarray(soft, dtype=np.float64).ravel()
    if values.size == 0 or values.size % CCE_BITS:
        raise ValueError("soft block length must be a positive multiple of 72")
    out = np.zeros(encoded_len)
    whole = values.size // encoded_len
    if whole:
        out += values[: whole * encoded_len].reshape(whole, encoded_len).sum(axis=0)
    tail = values.size - whole * encoded_len
    if tail:
        out[:tail] += values[whole * encoded_len:]
    return out


def viterbi_decode(soft, payload_len: int, cfg: CodecConfig = DEFAULT_CODEC,
                   crc_bits: int = CRC_BITS) -> np.ndarray:
    """Maximum-likelihood tail-biting decode of a rate-recovered block.

    Returns the ``payload_len + crc_bits`` info bits; the CRC region comes
    back raw (still scrambled). Deterministic for identical input.
    """
    n_info = payload_len + crc_bits
    values = np.ascontiguousarray(soft, dtype=np.float64)
    if values.size != 3 * n_info:
        raise ValueError(f"soft length {values.size} != 3*{n_info}")
    bits, _ = _kernels.viterbi_kernel(values, n_info, PRED_SYM0, PRED_SYM1, OUT_SYM)
    return bits


def viterbi_decode_with_metric(soft, payload_len: int,
                               crc_bits: int = CRC_BITS):
    n_info = payload_len + crc_bits
    values = np.ascontiguousarray(soft, dtype=np.float64)
    if values.size != 3 * n_info:
        raise ValueError(f"soft length {values.size} != 3*{n_info}")
    return _kernels.viterbi_kernel(values, n_info, PRED_SYM0, PRED_SYM1, OUT_SYM)


def crc_to_bits(value: int) -> np.ndarray:
    return np.array([(value >> (15 - i)) & 1 for i in range(16)], dtype=np.uint8)


def bits_to_crc(bits) -> int:
    value = 0
    for b in np.asarray(bits, dtype=np.uint8):
        value = (value << 1) | int(b)
    return value & 0xFFFF


def encode_dci(payload, rnti: int, level: int,
               cfg: CodecConfig = DEFAULT_CODEC) -> np.ndarray:
    """Full forward chain: crc16 -> scramble -> append -> encode -> match."""
    bits = _as_bits(payload)
    crc = scramble_crc(crc16(bits), rnti)
    info = np.concatenate([bits, crc_to_bits(crc)])
    return rate_match(conv_encode(info, cfg), level)


def decode_dci(soft, payload_len: int,
               cfg: CodecConfig = DEFAULT_CODEC) -> tuple[np.ndarray, int]:
    """Inverse chain on one candidate's soft bits.

    The soft block may be any positive multiple of 72 values (a full
    location or a shortened half-location). Returns the decoded payload and
    the RNTI implied by descrambling the received CRC with the payload's
    own checksum; by construction a correct decode of a DCI addressed to r
    returns exactly r.
    """
    combined = rate_recover(soft, 3 * (payload_len + CRC_BITS))
    info = viterbi_decode(combined, payload_len, cfg)
    payload = info[:payload_len]
    rnti = scramble_crc(crc16(payload), bits_to_crc(info[payload_len:]))
    return payload, rnti
