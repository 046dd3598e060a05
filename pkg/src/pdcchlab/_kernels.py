"""Numba-compiled hot loops of the DCI coding chain.

The blind decoders run the tail-biting Viterbi millions of times per
comparison run, so the trellis recursion, the encoder and the CRC live
here as cached nopython kernels. Everything else in the package is plain
numpy.
"""

from __future__ import annotations

import numpy as np
from numba import njit

CONSTRAINT_LENGTH = 7
MEMORY = CONSTRAINT_LENGTH - 1
N_STATES = 1 << MEMORY
GENERATORS = (0o133, 0o171, 0o165)
CRC16_POLY = 0x1021  # x^16 + x^12 + x^5 + 1


def _build_trellis():
    """Precompute per-state output symbols of the rate-1/3 encoder.

    Register convention: reg bit 6 is the current input, bit 5 the previous
    input, ... bit 0 the input six steps ago. A generator's octal literal
    carries the tap for delay d at bit (6 - d), so output = parity(reg & g).
    """
    out_sym = np.zeros((N_STATES, 2), dtype=np.int64)
    for state in range(N_STATES):
        for u in (0, 1):
            reg = (u << MEMORY) | state
            sym = 0
            for g in GENERATORS:
                sym = (sym << 1) | (bin(reg & g).count("1") & 1)
            out_sym[state, u] = sym
    # gather form for the add-compare-select: new state ns is reached with
    # input u = ns >> 5 from predecessors p0 = (ns << 1) & 63 and p0 | 1
    pred_sym0 = np.zeros(N_STATES, dtype=np.int64)
    pred_sym1 = np.zeros(N_STATES, dtype=np.int64)
    for ns in range(N_STATES):
        u = ns >> (MEMORY - 1)
        p0 = (ns << 1) & (N_STATES - 1)
        pred_sym0[ns] = out_sym[p0, u]
        pred_sym1[ns] = out_sym[p0 | 1, u]
    return out_sym, pred_sym0, pred_sym1


OUT_SYM, PRED_SYM0, PRED_SYM1 = _build_trellis()


@njit(cache=True)
def crc16_kernel(bits):
    reg = 0
    for i in range(bits.shape[0]):
        fb = ((reg >> 15) & 1) ^ bits[i]
        reg = (reg << 1) & 0xFFFF
        if fb:
            reg ^= CRC16_POLY
    return reg


@njit(cache=True)
def conv_encode_kernel(bits, out_sym):
    """Encode tail-biting; output is stream-major: all g0 bits, then g1,
    then g2. Concatenating the three parity streams (instead of per-step
    interleaving) keeps every trellis step observable when the circular
    buffer is truncated below one full codeword."""
    n = bits.shape[0]
    enc = np.empty(3 * n, dtype=np.uint8)
    # tail-biting: seed the register with the last 6 bits (bit 5 = newest)
    state = 0
    for i in range(MEMORY):
        state |= bits[n - 1 - i] << (MEMORY - 1 - i)
    for t in range(n):
        u = bits[t]
        sym = out_sym[state, u]
        enc[t] = (sym >> 2) & 1
        enc[n + t] = (sym >> 1) & 1
        enc[2 * n + t] = sym & 1
        state = (u << (MEMORY - 1)) | (state >> 1)
    return enc


@njit(cache=True)
def viterbi_kernel(llr, n_info, pred_sym0, pred_sym1, out_sym):
    """Soft tail-biting Viterbi: two wrap-around passes of a list trellis.

    llr holds the three parity streams stream-major (g0 block, g1 block,
    g2 block); positive means the coded bit is more likely 0.

    Each state keeps its two best survivors. After every pass, all 128
    (state, slot) tracebacks are rescored with their exact tail-biting
    metric and the overall best codeword wins. A recorded path and its
    tail-biting re-encoding share every branch from step 6 on (the
    register then holds the actual bit history), so the exact metric is
    the path metric minus the initial offset plus a first-six-steps
    correction. This is an approximation of exhaustive per-start-state
    ML; it can miss rare ties between unlisted paths.

    Returns the decoded info bits and the winning tail-biting metric.
    """
    neg_inf = -1.0e300
    pm = np.zeros((N_STATES, 2), dtype=np.float64)
    for s in range(N_STATES):
        pm[s, 1] = neg_inf
    npm = np.empty((N_STATES, 2), dtype=np.float64)
    pm_init = np.empty((N_STATES, 2), dtype=np.float64)
    pstate = np.empty((n_info, N_STATES, 2), dtype=np.uint8)
    pslot = np.empty((n_info, N_STATES, 2), dtype=np.uint8)
    corr = np.empty(8, dtype=np.float64)
    cand = np.empty(n_info, dtype=np.uint8)
    states = np.empty(n_info, dtype=np.uint8)
    best_bits = np.empty(n_info, dtype=np.uint8)
    best_metric = neg_inf
    for wrap in range(2):
        for s in range(N_STATES):
            pm_init[s, 0] = pm[s, 0]
            pm_init[s, 1] = pm[s, 1]
        for t in range(n_info):
            l0 = llr[t]
            l1 = llr[n_info + t]
            l2 = llr[2 * n_info + t]
            corr[0] = l0 + l1 + l2
            corr[1] = l0 + l1 - l2
            corr[2] = l0 - l1 + l2
            corr[3] = l0 - l1 - l2
            corr[4] = -l0 + l1 + l2
            corr[5] = -l0 + l1 - l2
            corr[6] = -l0 - l1 + l2
            corr[7] = -l0 - l1 - l2
            for ns in range(N_STATES):
                p0 = (ns << 1) & (N_STATES - 1)
                p1 = p0 | 1
                b0 = corr[pred_sym0[ns]]
                b1 = corr[pred_sym1[ns]]
                m00 = pm[p0, 0] + b0
                m01 = pm[p0, 1] + b0
                m10 = pm[p1, 0] + b1
                m11 = pm[p1, 1] + b1
                # best of the four incoming, then the runner-up
                if m00 >= m10:
                    f_m, f_s, f_k = m00, p0, 0
                    r_m, r_s, r_k = m10, p1, 0
                else:
                    f_m, f_s, f_k = m10, p1, 0
                    r_m, r_s, r_k = m00, p0, 0
                if m01 >= m11:
                    q_m, q_s, q_k = m01, p0, 1
                else:
                    q_m, q_s, q_k = m11, p1, 1
                if q_m > r_m:
                    r_m, r_s, r_k = q_m, q_s, q_k
                npm[ns, 0] = f_m
                npm[ns, 1] = r_m
                pstate[t, ns, 0] = f_s
                pslot[t, ns, 0] = f_k
                pstate[t, ns, 1] = r_s
                pslot[t, ns, 1] = r_k
            tmp = pm
            pm = npm
            npm = tmp
        # rescore every survivor of this pass with its tail-biting metric
        for end in range(N_STATES):
            for slot in range(2):
                path_metric = pm[end, slot]
                if path_metric < -1.0e200:  # sentinel-seeded, no real path
                    continue
                s = end
                k = slot
                for t in range(n_info - 1, -1, -1):
                    states[t] = s
                    cand[t] = s >> (MEMORY - 1)
                    s2 = pstate[t, s, k]
                    k = pslot[t, s, k]
                    s = s2
                start_state = s
                start_slot = k
                # first-six-steps correction: recorded path used
                # start_state as its register seed, tail-biting uses the
                # last six decoded bits
                tb_state = 0
                for i in range(MEMORY):
                    tb_state |= cand[n_info - 1 - i] << (MEMORY - 1 - i)
                path_state = start_state
                delta = 0.0
                for t in range(min(MEMORY, n_info)):
                    u = cand[t]
                    sym_tb = out_sym[tb_state, u]
                    sym_path = out_sym[path_state, u]
                    if sym_tb != sym_path:
                        delta += corr_of(llr, n_info, t, sym_tb) - \
                            corr_of(llr, n_info, t, sym_path)
                    tb_state = (u << (MEMORY - 1)) | (tb_state >> 1)
                    path_state = states[t]
                metric = path_metric - pm_init[start_state, start_slot] + delta
                if metric > best_metric:
                    best_metric = metric
                    for t in range(n_info):
                        best_bits[t] = cand[t]
        peak = pm[0, 0]
        for s in range(N_STATES):
            for k in range(2):
                if pm[s, k] > peak:
                    peak = pm[s, k]
        for s in range(N_STATES):
            for k in range(2):
                pm[s, k] -= peak
    return best_bits, best_metric


@njit(cache=True, inline="always")
def corr_of(llr, n_info, t, sym):
    c = llr[t] if (sym >> 2) & 1 == 0 else -llr[t]
    c += llr[n_info + t] if (sym >> 1) & 1 == 0 else -llr[n_info + t]
    c += llr[2 * n_info + t] if sym & 1 == 0 else -llr[2 * n_info + t]
    return c


def warmup():
    """Force JIT compilation of all kernels (first call only)."""
    bits = np.zeros(8, dtype=np.uint8)
    crc16_kernel(bits)
    enc = conv_encode_kernel(bits, OUT_SYM)
    viterbi_kernel(1.0 - 2.0 * enc.astype(np.float64), 8,
                   PRED_SYM0, PRED_SYM1, OUT_SYM)
