"""Numba kernels for the entropy coders and block recovery.

Everything here is deliberately plain integer array code: the byte-exact
behaviour of the range coder and the recovery order of the predictor are
part of the on-image format, so these loops avoid anything whose result
could vary between platforms.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_TOP = 1 << 24
_MASK32 = 0xFFFFFFFF


@njit(cache=True)
def rc_encode(symbols, cum, out):
    """Range-encode symbols under cumulative counts; returns bytes written.

    32-bit low/range registers, byte-at-a-time renormalization with carry
    propagation, and a 5-byte terminal flush.  The caller strips trailing
    zero bytes afterwards; the decoder zero-pads, so stripping is lossless.
    """
    low = np.int64(0)
    rng = np.int64(_MASK32)
    cache = np.int64(0)
    cache_size = np.int64(1)
    pos = 0
    total = cum[cum.shape[0] - 1]
    for i in range(symbols.shape[0]):
        s = symbols[i]
        r = rng // total
        low += r * cum[s]
        rng = r * (cum[s + 1] - cum[s])
        while rng < _TOP:
            if low < 0xFF000000 or low > _MASK32:
                carry = low >> 32
                out[pos] = (cache + carry) & 0xFF
                pos += 1
                while cache_size > 1:
                    out[pos] = (0xFF + carry) & 0xFF
                    pos += 1
                    cache_size -= 1
                cache = (low >> 24) & 0xFF
                cache_size = 0
            cache_size += 1
            low = (low << 8) & _MASK32
            rng <<= 8
    for _ in range(5):
        if low < 0xFF000000 or low > _MASK32:
            carry = low >> 32
            out[pos] = (cache + carry) & 0xFF
            pos += 1
            while cache_size > 1:
                out[pos] = (0xFF + carry) & 0xFF
                pos += 1
                cache_size -= 1
            cache = (low >> 24) & 0xFF
            cache_size = 0
        cache_size += 1
        low = (low << 8) & _MASK32
    return pos


@njit(cache=True)
def rc_decode(data, cum, out):
    """Decode out.shape[0] symbols from range-coded bytes (zero-padded)."""
    total = cum[cum.shape[0] - 1]
    m = cum.shape[0] - 1
    n_data = data.shape[0]
    pos = 1  # the first byte is the encoder's dummy cache byte
    code = np.int64(0)
    for _ in range(4):
        b = np.int64(data[pos]) if pos < n_data else np.int64(0)
        code = ((code << 8) | b) & _MASK32
        pos += 1
    rng = np.int64(_MASK32)
    for t in range(out.shape[0]):
        r = rng // total
        v = code // r
        if v > total - 1:
            v = total - 1
        lo = 0
        hi = m + 1
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if cum[mid] <= v:
                lo = mid
            else:
                hi = mid
        s = lo
        out[t] = s
        code -= r * cum[s]
        rng = r * (cum[s + 1] - cum[s])
        while rng < _TOP:
            b = np.int64(data[pos]) if pos < n_data else np.int64(0)
            code = ((code << 8) | b) & _MASK32
            rng <<= 8
            pos += 1
    return 0


@njit(cache=True)
def huffman_decode(bits, start, table_sym, table_len, out):
    """Table-driven prefix decode of out.shape[0] codewords.

    Peeks 8 bits (zero-padded past the end), looks the prefix up in the
    256-entry table, and advances by the codeword length.  Returns the bit
    position after the last codeword, or -1 on an invalid prefix, or -2 if
    a codeword would run past the end of the bit array.
    """
    pos = start
    nb = bits.shape[0]
    for t in range(out.shape[0]):
        v = 0
        for k in range(8):
            v <<= 1
            if pos + k < nb:
                v |= bits[pos + k]
        length = table_len[v]
        if length == 0:
            return -1
        if pos + length > nb:
            return -2
        out[t] = table_sym[v]
        pos += length
    return pos


@njit(cache=True)
def huffman_lengths_sorted(weights):
    """Unconstrained optimal code lengths for ascending-sorted weights.

    Two-queue Huffman construction: O(n), ties resolved in favour of
    leaves so the result is deterministic.
    """
    n = weights.shape[0]
    lengths = np.zeros(n, dtype=np.int64)
    if n == 1:
        lengths[0] = 1
        return lengths
    node_w = np.empty(2 * n - 1, dtype=np.int64)
    left = np.empty(2 * n - 1, dtype=np.int64)
    right = np.empty(2 * n - 1, dtype=np.int64)
    for i in range(n):
        node_w[i] = weights[i]
        left[i] = -1
        right[i] = -1
    leaf_at = 0
    internal_at = n
    next_node = n
    for _ in range(n - 1):
        # pick the two smallest among queue fronts, leaves first on ties
        picks = np.empty(2, dtype=np.int64)
        for j in range(2):
            take_leaf = False
            if leaf_at < n and internal_at < next_node:
                take_leaf = node_w[leaf_at] <= node_w[internal_at]
            elif leaf_at < n:
                take_leaf = True
            if take_leaf:
                picks[j] = leaf_at
                leaf_at += 1
            else:
                picks[j] = internal_at
                internal_at += 1
        node_w[next_node] = node_w[picks[0]] + node_w[picks[1]]
        left[next_node] = picks[0]
        right[next_node] = picks[1]
        next_node += 1
    depth = np.zeros(2 * n - 1, dtype=np.int64)
    for node in range(2 * n - 2, n - 1, -1):
        depth[left[node]] = depth[node] + 1
        depth[right[node]] = depth[node] + 1
    for i in range(n):
        lengths[i] = depth[i]
    return lengths


@njit(cache=True)
def package_merge_sorted(weights, limit):
    """Optimal length-limited code lengths for ascending-sorted weights.

    Package-merge (coin collector).  Requires 2**limit >= n; the all -1
    result signals an infeasible call.
    """
    n = weights.shape[0]
    lengths = np.zeros(n, dtype=np.int64)
    if n == 1:
        lengths[0] = 1
        return lengths
    if (np.int64(1) << limit) < n:
        return lengths - 1
    cap = 2 * n
    wts = np.empty((limit, cap), dtype=np.int64)
    tags = np.empty((limit, cap), dtype=np.int64)  # >= 0 leaf id, < 0 ~package
    counts = np.zeros(limit, dtype=np.int64)
    for i in range(n):
        wts[0, i] = weights[i]
        tags[0, i] = i
    counts[0] = n
    for lev in range(1, limit):
        prev_cnt = counts[lev - 1]
        npk = prev_cnt // 2
        ii = 0
        jj = 0
        kk = 0
        while ii < n or jj < npk:
            if jj >= npk:
                take_leaf = True
            elif ii >= n:
                take_leaf = False
            else:
                pw = wts[lev - 1, 2 * jj] + wts[lev - 1, 2 * jj + 1]
                take_leaf = weights[ii] <= pw
            if take_leaf:
                wts[lev, kk] = weights[ii]
                tags[lev, kk] = ii
                ii += 1
            else:
                wts[lev, kk] = wts[lev - 1, 2 * jj] + wts[lev - 1, 2 * jj + 1]
                tags[lev, kk] = ~jj
                jj += 1
            kk += 1
        counts[lev] = kk
    top = limit - 1
    need = 2 * (n - 1)
    if need > counts[top]:
        return lengths - 1
    stack = np.empty(4 * limit + 8, dtype=np.int64)
    for item in range(need):
        sp = 0
        stack[sp] = top * cap + item
        sp += 1
        while sp > 0:
            sp -= 1
            packed = stack[sp]
            lev = packed // cap
            idx = packed % cap
            tag = tags[lev, idx]
            if tag >= 0:
                lengths[tag] += 1
            else:
                j = ~tag
                stack[sp] = (lev - 1) * cap + 2 * j
                stack[sp + 1] = (lev - 1) * cap + 2 * j + 1
                sp += 2
    return lengths


@njit(cache=True)
def recover_blocks(blocks, tag, tj, tk, aj, ak, bj, bk, cj, ck, joint, val):
    """Rebuild block pixels in canonical order from errors and literals.

    blocks: (m, n1, n2) int64, reference pixel pre-filled, everything else
    ignored on entry.  tag[t] == 0 means copy prediction (source in a),
    tag[t] == 1 means MED from (a, b, c).  joint[x, t] != 0 marks a literal
    in val; otherwise val holds the prediction error.  Returns -1 on
    success or the index of the first block whose recovered pixel falls
    outside [0, 255] (a corruption symptom).
    """
    m = blocks.shape[0]
    n = tj.shape[0]
    for x in range(m):
        for t in range(n):
            if joint[x, t] != 0:
                y = val[x, t]
            else:
                if tag[t] == 0:
                    py = blocks[x, aj[t], ak[t]]
                else:
                    a = blocks[x, aj[t], ak[t]]
                    b = blocks[x, bj[t], bk[t]]
                    c = blocks[x, cj[t], ck[t]]
                    if b < c:
                        mn, mx = b, c
                    else:
                        mn, mx = c, b
                    if a <= mn:
                        py = mx
                    elif a >= mx:
                        py = mn
                    else:
                        py = b + c - a
                y = val[x, t] + py
                if y < 0 or y > 255:
                    return x
            blocks[x, tj[t], tk[t]] = y
    return -1
