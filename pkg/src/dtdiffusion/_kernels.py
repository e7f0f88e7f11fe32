"""Numba kernels for the random walks and the exact-expectation propagation."""

import numpy as np
from numba import njit, uint64

_GOLDEN = uint64(0x9E3779B97F4A7C15)
_MIX1 = uint64(0xBF58476D1CE4E5B9)
_MIX2 = uint64(0x94D049BB133111EB)


@njit(cache=True, nogil=True)
def mix64(z):
    z = uint64(z)
    z = (z ^ (z >> uint64(30))) * _MIX1
    z = (z ^ (z >> uint64(27))) * _MIX2
    return z ^ (z >> uint64(31))


@njit(cache=True, nogil=True)
def _stream_state(seed, key):
    # counter-based: the start state of stream `key` is a hash of (seed, key)
    return mix64(uint64(seed) ^ mix64(uint64(key) + _GOLDEN))


_LOW32 = uint64(0xFFFFFFFF)
_TWO32 = uint64(1) << uint64(32)


@njit(cache=True, nogil=True)
def _uniform_below(state, bound):
    """Unbiased integer in [0, bound) for bound < 2**32; returns (value, new_state).

    Multiply-shift with rejection (Lemire); the division only runs on the
    rare candidate rejection path.
    """
    b = uint64(bound)
    state = state + _GOLDEN
    m = (mix64(state) >> uint64(32)) * b
    low = m & _LOW32
    if low < b:
        thresh = (_TWO32 - b) % b
        while low < thresh:
            state = state + _GOLDEN
            m = (mix64(state) >> uint64(32)) * b
            low = m & _LOW32
    return m >> uint64(32), state


@njit(cache=True, nogil=True)
def walk_chunk(intens, width, height, frames, offs, tau, total_out,
               lo, hi, n_walks, max_len, seed, counts):
    """Run ``n_walks`` walks from each start vertex in [lo, hi).

    Visits are accumulated into ``counts``. Returns (total_steps, longest walk).
    """
    n_off = offs.shape[0]
    plane = width * height
    total_steps = 0
    longest = 0
    for s in range(lo, hi):
        if total_out[s] == 0:
            continue
        for m in range(n_walks):
            state = _stream_state(seed, uint64(s) * uint64(n_walks) + uint64(m))
            v = s
            length = 0
            while length < max_len:
                tot = total_out[v]
                if tot == 0:
                    break
                u, state = _uniform_below(state, tot)
                r = np.int64(u)
                t = v // plane
                rem = v - t * plane
                y = rem // width
                x = rem - y * width
                iv = intens[v]
                nxt = -1
                for k in range(n_off):
                    nx = x + offs[k, 0]
                    ny = y + offs[k, 1]
                    nt = t + offs[k, 2]
                    if nx < 0 or nx >= width or ny < 0 or ny >= height or nt < 0 or nt >= frames:
                        continue
                    j = nx + width * (ny + height * nt)
                    w = iv - intens[j]
                    if w <= 0 or w > tau:
                        continue
                    if r < w:
                        nxt = j
                        break
                    r -= w
                v = nxt
                counts[v] += 1
                length += 1
            total_steps += length
            if length > longest:
                longest = length
    return total_steps, longest


@njit(cache=True, nogil=True)
def propagate_sorted(indptr, sources, probs, cur, out):
    """out[v] = sum_u cur[u] * P[u, v], each sum taken over sorted terms.

    Summing sorted terms makes the result independent of vertex numbering.
    """
    n = out.shape[0]
    buf = np.empty(np.max(np.diff(indptr)) if n > 0 else 0, dtype=np.float64)
    for v in range(n):
        a = indptr[v]
        b = indptr[v + 1]
        k = b - a
        if k == 0:
            out[v] = 0.0
            continue
        for q in range(k):
            buf[q] = cur[sources[a + q]] * probs[a + q]
        terms = np.sort(buf[:k])
        acc = 0.0
        for q in range(k):
            acc += terms[q]
        out[v] = acc


@njit(cache=True, nogil=True)
def walk_chunk_csr(indptr, targets, weights, total_out,
                   lo, hi, n_walks, max_len, seed, counts):
    """Same walk as :func:`walk_chunk` over a precomputed adjacency.

    Edges of each vertex must be listed in offset-table order so both
    kernels consume the random streams identically.
    """
    total_steps = 0
    longest = 0
    for s in range(lo, hi):
        if total_out[s] == 0:
            continue
        for m in range(n_walks):
            state = _stream_state(seed, uint64(s) * uint64(n_walks) + uint64(m))
            v = s
            length = 0
            while length < max_len:
                tot = total_out[v]
                if tot == 0:
                    break
                u, state = _uniform_below(state, tot)
                r = np.int64(u)
                e = indptr[v]
                while r >= weights[e]:
                    r -= weights[e]
                    e += 1
                v = targets[e]
                counts[v] += 1
                length += 1
            total_steps += length
            if length > longest:
                longest = length
    return total_steps, longest

