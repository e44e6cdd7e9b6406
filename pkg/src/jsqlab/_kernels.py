"""Compiled inner loops. Random numbers are always drawn by the caller from a
numpy Generator and passed in, so results do not depend on numba's own RNG."""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def gauss_seidel_stationary(indptr, indices, data, diag, x, sweeps):
    """Symmetric Gauss-Seidel sweeps for x Q = 0, given Q^T in CSR form.

    ``diag`` holds the (negative) diagonal of Q. x is renormalised to sum 1
    after each forward/backward pair.
    """
    size = x.size
    for _ in range(sweeps):
        for i in range(size):
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                j = indices[k]
                if j != i:
                    acc += data[k] * x[j]
            x[i] = acc / (-diag[i])
        for i in range(size - 1, -1, -1):
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                j = indices[k]
                if j != i:
                    acc += data[k] * x[j]
            x[i] = acc / (-diag[i])
        x /= x.sum()


@njit(cache=True)
def _jsq_jump(q, full, u, arrival_rate, n):
    """Apply one JSQ transition selected by u in [0, total rate). Returns (full, overflowed)."""
    depth = q.size
    if u < arrival_rate:
        if full == depth:
            return full, True
        q[full] += 1
        if q[full] == n:
            full += 1
        return full, False
    # A uniformly chosen busy server finishes; it sits at the deepest level above it.
    k = int(u - arrival_rate)
    if k >= q[0]:
        k = q[0] - 1
    j = 0
    while j + 1 < depth and q[j + 1] > k:
        j += 1
    q[j] -= 1
    if j < full:
        full = j
    return full, False


@njit(cache=True)
def ctmc_batches(q, clock, counters, expo, unif, arrival_rate, n,
                 acc_start, acc_end, batch_len, q_area, full_time, q2_time):
    """Advance the JSQ chain through pre-drawn variates, accumulating batch time-integrals.

    ``clock[0]`` is the current time; ``counters`` holds
    [full levels, overflows, arrivals, events]. Returns (used, finished).
    """
    depth = q.size
    n_batches = q_area.shape[0]
    t = clock[0]
    full = counters[0]
    for idx in range(expo.size):
        total = arrival_rate + q[0]
        t_next = t + expo[idx] / total
        a = t if t > acc_start else acc_start
        end = t_next if t_next < acc_end else acc_end
        while a < end:
            k = int((a - acc_start) / batch_len)
            if k >= n_batches:
                k = n_batches - 1
            seg = acc_start + (k + 1) * batch_len
            if seg <= a and k < n_batches - 1:
                k += 1
                seg = acc_start + (k + 1) * batch_len
            if k == n_batches - 1 or seg > end:
                seg = end
            span = seg - a
            for j in range(depth):
                q_area[k, j] += q[j] * span
            full_time[k, full] += span
            q2_time[k, q[1]] += span
            a = seg
        t = t_next
        counters[3] += 1
        if t >= acc_end:
            clock[0] = t
            counters[0] = full
            return idx + 1, True
        u = unif[idx] * total
        if u < arrival_rate:
            counters[2] += 1
        full, over = _jsq_jump(q, full, u, arrival_rate, n)
        if over:
            counters[1] += 1
    clock[0] = t
    counters[0] = full
    return expo.size, False


@njit(cache=True)
def ctmc_snapshots(q, clock, counters, expo, unif, arrival_rate, n, sample_times, out, pos):
    """Advance the chain and record (q1, q2) at each sample time crossed. Returns (used, pos)."""
    t = clock[0]
    full = counters[0]
    m = sample_times.size
    for idx in range(expo.size):
        total = arrival_rate + q[0]
        t_next = t + expo[idx] / total
        while pos < m and sample_times[pos] < t_next:
            out[pos, 0] = q[0]
            out[pos, 1] = q[1]
            pos += 1
        t = t_next
        if pos >= m:
            clock[0] = t
            counters[0] = full
            return idx + 1, pos
        full, over = _jsq_jump(q, full, unif[idx] * total, arrival_rate, n)
        if over:
            counters[1] += 1
    clock[0] = t
    counters[0] = full
    return expo.size, pos


@njit(cache=True)
def sde_path(state, beta, h, normals, record_from, thin, out, pos):
    """Euler steps of the reflected diffusion; state = [y1, y2, u, step index].

    Every ``thin``-th step with index >= record_from is written to ``out``.
    Returns the updated write position.
    """
    y1, y2, cum, step = state[0], state[1], state[2], int(state[3])
    scale = math.sqrt(2.0 * h)
    for i in range(normals.size):
        n1 = y1 + (-y1 + y2 - beta) * h + scale * normals[i]
        n2 = y2 * (1.0 - h)
        if n1 > 0.0:
            n2 += n1
            cum += n1
            n1 = 0.0
        if n2 < 0.0:
            n2 = 0.0
        y1, y2 = n1, n2
        step += 1
        if step >= record_from and (step - record_from) % thin == 0 and pos < out.shape[0]:
            out[pos, 0] = y1
            out[pos, 1] = y2
            pos += 1
    state[0], state[1], state[2], state[3] = y1, y2, cum, step
    return pos


def warm_up() -> None:
    """Compile all kernels on tiny inputs (useful before timing)."""
    q = np.array([1, 0, 0], dtype=np.int64)
    clock = np.zeros(1)
    counters = np.zeros(4, dtype=np.int64)
    e = np.ones(4)
    u = np.full(4, 0.5)
    ctmc_batches(q, clock, counters, e, u, 1.0, 2, 0.0, 1.0, 1.0,
                 np.zeros((1, 3)), np.zeros((1, 4)), np.zeros((1, 3)))
    ctmc_snapshots(q, clock, counters, e, u, 1.0, 2, np.array([0.5]), np.zeros((1, 2)), 0)
    sde_path(np.zeros(4), 1.0, 1e-3, np.zeros(4), 0, 1, np.zeros((4, 2)), 0)
