# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Q-learning trajectory loop.

Mirrors ``_pykernel.simulate_segment`` operation for operation; see that
module for the argument contract.
"""

from libc.math cimport exp, log, pow

NAME = "cython"


cdef inline double _rate(int code, const double[::1] sp, long t, long big_n, long small_n) noexcept nogil:
    cdef double log_t
    if code == 0:
        return sp[0] / pow(sp[1] + small_n, sp[2])
    elif code == 1:
        return sp[0] / pow(sp[1] + big_n, sp[2])
    elif code == 2:
        return sp[0] / pow(sp[1] + t, sp[2])
    elif code == 3:
        return (sp[0] / pow(sp[1] + t, sp[2])) * (sp[3] / pow(sp[4] + big_n, sp[5]))
    else:
        log_t = log(<double>t) if t > 1 else 0.0
        return (sp[0] / pow(sp[1] + log_t, sp[2])) * (sp[3] / pow(sp[4] + big_n, sp[5]))


cdef inline long _choose_action(int code, const double[::1] pp, double[:, ::1] q, long x,
                                long big_n, double u, double[::1] work) noexcept nogil:
    cdef long n_a = q.shape[1]
    cdef long k, greedy = 0
    cdef double eps, m, total, cum, p
    if code == 0:
        cum = 0.0
        for k in range(n_a):
            cum = cum + 1.0 / n_a
            if u < cum:
                return k
        return n_a - 1
    if code == 2:
        m = q[x, 0]
        for k in range(1, n_a):
            if q[x, k] > m:
                m = q[x, k]
        total = 0.0
        for k in range(n_a):
            work[k] = exp((q[x, k] - m) / pp[0])
            total = total + work[k]
        cum = 0.0
        for k in range(n_a):
            cum = cum + work[k] / total
            if u < cum:
                return k
        for k in range(n_a - 1, -1, -1):
            if work[k] > 0:
                return k
        return n_a - 1
    if code == 1:
        eps = pp[0]
    else:
        eps = (pp[0] / pow(1.0 + big_n, pp[1])) * n_a
    for k in range(1, n_a):
        if q[x, k] > q[x, greedy]:
            greedy = k
    cum = 0.0
    for k in range(n_a):
        p = eps / n_a
        if k == greedy:
            p = p + (1.0 - eps)
        cum = cum + p
        if u < cum:
            return k
    if eps > 0:
        return n_a - 1
    return greedy


def simulate_segment(
    const double[:, :, ::1] cdf,
    const double[:, :, ::1] reward,
    double beta,
    int policy_code,
    const double[::1] policy_params,
    int schedule_code,
    const double[::1] schedule_params,
    double[:, ::1] q,
    long[::1] state_counts,
    long[:, ::1] pair_counts,
    double[:, ::1] s1,
    double[:, ::1] s2,
    double[::1] running_inf,
    long inf_start,
    long x,
    long t0,
    long n_steps,
    const double[::1] uniforms,
    double[::1] work,
):
    cdef long n_x = cdf.shape[0]
    cdef long n_a = cdf.shape[1]
    cdef long i, t, a, y, k, big_n
    cdef double u, alpha, best, target, freq
    with nogil:
        for i in range(n_steps):
            t = t0 + i
            if t - 1 >= inf_start and t >= 2:
                freq = state_counts[x] / <double>(t - 1)
                if freq < running_inf[x]:
                    running_inf[x] = freq
            state_counts[x] += 1
            big_n = state_counts[x]
            a = _choose_action(policy_code, policy_params, q, x, big_n, uniforms[2 * i], work)
            pair_counts[x, a] += 1
            u = uniforms[2 * i + 1]
            y = n_x - 1
            for k in range(n_x):
                if u < cdf[x, a, k]:
                    y = k
                    break
            else:
                for k in range(n_x - 1, -1, -1):
                    if k == 0 or cdf[x, a, k] > cdf[x, a, k - 1]:
                        y = k
                        break
            alpha = _rate(schedule_code, schedule_params, t, big_n, pair_counts[x, a])
            best = q[y, 0]
            for k in range(1, n_a):
                if q[y, k] > best:
                    best = q[y, k]
            target = reward[x, a, y] + beta * best
            q[x, a] = (1.0 - alpha) * q[x, a] + alpha * target
            s1[x, a] += alpha
            s2[x, a] += alpha * alpha
            x = y
    return x
