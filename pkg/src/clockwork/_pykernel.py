"""Pure-Python Q-learning trajectory loop, used when the compiled kernel is unavailable.

``simulate_segment`` advances one trajectory by ``n_steps`` steps, mutating
``q``, the clock arrays, the partial sums and ``running_inf`` in place, and
returns the state reached. Step ``i`` consumes ``uniforms[2*i]`` for the action
and ``uniforms[2*i + 1]`` for the successor state.

Policy codes: 0 uniform, 1 epsilon-greedy ``(eps,)``, 2 Boltzmann ``(tau,)``,
3 decaying epsilon ``(c0, gamma)``. Schedule codes: 0 pair clock, 1 state
clock, 2 global clock (all ``(a, b, p)``), 3 power product and 4 log-power
product (``(a1, b1, alpha, a2, b2, beta)``).
"""

import math

NAME = "python"


def _rate(code, sp, t, big_n, small_n):
    if code == 0:
        return sp[0] / (sp[1] + small_n) ** sp[2]
    if code == 1:
        return sp[0] / (sp[1] + big_n) ** sp[2]
    if code == 2:
        return sp[0] / (sp[1] + t) ** sp[2]
    if code == 3:
        return (sp[0] / (sp[1] + t) ** sp[2]) * (sp[3] / (sp[4] + big_n) ** sp[5])
    log_t = math.log(t) if t > 1 else 0.0
    return (sp[0] / (sp[1] + log_t) ** sp[2]) * (sp[3] / (sp[4] + big_n) ** sp[5])


def _choose_action(code, pp, row, big_n, u):
    n_a = len(row)
    if code == 0:
        cum = 0.0
        for k in range(n_a):
            cum = cum + 1.0 / n_a
            if u < cum:
                return k
        return n_a - 1
    if code == 2:
        m = max(row)
        w = [math.exp((v - m) / pp[0]) for v in row]
        total = 0.0
        for v in w:
            total = total + v
        cum = 0.0
        for k in range(n_a):
            cum = cum + w[k] / total
            if u < cum:
                return k
        return max(k for k in range(n_a) if w[k] > 0)
    eps = pp[0] if code == 1 else (pp[0] / (1.0 + big_n) ** pp[1]) * n_a
    greedy = 0
    for k in range(1, n_a):
        if row[k] > row[greedy]:
            greedy = k
    cum = 0.0
    for k in range(n_a):
        p = eps / n_a
        if k == greedy:
            p = p + (1.0 - eps)
        cum = cum + p
        if u < cum:
            return k
    return n_a - 1 if eps > 0 else greedy


def _sample_successor(cdf_row, u):
    for k, c in enumerate(cdf_row):
        if u < c:
            return k
    for k in range(len(cdf_row) - 1, -1, -1):
        if k == 0 or cdf_row[k] > cdf_row[k - 1]:
            return k


def simulate_segment(cdf, reward, beta, policy_code, policy_params, schedule_code, schedule_params,
                     q, state_counts, pair_counts, s1, s2, running_inf, inf_start, x, t0, n_steps,
                     uniforms, work):
    cdf_l = cdf.tolist()
    rew_l = reward.tolist()
    q_l = q.tolist()
    n_l = state_counts.tolist()
    pc_l = pair_counts.tolist()
    s1_l = s1.tolist()
    s2_l = s2.tolist()
    inf_l = running_inf.tolist()
    pp = policy_params.tolist()
    sp = schedule_params.tolist()
    us = uniforms.tolist()
    x = int(x)
    for i in range(n_steps):
        t = t0 + i
        if t - 1 >= inf_start and t >= 2:
            freq = n_l[x] / (t - 1)
            if freq < inf_l[x]:
                inf_l[x] = freq
        n_l[x] += 1
        big_n = n_l[x]
        row = q_l[x]
        a = _choose_action(policy_code, pp, row, big_n, us[2 * i])
        pc_l[x][a] += 1
        y = _sample_successor(cdf_l[x][a], us[2 * i + 1])
        alpha = _rate(schedule_code, sp, t, big_n, pc_l[x][a])
        target = rew_l[x][a][y] + beta * max(q_l[y])
        row[a] = (1.0 - alpha) * row[a] + alpha * target
        s1_l[x][a] += alpha
        s2_l[x][a] += alpha * alpha
        x = y
    q[...] = q_l
    state_counts[...] = n_l
    pair_counts[...] = pc_l
    s1[...] = s1_l
    s2[...] = s2_l
    running_inf[...] = inf_l
    return x
