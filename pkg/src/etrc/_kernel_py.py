"""Pure-Python closed-loop integration kernel.

Mirrors ``_ckernel.pyx`` operation for operation so both backends produce the
same floating point results. Plain Python floats are used instead of numpy
scalars because they are several times faster for 2x2 systems.
"""

import math

MODE_PERIODIC, MODE_STATIC, MODE_DYNAMIC = 0, 1, 2


def run_loop(a_half, b, k, x0, dt, nsteps, mode, mu, theta, lam, eta0, period,
             origin_tol, diverge_limit, states, inputs, err, thr, eta_out, flags):
    """Integrate ``nsteps`` RK4 steps, filling the preallocated output arrays.

    ``a_half[j]`` is A(p) at time ``j * dt / 2``. Returns the number of
    completed steps; fewer than ``nsteps`` means the state diverged.
    """
    n = len(x0)
    m = b.shape[1]
    A = a_half.tolist()
    B = b.tolist()
    K = k.tolist()
    x = [float(v) for v in x0]
    xh = list(x)
    hdt = 0.5 * dt
    dt6 = dt / 6.0
    nan = float("nan")

    def gain(xv):
        return [sum_prod(K[j], xv, n) for j in range(m)]

    def sum_prod(row, v, cnt):
        acc = 0.0
        for c in range(cnt):
            acc += row[c] * v[c]
        return acc

    def norm(v):
        acc = 0.0
        for c in range(n):
            acc += v[c] * v[c]
        return math.sqrt(acc)

    def drive(xs):
        acc = 0.0
        for c in range(n):
            d = xh[c] - xs[c]
            acc += d * d
        return mu * norm(xs) - math.sqrt(acc)

    u = gain(xh)
    bu = [sum_prod(B[r], u, m) for r in range(n)]
    eta = eta0 if mode == MODE_DYNAMIC else 0.0
    last = 0.0

    nx0 = norm(x)
    states[0, :] = x
    inputs[0, :] = u
    err[0] = 0.0
    if mode == MODE_STATIC:
        thr[0] = mu * nx0
    elif mode == MODE_DYNAMIC:
        thr[0] = eta / theta + mu * nx0
    else:
        thr[0] = nan
    eta_out[0] = eta if mode == MODE_DYNAMIC else nan
    flags[0] = 1

    for i in range(nsteps):
        A1 = A[2 * i]
        A2 = A[2 * i + 1]
        A3 = A[2 * i + 2]
        k1 = [sum_prod(A1[r], x, n) + bu[r] for r in range(n)]
        xs = [x[r] + hdt * k1[r] for r in range(n)]
        if mode == MODE_DYNAMIC:
            d1 = drive(x)
            d2 = drive(xs)
        k2 = [sum_prod(A2[r], xs, n) + bu[r] for r in range(n)]
        xs = [x[r] + hdt * k2[r] for r in range(n)]
        if mode == MODE_DYNAMIC:
            d3 = drive(xs)
        k3 = [sum_prod(A2[r], xs, n) + bu[r] for r in range(n)]
        xs = [x[r] + dt * k3[r] for r in range(n)]
        if mode == MODE_DYNAMIC:
            d4 = drive(xs)
        k4 = [sum_prod(A3[r], xs, n) + bu[r] for r in range(n)]
        x = [x[r] + dt6 * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r]) for r in range(n)]
        if mode == MODE_DYNAMIC:
            e1 = -lam * eta + d1
            e2 = -lam * (eta + hdt * e1) + d2
            e3 = -lam * (eta + hdt * e2) + d3
            e4 = -lam * (eta + dt * e3) + d4
            eta = eta + dt6 * (e1 + 2.0 * e2 + 2.0 * e3 + e4)

        t = (i + 1) * dt
        nx = norm(x)
        acc = 0.0
        for c in range(n):
            d = xh[c] - x[c]
            acc += d * d
        ne = math.sqrt(acc)
        if not nx <= diverge_limit:
            return i
        at_origin = nx < origin_tol and ne < origin_tol
        if mode == MODE_STATIC:
            fire = (not at_origin) and ne >= mu * nx
            thr_i = mu * nx
        elif mode == MODE_DYNAMIC:
            fire = (not at_origin) and eta + theta * (mu * nx - ne) <= 0.0
            thr_i = eta / theta + mu * nx
        else:
            fire = t - last >= period - 1e-12
            thr_i = nan
        if fire:
            xh = list(x)
            u = gain(xh)
            bu = [sum_prod(B[r], u, m) for r in range(n)]
            last = t
        states[i + 1, :] = x
        inputs[i + 1, :] = u
        err[i + 1] = ne
        thr[i + 1] = thr_i
        eta_out[i + 1] = eta if mode == MODE_DYNAMIC else nan
        flags[i + 1] = 1 if fire else 0
    return nsteps
