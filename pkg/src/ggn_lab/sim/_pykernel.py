"""Pure-Python event loop; the reference twin of ``_kernel.pyx``.

Both implementations must perform the same floating-point operations in the
same order so that a run is bit-identical whichever backend executes it.
Any change here has to be mirrored in the Cython source.
"""


def run_chunk(mode, routing, dstate, istate, rs, busy, qloo, loo_idx, rates, tol,
              draws, pos, palm_sc, palm_rs, palm_q0rs, palm_loo, palm_cell,
              time_sc, time_rs, time_cell, margin,
              log_t, log_kind, log_q, log_ra, log_rs, log_qloo):
    """Advance until ``istate[1] == istate[3]`` or a variate row runs dry.

    Returns -1 when done, otherwise the index of the draw row to refill.
    """
    n = rs.shape[0]
    K = qloo.shape[0]
    B = draws.shape[1]
    R = n + 1
    clock = float(dstate[0])
    ra = float(dstate[1])
    q = int(istate[0])
    ev = int(istate[1])
    warm = int(istate[2])
    total = int(istate[3])
    L = int(istate[4])
    NB = int(istate[5])
    lc = int(istate[6])
    lcap = int(istate[7])
    # plain lists are much faster than numpy scalars in this loop
    r = [float(x) for x in rs]
    bz = [int(x) for x in busy]
    ql = [int(x) for x in qloo]
    li = [int(x) for x in loo_idx]
    ps = [int(x) for x in pos]
    modified = mode == 0
    status = -1

    while ev < total:
        m = ra
        for i in range(n):
            if (modified or bz[i]) and r[i] < m:
                m = r[i]
        if m < 0.0:
            m = 0.0
        lim = m + tol
        kind = -1
        if ra > lim:
            for i in range(n):
                if (modified or bz[i]) and r[i] <= lim:
                    kind = i
                    break

        chosen = -1
        if kind == -1:
            if ps[0] >= B:
                status = 0
                break
            if not modified:
                nidle = 0
                for i in range(n):
                    if not bz[i]:
                        nidle += 1
                if nidle > 0:
                    if routing == 0:
                        if ps[R] >= B:
                            status = R
                            break
                        idx = int(float(draws[R, ps[R]]) * nidle)
                        if idx >= nidle:
                            idx = nidle - 1
                        for i in range(n):
                            if not bz[i]:
                                if idx == 0:
                                    chosen = i
                                    break
                                idx -= 1
                    else:
                        best = -1.0
                        for i in range(n):
                            if not bz[i] and float(rates[i]) > best:
                                best = float(rates[i])
                                chosen = i
                    if ps[chosen + 1] >= B:
                        status = chosen + 1
                        break
        else:
            if (modified or q > 0) and ps[kind + 1] >= B:
                status = kind + 1
                break

        counted = ev >= warm
        b = 0
        if counted:
            b = (ev - warm) // L
            if b >= NB:
                b = NB - 1
        delta = m
        if counted and delta > 0.0:
            seg_ra = delta * (ra - 0.5 * delta)
            time_sc[b, 0] += delta
            if q == 0:
                time_sc[b, 1] += delta
            time_sc[b, 2] += q * delta
            time_sc[b, 3] += seg_ra
            for j in range(n):
                if modified or bz[j]:
                    time_rs[b, j] += delta * (r[j] - 0.5 * delta)
            for k in range(K):
                j = li[k]
                cell = (2 if q > 0 else 0) + (1 if ql[k] > 0 else 0)
                time_cell[b, k, cell, 0] += delta
                if modified or bz[j]:
                    time_cell[b, k, cell, 1] += delta * (r[j] - 0.5 * delta)
                time_cell[b, k, cell, 2] += seg_ra

        ra = ra - delta
        if ra < 0.0:
            ra = 0.0
        for i in range(n):
            if modified or bz[i]:
                r[i] = r[i] - delta
                if r[i] < 0.0:
                    r[i] = 0.0
        clock = clock + delta
        if kind == -1:
            ra = 0.0
        else:
            r[kind] = 0.0
        c = kind + 1

        if counted:
            palm_sc[b, c, 0] += 1.0
            if q == 0:
                palm_sc[b, c, 1] += 1.0
                palm_sc[b, c, 4] += ra
            palm_sc[b, c, 2] += q
            palm_sc[b, c, 3] += ra
            for j in range(n):
                palm_rs[b, c, j] += r[j]
                if q == 0:
                    palm_q0rs[b, c, j] += r[j]
            for k in range(K):
                x = r[li[k]]
                if ql[k] == 0:
                    palm_loo[b, c, k, 0] += 1.0
                    palm_loo[b, c, k, 1] += x
                cell = (2 if q > 0 else 0) + (1 if ql[k] > 0 else 0)
                palm_cell[b, c, k, cell, 0] += 1.0
                palm_cell[b, c, k, cell, 1] += x
                palm_cell[b, c, k, cell, 2] += ra

        if lc < lcap:
            log_t[lc] = clock
            log_kind[lc] = kind
            log_q[lc] = q
            log_ra[lc] = ra
            for j in range(n):
                log_rs[lc, j] = r[j]
            for k in range(K):
                log_qloo[lc, k] = ql[k]
            lc += 1

        if kind == -1:
            ra = float(draws[0, ps[0]])
            ps[0] += 1
            if modified:
                q += 1
                for k in range(K):
                    ql[k] += 1
            elif chosen >= 0:
                if routing == 0:
                    ps[R] += 1
                bz[chosen] = 1
                r[chosen] = float(draws[chosen + 1, ps[chosen + 1]])
                ps[chosen + 1] += 1
            else:
                q += 1
        else:
            i = kind
            if modified:
                r[i] = float(draws[i + 1, ps[i + 1]])
                ps[i + 1] += 1
                if q > 0:
                    q -= 1
                for k in range(K):
                    if li[k] != i and ql[k] > 0:
                        ql[k] -= 1
            elif q > 0:
                q -= 1
                r[i] = float(draws[i + 1, ps[i + 1]])
                ps[i + 1] += 1
            else:
                bz[i] = 0
                r[i] = 0.0
        ev += 1

        for k in range(K):
            d = ql[k] - q
            if d < margin[k, 0]:
                margin[k, 0] = d
            if d < 0:
                margin[k, 1] += 1

    dstate[0] = clock
    dstate[1] = ra
    istate[0] = q
    istate[1] = ev
    istate[6] = lc
    for i in range(n):
        rs[i] = r[i]
        busy[i] = bz[i]
    for k in range(K):
        qloo[k] = ql[k]
    for p in range(len(ps)):
        pos[p] = ps[p]
    return status


def run_coupling(routing, arrivals, rates, free, vfree, draws, pos, kstate,
                 tau, tau_hat, server):
    """Job-driven replay of an original queue and its modified twin.

    ``free`` holds the original servers' free times, ``vfree`` the modified
    servers' next completion epochs. Draw rows ``0..n-1`` are the original
    service times, ``n..2n-1`` the virtual jobs, ``2n`` routing uniforms.
    Returns -1 when every job is placed, else the row to refill.
    """
    n = free.shape[0]
    N = arrivals.shape[0]
    B = draws.shape[1]
    R = 2 * n
    k = int(kstate[0])
    F = [float(x) for x in free]
    f = [float(x) for x in vfree]
    ps = [int(x) for x in pos]
    status = -1
    while k < N:
        t = float(arrivals[k])
        dry = -1
        for i in range(n):
            while f[i] < t:
                if ps[n + i] >= B:
                    dry = n + i
                    break
                f[i] = f[i] + float(draws[n + i, ps[n + i]])
                ps[n + i] += 1
            if dry >= 0:
                break
        if dry >= 0:
            status = dry
            break

        nidle = 0
        for i in range(n):
            if F[i] < t:
                nidle += 1
        chosen = -1
        if nidle > 0:
            start = t
            if routing == 0:
                if ps[R] >= B:
                    status = R
                    break
                idx = int(float(draws[R, ps[R]]) * nidle)
                if idx >= nidle:
                    idx = nidle - 1
                for i in range(n):
                    if F[i] < t:
                        if idx == 0:
                            chosen = i
                            break
                        idx -= 1
            else:
                best = -1.0
                for i in range(n):
                    if F[i] < t and float(rates[i]) > best:
                        best = float(rates[i])
                        chosen = i
        else:
            chosen = 0
            for i in range(1, n):
                if F[i] < F[chosen]:
                    chosen = i
            start = F[chosen]
        if ps[chosen] >= B:
            status = chosen
            break
        if nidle > 0 and routing == 0:
            ps[R] += 1
        s = float(draws[chosen, ps[chosen]])
        ps[chosen] += 1
        F[chosen] = start + s
        tau[k] = start
        server[k] = chosen

        c = 0
        for i in range(1, n):
            if f[i] < f[c]:
                c = i
        tau_hat[k] = f[c]
        f[c] = f[c] + s
        k += 1

    kstate[0] = k
    for i in range(n):
        free[i] = F[i]
        vfree[i] = f[i]
    for p in range(len(ps)):
        pos[p] = ps[p]
    return status
