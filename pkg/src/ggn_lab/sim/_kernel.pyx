# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event loops; mirror ``_pykernel`` operation by operation."""

cimport numpy as cnp

ctypedef cnp.int64_t i64


def run_chunk(int mode, int routing, double[::1] dstate, i64[::1] istate,
              double[::1] rs, i64[::1] busy, i64[::1] qloo, i64[::1] loo_idx,
              double[::1] rates, double tol, double[:, ::1] draws, i64[::1] pos,
              double[:, :, ::1] palm_sc, double[:, :, ::1] palm_rs,
              double[:, :, ::1] palm_q0rs, double[:, :, :, ::1] palm_loo,
              double[:, :, :, :, ::1] palm_cell, double[:, ::1] time_sc,
              double[:, ::1] time_rs, double[:, :, :, ::1] time_cell, i64[:, ::1] margin,
              double[::1] log_t, i64[::1] log_kind, i64[::1] log_q, double[::1] log_ra,
              double[:, ::1] log_rs, i64[:, ::1] log_qloo):
    cdef Py_ssize_t n = rs.shape[0]
    cdef Py_ssize_t K = qloo.shape[0]
    cdef i64 B = draws.shape[1]
    cdef Py_ssize_t R = n + 1
    cdef double clock = dstate[0]
    cdef double ra = dstate[1]
    cdef i64 q = istate[0]
    cdef i64 ev = istate[1]
    cdef i64 warm = istate[2]
    cdef i64 total = istate[3]
    cdef i64 L = istate[4]
    cdef i64 NB = istate[5]
    cdef i64 lc = istate[6]
    cdef i64 lcap = istate[7]
    cdef bint modified = mode == 0
    cdef int status = -1
    cdef double m, lim, delta, seg_ra, best, x
    cdef Py_ssize_t i, j, k, kind, chosen, c, cell
    cdef i64 nidle, idx, b, d
    cdef bint counted

    while ev < total:
        m = ra
        for i in range(n):
            if (modified or busy[i]) and rs[i] < m:
                m = rs[i]
        if m < 0.0:
            m = 0.0
        lim = m + tol
        kind = -1
        if ra > lim:
            for i in range(n):
                if (modified or busy[i]) and rs[i] <= lim:
                    kind = i
                    break

        chosen = -1
        if kind == -1:
            if pos[0] >= B:
                status = 0
                break
            if not modified:
                nidle = 0
                for i in range(n):
                    if not busy[i]:
                        nidle += 1
                if nidle > 0:
                    if routing == 0:
                        if pos[R] >= B:
                            status = <int>R
                            break
                        idx = <i64>(draws[R, pos[R]] * nidle)
                        if idx >= nidle:
                            idx = nidle - 1
                        for i in range(n):
                            if not busy[i]:
                                if idx == 0:
                                    chosen = i
                                    break
                                idx -= 1
                    else:
                        best = -1.0
                        for i in range(n):
                            if not busy[i] and rates[i] > best:
                                best = rates[i]
                                chosen = i
                    if pos[chosen + 1] >= B:
                        status = <int>(chosen + 1)
                        break
        else:
            if (modified or q > 0) and pos[kind + 1] >= B:
                status = <int>(kind + 1)
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
                if modified or busy[j]:
                    time_rs[b, j] += delta * (rs[j] - 0.5 * delta)
            for k in range(K):
                j = loo_idx[k]
                cell = (2 if q > 0 else 0) + (1 if qloo[k] > 0 else 0)
                time_cell[b, k, cell, 0] += delta
                if modified or busy[j]:
                    time_cell[b, k, cell, 1] += delta * (rs[j] - 0.5 * delta)
                time_cell[b, k, cell, 2] += seg_ra

        ra = ra - delta
        if ra < 0.0:
            ra = 0.0
        for i in range(n):
            if modified or busy[i]:
                rs[i] = rs[i] - delta
                if rs[i] < 0.0:
                    rs[i] = 0.0
        clock = clock + delta
        if kind == -1:
            ra = 0.0
        else:
            rs[kind] = 0.0
        c = kind + 1

        if counted:
            palm_sc[b, c, 0] += 1.0
            if q == 0:
                palm_sc[b, c, 1] += 1.0
                palm_sc[b, c, 4] += ra
            palm_sc[b, c, 2] += q
            palm_sc[b, c, 3] += ra
            for j in range(n):
                palm_rs[b, c, j] += rs[j]
                if q == 0:
                    palm_q0rs[b, c, j] += rs[j]
            for k in range(K):
                x = rs[loo_idx[k]]
                if qloo[k] == 0:
                    palm_loo[b, c, k, 0] += 1.0
                    palm_loo[b, c, k, 1] += x
                cell = (2 if q > 0 else 0) + (1 if qloo[k] > 0 else 0)
                palm_cell[b, c, k, cell, 0] += 1.0
                palm_cell[b, c, k, cell, 1] += x
                palm_cell[b, c, k, cell, 2] += ra

        if lc < lcap:
            log_t[lc] = clock
            log_kind[lc] = kind
            log_q[lc] = q
            log_ra[lc] = ra
            for j in range(n):
                log_rs[lc, j] = rs[j]
            for k in range(K):
                log_qloo[lc, k] = qloo[k]
            lc += 1

        if kind == -1:
            ra = draws[0, pos[0]]
            pos[0] += 1
            if modified:
                q += 1
                for k in range(K):
                    qloo[k] += 1
            elif chosen >= 0:
                if routing == 0:
                    pos[R] += 1
                busy[chosen] = 1
                rs[chosen] = draws[chosen + 1, pos[chosen + 1]]
                pos[chosen + 1] += 1
            else:
                q += 1
        else:
            i = kind
            if modified:
                rs[i] = draws[i + 1, pos[i + 1]]
                pos[i + 1] += 1
                if q > 0:
                    q -= 1
                for k in range(K):
                    if loo_idx[k] != i and qloo[k] > 0:
                        qloo[k] -= 1
            elif q > 0:
                q -= 1
                rs[i] = draws[i + 1, pos[i + 1]]
                pos[i + 1] += 1
            else:
                busy[i] = 0
                rs[i] = 0.0
        ev += 1

        for k in range(K):
            d = qloo[k] - q
            if d < margin[k, 0]:
                margin[k, 0] = d
            if d < 0:
                margin[k, 1] += 1

    dstate[0] = clock
    dstate[1] = ra
    istate[0] = q
    istate[1] = ev
    istate[6] = lc
    return status


def run_coupling(int routing, double[::1] arrivals, double[::1] rates, double[::1] free,
                 double[::1] vfree, double[:, ::1] draws, i64[::1] pos, i64[::1] kstate,
                 double[::1] tau, double[::1] tau_hat, i64[::1] server):
    cdef Py_ssize_t n = free.shape[0]
    cdef i64 N = arrivals.shape[0]
    cdef i64 B = draws.shape[1]
    cdef Py_ssize_t R = 2 * n
    cdef i64 k = kstate[0]
    cdef int status = -1
    cdef Py_ssize_t i, chosen, c, dry
    cdef i64 nidle, idx
    cdef double t, start, best, s
    while k < N:
        t = arrivals[k]
        dry = -1
        for i in range(n):
            while vfree[i] < t:
                if pos[n + i] >= B:
                    dry = n + i
                    break
                vfree[i] = vfree[i] + draws[n + i, pos[n + i]]
                pos[n + i] += 1
            if dry >= 0:
                break
        if dry >= 0:
            status = <int>dry
            break

        nidle = 0
        for i in range(n):
            if free[i] < t:
                nidle += 1
        chosen = -1
        if nidle > 0:
            start = t
            if routing == 0:
                if pos[R] >= B:
                    status = <int>R
                    break
                idx = <i64>(draws[R, pos[R]] * nidle)
                if idx >= nidle:
                    idx = nidle - 1
                for i in range(n):
                    if free[i] < t:
                        if idx == 0:
                            chosen = i
                            break
                        idx -= 1
            else:
                best = -1.0
                for i in range(n):
                    if free[i] < t and rates[i] > best:
                        best = rates[i]
                        chosen = i
        else:
            chosen = 0
            for i in range(1, n):
                if free[i] < free[chosen]:
                    chosen = i
            start = free[chosen]
        if pos[chosen] >= B:
            status = <int>chosen
            break
        if nidle > 0 and routing == 0:
            pos[R] += 1
        s = draws[chosen, pos[chosen]]
        pos[chosen] += 1
        free[chosen] = start + s
        tau[k] = start
        server[k] = chosen

        c = 0
        for i in range(1, n):
            if vfree[i] < vfree[c]:
                c = i
        tau_hat[k] = vfree[c]
        vfree[c] = vfree[c] + s
        k += 1

    kstate[0] = k
    return status
