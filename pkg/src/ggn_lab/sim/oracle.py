"""Closed-form replay of the queue length from arrival and completion counts."""
from __future__ import annotations

from typing import Sequence

import numpy as np


class LogInconsistent(AssertionError):
    """The replayed queue length disagrees with the simulated one."""


def _servers(log) -> np.ndarray:
    if hasattr(log, "server") and not hasattr(log, "kind"):
        return np.asarray(log.server, dtype=np.int64)  # EventLog
    items = list(log)
    if items and hasattr(items[0], "server"):
        return np.array([r.server for r in items], dtype=np.int64)
    return np.asarray(items, dtype=np.int64)


def queue_length_oracle(q0: int, log) -> np.ndarray:
    """Queue length right after each logged event of a modified run.

    With ``X`` the running count of arrivals minus completions,
    ``Q = max(Q0 + X(t), sup_{t' <= t} (X(t) - X(t')))``, evaluated by a
    running minimum of ``X``. ``log`` is an ``EventLog``, a list of
    ``EventRecord`` or a sequence of server indices (-1 for arrivals), in
    firing order.
    """
    s = _servers(log)
    if s.size == 0:
        return np.zeros(0, dtype=np.int64)
    x = np.cumsum(np.where(s < 0, 1, -1))
    low = np.minimum(np.minimum.accumulate(x), 0)
    return x - np.minimum(-int(q0), low)


def check_log(q0: int, log, q_pre: Sequence[int] | np.ndarray | None = None,
              q_final: int | None = None) -> np.ndarray:
    """Compare the oracle with logged pre-event queue lengths.

    Record ``k + 1`` carries the state right after event ``k``; the last
    post-event value is checked against ``q_final`` when given.
    """
    q = queue_length_oracle(q0, log)
    if q_pre is None:
        q_pre = log.q if hasattr(log, "q") else [r.q for r in log]
    pre = np.asarray(q_pre, dtype=np.int64)
    if pre.size and pre[0] != q0:
        raise LogInconsistent(f"first record has Q={pre[0]} but Q(0)={q0}")
    bad = np.nonzero(q[:-1] != pre[1:])[0]
    if bad.size:
        k = int(bad[0])
        raise LogInconsistent(f"event {k}: oracle Q={q[k]} but simulated Q={pre[k + 1]}")
    if q_final is not None and q.size and q[-1] != q_final:
        raise LogInconsistent(f"final state: oracle Q={q[-1]} but simulated Q={q_final}")
    return q
