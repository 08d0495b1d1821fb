"""Stationary (time-average) and Palm (event-average) estimators from a SimOutput.

Class 0 is the arrival process, class ``i + 1`` the completions of server
``i``. Pooled completion averages self-weight by the service rates.
"""
from __future__ import annotations

import numpy as np

from ggn_lab.sim.engine import SimOutput
from ggn_lab.stats import BatchStat


class Views:
    def __init__(self, out: SimOutput):
        self.out = out
        self.a = out.acc
        self.n = out.model.n
        self._T = self.a["time_sc"][:, 0]

    def k_of(self, j: int) -> int:
        hits = np.nonzero(self.out.track_loo == j)[0]
        if not hits.size:
            raise KeyError(f"server {j} is not tracked by a leave-one-out system")
        return int(hits[0])

    # stationary
    def time_q(self) -> BatchStat:
        return BatchStat.ratio(self.a["time_sc"][:, 2], self._T)

    def time_p_q0(self) -> BatchStat:
        return BatchStat.ratio(self.a["time_sc"][:, 1], self._T)

    def time_ra(self) -> BatchStat:
        return BatchStat.ratio(self.a["time_sc"][:, 3], self._T)

    def time_rs(self, j: int) -> BatchStat:
        return BatchStat.ratio(self.a["time_rs"][:, j], self._T)

    def time_cell(self, j: int, cell: int, field: int) -> BatchStat:
        """Mean of field 1 (R_s[j]) or 2 (R_a) over time spent in ``cell``."""
        t = self.a["time_cell"][:, self.k_of(j), cell]
        return BatchStat.ratio(t[:, field], t[:, 0])

    # Palm: per-class or pooled over a set of classes
    def _classes(self, classes) -> list[int]:
        return list(classes)

    def _count(self, cls: list[int]) -> np.ndarray:
        return self.a["palm_sc"][:, cls, 0].sum(axis=1)

    def completions(self, exclude: int | None = None) -> list[int]:
        return [i + 1 for i in range(self.n) if i != exclude]

    def palm_count(self, classes) -> np.ndarray:
        return self._count(self._classes(classes))

    def palm_sc(self, classes, field: int) -> BatchStat:
        """field: 1 -> P[Q=0], 2 -> Q, 3 -> R_a, 4 -> 1{Q=0} R_a."""
        cls = self._classes(classes)
        return BatchStat.ratio(self.a["palm_sc"][:, cls, field].sum(axis=1), self._count(cls))

    def palm_rs(self, classes, j: int, q0: bool = False) -> BatchStat:
        cls = self._classes(classes)
        key = "palm_q0rs" if q0 else "palm_rs"
        return BatchStat.ratio(self.a[key][:, cls, j].sum(axis=1), self._count(cls))

    def palm_loo(self, classes, j: int, field: int) -> BatchStat:
        """field 0 -> P[Q_loo[j]=0], 1 -> E[1{Q_loo[j]=0} R_s[j]]."""
        cls = self._classes(classes)
        k = self.k_of(j)
        return BatchStat.ratio(self.a["palm_loo"][:, cls, k, field].sum(axis=1), self._count(cls))

    def palm_cell(self, classes, j: int, cell: int, field: int) -> tuple[BatchStat, int]:
        """Mean of field 1 (R_s[j]) or 2 (R_a) over events in ``cell``, with the sample count."""
        cls = self._classes(classes)
        c = self.a["palm_cell"][:, cls, self.k_of(j), cell].sum(axis=1)
        return BatchStat.ratio(c[:, field], c[:, 0]), int(c[:, 0].sum())

    def cell_events(self, j: int, cell: int) -> int:
        return int(self.a["palm_cell"][:, :, self.k_of(j), cell, 0].sum())
