"""Model corpus shared by the acceptance suite."""
from __future__ import annotations

from dataclasses import dataclass

from ggn_lab import distributions as dl
from ggn_lab.rng import replication_seed
from ggn_lab.sim.model import Mode, QueueModel, Routing


@dataclass(frozen=True)
class Cell:
    name: str
    model: QueueModel
    master_seed: int

    def seeds(self, k: int) -> list[int]:
        return [replication_seed(self.master_seed, r) for r in range(k)]

    @property
    def heavy(self) -> bool:
        """True in the regime rho >= 1 - 1/n."""
        return self.model.rho >= 1.0 - 1.0 / self.model.n


EXP = dl.exponential(1.0)
H2 = dl.hyperexponential([0.3, 0.7], [0.5, 2.0])


def _homo(A, S, n, rho):
    return QueueModel.at_load(A, [S] * n, rho, Mode.MODIFIED)


def corpus() -> list[Cell]:
    models = [
        ("M/M/1@0.8", _homo(EXP, EXP, 1, 0.8)),
        ("M/M/4@0.5", _homo(EXP, EXP, 4, 0.5)),
        ("M/M/4@0.9", _homo(EXP, EXP, 4, 0.9)),
        ("M/D/2@0.7", _homo(EXP, dl.deterministic(1.0), 2, 0.7)),
        ("M/D/8@0.6", _homo(EXP, dl.deterministic(1.0), 8, 0.6)),
        ("M/G(0.5)/3@0.5", _homo(EXP, dl.gamma(0.5, 2.0), 3, 0.5)),
        ("M/G(0.5)/4@0.9", _homo(EXP, dl.gamma(0.5, 2.0), 4, 0.9)),
        ("H2/M/3@0.8", _homo(H2, EXP, 3, 0.8)),
        ("H2/M/6@0.6", _homo(H2, EXP, 6, 0.6)),
        ("E2/E3/4@0.85", _homo(dl.erlang(2, 1.0), dl.erlang(3, 3.0), 4, 0.85)),
        ("M/M(1,2,3)@0.7", QueueModel.at_load(EXP, [dl.exponential(1.0), dl.exponential(2.0),
                                                    dl.exponential(3.0)], 0.7, Mode.MODIFIED)),
        ("E2/(E2,U,M)@0.6", QueueModel.at_load(dl.erlang(2, 1.0), [dl.erlang(2, 4.0), dl.uniform(0.5, 1.5),
                                                                    dl.exponential(0.5)], 0.6, Mode.MODIFIED,
                                               routing=Routing.FASTEST_IDLE)),
    ]
    return [Cell(name, m, 1000 + 17 * k) for k, (name, m) in enumerate(models)]


def corpus_laws() -> list[dl.DistributionSpec]:
    """Distinct arrival and service laws appearing in the corpus."""
    seen: list[dl.DistributionSpec] = []
    for c in corpus():
        for s in (c.model.arrival, *c.model.services):
            u = dl.unitize(s)
            if u not in seen:
                seen.append(u)
    return seen
