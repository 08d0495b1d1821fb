from __future__ import annotations

import pytest

from ggn_lab.config import ConfigError, load_config, parse_config
from ggn_lab.sim.model import Mode

MINIMAL = """
tasks = ["simulate", "bounds"]
[model]
arrival = { family = "exponential", rate = 0.5 }
service = { family = "exponential", rate = 1.0 }
n = 1
"""


def test_minimal_config():
    cfg = parse_config(MINIMAL)
    m = cfg.model.build()
    assert m.n == 1 and m.rho == pytest.approx(0.5) and m.mode is Mode.MODIFIED
    assert cfg.run.seeds == [cfg.run.seeds[0]] and cfg.run.events == 10_000_000
    assert len(cfg.source_hash) == 16


def test_rho_rescales_arrivals():
    cfg = parse_config(MINIMAL.replace("n = 1", "n = 4\nrho = 0.9"))
    assert cfg.model.build().rho == pytest.approx(0.9, abs=1e-12)


def test_hash_tracks_text():
    assert parse_config(MINIMAL).source_hash != parse_config(MINIMAL + "\n").source_hash


@pytest.mark.parametrize("text,needle", [
    (MINIMAL.replace('"exponential", rate = 0.5', '"weibul", rate = 0.5'), "arrival"),
    (MINIMAL.replace("n = 1", "n = 0"), "'n'"),
    (MINIMAL + "[run]\nevents = -3\n", "events"),
    (MINIMAL + "[run]\nevents = 10\nwarmup = 10\n", "warmup"),
    (MINIMAL + "[run]\nbogus = 1\n", "bogus"),
    (MINIMAL.replace("n = 1", "n = 1\nmode = \"fancy\""), "mode"),
    (MINIMAL.replace("n = 1", "n = 1\nrho = 1.5"), "rho"),
    (MINIMAL + "[run]\ntrack_loo = \"all\"\n", "track_loo"),
    (MINIMAL + "[run]\nseeds = [1, 1]\n", "seeds"),
    (MINIMAL.replace('"bounds"]', '"bounds", "sweep"]'), "sweep"),
    (MINIMAL.replace('"bounds"]', '"fly"]'), "fly"),
    ("[model\n", "TOML"),
])
def test_config_errors_name_the_field(text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config(text)


def test_shipped_configs_parse():
    from pathlib import Path

    for p in sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.toml")):
        cfg = load_config(p)
        cfg.model.build()
