import json

import numpy as np

from skgibbs.cli import main
from skgibbs.instance import SkInstance
from skgibbs.oracle import exact_summary
from skgibbs.pipeline import PipelineConfig


def test_gen_and_oracle_roundtrip(tmp_path, capsys):
    inst_path = str(tmp_path / "inst.json")
    assert main(["gen", "--n", "5", "--beta", "0.3", "--seed", "4",
                 "--out", inst_path]) == 0
    inst = SkInstance.load(inst_path)
    assert inst.n == 5 and inst.beta == 0.3

    out_path = str(tmp_path / "summary.json")
    assert main(["oracle", "--instance", inst_path, "--out", out_path]) == 0
    summary = json.loads(open(out_path).read())
    ref = exact_summary(inst, np.zeros(5))
    assert np.isclose(summary["logZ"], ref.logZ)
    assert np.allclose(summary["m"], ref.m)


def test_oracle_with_explicit_tilt(tmp_path):
    out_path = str(tmp_path / "s.json")
    assert main(["oracle", "--n", "3", "--beta", "0.2", "--seed", "1",
                 "--tilt", "0.5,-0.5,1.0", "--out", out_path]) == 0
    inst = SkInstance.generate(3, 0.2, 1)
    ref = exact_summary(inst, np.array([0.5, -0.5, 1.0]))
    assert np.isclose(json.loads(open(out_path).read())["logZ"], ref.logZ)


def test_config_error_exit_codes(tmp_path):
    # missing instance spec
    assert main(["oracle"]) == 2
    # tilt length mismatch
    assert main(["oracle", "--n", "3", "--beta", "0.2", "--tilt", "1,2"]) == 2
    # sample without config
    assert main(["sample"]) == 2
    # malformed config file
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["sample", "--config", str(bad)]) == 2
    # missing file
    assert main(["sample", "--config", str(tmp_path / "nope.json")]) == 2
    # unknown subcommand
    assert main(["frobnicate"]) == 2


def test_walk_subcommand(tmp_path):
    out_path = str(tmp_path / "walk.json")
    assert main(["walk", "--n", "5", "--beta", "0.3", "--seed", "2",
                 "--radius", "2", "--steps", "100", "--out", out_path]) == 0
    sigma = np.array(json.loads(open(out_path).read())["sigma"])
    assert sigma.shape == (5,) and np.all(np.abs(sigma) == 1)
    assert np.count_nonzero(sigma != 1) <= 2


def test_estimate_z_subcommand(tmp_path):
    out_path = str(tmp_path / "z.json")
    assert main(["estimate-z", "--n", "4", "--beta", "0.2", "--seed", "3",
                 "--radius", "2", "--samples", "32", "--repeats", "2",
                 "--out", out_path]) == 0
    payload = json.loads(open(out_path).read())
    assert np.isfinite(payload["log_z"])
    assert payload["diagnostics"]["ladder_len"] == 17


def test_diagnose_subcommand(tmp_path):
    out_path = str(tmp_path / "d.json")
    assert main(["diagnose", "wedge", "--t", "1.0", "--trials", "200",
                 "--seed", "5", "--out", out_path]) == 0
    rep = json.loads(open(out_path).read())
    assert rep["statistic"] == "wedge_concentration"

    out2 = str(tmp_path / "d2.json")
    assert main(["diagnose", "magnetization", "--n", "4", "--beta", "0.2",
                 "--t", "0.5", "--trials", "8", "--seed", "6",
                 "--out", out2]) == 0
    assert json.loads(open(out2).read())["statistic"] == "magnetization_error"


def test_sample_subcommand_deterministic(tmp_path):
    cfg = PipelineConfig(
        n=4, beta=0.2, instance_seed=1, num_samples=8, seed=3,
        horizon=0.5, eta=0.05, anneal_samples=8, anneal_repeats=2,
        anneal_walk_steps=4, anneal_burn_in=8, anneal_ladder_len=5,
        c1=1.0, c2=1.0, calibration_draws=256, chunk_size=256, walk_steps=40,
    )
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(cfg.to_json())
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert main(["sample", "--config", str(cfg_path), "--out", a]) == 0
    assert main(["sample", "--config", str(cfg_path), "--out", b]) == 0
    assert open(a).read() == open(b).read()
    rows = open(a).read().strip().splitlines()
    assert len(rows) == 9   # header + 8 samples
