import json
import os

import pytest

import wdose


@pytest.fixture(scope="module")
def cohort():
    return wdose.generate_cohort(8, seed=21)


def test_cohort_is_reproducible(cohort):
    assert wdose.generate_cohort(8, seed=21) == cohort
    assert len(cohort) == 8
    assert all(18 <= p["age"] <= 100 for p in cohort)
    assert "latent" in cohort[0]


def test_reward_and_sensitivity():
    assert wdose.reward([1.0, 2.0]) == -10.0
    assert wdose.reward([2.5] * 5) == 0.0
    assert wdose.sensitivity("*1/*1", "G/G") == "normal"
    assert wdose.sensitivity("*3/*3", "A/A") == "highly_sensitive"
    with pytest.raises(ValueError):
        wdose.sensitivity("*9/*9", "G/G")


def test_pttr():
    assert wdose.pttr_daily([2.5, 1.0, 2.0, 3.5]) == 0.5
    assert wdose.pttr_rosendaal([(0, 1.5), (10, 2.5)], 10) == 0.5
    with pytest.raises(wdose.DomainError):
        wdose.pttr_rosendaal([(1, 2.0)], 90)


def test_simulation_rises_with_dose(cohort):
    inrs = wdose.simulate(cohort[0], [6.0] * 30)
    assert len(inrs) == 31
    assert inrs[-1] > inrs[0]
    assert wdose.simulate(cohort[0], [0.0] * 5) == [inrs[0]] * 6


def test_baselines(cohort):
    assert wdose.baseline_names() == ["AAA", "CAA", "PGAA", "PGPGA", "PGPGI"]
    for name in wdose.baseline_names():
        t = wdose.run_baseline(name, cohort[1])
        assert t["policy"] == name
        assert len(t["latent_inrs"]) == 90
        r = wdose.patient_report(t, "normal")
        assert 0.0 <= r["pttr_daily"] <= 1.0
    with pytest.raises(wdose.ConfigError):
        wdose.run_baseline("XYZ", cohort[1])


def test_cli_pipeline(tmp_path, cohort):
    path = tmp_path / "c.jsonl"
    code, out, _ = wdose.run_cli("generate", "--n", 12, "--seed", 3, "--out", path)
    assert code == 0
    assert len(path.read_text().splitlines()) == 12

    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"hidden": [8], "validation_size": 100}))
    code, _, err = wdose.run_cli("train", "--config", cfg, "--epochs", 1,
                                 "--cohort-size", 4, "--out", tmp_path / "run")
    assert code == 0, err
    ckpt = tmp_path / "run" / "best_checkpoint.json"
    t = wdose.run_checkpoint(ckpt, cohort[2])
    assert len(t["decisions"]) == 14

    code, _, _ = wdose.run_cli("evaluate", "--policy", "AAA", "--cohort", path,
                               "--out", tmp_path / "aaa")
    assert code == 0
    assert wdose.run_cli("evaluate", "--policy", "nope", "--cohort", path,
                         "--out", tmp_path / "x")[0] == 2
    assert wdose.run_cli("bogus")[0] == 2


def test_data_directory_is_readable():
    data = os.environ.get("WDOSE_DATA_DIR")
    if not data:
        pytest.skip("data directory not provided")
    with open(os.path.join(data, "composites.json")) as f:
        names = [c["name"] for c in json.load(f)]
    assert names == wdose.baseline_names()
