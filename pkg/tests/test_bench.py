import csv
import io
import json
from dataclasses import replace

import pytest

from hfmdvrp import bench
from hfmdvrp.bench import BenchError, ExperimentConfig, run_experiment
from hfmdvrp.datagen import GenSpec, random_cvrp_base
from hfmdvrp.io import parse_instance, parse_solution, write_instance
from hfmdvrp.model import Family, validate_solution


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def base_file(tmp_path):
    path = tmp_path / "base.vrp"
    path.write_text(write_instance(random_cvrp_base(30, 3, 4)))
    return path


def test_counting_contract(base_file, tmp_path):
    cfg = ExperimentConfig([base_file], variations=3, base_seed=1, output=tmp_path / "out", families=[Family.SMT])
    res = run_experiment(cfg)
    assert len(res.runs) == 6 and len(res.summary) == 2
    assert len(rows(res.runs_csv())) == 6 and len(rows(res.summary_csv())) == 2
    assert {r.algorithm for r in res.summary} == {"done-cpta", "a-ncar"}
    assert all(s.variations == 3 for s in res.summary)
    assert len(res.comparisons) == 1


def test_same_seed_same_bytes(base_file, tmp_path):
    outs = []
    for name in ("a", "b"):
        cfg = ExperimentConfig(
            [base_file], variations=4, base_seed=17, output=tmp_path / name, families=[Family.SMT, Family.WMT]
        )
        run_experiment(cfg)
        outs.append(tmp_path / name)
    for f in ("runs.csv", "summary.csv", "comparison.csv", "meta.json"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
    for inst in (outs[0] / "instances").iterdir():
        assert inst.read_bytes() == (outs[1] / "instances" / inst.name).read_bytes()


def test_different_seed_different_instances(base_file, tmp_path):
    a = run_experiment(ExperimentConfig([base_file], variations=2, base_seed=1, families=[Family.SMT]))
    b = run_experiment(ExperimentConfig([base_file], variations=2, base_seed=2, families=[Family.SMT]))
    assert a.runs_csv() != b.runs_csv()


def test_rows_match_solution_files(base_file, tmp_path):
    out = tmp_path / "out"
    run_experiment(ExperimentConfig([base_file], variations=2, base_seed=3, output=out, families=list(Family)))
    for row in rows((out / "runs.csv").read_text()):
        sol = parse_solution((out / row["solution_file"]).read_text())
        inst_file = row["solution_file"].replace("solutions/", "instances/").rsplit("-", 2)[0] + ".vrp"
        inst = parse_instance((out / inst_file).read_text())
        assert validate_solution(inst, sol).ok
        assert float(row["total_cost"]) == sol.total_cost
        assert int(row["seed"]) == sol.seed
    meta = json.loads((out / "meta.json").read_text())
    assert "solver time only" in meta["timing"]
    timing = rows((out / "timing.csv").read_text())
    assert len(timing) == 2 * 2 * 4 and all(float(t["wall_time"]) >= 0 for t in timing)


def test_optimum_column_on_tiny_instances(tmp_path):
    base = random_cvrp_base(6, 2, 11)
    res = run_experiment(ExperimentConfig([GenSpec(base, Family.SMT, 0)], variations=4, base_seed=5))
    assert all(r.optimum is not None for r in res.runs)
    for r in res.runs:
        assert r.total_cost >= r.optimum * (1 - 1e-9)
    assert all(s.mean_optimum is not None for s in res.summary)
    assert "mean_optimum" in res.summary_csv().splitlines()[0]


def test_no_optimum_on_larger_instances(base_file):
    res = run_experiment(ExperimentConfig([base_file], variations=1, families=[Family.WMT]))
    assert all(r.optimum is None for r in res.runs)
    assert rows(res.runs_csv())[0]["optimum"] == ""


def test_fixed_instance_source(tmp_path):
    inst = random_cvrp_base(20, 2, 1)
    res = run_experiment(ExperimentConfig([inst], algorithms=["done-cpta"], variations=2))
    assert [r.source for r in res.runs] == ["X-n21-k2", "X-n21-k2"]
    assert res.runs[0].total_cost == res.runs[1].total_cost


def test_validation_failure_names_seed(base_file, monkeypatch):
    real = bench.solve

    def broken(inst):
        sol = real(inst)
        return replace(sol, total_cost=sol.total_cost + 1)

    monkeypatch.setattr(bench, "solve", broken)
    cfg = ExperimentConfig([base_file], algorithms=["done-cpta"], variations=2, base_seed=8, families=[Family.SMT])
    with pytest.raises(BenchError) as err:
        run_experiment(cfg)
    assert err.value.seed == bench.derive_seed(8, 0)
    assert f"seed {err.value.seed}" in str(err.value)


def test_config_checks(base_file):
    with pytest.raises(ValueError):
        ExperimentConfig([base_file], variations=0)
    with pytest.raises(ValueError):
        ExperimentConfig([base_file], algorithms=["magic"])


def test_duplicate_sources_get_distinct_labels(base_file):
    res = run_experiment(ExperimentConfig([base_file, base_file], algorithms=["a-ncar"], variations=1, families=[Family.XMT]))
    assert len({r.source for r in res.runs}) == 2


def test_csv_schema_header(base_file):
    res = run_experiment(ExperimentConfig([base_file], variations=1, families=[Family.RMT]))
    header = res.runs_csv().splitlines()[0].split(",")
    assert header[0] == "schema_version"
    assert "wall_time" not in header
    assert "mean_wall_time" not in res.summary_csv().splitlines()[0]
    assert res.runs_csv().endswith("\n") and "\r" not in res.runs_csv()
