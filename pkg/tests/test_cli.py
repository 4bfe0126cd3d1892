"""Command line contract: exit codes, caching, determinism, report merging."""

import json

import numpy as np
import pytest

from kronchaos.arrayio import save_matrix_csv
from kronchaos.cli import EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, main


@pytest.fixture
def id4(tmp_path):
    path = tmp_path / "id4.csv"
    save_matrix_csv(path, np.eye(4))
    return path


def run(*argv):
    return main([str(a) for a in argv])


def test_bounds_identity(tmp_path, id4, capsys):
    cache = tmp_path / "cache"
    code = run("bounds", "--matrix", id4, "--dims", "2,2", "--p", "2,4,8",
               "--cache", cache)
    assert code == EXIT_OK
    slot = next(cache.iterdir())
    report = json.loads((slot / "report.json").read_text())
    assert set(report["mp_main"]) == {"2", "4", "8"}
    assert report["mp_main"]["2"] > 0
    assert (slot / "report.csv").exists()
    assert (slot / "runinfo.json").exists()
    # m_p table rows present for every proper reduction subset
    eyes = {row["I"] for row in report["norm_rows"]}
    assert eyes == {"{}", "{1}", "{2}"}


def test_bounds_missing_file(tmp_path):
    assert run("bounds", "--matrix", tmp_path / "nope.csv", "--dims", "2,2",
               "--cache", tmp_path / "c") == EXIT_USAGE


def test_bounds_dims_mismatch(tmp_path, id4):
    assert run("bounds", "--matrix", id4, "--dims", "2,3",
               "--cache", tmp_path / "c") == EXIT_USAGE


def test_bounds_bad_dims_string(tmp_path, id4):
    assert run("bounds", "--matrix", id4, "--dims", "2,x",
               "--cache", tmp_path / "c") == EXIT_USAGE


def test_verify_identities(tmp_path):
    assert run("verify", "identities", "--seed", 7, "--cache", tmp_path / "c") == EXIT_OK


def test_verify_unknown_suite(tmp_path):
    assert run("verify", "nonsense", "--cache", tmp_path / "c") == EXIT_USAGE


def test_verify_decoupling_random_matrix(tmp_path):
    code = run("verify", "decoupling", "--dims", "2,2", "--dist", "gaussian",
               "--p", "2", "--samples", "5000", "--seed", "1", "--cache", tmp_path / "c")
    assert code == EXIT_OK


def test_verify_main_lower_dist_restriction(tmp_path):
    assert run("verify", "main-lower", "--dims", "2,2", "--dist", "rademacher",
               "--cache", tmp_path / "c") == EXIT_USAGE


def test_verify_exit_on_violation(tmp_path, id4):
    # an impossible ceiling forces a main-upper failure
    code = run("verify", "main-upper", "--matrix", id4, "--dims", "2,2",
               "--p", "2", "--samples", "2000", "--ceiling", "1e-9",
               "--cache", tmp_path / "c")
    assert code == EXIT_VIOLATION


def test_report_json_byte_identical_across_runs(tmp_path):
    argv = ["verify", "decoupling", "--dims", "2,2", "--dist", "gaussian",
            "--p", "2", "--samples", "2000", "--seed", "3"]
    run(*argv, "--cache", tmp_path / "A")
    run(*argv, "--cache", tmp_path / "B")
    a = next((tmp_path / "A").iterdir()) / "report.json"
    b = next((tmp_path / "B").iterdir()) / "report.json"
    assert a.read_bytes() == b.read_bytes()


def test_cache_reuse_same_slot(tmp_path, capsys):
    argv = ["verify", "identities", "--seed", "1", "--cache", tmp_path / "c"]
    run(*argv)
    first = capsys.readouterr().out
    run(*argv)
    second = capsys.readouterr().out
    assert "written to" in first
    assert "cached at" in second
    assert len(list((tmp_path / "c").iterdir())) == 1


def test_different_config_different_slot(tmp_path):
    run("verify", "identities", "--seed", "1", "--cache", tmp_path / "c")
    run("verify", "identities", "--seed", "2", "--cache", tmp_path / "c")
    assert len(list((tmp_path / "c").iterdir())) == 2


def test_report_merging_and_corrupt_entry(tmp_path, capsys):
    cache = tmp_path / "c"
    run("verify", "identities", "--seed", "1", "--cache", cache)
    run("verify", "hanson-wright", "--n", "4", "--samples", "2000", "--seed", "2",
        "--cache", cache)
    bad = cache / "deadbeef0000"
    bad.mkdir()
    (bad / "report.json").write_text("{ not json")
    assert run("report", "--cache", cache) == EXIT_OK
    out = capsys.readouterr()
    assert "identities" in out.out and "hanson-wright" in out.out
    assert "deadbeef0000" in out.err  # corrupt entry skipped with a warning
    assert "fitted-constant history" in out.out


def test_report_empty_cache(tmp_path):
    (tmp_path / "c").mkdir()
    assert run("report", "--cache", tmp_path / "c") == EXIT_USAGE
    assert run("report", "--cache", tmp_path / "missing") == EXIT_USAGE


def test_cache_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("KRONCHAOS_CACHE", str(tmp_path / "envcache"))
    run("verify", "identities", "--seed", "4")
    assert (tmp_path / "envcache").exists()


def test_gaussian_decoupling_vector_flag(tmp_path):
    code = run("verify", "gaussian-decoupling", "--vector", "1,0,0",
               "--samples", "5000", "--seed", "1", "--cache", tmp_path / "c")
    assert code == EXIT_OK


def test_bounds_rectangular_matrix(tmp_path):
    path = tmp_path / "rect.csv"
    save_matrix_csv(path, np.random.default_rng(0).standard_normal((2, 4)))
    code = run("bounds", "--matrix", path, "--dims", "2,2", "--t", "0.5,1",
               "--cache", tmp_path / "c")
    assert code == EXIT_OK
    report = json.loads(next((tmp_path / "c").iterdir()).joinpath("report.json").read_text())
    assert report["mp_main"] == {}
    assert report["mp_norm"]
    assert report["tail_curve"]
    assert any("not square" in w for w in report["warnings"])
