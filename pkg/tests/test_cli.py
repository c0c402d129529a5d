from __future__ import annotations

import csv
import json
import pathlib

import pytest

from focalfield import cli, scattering

CONFIGS = pathlib.Path(__file__).resolve().parents[1] / "configs"
QUICK = CONFIGS / "quick.json"


@pytest.fixture
def cache_env(monkeypatch, tmp_path):
    monkeypatch.setenv("FOCALFIELD_CACHE", str(tmp_path / "cache"))
    return tmp_path / "cache"


@pytest.fixture
def counted(monkeypatch):
    calls = []
    original = scattering.extinction_point

    def wrapper(*args, **kwargs):
        calls.append(args[:2])
        return original(*args, **kwargs)

    monkeypatch.setattr(scattering, "extinction_point", wrapper)
    return calls


def run(*args):
    return cli.main([str(a) for a in args])


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    return list(csv.reader(lines[1:]))


def test_sweep_temperature_outputs(cache_env, tmp_path):
    out = tmp_path / "out"
    assert run("sweep-temperature", "--config", QUICK, "--out", out, "--svg", "--threads", 1) == 0
    rows = read_csv(out / "sweep_temperature.csv")
    assert rows[0] == ["x", "epsilon", "eps_lo", "eps_hi"]
    values = [[float(v) for v in r] for r in rows[1:]]
    assert len(values) == 5
    assert all(lo <= e <= hi for _, e, lo, hi in values)
    assert all(a[1] > b[1] for a, b in zip(values, values[1:]))
    side = json.loads((out / "sweep_temperature.json").read_text())
    assert side["records"] == 5 and "created_utc" in side["provenance"]
    svg = (out / "sweep_temperature.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<dc:date>" not in svg


def test_second_run_hits_cache(cache_env, tmp_path, counted):
    assert run("sweep-temperature", "--config", QUICK, "--out", tmp_path / "a") == 0
    first = len(counted)
    assert first > 0
    assert run("sweep-temperature", "--config", QUICK, "--out", tmp_path / "b") == 0
    assert len(counted) == first


def test_no_cache_flag_rebuilds(cache_env, tmp_path, counted):
    run("sweep-temperature", "--config", QUICK, "--out", tmp_path / "a", "--no-cache")
    first = len(counted)
    run("sweep-temperature", "--config", QUICK, "--out", tmp_path / "b", "--no-cache")
    assert len(counted) == 2 * first
    assert not cache_env.exists()


def test_changed_waist_misses_cache(cache_env, tmp_path):
    data = json.loads(QUICK.read_text())
    run("sweep-temperature", "--config", QUICK, "--out", tmp_path / "a")
    data["optics"]["focusing"] = 0.3
    other = tmp_path / "other.json"
    other.write_text(json.dumps(data))
    run("sweep-temperature", "--config", other, "--out", tmp_path / "b")
    assert len(list(cache_env.glob("*.extgrid"))) == 2


def test_corrupted_cache_is_rebuilt(cache_env, tmp_path):
    assert run("sweep-temperature", "--config", QUICK, "--out", tmp_path / "a") == 0
    (path,) = cache_env.glob("*.extgrid")
    data = bytearray(path.read_bytes())
    data[-5] ^= 0x55
    path.write_bytes(bytes(data))
    assert run("sweep-temperature", "--config", QUICK, "--out", tmp_path / "b") == 0
    assert (tmp_path / "a" / "sweep_temperature.csv").read_bytes() == \
        (tmp_path / "b" / "sweep_temperature.csv").read_bytes()


def test_identical_runs_are_byte_identical(cache_env, tmp_path):
    for name in ("a", "b"):
        assert run("sweep-temperature", "--config", QUICK, "--out", tmp_path / name, "--no-cache") == 0
    a, b = tmp_path / "a", tmp_path / "b"
    assert (a / "sweep_temperature.csv").read_bytes() == (b / "sweep_temperature.csv").read_bytes()
    side_a = json.loads((a / "sweep_temperature.json").read_text())
    side_b = json.loads((b / "sweep_temperature.json").read_text())
    side_a.pop("provenance"), side_b.pop("provenance")
    assert side_a == side_b


def test_fit_reports_heating_chain(cache_env, tmp_path, capsys):
    assert run("fit", "--config", QUICK, "--out", tmp_path, "--measured", 0.19) == 0
    out = capsys.readouterr().out
    assert "T_fit" in out and "heating dT = 42.55 uK" in out
    side = json.loads((tmp_path / "fit.json").read_text())
    assert side["parameters"]["heating_delta_T_K"] == pytest.approx(42.55e-6, rel=1e-3)


def test_fit_out_of_range_exit_code(cache_env, tmp_path):
    assert run("fit", "--config", QUICK, "--out", tmp_path, "--measured", 0.5) == 4
    assert not (tmp_path / "fit.csv").exists()


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"optics": {"focusing": -1}}')
    assert run("point", "--config", bad, "--out", tmp_path) == 2
    assert run("point", "--config", tmp_path / "missing.json") == 2


def test_non_convergence_exit_code(tmp_path):
    cfg = tmp_path / "tight.json"
    cfg.write_text(json.dumps({"quadrature": {"max_panels": 2, "relative_tolerance": 1e-14}}))
    assert run("point", "--config", cfg, "--out", tmp_path / "o", "--x-m", 3e-7) == 3


def test_point_matches_library(tmp_path, capsys, cfg029):
    assert run("point", "--out", tmp_path, "--x-m", 3e-7, "--z-offset-m=-5e-7") == 0
    rows = read_csv(tmp_path / "point.csv")
    expected = scattering.extinction_point(3e-7, cfg029.focal_length - 5e-7, cfg029)
    assert float(rows[1][1]) == expected


def test_sweep_focusing_orders_curves(cache_env, tmp_path):
    assert run("sweep-focusing", "--config", QUICK, "--out", tmp_path, "--svg") == 0
    cold = [[float(v) for v in r] for r in read_csv(tmp_path / "sweep_focusing_T0uK.csv")[1:]]
    warm = [[float(v) for v in r] for r in read_csv(tmp_path / "sweep_focusing_T10uK.csv")[1:]]
    assert [r[0] for r in cold] == pytest.approx([0.25, 0.3, 0.35])
    assert all(c[1] > w[1] for c, w in zip(cold, warm))
    assert (tmp_path / "sweep_focusing.svg").exists()


def test_verify_detects_tampering(cache_env, tmp_path, capsys):
    run("sweep-temperature", "--config", QUICK, "--out", tmp_path)
    assert run("verify", "--out", tmp_path, "--config", QUICK) == 0
    assert run("verify", "--out", tmp_path, "--config", CONFIGS / "default.json") == 1
    path = tmp_path / "sweep_temperature.csv"
    path.write_text(path.read_text().replace("0.2", "0.3", 1))
    assert run("verify", "--out", tmp_path) == 1
    assert "digest" in capsys.readouterr().out


def test_verify_empty_directory(tmp_path):
    assert run("verify", "--out", tmp_path) == 1
