import json

import pytest

from explab.cli import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK, build_parser, main
from explab.config import (
    GroupSpec,
    HomSpec,
    RunConfig,
    load_config_file,
    merged_config,
    parse_group_flag,
    parse_hom_flag,
)


# ----------------------------------------------------------------------
# config parsing
# ----------------------------------------------------------------------


def test_parse_group_flag():
    spec = parse_group_flag("schottky:k=2,t=3")
    assert spec.kind == "schottky_symmetric" and spec.k == 2 and spec.t == 3.0
    assert parse_group_flag("schottky").k == 2
    with pytest.raises(ValueError):
        parse_group_flag("euclidean:k=2")
    with pytest.raises(ValueError):
        parse_group_flag("schottky:q=1")


def test_parse_hom_flag():
    assert parse_hom_flag("abelianization").kind == "abelianization"
    assert parse_hom_flag("abel").kind == "abelianization"
    assert parse_hom_flag("trivial").kind == "trivial"
    spec = parse_hom_flag("mod:2:1,0")
    assert spec.kind == "mod" and spec.modulus == 2 and spec.images == [1, 0]
    with pytest.raises(ValueError):
        parse_hom_flag("quaternionic")
    with pytest.raises(ValueError):
        parse_hom_flag("mod:")


def test_group_spec_validation():
    with pytest.raises(ValueError):
        GroupSpec(k=1)
    with pytest.raises(ValueError):
        GroupSpec(k=27)  # ASCII word format caps the rank
    with pytest.raises(ValueError):
        GroupSpec(t=0.0)
    with pytest.raises(ValueError):
        GroupSpec(kind="matrices").build()


def test_group_spec_matrices_kind(group):
    spec = GroupSpec(
        kind="matrices",
        generators=[list(g.to_floats()) for g in group.generators],
    )
    rebuilt = spec.build()
    assert rebuilt.generators == group.generators
    assert spec.describe() == "matrices:k=2"


def test_hom_spec_build(group):
    hom = HomSpec(kind="mod", modulus=2, images=[1, 0]).build(2)
    assert hom.image_of_code(0) == 1
    with pytest.raises(ValueError):
        HomSpec(kind="mod").build(2)
    with pytest.raises(ValueError):
        HomSpec(kind="mod", modulus=2, images=[1]).build(2)


def test_empty_config_gives_defaults(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("")
    cfg = load_config_file(path)
    assert cfg.group.k == 2 and cfg.group.t == 3.0 and cfg.L == 10
    assert cfg.hom.kind == "abelianization" and cfg.h0 == "abAB"


def test_config_rejects_unknown_and_malformed(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"mystery": 3}))
    with pytest.raises(Exception):
        load_config_file(bad)
    malformed = tmp_path / "malformed.json"
    malformed.write_text(json.dumps({"t": "x", "group": {"kind": "schottky_symmetric"}}))
    with pytest.raises(Exception):
        load_config_file(malformed)


def test_flag_overrides_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"L": 4, "group": {"kind": "schottky_symmetric", "t": 4.0}}))
    cfg = merged_config(path, {"L": 6, "workers": None})
    assert cfg.L == 6  # flag wins
    assert cfg.group.t == 4.0  # file survives where no flag given


def test_run_config_validators():
    with pytest.raises(Exception):
        RunConfig(L=0)
    with pytest.raises(Exception):
        RunConfig(h0="a$b")


# ----------------------------------------------------------------------
# CLI end to end (in-process service)
# ----------------------------------------------------------------------


def run_cli(*argv):
    return main(list(argv))


def test_estimate_delta_writes_delta_json(tmp_path):
    out = tmp_path / "run"
    code = run_cli(
        "estimate-delta", "--group", "schottky:k=2,t=3", "--L", "6", "--out", str(out)
    )
    assert code == EXIT_OK
    data = json.loads((out / "delta.json").read_text())
    assert data["method"] == "pressure_root"
    assert data["cutoff"] == 6
    assert 0.36 < data["value"] < 1.0


def test_estimate_delta_counting_method(tmp_path):
    out = tmp_path / "run"
    code = run_cli(
        "estimate-delta", "--L", "7", "--method", "counting", "--out", str(out)
    )
    assert code == EXIT_OK
    assert json.loads((out / "delta.json").read_text())["method"] == "counting_regression"


def test_verify_lemmas_manifest(tmp_path):
    out = tmp_path / "run"
    code = run_cli(
        "verify-lemmas", "--all", "--L", "4", "--samples", "200", "--out", str(out)
    )
    assert code == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["all_passed"]
    assert len(manifest["checks"]) == 4


def test_subgroup_delta_cli(tmp_path):
    out = tmp_path / "run"
    code = run_cli(
        "subgroup-delta", "--hom", "mod:2:1,0", "--L", "8", "--out", str(out)
    )
    assert code == EXIT_OK
    data = json.loads((out / "delta.json").read_text())
    assert data["method"] == "counting_regression"


def test_fiber_stats_cli(tmp_path):
    out = tmp_path / "run"
    code = run_cli("fiber-stats", "--h0", "abAB", "--L", "5", "--out", str(out))
    assert code == EXIT_OK
    data = json.loads((out / "fiber.json").read_text())
    assert data["within_bound"]


def test_injection_scan_cli(tmp_path):
    out = tmp_path / "run"
    code = run_cli(
        "injection-scan", "--case", "free", "--h0", "abAB", "--L", "5", "--out", str(out)
    )
    assert code == EXIT_OK
    data = json.loads((out / "injection.json").read_text())
    assert data["scanned"] == 485 and data["injective_on_scan"]


def test_injection_scan_malnormal_refusal_exits_one():
    code = run_cli(
        "injection-scan", "--case", "malnormal", "--h1", "aa", "--h2", "bb",
        "--L", "3", "--hom", "trivial",
    )
    assert code == EXIT_CHECK_FAILED


def test_report_writes_all_outputs(tmp_path):
    out = tmp_path / "run"
    code = run_cli(
        "report", "--L", "5", "--samples", "200", "--theorem-L", "8",
        "--out", str(out),
    )
    assert code == EXIT_OK
    assert (out / "manifest.json").exists()
    assert (out / "delta.json").exists()
    lines = (out / "orbit.csv").read_text().splitlines()
    assert lines[0] == "word,displacement"
    assert len(lines) == 2 + sum(4 * 3 ** (l - 1) for l in range(1, 6))


def test_reports_byte_identical_across_worker_counts(tmp_path):
    out1, out2 = tmp_path / "w1", tmp_path / "w2"
    for out, workers in ((out1, "1"), (out2, "2")):
        code = run_cli(
            "report", "--L", "4", "--samples", "100", "--theorem-L", "7",
            "--workers", workers, "--out", str(out),
        )
        assert code == EXIT_OK
    for name in ("manifest.json", "delta.json", "orbit.csv"):
        b1 = (out1 / name).read_bytes()
        b2 = (out2 / name).read_bytes()
        if name == "manifest.json":
            # the config echo records the requested worker count; strip it
            d1 = json.loads(b1)
            d2 = json.loads(b2)
            d1["config"].pop("workers")
            d2["config"].pop("workers")
            assert d1 == d2
        else:
            assert b1 == b2


def test_reports_byte_identical_across_reruns(tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    for out in (out1, out2):
        code = run_cli(
            "verify-lemmas", "--L", "4", "--samples", "150", "--out", str(out)
        )
        assert code == EXIT_OK
    assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()


def test_malformed_config_exits_two(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"t": "x"}))
    code = run_cli("estimate-delta", "--config", str(path))
    assert code == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "t" in err


def test_unknown_config_key_exits_two(tmp_path, capsys):
    path = tmp_path / "unknown.json"
    path.write_text(json.dumps({"mystery": 1}))
    code = run_cli("estimate-delta", "--config", str(path))
    assert code == EXIT_CONFIG
    assert "mystery" in capsys.readouterr().err


def test_missing_config_file_exits_two():
    assert run_cli("estimate-delta", "--config", "/nonexistent.json") == EXIT_CONFIG


def test_bad_flag_value_exits_two():
    assert run_cli("estimate-delta", "--group", "schottky:t=nope") == EXIT_CONFIG


def test_unknown_subcommand_exits_two():
    with pytest.raises(SystemExit) as err:
        build_parser().parse_args(["frobnicate"])
    assert err.value.code == 2


def test_env_fallback_for_workers(tmp_path, monkeypatch):
    monkeypatch.setenv("EXPLAB_WORKERS", "2")
    out = tmp_path / "env"
    assert run_cli("estimate-delta", "--L", "5", "--out", str(out)) == EXIT_OK
