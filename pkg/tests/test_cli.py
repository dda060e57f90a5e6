import csv
import io
import json

import pytest

from twoway_qkd import cli


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# twoway-qkd ") and "config_sha256=" in lines[0]
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_scan_requires_a_scheme(capsys):
    code, out, err = run(["scan", "--to", "2"], capsys)
    assert code == cli.EXIT_USAGE and "scheme" in err and out == ""


def test_unknown_scheme_lists_valid_names(capsys):
    code, _, err = run(["scan", "--scheme", "magic"], capsys)
    assert code == cli.EXIT_USAGE and "oneway" in err and "recurrence" in err


def test_bad_range_is_usage_error(capsys):
    assert run(["scan", "--scheme", "oneway", "--step", "0"], capsys)[0] == cli.EXIT_USAGE
    assert run(["scan", "--scheme", "oneway", "--from", "5", "--to", "1"], capsys)[0] == cli.EXIT_USAGE


def test_scan_rows_sorted_and_coarse_subset_of_fine(capsys):
    args = ["scan", "--scheme", "recurrence", "--scheme", "oneway", "--from", "100", "--to", "102"]
    code, coarse, _ = run(args + ["--step", "1"], capsys)
    assert code == 0
    _, fine, _ = run(args + ["--step", "0.5"], capsys)
    rows_c = parse_csv(coarse)
    rows_f = {(r["distance_km"], r["scheme"]): r for r in parse_csv(fine)}
    assert [(r["distance_km"], r["scheme"]) for r in rows_c] == [
        (d, s) for d in ("100", "101", "102") for s in ("oneway", "recurrence")
    ]
    for r in rows_c:
        assert rows_f[(r["distance_km"], r["scheme"])] == r


def test_scan_bit_identical_across_workers(capsys):
    args = ["scan", "--scheme", "bsteps:1", "--from", "0", "--to", "30", "--step", "10"]
    one = run(args, capsys)[1]
    two = run(args + ["--workers", "2"], capsys)[1]
    assert one == two


def test_bounds_csv_and_json(capsys):
    code, out, _ = run(["bounds", "--to", "20", "--step", "10"], capsys)
    assert code == 0
    assert "distance_upper_km=207.68015798" in out.splitlines()[0]
    rows = parse_csv(out)
    assert [r["distance_km"] for r in rows] == ["0", "10", "20"]
    code, out, _ = run(["bounds", "--to", "0", "--format", "json"], capsys)
    doc = json.loads(out)
    assert doc["distance_upper_km"] == pytest.approx(207.68, abs=0.01)
    assert doc["columns"] == list(cli.BOUNDS_COLUMNS) and len(doc["rows"]) == 1


def test_bounds_from_config_file(tmp_path, capsys):
    cfg = {"channel": {"alpha_db_per_km": 0.21, "eta_bob": 0.045, "e_d": 0.033, "y0": 0.0}, "to": 0}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run(["bounds", "--config", str(path)], capsys)
    assert code == 0 and "distance_upper_km=unbounded" in out
    path.write_text(json.dumps({**cfg, "channel": {**cfg["channel"], "e_d": 0.3}}))
    assert run(["bounds", "--config", str(path)], capsys)[0] == cli.EXIT_FAIL
    path.write_text(json.dumps({"colour": 1}))
    assert run(["bounds", "--config", str(path)], capsys)[0] == cli.EXIT_USAGE


def test_config_hash_tracks_inputs(capsys):
    a = run(["bounds", "--to", "0"], capsys)[1].splitlines()[0]
    b = run(["bounds", "--to", "0"], capsys)[1].splitlines()[0]
    c = run(["bounds", "--to", "0", "--f-ec", "1.1"], capsys)[1].splitlines()[0]
    assert a == b and a != c


def test_boundary_without_steps_is_hashing_region(capsys):
    code, out, _ = run(["boundary", "--n-bsteps", "0", "--from", "0.05", "--to", "0.15", "--step", "0.05"], capsys)
    assert code == 0
    assert "diagonal_threshold=0.110" in out.splitlines()[0]
    rows = parse_csv(out)
    assert float(rows[0]["delta_p_max"]) == pytest.approx(0.1959, abs=1e-3)
    assert float(rows[1]["delta_p_max"]) > 0.1
    assert rows[2]["delta_p_max"] == "nan"


def test_verify_exits_zero(capsys):
    code, out, _ = run(["verify"], capsys)
    assert code == 0
    assert all(r["status"] == "pass" for r in parse_csv(out))


@pytest.mark.slow
def test_fluct_default_schemes(capsys):
    code, out, _ = run(["fluct", "--from", "100", "--to", "100"], capsys)
    assert code == 0
    rows = parse_csv(out)
    assert [r["scheme"] for r in rows] == ["bsteps:1", "oneway", "recurrence"]
    assert all(float(r["rate"]) > 0 for r in rows)


def test_verbose_logs_to_stderr(capsys):
    code, out, err = run(["bounds", "--to", "0", "-v"], capsys)
    assert code == 0 and "config" in err and "config" not in out.splitlines()[1]
