import csv
import io
import json

import pytest

from app.main import EXIT_CHECK_FAILED, EXIT_INPUT_ERROR, EXIT_OK, main


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_enumerate_count_only(capsys):
    code, out = _run(capsys, "enumerate", "--n", "2", "--d", "2", "--count-only")
    assert code == EXIT_OK
    assert out == "6\n"


def test_enumerate_lists_states(capsys):
    code, out = _run(capsys, "enumerate", "--n", "3", "--d", "1")
    data = json.loads(out)
    assert data['count'] == 5 == data['stirling_count']
    assert data['states'][0] == "1,2,3:1"
    assert data['tool'] == "cannings-genealogy"
    assert data['config']['run']['command'] == "enumerate"


def test_enumeration_cap_is_an_input_error(capsys):
    code, out = _run(capsys, "enumerate", "--n", "12", "--d", "2")
    assert code == EXIT_INPUT_ERROR
    assert out == ""


def test_matrix_csv(capsys, wf_file):
    code, out = _run(capsys, "matrix", "--model", wf_file, "--n", "2", "--format", "csv")
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][1:] == ["1,2:1", "1,2:2", "1:1|2:1", "1:1|2:2", "1:2|2:1", "1:2|2:2"]
    assert rows[3][0] == "1:1|2:1"
    assert rows[3][1:] == ["1/8", "0", "3/8", "1/4", "1/4", "0"]


def test_matrix_exact_flag_prints_fractions(capsys, wf_file):
    code, out = _run(capsys, "matrix", "--model", wf_file, "--n", "2", "--exact")
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert len(rows) == 7
    assert rows[1][1:] == ["3/4", "1/4", "0", "0", "0", "0"]
    assert rows[6][1:] == ["1/60", "1/15", "1/20", "4/15", "4/15", "1/3"]


def test_matrix_json(capsys, wf_file):
    code, out = _run(capsys, "matrix", "--model", wf_file, "--n", "1")
    data = json.loads(out)
    assert data['provenance'] == "exact"
    assert data['matrix']['entries'] == [["3/4", "1/4"], ["1/3", "2/3"]]
    assert data['matrix']['row_sums'] == ["1", "1"]


def test_block_counting_csv(capsys, write_json):
    path = write_json("one.json", {"d": 1, "N": [5], "law": "wright-fisher", "counts": [[5]]})
    code, out = _run(capsys, "block-counting", "--model", path, "--n", "2", "--format", "csv")
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[3] == ["(2)", "0", "1/5", "4/5"]


def test_block_counting_exact_flag(capsys, write_json):
    path = write_json("one.json", {"d": 1, "N": [5], "law": "wright-fisher", "counts": [[5]]})
    code, out = _run(capsys, "block-counting", "--model", path, "--n", "2", "--exact")
    assert code == EXIT_OK
    assert list(csv.reader(io.StringIO(out)))[3] == ["(2)", "0", "1/5", "4/5"]


def test_consistency_check_passes(capsys, wf_file):
    code, out = _run(capsys, "check", "consistency", "--model", wf_file, "--depth", "2")
    assert code == EXIT_OK
    report = json.loads(out)['report']
    assert report['passed'] and report['certified_depth'] == 2
    assert report['worst_residual'] == "0"


def test_meppf_failure_exits_with_one(capsys, write_json):
    table = write_json("table.json", {
        "d": 1, "depth": 1,
        "values": [
            {"tensor": {"j": [0], "entries": {"1,1": []}}, "value": "1"},
            {"tensor": {"j": [1], "entries": {"1,1": [1]}}, "value": "1/2"},
        ],
    })
    code, out = _run(capsys, "check", "meppf", "--table", table)
    assert code == EXIT_CHECK_FAILED
    assert json.loads(out)['report']['first_failure'] == "consistency"


def test_malformed_json_is_an_input_error(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    code, out = _run(capsys, "matrix", "--model", str(path), "--n", "2")
    assert code == EXIT_INPUT_ERROR
    assert out == ""


def test_invalid_counts_are_an_input_error(capsys, caplog, write_json):
    path = write_json("bad.json", {"d": 2, "N": [4, 6], "law": "wright-fisher", "counts": [[3, 2], [2, 4]]})
    code, _ = _run(capsys, "matrix", "--model", path, "--n", "2")
    assert code == EXIT_INPUT_ERROR
    assert "size1 column 1" in caplog.text


def test_missing_file_is_an_input_error(capsys, tmp_path):
    code, _ = _run(capsys, "matrix", "--model", str(tmp_path / "absent.json"), "--n", "2")
    assert code == EXIT_INPUT_ERROR


def test_mc_is_reproducible(capsys, wf_file):
    first_code, first = _run(capsys, "mc", "--model", wf_file, "--n", "2", "--reps", "2000", "--seed", "5")
    second_code, second = _run(capsys, "mc", "--model", wf_file, "--n", "2", "--reps", "2000", "--seed", "5")
    assert first == second
    assert first_code == second_code
    data = json.loads(first)
    assert data['seed'] == 5
    assert data['matrix']['reps'] == 2000
    assert 'agreement' in data


def test_mc_csv_carries_the_seed(capsys, wf_file):
    argv = ("mc", "--model", wf_file, "--n", "1", "--reps", "500", "--seed", "5", "--format", "csv")
    code, out = _run(capsys, *argv)
    assert code in (EXIT_OK, EXIT_CHECK_FAILED)
    lines = out.splitlines()
    assert lines[0].startswith("# ")
    header = json.loads(lines[0][2:])
    assert header["seed"] == 5
    assert header["reps"] == 500
    assert header["provenance"] == "monte-carlo"
    assert "agreement" in header
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    assert [row[0] for row in rows[1:]] == ["1:1", "1:2"]
    assert _run(capsys, *argv)[1] == out


def test_output_file(capsys, tmp_path, wf_file):
    target = tmp_path / "out.csv"
    code, out = _run(capsys, "matrix", "--model", wf_file, "--n", "1", "--format", "csv", "--output", str(target))
    assert code == EXIT_OK
    assert out == ""
    assert target.read_text().splitlines()[1] == "1:1,3/4,1/4"


def test_kingman_generator_json(capsys):
    code, out = _run(capsys, "limit", "kingman", "--weights", "1", "0", "--n", "2")
    assert code == EXIT_OK
    generator = json.loads(out)['generator']
    assert generator['rates'][2][0] == "1.0"


def test_discrete_limit_csv(capsys, write_json):
    rho = write_json("rho.json", {"rho": [["3/4", "1/3"], ["1/4", "2/3"]]})
    code, out = _run(capsys, "limit", "discrete", "--rho", rho, "--n", "1", "--format", "csv")
    assert code == EXIT_OK
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[1][1:] == ["3/4", "1/4"]


def test_strong_mutation_residuals(capsys):
    code, out = _run(capsys, "limit", "strong-mutation", "--n", "2", "--d", "2", "--M-values", "3", "6")
    assert code == EXIT_OK
    residuals = json.loads(out)['residuals']
    assert [r['M'] for r in residuals] == [3, 6]


def test_xi_rates_command(capsys, write_json):
    spec = write_json("xi.json", {"a": [0, 0], "atoms": [{"mass": 1, "x": [0.5, 0.25], "y": [1, 2]}]})
    code, out = _run(capsys, "rates", "xi", "--spec", spec, "--depth", "3")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data['report']['passed']
    assert float(data['total_binary_rate']) == pytest.approx(1.0)


def test_coalescent_simulation_lines(capsys):
    code, out = _run(capsys, "simulate", "coalescent", "--weights", "1", "0",
                     "--initial", "1:1|2:1", "--t-max", "1000", "--seed", "3")
    assert code == EXIT_OK
    lines = [json.loads(line) for line in out.splitlines()]
    assert lines[0]['seed'] == 3
    assert [line['state'] for line in lines[1:]] == ["1:1|2:1", "1,2:1"]


def test_ancestry_simulation_lines(capsys, wf_file):
    code, out = _run(capsys, "simulate", "ancestry", "--model", wf_file,
                     "--initial", "1:1|2:2", "--generations", "3", "--seed", "8")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert len(lines) == 5
    assert json.loads(lines[1]) == {'generation': 0, 'state': "1:1|2:2"}
