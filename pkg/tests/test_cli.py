import io
import json

import pytest

from pgfkit.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, ExperimentConfig, UsageError, run


@pytest.fixture
def write(tmp_path):
    def _write(obj):
        path = tmp_path / f"cfg{len(list(tmp_path.iterdir()))}.json"
        path.write_text(json.dumps(obj))
        return str(path)

    return _write


def call(*argv):
    buf = io.StringIO()
    code = run(list(argv), buf)
    return code, buf.getvalue()


def test_farey_dist_example():
    assert call("farey", "dist", "0/1", "2/3") == (EXIT_OK, "2\n")
    assert call("farey", "dist", "0/1", "2/3", "--oracle") == (EXIT_OK, "2\n")
    code, out = call("farey", "geodesic", "1/0", "2/5")
    assert code == EXIT_OK and out.split() == ["1/0", "0/1", "1/2", "2/5"]


def test_group_commands(write):
    assert call("group", "nf", "A(2)A(-2)") == (EXIT_OK, "1\n")
    assert call("group", "nf", "A(1)B(2)B(-2)A(3)") == (EXIT_OK, "A(4)\n")
    cfg = {"alpha1": "0/1", "beta1": "1/0"}
    code, out = call("group", "trace", "A(1)B(-1)", "--config", write(cfg))
    assert code == EXIT_OK and abs(int(out)) == 3


def test_proj_and_markings():
    assert call("proj", "coeff", "1/0", "0/1", "5/1") == (EXIT_OK, "7\n")
    assert call("proj", "coeff", "1/0", "0/1", "5/1", "--oracle")[1] == "7\n"
    assert call("proj", "bgim", "1/0", "0/1", "1/1")[0] == EXIT_OK
    assert call("markings", "dist", "{0/1, 1/0} @1", "{1/0, 1/1} @1") == (EXIT_OK, "1\n")
    code, out = call("markings", "formula", "{0/1, 1/0} @1", "{0/1, 1/0} @1")
    assert code == EXIT_OK and out.endswith("total = 0\n")


def test_usage_errors_have_their_own_exit_code(write):
    assert call("farey", "dist", "0/1")[0] == EXIT_USAGE
    assert call("farey", "dist", "0/1", "x")[0] == EXIT_USAGE
    assert call("group", "nf", "C(1)")[0] == EXIT_USAGE
    assert call("nonsense")[0] == EXIT_USAGE
    assert call("markings", "formula", "{0/1, 1/0} @1", "{0/1, 1/0} @1", "--A2", "2")[0] == EXIT_USAGE
    assert call("exp", "d0", "--range", "5..2")[0] == EXIT_USAGE
    assert call("exp", "d0", "--config", write({"max_syllables": 0}))[0] == EXIT_USAGE
    assert call("exp", "d0", "--config", write({"bogus": 1}))[0] == EXIT_USAGE


def test_config_validation():
    with pytest.raises(UsageError):
        ExperimentConfig(alpha1="1/0").validate()
    with pytest.raises(UsageError):
        ExperimentConfig(powers=(1, 0)).validate()
    assert ExperimentConfig(D_range="2..4").validate().D_values() == [2, 3, 4]


def test_d0_report_is_deterministic(tmp_path):
    args = ("exp", "d0", "--range", "1..5", "--max-syllables", "4", "--max-exponent", "2")
    code, out = call(*args)
    assert code == EXIT_OK
    assert "minimal_passing_D = 3" in out
    assert call(*args)[1] == out
    code, summary = call(*args, "--out", str(tmp_path))
    assert (tmp_path / "d0-probe.csv").read_text() + "\n" + summary == out


def test_failing_check_exits_one_and_still_writes(tmp_path):
    # four pairs are too few for the off-orbit maximum to settle
    code, out = call("exp", "thm510", "--samples", "4", "--seed", "0", "--out", str(tmp_path))
    assert code == EXIT_FAIL and "verdict = FAIL" in out
    assert (tmp_path / "thm510.csv").exists() and (tmp_path / "thm510.summary").exists()


def test_ledger_reuse(tmp_path):
    call("exp", "constants", "--out", str(tmp_path))
    led = tmp_path / "ledger.txt"
    assert "thin_C0" in led.read_text()
    code, out = call("exp", "lemma32", "--ledger", str(led))
    assert code == EXIT_OK and "verdict = VACUOUS" in out


def test_experiments_pass_by_default(tmp_path):
    call("exp", "constants", "--out", str(tmp_path))
    for cmd in ("lemma33", "distortion", "thm510"):
        code, out = call("exp", cmd, "--ledger", str(tmp_path / "ledger.txt"), "--samples", "400")
        assert code == EXIT_OK, out
    code, out = call("exp", "distance-formula", "--samples", "200", "--radius", "3")
    assert code == EXIT_OK and "K = " in out
