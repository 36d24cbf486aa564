import json

import pytest

from pdpdiv.cli import RunConfig, main, run, run_command


def test_estimate_example():
    code, out, _ = run(["estimate", "--counts", "2,1", "--alpha", "0", "--theta", "1", "--index", "gini"])
    assert code == 0
    payload = json.loads(out)["payload"]
    assert payload["posterior"] == pytest.approx(0.55, abs=1e-12)
    assert payload["plugin"] == pytest.approx(0.4444444444, abs=1e-10)


def test_estimate_renyi_reports_integrability():
    code, out, _ = run(["estimate", "--counts", "3,1", "--alpha", "0.5", "--index", "renyi:0.3"])
    payload = json.loads(out)["payload"]
    assert code == 0
    assert payload["posterior"] is None
    assert payload["integrability"] == "sufficient_condition_fails"


def test_sample_is_byte_identical(tmp_path):
    paths = [tmp_path / "a.txt", tmp_path / "b.txt"]
    for p in paths:
        assert run(["sample", "--n", "200", "--alpha", "0.5", "--seed", "3", "--output", str(p)])[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    code, out, _ = run(["sequences", "--input", str(paths[0]), "--output", str(tmp_path / "s.csv")])
    assert code == 0
    assert json.loads(out)["payload"]["alpha"] == 0.5
    header = (tmp_path / "s.csv").read_text().splitlines()[0]
    assert header == "n,step,ell,ell_increment,big_l,big_l_increment,delta"


def test_verify_tower_passes():
    code, out, _ = run(["verify", "tower", "--trajectories", "1000"])
    assert code == 0
    assert json.loads(out)["passed"] is True


def test_verifier_failure_exit_code():
    code, out, _ = run(["verify", "corollary1", "--n", "50", "--alpha", "0.5", "--tol", "-1"])
    assert code == 1
    assert json.loads(out)["passed"] is False


@pytest.mark.parametrize(
    "argv,code",
    [
        (["estimate", "--counts", "2,1", "--alpha", "1.2"], "domain_error"),
        (["estimate", "--counts", "2,1", "--index", "bogus"], "domain_error"),
        (["estimate", "--counts", "2,x"], "parse_error"),
        (["estimate", "--input", "/nonexistent/file"], "domain_error"),
        (["estimate", "--counts", "2,1", "--index", "renyi:2", "--alpha", "0.5"], None),
    ],
)
def test_errors_are_machine_readable(argv, code):
    status, _, err = run(argv)
    if code is None:
        assert status == 0
    else:
        assert status == 2
        assert json.loads(err)["error"] == code


def test_discovery_order_error_from_file(tmp_path):
    f = tmp_path / "obs.txt"
    f.write_text("1\n3\n")
    status, _, err = run(["estimate", "--input", str(f)])
    assert status == 2
    body = json.loads(err)
    assert body["error"] == "discovery_order" and body["message"].startswith("line 2:")


def test_counts_csv_input(tmp_path):
    f = tmp_path / "counts.csv"
    f.write_text("species,count\na,2\nb,1\n")
    code, out, _ = run(["estimate", "--input", str(f), "--index", "gini"])
    assert json.loads(out)["payload"]["posterior"] == pytest.approx(0.55)


def test_extremal_and_convergence(tmp_path):
    code, out, _ = run(["extremal", "--n", "7", "--k", "3", "--brute-force", "--alpha", "0.3"])
    rows = json.loads(out)["payload"]["rows"]
    assert code == 0 and [r["counts"] for r in rows] == ["5 1 1", "3 2 2"]
    code, out, _ = run(["verify", "convergence", "--alpha", "0.5", "--checkpoints", "10,100", "--trajectories", "200",
                        "--output", str(tmp_path / "c.csv")])
    assert code == 0
    assert (tmp_path / "c.csv").read_text().startswith("n,mean_abs_gap")


def test_posterior_mc_and_doob():
    code, out, _ = run(["posterior-mc", "--counts", "2,1", "--index", "gini", "--trajectories", "500"])
    payload = json.loads(out)["payload"]
    assert code == 0 and payload["samples"] == 500 and "std_error" in payload
    code, out, _ = run(["verify", "doob", "--alpha", "0.5", "--n", "50", "--trajectories", "200", "--index", "gini"])
    assert code == 0 and json.loads(out)["payload"]["ratio"] <= 1


def test_config_echo_reproduces_report():
    cfg = RunConfig("posterior-mc", alpha=0.2, theta=1.0, index="shannon", counts="3,1", trajectories=50, seed=4)
    first = run_command(cfg)
    again = run_command(RunConfig(**first.config))
    assert first.payload == again.payload


def test_identities_and_help(capsys):
    assert run(["verify", "identities", "--trajectories", "500"])[0] == 0
    assert main(["--help"]) == 0
    assert main(["nonsense"]) == 2
