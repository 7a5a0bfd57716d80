"""Command-line surface: formats, exit codes, manifests, reproducibility."""
import json

import pytest

from ruinlab.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, _ = run_cli(capsys, *argv, "--format", "json")
    assert code == 0, out
    return json.loads(out)


# ----------------------------------------------------------------------
# calibrate
# ----------------------------------------------------------------------


def test_calibrate_worked_example(capsys):
    payload = run_json(capsys, "calibrate", "--loss-level", "0.25")
    assert payload["result"]["distance"] == 2
    assert payload["result"]["distance_exact"] == pytest.approx(2.0, abs=1e-12)


def test_calibrate_single_halving(capsys):
    payload = run_json(capsys, "calibrate", "--loss-level", "0.5")
    assert payload["result"]["distance"] == 1


def test_calibrate_generalized(capsys):
    payload = run_json(
        capsys, "calibrate", "--loss-level", "0.1", "--loss-factor", "-0.25"
    )
    assert payload["result"]["distance_exact"] == pytest.approx(
        8.003922779651094, abs=1e-12
    )
    assert payload["result"]["distance"] == 9


# ----------------------------------------------------------------------
# series / exact
# ----------------------------------------------------------------------


def test_series_cumulative(capsys):
    payload = run_json(
        capsys, "series", "--p", "0.5", "--distance", "2",
        "--max-gains", "1", "--mode", "exact",
    )
    assert payload["result"]["cumulative"] == pytest.approx(0.375)


def test_series_all_gain_terms_vanish(capsys):
    payload = run_json(capsys, "series", "--p", "1", "--distance", "3", "--max-gains", "10")
    terms = payload["result"]["terms"]
    assert all(t["probability"] == 0.0 for t in terms)


def test_series_converges_to_classical(capsys):
    payload = run_json(
        capsys, "series", "--p", "0.6", "--distance", "3",
        "--max-gains", "200", "--mode", "exact",
    )
    assert payload["result"]["cumulative"] == pytest.approx(0.2962962962962963, abs=1e-6)


def test_series_csv_shape(capsys):
    code, out, _ = run_cli(
        capsys, "series", "--p", "0.5", "--distance", "2", "--max-gains", "2",
        "--format", "csv",
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("# manifest: ")
    assert lines[1] == "N,count,probability,cumulative"
    assert lines[2] == "0,1,0.25,0.25"
    assert len(lines) == 5


def test_exact_command(capsys):
    payload = run_json(
        capsys, "exact", "--p", "0.6", "--distance", "3", "--horizon", "4000"
    )
    assert payload["result"]["ruin_probability_within_horizon"] == pytest.approx(
        8 / 27, abs=1e-6
    )
    assert payload["result"]["ruin_time_distribution"] is None


def test_exact_distribution_csv(capsys):
    code, out, _ = run_cli(
        capsys, "exact", "--p", "0.5", "--distance", "2", "--horizon", "6",
        "--distribution", "--format", "csv",
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[1] == "step,probability_mass"
    assert lines[2].startswith("2,0.25")


# ----------------------------------------------------------------------
# simulate / compare
# ----------------------------------------------------------------------


def test_simulate_deterministic_loss_run(capsys):
    payload = run_json(
        capsys, "simulate", "--p", "0", "--distance", "2",
        "--trials", "100", "--seed", "7",
    )
    assert payload["result"]["ruin_frequency"] == 1.0
    assert payload["result"]["time_histogram"] == {"2": 100}
    assert payload["manifest"]["seed"] == 7


def test_simulate_requires_seed(capsys):
    code, _, err = run_cli(capsys, "simulate", "--p", "0.5", "--distance", "2")
    assert code == 2
    assert "--seed" in err


def test_simulate_loss_level_route(capsys):
    payload = run_json(
        capsys, "simulate", "--p", "0", "--loss-level", "0.25",
        "--trials", "50", "--seed", "3",
    )
    assert payload["result"]["time_histogram"] == {"2": 50}


def test_simulate_rejects_conflicting_barrier_flags(capsys):
    code, _, err = run_cli(
        capsys, "simulate", "--p", "0.5", "--distance", "2",
        "--loss-level", "0.25", "--seed", "1",
    )
    assert code == 2
    assert "not both" in err


def test_simulate_replaying_manifest_is_bit_identical(capsys):
    argv = [
        "simulate", "--p", "0.45", "--distance", "2", "--trials", "5000",
        "--max-steps", "400", "--seed", "123456789",
    ]
    code, first, _ = run_cli(capsys, *argv, "--format", "json")
    assert code == 0
    manifest = json.loads(first)["manifest"]
    replay_argv = [manifest["command"]]
    for key, value in manifest["parameters"].items():
        if value is None:
            continue
        replay_argv += [f"--{key.replace('_', '-')}", str(value)]
    code, second, _ = run_cli(capsys, *replay_argv)
    assert code == 0
    assert second == first


def test_compare_replaying_manifest_is_bit_identical(capsys):
    argv = [
        "compare", "--p", "0.55", "--distance", "2", "--trials", "3000",
        "--max-steps", "2000", "--seed", "777",
    ]
    code, first, _ = run_cli(capsys, *argv, "--format", "json")
    assert code == 0
    manifest = json.loads(first)["manifest"]
    replay_argv = [manifest["command"]]
    for key, value in manifest["parameters"].items():
        if value is None:
            continue
        replay_argv += [f"--{key.replace('_', '-')}", str(value)]
    code, second, _ = run_cli(capsys, *replay_argv)
    assert code == 0
    assert second == first


def test_compare_table(capsys):
    payload = run_json(
        capsys, "compare", "--p", "0.6", "--distance", "3",
        "--trials", "20000", "--max-steps", "20000", "--seed", "42",
    )
    rows = {e["method"]: e for e in payload["result"]["ruin_estimates"]}
    assert rows["dp"]["value"] == pytest.approx(8 / 27, abs=1e-6)
    assert rows["series_exact"]["abs_dev_from_dp"] < 1e-5
    assert rows["paper_final_form"]["value"] == pytest.approx(0.013824)
    assert not rows["approx_simplified"]["valid"]
    assert {e["method"] for e in payload["result"]["time_estimates"]} == {
        "dp_censored_mean", "paper_estimator", "classical_drift",
        "monte_carlo_censored_mean",
    }


# ----------------------------------------------------------------------
# transform / demo
# ----------------------------------------------------------------------


def test_transform_worked_example(capsys):
    payload = run_json(
        capsys, "transform", "--p", "0.5", "--gain-factor", "0.75",
        "--loss-factor", "-0.75", "--target-gain-factor", "0.75",
        "--target-loss-factor", "-0.25",
    )
    assert payload["result"]["p_loss_adjusted"] == 0.75
    assert payload["result"]["rebalanced"] is None


def test_transform_with_loss_level(capsys):
    payload = run_json(
        capsys, "transform", "--p", "0.5", "--gain-factor", "0.75",
        "--loss-factor", "-0.75", "--target-gain-factor", "0.75",
        "--target-loss-factor", "-0.25", "--loss-level", "0.25",
    )
    rebalanced = payload["result"]["rebalanced"]
    assert rebalanced["distance"] == 5
    assert rebalanced["warnings"] == ["adjusted_gain_below_half"]


def test_transform_infeasible_exit_code(capsys):
    code, _, err = run_cli(
        capsys, "transform", "--p", "0.5", "--gain-factor", "0.75",
        "--loss-factor", "-0.75", "--target-gain-factor", "0.5",
        "--target-loss-factor", "0.1",
    )
    assert code == 3
    assert "cannot reproduce" in err


def test_demo_states(capsys):
    payload = run_json(capsys, "demo")
    states = payload["result"]["states"]
    assert [s["yield_percent"] for s in states] == [2.8, 1.4, 2.8]
    assert [s["move"] for s in states] == [None, -1, 1]
    assert [s["lattice_position"] for s in states] == [0, -1, 0]


def test_demo_human_mentions_years(capsys):
    code, out, _ = run_cli(capsys, "demo")
    assert code == 0
    for token in ("2011", "2012", "2013", "2.8", "1.4"):
        assert token in out


# ----------------------------------------------------------------------
# formats, errors, manifests
# ----------------------------------------------------------------------


def test_percent_inputs_rejected_with_hint(capsys):
    code, _, err = run_cli(capsys, "calibrate", "--loss-level", "25%")
    assert code == 2
    assert "decimal" in err
    code, _, err = run_cli(capsys, "series", "--p", "50", "--distance", "2")
    assert code == 2
    assert "0.5" in err  # suggests the decimal form


def test_domain_error_exit_code(capsys):
    code, _, err = run_cli(capsys, "calibrate", "--loss-level", "1.0")
    assert code == 2
    code, _, err = run_cli(capsys, "exact", "--p", "0.5", "--distance", "9",
                           "--horizon", "4")
    assert code == 2
    assert "horizon" in err


def test_garbage_input_never_panics(capsys):
    for argv in (
        ["calibrate", "--loss-level", "banana"],
        ["series", "--p", "0.5", "--distance", "two"],
        ["simulate", "--p", "0.5", "--distance", "2", "--seed", "1e99"],
        ["nonsense-command"],
        [],
    ):
        code, _, _ = run_cli(capsys, *argv)
        assert code == 2


def test_json_key_set_depends_only_on_command(capsys):
    a = run_json(capsys, "calibrate", "--loss-level", "0.25")
    b = run_json(capsys, "calibrate", "--loss-level", "0.9", "--loss-factor", "-0.1")
    assert set(a["result"]) == set(b["result"])
    assert set(a["manifest"]) == set(b["manifest"]) == {
        "command", "parameters", "tool_version", "seed",
    }
    s1 = run_json(capsys, "simulate", "--p", "0", "--distance", "2",
                  "--trials", "10", "--seed", "1")
    s2 = run_json(capsys, "simulate", "--p", "1", "--distance", "3",
                  "--trials", "20", "--seed", "9", "--workers", "2")
    assert set(s1["result"]) == set(s2["result"])


def test_manifest_echoes_defaults(capsys):
    payload = run_json(capsys, "series", "--p", "0.5", "--distance", "2")
    parameters = payload["manifest"]["parameters"]
    assert parameters["max_gains"] == 200
    assert parameters["mode"] == "exact"
    assert payload["manifest"]["tool_version"]


def test_format_env_var_default(capsys, monkeypatch):
    monkeypatch.setenv("RUINLAB_FORMAT", "json")
    code, out, _ = run_cli(capsys, "calibrate", "--loss-level", "0.25")
    assert code == 0
    assert json.loads(out)["result"]["distance"] == 2
    monkeypatch.setenv("RUINLAB_FORMAT", "csv")
    code, out, _ = run_cli(capsys, "calibrate", "--loss-level", "0.25")
    assert code == 0
    assert out.splitlines()[1].startswith("loss_level,")


def test_csv_uses_header_and_dot_decimals(capsys):
    code, out, _ = run_cli(capsys, "calibrate", "--loss-level", "0.25",
                           "--format", "csv")
    lines = out.strip().splitlines()
    header = lines[1].split(",")
    row = lines[2].split(",")
    assert header[0] == "loss_level"
    assert row[0] == "0.25"
    assert "," not in row[0] and "." in row[0]


def test_progress_goes_to_stderr_not_stdout(capsys):
    code, out, err = run_cli(
        capsys, "simulate", "--p", "0.5", "--distance", "2", "--trials", "100",
        "--max-steps", "50", "--seed", "5", "--format", "json",
    )
    assert code == 0
    json.loads(out)  # stdout is pure JSON
    assert "batches" in err
