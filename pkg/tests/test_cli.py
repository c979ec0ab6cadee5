import json

import pytest

from artifact.cli import EXIT_CONFIG, EXIT_IO, EXIT_NO_DATA, EXIT_OK, EXIT_VERIFY, main
from artifact.config import read_fixture


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_ideal_score(capsys, tmp_path):
    code, out, _ = run(capsys, "ideal-score", "--out", str(tmp_path))
    assert code == EXIT_OK
    assert "total 8.4852814" in out
    assert "6 | 7.66 | 8.49" in out
    data = json.loads((tmp_path / "ideal_score.json").read_text())
    assert data["total"] == pytest.approx(8.485281374, abs=1e-9)
    assert (tmp_path / "probability_matrix.csv").exists()


def test_ideal_score_mixed(capsys):
    code, out, _ = run(capsys, "ideal-score", "--mixed")
    assert "total 0.0000000" in out
    assert code == EXIT_VERIFY


def test_simulate_band_and_determinism(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "simulate", "--n", "77326", "--seed", "3", "--out", str(a))[0] == EXIT_OK
    assert run(capsys, "simulate", "--n", "77326", "--seed", "3", "--threads", "4", "--out", str(b))[0] == EXIT_OK
    for name in ("trials.csv", "estimate.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    est = json.loads((a / "estimate.json").read_text())
    assert 7.7 <= est["total"]["value"] <= 8.0
    assert "violation_sigma" in est and est["bound"] == 7.66


def test_simulate_zero_trials(capsys):
    code, _, err = run(capsys, "simulate", "--n", "0")
    assert code == EXIT_NO_DATA and "error" in err


def test_simulate_bad_config(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[noise]\nvisibility = high\n")
    code, _, err = run(capsys, "simulate", "--config", str(cfg))
    assert code == EXIT_CONFIG and "line 2" in err


def test_missing_file_is_io_error(capsys, tmp_path):
    code, _, _ = run(capsys, "spacetime", "--config", str(tmp_path / "nope.cfg"))
    assert code == EXIT_IO


@pytest.mark.parametrize(
    "field,dims,check",
    [
        ("complex", "2,2,2,2", lambda f: f >= 8.4852),
        ("real", "2,2,2,2", lambda f: f <= 7.6605),
        ("complex", "1,1,1,1", lambda f: f <= 6 + 1e-9),
    ],
)
def test_optimize(capsys, tmp_path, field, dims, check):
    code, _, _ = run(
        capsys, "optimize", "--field", field, "--dims", dims, "--restarts", "20", "--seed", "0", "--out", str(tmp_path)
    )
    assert code == EXIT_OK
    assert check(json.loads((tmp_path / "optimize.json").read_text())["best"])


def test_optimize_invalid_dims(capsys):
    with pytest.raises(SystemExit):
        main(["optimize", "--dims", "2,2"])


def test_spacetime_fixture(capsys, tmp_path):
    code, out, _ = run(capsys, "spacetime", "--out", str(tmp_path))
    assert code == EXIT_OK
    assert "16/16 conditions pass" in out
    assert json.loads((tmp_path / "spacetime.json").read_text())["all_pass"] is True


def test_spacetime_failure_exit(capsys, tmp_path):
    cfg = tmp_path / "slow.cfg"
    cfg.write_text(read_fixture("paper-spacetime.cfg").replace("qrngB = Bob, 53 +- 2", "qrngB = Bob, 530 +- 2"))
    code, out, _ = run(capsys, "spacetime", "--config", str(cfg))
    assert code == EXIT_VERIFY and "NO" in out


def test_spacetime_missing_distance(capsys, tmp_path):
    cfg = tmp_path / "gap.cfg"
    cfg.write_text(read_fixture("paper-spacetime.cfg").replace("Bob-Claire = 199 +- 1\n", ""))
    code, _, err = run(capsys, "spacetime", "--config", str(cfg))
    assert code == EXIT_CONFIG and "Bob-Claire" in err


def test_hom(capsys, tmp_path):
    code, out, _ = run(capsys, "hom", "--v", "0.943", "--tau-c", "133", "--out", str(tmp_path))
    assert code == EXIT_OK
    assert "dip minimum 0.057000" in out
    fit = json.loads((tmp_path / "hom_fit.json").read_text())
    assert fit["v"] == pytest.approx(0.943, abs=1e-6)


def test_hom_poisson_deterministic(capsys, tmp_path):
    for d in ("a", "b"):
        run(capsys, "hom", "--c0", "600", "--poisson", "--seed", "4", "--out", str(tmp_path / d))
    assert (tmp_path / "a" / "hom.csv").read_bytes() == (tmp_path / "b" / "hom.csv").read_bytes()


def test_tomography(capsys, tmp_path):
    for d in ("a", "b"):
        code, _, _ = run(capsys, "tomography", "--n", "100000", "--boots", "5", "--seed", "2", "--out", str(tmp_path / d))
        assert code == EXIT_OK
    rep = json.loads((tmp_path / "a" / "tomography.json").read_text())
    assert abs(rep["fidelity"] - 0.9852) < 0.005
    for name in ("counts.csv", "state.json", "tomography.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_tomography_from_counts_file(capsys, tmp_path):
    run(capsys, "tomography", "--n", "5000", "--boots", "3", "--out", str(tmp_path))
    code, out, _ = run(capsys, "tomography", "--counts", str(tmp_path / "counts.csv"), "--boots", "3")
    assert code == EXIT_OK and "fidelity" in out


def test_waveplates_reports_unmatched(capsys, tmp_path):
    code, out, _ = run(capsys, "waveplates", "--out", str(tmp_path))
    assert code == EXIT_VERIFY
    assert out.count("NO MATCH") == 3
    rows = json.loads((tmp_path / "waveplates.json").read_text())["rows"]
    assert sum(r["matched"] for r in rows) == 6
