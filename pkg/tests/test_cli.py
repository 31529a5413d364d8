import numpy as np
import pytest

from pmadc import __version__
from pmadc.cli import main, model_from_text, model_to_text
from pmadc.signals import Sinusoid, gen_sinc_series


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_help(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for cmd in ("gen", "modulate", "fold", "demod", "unfold", "sweep", "ecg"):
        assert cmd in out


def test_model_text_round_trip():
    f = gen_sinc_series(4)
    g = model_from_text(model_to_text(f))
    assert np.array_equal(f.coefficients, g.coefficients) and f.scale == g.scale
    s = Sinusoid(0.5, 10.0, 0.1)
    assert model_from_text(model_to_text(s)) == s


def test_pipeline(tmp_path):
    m, pm, rec = tmp_path / "m.txt", tmp_path / "pm.csv", tmp_path / "rec.csv"
    assert main(["gen", "--seed", "3", "--out", str(m)]) == 0
    assert main(["modulate", "--model", str(m), "--mu", "1.5", "--lambda", "0.1",
                 "--carrier-hz", "2000", "--out", str(pm)]) == 0
    assert main(["demod", "--in", str(pm), "--mu", "1.5", "--carrier-hz", "2000", "--out", str(rec)]) == 0
    data = np.loadtxt(rec, delimiter=",", comments="#")
    f = model_from_text(m.read_text())
    assert np.max(np.abs(f(data[:, 0]) - data[:, 1])) < 1e-12

    fold, unf = tmp_path / "f.csv", tmp_path / "u.csv"
    assert main(["fold", "--model", str(m), "--lambda", "0.1", "--of", "12", "--out", str(fold)]) == 0
    assert main(["unfold", "--in", str(fold), "--beta", "1", "--max-freq-hz", "1000",
                 "--out", str(unf)]) == 0
    data = np.loadtxt(unf, delimiter=",", comments="#")
    assert np.max(np.abs(f(data[:, 0]) - data[:, 1])) < 1e-9

    hil, hrec = tmp_path / "h.csv", tmp_path / "hr.csv"
    assert main(["modulate", "--model", str(m), "--mu", "2", "--lambda", "0.1", "--carrier-hz", "3000",
                 "--of", "6", "--multiple", "4", "--out", str(hil)]) == 0
    assert main(["demod", "--in", str(hil), "--method", "hilbert", "--mu", "2", "--carrier-hz", "3000",
                 "--max-freq-hz", "1000", "--denoise", "--out", str(hrec)]) == 0


def test_exit_codes(tmp_path, capsys):
    assert main(["sweep", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path / "x.csv")]) == 3
    bad = tmp_path / "bad.ini"
    bad.write_text("[run]\nmethods = nope\n")
    assert main(["sweep", "--config", str(bad), "--out", str(tmp_path / "x.csv")]) == 2
    assert "run.methods" in capsys.readouterr().err
    rec = tmp_path / "r.csv"
    rec.write_text("# rate_hz=360\n0.1\n")
    assert main(["ecg", "--record", str(rec)]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["demod", "--method", "psk"])
    assert exc.value.code == 2


def test_sweep_command(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[grid]\noversampling = 1\n[run]\nmethods = asin\ntrials = 2\n")
    out = tmp_path / "o.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--trials", "3", "--seed", "5"]) == 0
    assert len(out.read_text().splitlines()) == 4
    assert "asin" in capsys.readouterr().out


def test_ecg_command(tmp_path, capsys):
    from pmadc.signals import synthetic_ecg, write_record_csv
    write_record_csv(tmp_path / "e.csv", synthetic_ecg(4.0), 500.0)
    assert main(["ecg", "--record", str(tmp_path / "e.csv"), "--path", "pm", "--bits", "8"]) == 0
    out = capsys.readouterr().out
    assert "nmse_db=" in out and "mu=" in out
