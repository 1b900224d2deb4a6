import json
import subprocess
import sys

import numpy as np
import pytest

from halftoning.cli import main
from halftoning.core import GrayImage, constant_image, load_pgm, save_pgm


@pytest.fixture
def images(tmp_path):
    save_pgm(constant_image(16, 16, 1.0), tmp_path / "white.pgm")
    save_pgm(constant_image(16, 16, 0.5), tmp_path / "gray.pgm")
    save_pgm(GrayImage(np.random.default_rng(0).uniform(size=(24, 24))), tmp_path / "rand.pgm")
    save_pgm(constant_image(8, 8, 0.5), tmp_path / "small.pgm")
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_halftone_fs1(images, capsys):
    code, out, _ = run(capsys, "halftone", images / "rand.pgm", images / "o.pgm", "--scheme", "fs1")
    assert code == 0
    doc = json.loads(out)
    assert doc["scheme"] == "fs1" and doc["scan"] == "raster" and doc["v_max_abs"] <= 1
    raw = (images / "o.pgm").read_bytes()
    assert set(raw[len(b"P5\n24 24\n255\n") :]) <= {0, 255}


def test_halftone_second_order_white(images, capsys):
    # rescaled white is 0.97, so the order-2 recurrence leaves a nonzero state
    code, out, _ = run(capsys, "halftone", images / "white.pgm", images / "o.pgm", "--scheme", "fs2-33")
    doc = json.loads(out)
    assert code == 0 and doc["rescale"] == 0.03 and doc["v_max_abs"] > 0
    q = load_pgm(images / "o.pgm").values
    assert abs((2 * q - 1).mean() - 0.97) <= 4 / 16
    code, out, _ = run(
        capsys, "halftone", images / "white.pgm", images / "o.pgm", "--scheme", "fs2-33", "--no-rescale"
    )
    assert json.loads(out)["v_max_abs"] == 0
    assert np.all(load_pgm(images / "o.pgm").values == 1.0)


def test_halftone_errors(images, capsys):
    code, _, err = run(capsys, "halftone", images / "rand.pgm", images / "o.pgm", "--scheme", "nosuch")
    assert code == 2 and "fs1" in err
    code, _, _ = run(capsys, "halftone", images / "missing.pgm", images / "o.pgm")
    assert code == 1
    (images / "bad.pgm").write_bytes(b"P5\n4 4\n255\n\x00")
    code, _, err = run(capsys, "halftone", images / "bad.pgm", images / "o.pgm")
    assert code == 1 and "byte" in err
    code, _, _ = run(capsys, "halftone", images / "rand.pgm", images / "o.pgm", "--rescale", "1.5")
    assert code == 2


def test_halftone_serpentine_and_json_scheme(images, capsys):
    (images / "s.json").write_text(
        json.dumps({"name": "right", "order": 1, "entries": [{"di": 0, "dj": 1, "weight": "1"}]})
    )
    code, out, _ = run(
        capsys, "halftone", images / "rand.pgm", images / "o.pgm", "--scheme", images / "s.json", "--scan", "serpentine"
    )
    assert code == 0 and json.loads(out)["scheme"] == "right"


def test_dots_snap_and_determinism(images, capsys):
    args = ["dots", images / "small.pgm", "--seed", "7", "--iters", "80", "--snap", images / "s.pgm"]
    code, out, _ = run(capsys, *args, "--out", images / "a.csv")
    assert code == 0
    doc = json.loads(out)
    assert doc["energy_final"] < doc["energy_initial"]
    assert doc["black_pixels"] == doc["dots"] == 32
    assert (load_pgm(images / "s.pgm").values == 0).sum() == 32
    run(capsys, *args, "--out", images / "b.csv")
    assert (images / "a.csv").read_bytes() == (images / "b.csv").read_bytes()


def test_dots_descent_and_white(images, capsys):
    code, out, _ = run(capsys, "dots", images / "small.pgm", "--method", "descent", "--iters", "30")
    assert code == 0 and json.loads(out)["energy_final"] <= json.loads(out)["energy_initial"]
    code, _, _ = run(capsys, "dots", images / "white.pgm")
    assert code == 2


def test_metrics(images, capsys):
    code, out, _ = run(capsys, "metrics", images / "rand.pgm", images / "rand.pgm", "--metrics", "lowpass_error")
    assert code == 0 and json.loads(out) == {"lowpass_error": 0.0}
    code, out, _ = run(capsys, "metrics", images / "white.pgm", images / "white.pgm")
    assert all(v == 0 for v in json.loads(out).values())
    run(capsys, "halftone", images / "rand.pgm", images / "h.pgm")
    code, out, _ = run(capsys, "metrics", images / "rand.pgm", images / "h.pgm")
    doc = json.loads(out)
    assert code == 0 and set(doc) == {"quadrature_error", "fourier_discrepancy", "ball_discrepancy", "lowpass_error"}
    assert all(v >= 0 for v in doc.values())


def test_metrics_errors(images, capsys):
    code, _, _ = run(capsys, "metrics", images / "rand.pgm", images / "gray.pgm")
    assert code == 2
    code, _, _ = run(capsys, "metrics", images / "gray.pgm", images / "gray.pgm", "--metrics", "psnr")
    assert code == 2


def test_expand(capsys):
    code, out, _ = run(capsys, "expand", "a23")
    assert code == 0
    top = out.splitlines()[1].split()
    assert "-3/4" in top and "1/4" in top
    _, out, _ = run(capsys, "expand", "fs2-33")
    for label in ["-28/48", "7/48", "-12/48", "-20/48", "-4/48", "3/48", "5/48", "1/48"]:
        assert label in out.split()
    _, out, _ = run(capsys, "expand", "fs1")
    for label in ["-7/16", "-3/16", "-5/16", "-1/16"]:
        assert label in out.split()
    code, _, _ = run(capsys, "expand", "nosuch")
    assert code == 2


def test_decay_synthetic(capsys, tmp_path):
    lams = [4, 8, 16, 32, 64]
    errs = ",".join(repr(lam**-2.0) for lam in lams)
    code, out, _ = run(
        capsys, "decay", "--order", "2", "--synthetic-errors", errs, "--out", tmp_path / "r.json", "--csv", tmp_path / "r.csv"
    )
    doc = json.loads(out)
    assert code == 0 and abs(doc["fitted_slope"] + 2) <= 1e-10
    assert json.loads((tmp_path / "r.json").read_text())["fitted_slope"] == doc["fitted_slope"]
    assert (tmp_path / "r.csv").read_text().startswith("lambda,error,v_max_abs")


def test_decay_exit_codes(capsys):
    code, _, _ = run(capsys, "decay", "--lambdas", "4,8")
    assert code == 2
    code, out, _ = run(capsys, "decay", "--order", "1")
    doc = json.loads(out)
    # the band decides the exit code; first-order runs decay faster than 1/lam
    assert code == (0 if doc["within_band"] else 3)
    assert doc["within_band"] == (abs(doc["fitted_slope"] + 1) <= 0.25)
    code, out, _ = run(capsys, "decay", "--order", "2")
    assert code == 0 and json.loads(out)["within_band"]


def test_decay_2d_scheme(capsys):
    code, out, _ = run(
        capsys, "decay", "--scheme", "fs1", "--lambdas", "2,3,4,5", "--kmax", "2", "--period", "8",
        "--expect-slope", "-1", "--slope-tol", "10",
    )  # fmt: skip
    assert code == 0 and json.loads(out)["quantizer"] == "fs1"


def test_usage_errors(capsys):
    assert main([]) == 2
    assert main(["halftone"]) == 2
    assert main(["--help"]) == 0
    capsys.readouterr()


def test_module_entry_point(images):
    res = subprocess.run(
        [sys.executable, "-m", "halftoning", "expand", "fs1"], capture_output=True, text=True, check=False
    )
    assert res.returncode == 0 and "-7/16" in res.stdout
