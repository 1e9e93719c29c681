import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from wsrank.barcode import INF, Barcode, read_barcode, write_barcode
from wsrank.cli import run
from wsrank.synthetic import write_pgm


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("WSRANK_OUTPUT_DIR", str(tmp_path / "out"))
    return tmp_path / "out"


def barcode_file(tmp_path, name, bars):
    path = tmp_path / name
    write_barcode(Barcode(bars), path)
    return str(path)


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestScalarCommands:
    def test_stable_rank_json(self, tmp_path, capsys):
        x = barcode_file(tmp_path, "x.csv", [(0, 1), (0, 2), (0, 3)])
        code, out, err = call(capsys, "stable-rank", "--barcode", x, "--p", "1", "--q", "1")
        assert code == 0
        assert json.loads(out) == {"breakpoints": [0.0, 1.0, 3.0, 6.0], "values": [3, 2, 1, 0], "limit": 0}
        assert '"command": "stable-rank"' in err

    def test_stable_rank_inf_and_csv(self, tmp_path, capsys):
        x = barcode_file(tmp_path, "x.csv", [(0, 2), (0, 2), (1, INF)])
        code, out, _ = call(capsys, "--format", "csv", "stable-rank", "--barcode", x, "--p", "inf",
                            "--contour", "standard")
        assert code == 0
        assert out.splitlines() == ["value,inverse", "3,0.0", "1,2.0"]

    def test_global_flags_after_subcommand(self, tmp_path, capsys):
        x = barcode_file(tmp_path, "x.csv", [(0, 1)])
        code, out, _ = call(capsys, "stable-rank", "--barcode", x, "--format", "csv", "-q")
        assert code == 0 and out.startswith("value,inverse")

    def test_interleave_and_wasserstein(self, tmp_path, capsys):
        x = barcode_file(tmp_path, "x.csv", [(0, 6), (1, 5), (2, 4)])
        y = barcode_file(tmp_path, "y.csv", [(1, 5), (2, 4)])
        code, out, _ = call(capsys, "wasserstein", "--x", x, "--y", y, "--p", "2")
        assert code == 0 and json.loads(out)["distance"] == pytest.approx(6 ** 0.5, abs=1e-12)
        code, out, _ = call(capsys, "interleave", "--x", x, "--y", y, "--p", "1", "--q", "inf")
        assert code == 0 and json.loads(out)["distance"] == pytest.approx(0.5 * 6)

    def test_infinite_distance_output(self, tmp_path, capsys):
        x = barcode_file(tmp_path, "x.csv", [(0, INF)])
        y = barcode_file(tmp_path, "y.csv", [(0, 1)])
        code, out, _ = call(capsys, "--format", "csv", "interleave", "--x", x, "--y", y)
        assert code == 0 and out.splitlines() == ["distance", "inf"]

    def test_gaussian_contour_inline(self, tmp_path, capsys):
        x = barcode_file(tmp_path, "x.csv", [(0, 1)])
        contour = json.dumps({"type": "gmm", "floor": 0.5, "components": []})
        code, out, _ = call(capsys, "stable-rank", "--barcode", x, "--contour", contour)
        assert code == 0 and json.loads(out)["breakpoints"] == [0.0, 0.5]


class TestErrors:
    def test_unknown_flag(self, capsys):
        assert call(capsys, "stable-rank", "--barcode", "x.csv", "--bogus")[0] == 2

    def test_missing_file(self, capsys):
        assert call(capsys, "stable-rank", "--barcode", "/nonexistent/x.csv")[0] == 2

    def test_malformed_barcode_names_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("birth,death\n0,1\n3,2\n")
        code, _, err = call(capsys, "stable-rank", "--barcode", str(bad))
        assert code == 2 and "bad.csv:3" in err

    def test_bad_exponent(self, tmp_path, capsys):
        x = barcode_file(tmp_path, "x.csv", [(0, 1)])
        assert call(capsys, "stable-rank", "--barcode", x, "--p", "0.5")[0] == 2

    def test_bad_jobs(self, tmp_path, capsys):
        x = barcode_file(tmp_path, "x.csv", [(0, 1)])
        assert call(capsys, "--jobs", "0", "stable-rank", "--barcode", x)[0] == 2

    def test_matching_needs_equal_exponents(self, tmp_path, capsys):
        x = barcode_file(tmp_path, "x.csv", [(0, 1)])
        code = call(capsys, "distance-matrix", "--barcodes", x, x, "--distance", "wasserstein", "--p", "2")[0]
        assert code == 2

    def test_no_command(self, capsys):
        assert call(capsys)[0] == 2


class TestPersistence:
    def test_image(self, tmp_path, capsys):
        write_pgm(tmp_path / "i.pgm", np.array([[5, 0, 3]], dtype=np.uint8))
        code, out, _ = call(capsys, "persistence", "--image", str(tmp_path / "i.pgm"))
        assert code == 0
        assert out.splitlines()[1:] == ["250.0,255.0", "252.0,255.0"]

    def test_graph_json(self, tmp_path, capsys):
        (tmp_path / "v.csv").write_text("id,value\nv0,0\nv1,2\nv2,1\n")
        (tmp_path / "e.csv").write_text("v0,v1\nv1,v2\n")
        code, out, _ = call(capsys, "--format", "json", "persistence", "--edges", str(tmp_path / "e.csv"),
                            "--vertices", str(tmp_path / "v.csv"))
        assert code == 0 and json.loads(out) == [[0.0, "inf"], [1.0, 2.0]]

    def test_needs_input(self, capsys):
        assert call(capsys, "persistence")[0] == 2


class TestReduce:
    def test_demo(self, capsys):
        code, out, _ = call(capsys, "reduce", "--demo", "worked-example")
        assert code == 0
        # the alias required by the documented command line prints the same thing
        assert call(capsys, "reduce", "--demo", "paper")[1] == out
        assert "sigma_f = [543621]" in out
        assert "sigma_b = [453261]" in out
        assert "r_max: z1->r3, z2->r2, z3->r6" in out
        assert "sigma_b <= sigma_f: True" in out
        for header in ("M_f:", "reduced M_f:", "M_b:", "reduced M_b:"):
            assert header + "\n" in out

    def test_input_mono_and_epi(self, tmp_path, capsys):
        morphism = {"z_bars": [[1, 3]], "x_bars": [[0, 3]], "supports": [[0]]}
        (tmp_path / "m.json").write_text(json.dumps(morphism))
        code, out, _ = call(capsys, "reduce", "--input", str(tmp_path / "m.json"))
        assert code == 0 and "coker f = Barcode([K(0,1)])" in out
        (tmp_path / "e.json").write_text(json.dumps({**morphism, "kind": "epi", "z_bars": [[0, 3]], "x_bars": [[0, 1]]}))
        code, out, _ = call(capsys, "reduce", "--input", str(tmp_path / "e.json"))
        assert code == 0 and "ker f = Barcode([K(1,3)])" in out

    def test_input_errors(self, tmp_path, capsys):
        (tmp_path / "m.json").write_text(json.dumps({"z_bars": []}))
        assert call(capsys, "reduce", "--input", str(tmp_path / "m.json"))[0] == 2
        assert call(capsys, "reduce")[0] == 2


class TestPipeline:
    def test_generate_matrix_classify_learn(self, outdir, capsys):
        code, out, _ = call(capsys, "gen-synthetic", "--dataset", "1", "--seed", "7", "--n", "4")
        assert code == 0
        manifest = out.strip()
        assert manifest == str(outdir / "manifest.json")
        first = (outdir / "images" / "A000.pgm").read_bytes()

        code, out, _ = call(capsys, "--format", "csv", "distance-matrix", "--manifest", manifest, "--p", "inf")
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0][1:] == ["A000", "A001", "A002", "A003", "B000", "B001", "B002", "B003"]
        D = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
        assert np.array_equal(D, D.T) and np.all(np.diag(D) == 0)

        # default manifest comes from the output directory
        code, out, _ = call(capsys, "classify", "--p", "inf", "--k", "1")
        assert code == 0 and json.loads(out) == {"error": 0.0, "k": 1, "n": 8}

        code, out, _ = call(capsys, "learn-metric", "--iters", "2", "--seed", "1")
        assert code == 0
        summary = json.loads(out)
        assert summary["best_loss"] <= summary["initial_loss"]
        assert (outdir / "trace.csv").read_text().startswith("iter,loss,best,mu1")
        code, out, _ = call(capsys, "classify", "--theta", str(outdir / "theta.json"))
        assert code == 0 and 0.0 <= json.loads(out)["error"] <= 1.0

        # same seed, same bytes
        call(capsys, "gen-synthetic", "--dataset", "1", "--seed", "7", "--n", "4")
        assert (outdir / "images" / "A000.pgm").read_bytes() == first

    def test_distance_matrix_from_files(self, tmp_path, capsys):
        a = barcode_file(tmp_path, "a.csv", [(0, 1)])
        b = barcode_file(tmp_path, "b.csv", [(0, 3)])
        code, out, _ = call(capsys, "distance-matrix", "--barcodes", a, b, "--distance", "wasserstein",
                            "--p", "1", "--q", "1")
        assert code == 0
        assert json.loads(out) == {"ids": ["a", "b"], "matrix": [[0.0, 2.0], [2.0, 0.0]]}

    def test_csv_round_trip_through_persistence(self, tmp_path, capsys):
        write_pgm(tmp_path / "i.pgm", np.array([[9, 0, 4], [0, 0, 0], [7, 0, 0]], dtype=np.uint8))
        out_path = tmp_path / "bc.csv"
        assert call(capsys, "persistence", "--image", str(tmp_path / "i.pgm"), "--out", str(out_path))[0] == 0
        assert read_barcode(out_path) == Barcode([(246, 255), (248, 255), (251, 255)])


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "wsrank", "reduce", "--demo", "paper"], capture_output=True,
                         text=True, check=False)
    assert res.returncode == 0
    assert "sigma_b = [453261]" in res.stdout
