import json

from click.testing import CliRunner

from tsforge.cli import main


def run(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


class TestCompose:
    def test_writes_seeds(self, tmp_path):
        out = tmp_path / "seeds.jsonl"
        r = run("compose", "--n", "3", "--out", str(out))
        assert r.exit_code == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 3
        assert "timestamps" in json.loads(lines[0])


class TestGenerateEvalExport:
    def test_full_flow(self, tmp_path):
        items = tmp_path / "items.jsonl"
        seeds = tmp_path / "seeds.jsonl"
        log = tmp_path / "log.jsonl"
        export_path = tmp_path / "bench.jsonl"

        r = run(
            "generate", "--n", "8", "--rng-seed", "2",
            "--out", str(items), "--seeds-out", str(seeds),
        )
        assert r.exit_code == 0, r.output
        assert "wrote 8 items" in r.output
        assert len(items.read_text().strip().splitlines()) == 8

        r2 = run("eval", "--items", str(items), "--seeds", str(seeds), "--baseline")
        assert r2.exit_code == 0, r2.output
        assert "overall" in r2.output
        assert "random letter baseline" in r2.output

        r3 = run(
            "export", "--items", str(items), "--seeds", str(seeds),
            "--log", str(log), "--out", str(export_path),
        )
        assert r3.exit_code == 0, r3.output
        exported = export_path.read_text().strip().splitlines()
        for line in exported:
            assert json.loads(line)["status"] in ("passed", "human_kept", "human_corrected")

    def test_no_verify_is_faster_path(self, tmp_path):
        items = tmp_path / "items.jsonl"
        r = run("generate", "--n", "3", "--no-verify", "--no-mcq", "--out", str(items))
        assert r.exit_code == 0
        recs = [json.loads(l) for l in items.read_text().strip().splitlines()]
        assert all(rec["mcq"] is None for rec in recs)
