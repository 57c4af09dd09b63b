"""Command-line contract: subcommands, config precedence, exit codes."""

import dataclasses
import json

import pytest

from rim.cli import RunConfig, build_parser, main, resolve_config
from rim.core import ValidationError
from conftest import TINY_SPEC


@pytest.fixture(scope="module")
def world_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_world")
    spec_path = root / "spec.json"
    TINY_SPEC.save(spec_path)
    out = root / "world"
    assert main(["synth", "--out", str(out), "--world", str(spec_path)]) == 0
    return out


@pytest.fixture(scope="module")
def refs_dir(tmp_path_factory, world_dir):
    out = tmp_path_factory.mktemp("cli_refs")
    code = main(
        [
            "build-refs",
            "--manifest",
            str(world_dir / "manifest.json"),
            "--out",
            str(out),
            "--subcats",
            "2",
        ]
    )
    assert code == 0
    return out / "refs"


def _classify(world_dir, refs_dir, out, *extra):
    return main(
        [
            "classify",
            "--manifest",
            str(world_dir / "manifest.json"),
            "--refs",
            str(refs_dir),
            "--out",
            str(out),
            "--subcats",
            "2",
            *extra,
        ]
    )


class TestSubcommands:
    def test_synth_writes_world(self, world_dir):
        assert (world_dir / "manifest.json").is_file()
        assert (world_dir / "truth.json").is_file()

    def test_synth_seed_flag_overrides_spec(self, tmp_path, capsys):
        spec_path = tmp_path / "spec.json"
        TINY_SPEC.save(spec_path)
        code = main(
            ["synth", "--out", str(tmp_path / "w"), "--world", str(spec_path), "--seed", "99"]
        )
        assert code == 0
        capsys.readouterr()
        doc = json.loads((tmp_path / "w" / "truth.json").read_text())
        assert doc["world"]["seed"] == 99

    def test_build_refs_writes_bundle(self, refs_dir):
        assert (refs_dir / "index.json").is_file()
        assert (refs_dir / "background.rimt").is_file()
        assert (refs_dir / "prompt_points.json").is_file()

    def test_classify_then_eval(self, world_dir, refs_dir, tmp_path, capsys):
        out = tmp_path / "run"
        assert _classify(world_dir, refs_dir, out, "--threads", "2") == 0
        assert (out / "predictions.json").is_file()
        code = main(
            ["eval", "--manifest", str(world_dir / "manifest.json"), "--out", str(out)]
        )
        assert code == 0
        stdout = capsys.readouterr().out
        assert "mIoU:" in stdout
        report = json.loads((out / "report.json").read_text())
        assert 0.0 <= report["miou"] <= 1.0
        assert len(report["classes"]) == TINY_SPEC.class_count + 1

    def test_classify_naive_flag(self, world_dir, refs_dir, tmp_path):
        assert _classify(world_dir, refs_dir, tmp_path / "naive", "--naive") == 0

    def test_classify_default_refs_location(self, world_dir, tmp_path):
        # without --refs the bundle is expected under <out>/refs
        out = tmp_path / "run"
        code = main(
            [
                "build-refs",
                "--manifest",
                str(world_dir / "manifest.json"),
                "--out",
                str(out),
                "--subcats",
                "2",
            ]
        )
        assert code == 0
        code = main(
            [
                "classify",
                "--manifest",
                str(world_dir / "manifest.json"),
                "--out",
                str(out),
                "--subcats",
                "2",
            ]
        )
        assert code == 0

    def test_thread_count_is_invisible_in_outputs(self, world_dir, refs_dir, tmp_path):
        a = tmp_path / "t1"
        b = tmp_path / "t8"
        assert _classify(world_dir, refs_dir, a, "--threads", "1") == 0
        assert _classify(world_dir, refs_dir, b, "--threads", "8") == 0
        assert (a / "predictions.json").read_bytes() == (b / "predictions.json").read_bytes()
        for rimt in sorted((a / "pred").glob("*.rimt")):
            assert rimt.read_bytes() == (b / "pred" / rimt.name).read_bytes()

    def test_ablate_emits_ladder(self, world_dir, tmp_path, capsys):
        out = tmp_path / "ablation"
        code = main(
            [
                "ablate",
                "--manifest",
                str(world_dir / "manifest.json"),
                "--out",
                str(out),
                "--subcats",
                "2",
                "--agents",
                "3",
            ]
        )
        assert code == 0
        stdout = capsys.readouterr().out
        assert "ranking_subcats" in stdout
        doc = json.loads((out / "ablation.json").read_text())
        assert [a["arm"] for a in doc["arms"]] == ["naive", "ranking", "ranking_subcats"]


class TestConfigPrecedence:
    def _args(self, *argv):
        return build_parser().parse_args(["classify", "--manifest", "m", "--out", "o", *argv])

    def test_defaults(self):
        cfg = resolve_config(self._args())
        assert cfg == RunConfig()

    def test_config_file_overrides_defaults(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"agents": 2, "threads": 3, "naive": True}))
        cfg = resolve_config(self._args("--config", str(path)))
        assert cfg.agents == 2
        assert cfg.threads == 3
        assert cfg.naive

    def test_flags_override_config_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"agents": 2, "subcats": 4}))
        cfg = resolve_config(self._args("--config", str(path), "--agents", "5"))
        assert cfg.agents == 5
        assert cfg.subcats == 4

    def test_no_subcats_flag_wins_over_config(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"use_subcategories": True}))
        cfg = resolve_config(self._args("--config", str(path), "--no-subcats"))
        assert not cfg.use_subcategories

    def test_rejects_unknown_config_fields(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"agents": 2, "bogus": 1}))
        with pytest.raises(ValidationError):
            resolve_config(self._args("--config", str(path)))

    def test_rejects_missing_config_file(self, tmp_path):
        with pytest.raises(ValidationError):
            resolve_config(self._args("--config", str(tmp_path / "nope.json")))

    def test_rejects_non_object_config(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("[1, 2]")
        with pytest.raises(ValidationError):
            resolve_config(self._args("--config", str(path)))

    def test_run_config_validation(self):
        with pytest.raises(ValidationError):
            RunConfig(agents=0)
        with pytest.raises(ValidationError):
            RunConfig(agents=7)
        with pytest.raises(ValidationError):
            RunConfig(subcats=0)
        with pytest.raises(ValidationError):
            RunConfig(attn_threshold=1.0)
        with pytest.raises(ValidationError):
            RunConfig(seed=-1)
        with pytest.raises(ValidationError):
            RunConfig(threads=0)
        with pytest.raises(ValidationError):
            RunConfig(naive="yes")

    def test_match_config_projection(self):
        cfg = RunConfig(agents=3, subcats=2, use_subcategories=False)
        mc = cfg.match_config()
        assert mc.agent_count == 3
        assert mc.subcategory_count == 2
        assert not mc.use_subcategories


class TestExitCodes:
    def test_missing_manifest_is_input_error(self, tmp_path, capsys):
        code = main(
            ["classify", "--manifest", str(tmp_path / "none.json"), "--out", str(tmp_path)]
        )
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_classify_without_refs_is_input_error(self, world_dir, tmp_path, capsys):
        code = main(
            [
                "classify",
                "--manifest",
                str(world_dir / "manifest.json"),
                "--out",
                str(tmp_path / "empty"),
            ]
        )
        assert code == 2
        assert "build-refs" in capsys.readouterr().err

    def test_eval_without_predictions_is_input_error(self, world_dir, tmp_path, capsys):
        code = main(
            ["eval", "--manifest", str(world_dir / "manifest.json"), "--out", str(tmp_path)]
        )
        assert code == 2
        assert "classify" in capsys.readouterr().err

    def test_bad_flag_value_is_input_error(self, world_dir, tmp_path, capsys):
        code = main(
            [
                "build-refs",
                "--manifest",
                str(world_dir / "manifest.json"),
                "--out",
                str(tmp_path),
                "--agents",
                "9",
            ]
        )
        assert code == 2
        capsys.readouterr()

    def test_unrealizable_world_is_numeric_error(self, tmp_path, capsys):
        spec = dataclasses.replace(
            TINY_SPEC,
            confusability=((0, 1, 0.9), (0, 2, 0.9), (1, 2, -0.9)),
        )
        spec_path = tmp_path / "impossible.json"
        spec.save(spec_path)
        code = main(["synth", "--out", str(tmp_path / "w"), "--world", str(spec_path)])
        assert code == 3
        assert "numeric error" in capsys.readouterr().err

    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        capsys.readouterr()

    def test_unknown_command_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2
        capsys.readouterr()

    def test_garbage_log_level_is_tolerated(self, monkeypatch, tmp_path):
        monkeypatch.setenv("RIM_LOG", "NOSUCH")
        spec_path = tmp_path / "spec.json"
        TINY_SPEC.save(spec_path)
        assert main(["synth", "--out", str(tmp_path / "w"), "--world", str(spec_path)]) == 0
