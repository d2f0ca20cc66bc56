"""Config parsing: section/key grammar, line-numbered errors, presets,
override precedence, and construction of the experiment dataclasses.
"""
from __future__ import annotations

import pytest

from swoks.config import ConfigError, load_config, parse_config_text

MINIMAL = """
[tasks]
rewarded_leaves = 0, 3

[curriculum]
order = 1, 2
segment_steps = 500
"""


def write_cfg(tmp_path, text):
    path = tmp_path / "exp.cfg"
    path.write_text(text)
    return path


class TestGrammar:
    def test_sections_keys_and_comments(self):
        text = "# top comment\n[detector]\nn_projections = 8  # inline\n\nhistory_length = 30\n"
        parsed = parse_config_text(text, origin="x")
        assert parsed == {
            "detector": {"n_projections": ("8", 3), "history_length": ("30", 5)},
        }

    @pytest.mark.parametrize(
        "text, where",
        [
            ("x = 1\n", r"x:1: key outside any \[section\]"),
            ("[detector]\nwhat now\n", r"x:2: expected 'key = value'"),
            ("[]\n", r"x:1: empty section name"),
            ("[detector]\n= 5\n", r"x:2: empty key"),
            (
                "[detector]\nn_projections = 8\nn_projections = 9\n",
                r"x:3: duplicate key 'n_projections'",
            ),
        ],
    )
    def test_parse_errors_carry_line_numbers(self, text, where):
        with pytest.raises(ConfigError, match=where):
            parse_config_text(text, origin="x")


class TestSchemaErrors:
    @pytest.mark.parametrize(
        "text, where",
        [
            ("[nosuch]\nx = 1\n", r":2: unknown section \[nosuch\]"),
            ("[detector]\nbogus = 1\n", r":2: unknown key 'bogus'"),
            ("[detector]\nhistory_length = soon\n", r":2: history_length expects int, got 'soon'"),
            ("[agent]\nlearning_rate = fast\n", r":2: learning_rate expects float"),
        ],
    )
    def test_line_numbered_schema_errors(self, tmp_path, text, where):
        with pytest.raises(ConfigError, match=where):
            load_config(write_cfg(tmp_path, text + MINIMAL))

    def test_out_of_range_value_is_a_config_error(self, tmp_path):
        path = write_cfg(tmp_path, "[detector]\nks_adjustment = 0.5\n" + MINIMAL)
        with pytest.raises(ConfigError, match="beta must be >= 1"):
            load_config(path)

    @pytest.mark.parametrize(
        "text, message",
        [
            ("[curriculum]\norder = 1\nsegment_steps = 500\n", r"missing \[tasks\] rewarded_leaves"),
            ("[tasks]\nrewarded_leaves = 0\n[curriculum]\nsegment_steps = 5\n", r"missing \[curriculum\] order"),
            ("[tasks]\nrewarded_leaves = 0\n[curriculum]\norder = 1\n", r"missing \[curriculum\] segment_steps"),
            ("[tasks]\nrewarded_leaves =\n[curriculum]\norder = 1\nsegment_steps = 5\n", "must not be empty"),
            (MINIMAL + "[experiment]\nmaster_seed = 1\n" ,None),
        ],
    )
    def test_required_blocks(self, tmp_path, text, message):
        path = write_cfg(tmp_path, text)
        if message is None:
            load_config(path)
        else:
            with pytest.raises(ConfigError, match=message):
                load_config(path)

    def test_leaf_list_must_be_integers(self, tmp_path):
        path = write_cfg(tmp_path, "[tasks]\nrewarded_leaves = 0, x\n[curriculum]\norder = 1\nsegment_steps = 5\n")
        with pytest.raises(ConfigError, match="comma-separated integer list"):
            load_config(path)

    def test_curriculum_must_reference_defined_tasks(self, tmp_path):
        path = write_cfg(tmp_path, MINIMAL.replace("order = 1, 2", "order = 1, 9"))
        with pytest.raises(ConfigError, match=r"curriculum task 9 not defined"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="config file not found"):
            load_config(tmp_path / "nope.cfg")


class TestDefaultsAndBuild:
    def test_minimal_file_gets_documented_defaults(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, MINIMAL))
        assert cfg.detector.history_len == 240
        assert cfg.detector.swd_history_len == 125
        assert cfg.detector.alpha == 0.001
        assert cfg.detector.beta == 1.1
        assert cfg.detector.stable_phase == 50_000
        assert cfg.detector.probe_swd_samples is None
        assert cfg.detector.resolved_probe_samples == 25
        assert cfg.env.depth == 2 and cfg.env.branching == 2
        assert cfg.env.obs_dim == 16
        assert cfg.agent.latent_dim == 8
        assert cfg.agent.learning_rate == 0.08
        assert cfg.master_seed == 0

    def test_tasks_and_curriculum_built_from_lists(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, MINIMAL))
        assert [(t.task_id, t.rewarded_leaf) for t in cfg.tasks] == [(1, 0), (2, 3)]
        assert cfg.curriculum.segments == ((1, 500), (2, 500))
        assert cfg.curriculum.total_steps == 1000

    def test_with_seed_does_not_mutate(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, MINIMAL))
        other = cfg.with_seed(123)
        assert other.master_seed == 123
        assert cfg.master_seed == 0
        assert other.detector == cfg.detector


class TestPresets:
    def test_desk_preset_loads(self):
        cfg = load_config("desk")
        assert cfg.preset == "desk"
        assert cfg.detector.history_len == 60
        assert cfg.detector.swd_history_len == 12
        assert cfg.detector.stable_phase == 2000
        assert cfg.detector.resolved_probe_samples == 12
        assert cfg.agent.learning_rate == 0.15
        assert cfg.master_seed == 1
        assert len(cfg.tasks) == 4
        assert cfg.curriculum.total_steps == 8 * 8000

    def test_paper_preset_loads(self):
        cfg = load_config("paper")
        assert cfg.detector.history_len == 240
        assert cfg.detector.swd_history_len == 125
        assert cfg.detector.stable_phase == 50_000
        assert cfg.detector.resolved_probe_samples == 25
        assert cfg.agent.learning_rate == 0.08
        assert cfg.curriculum.total_steps == 8 * 150_000

    def test_file_entries_override_named_preset(self, tmp_path):
        text = (
            "[experiment]\npreset = desk\nmaster_seed = 42\n"
            "[detector]\nhistory_length = 30\n"
        )
        cfg = load_config(write_cfg(tmp_path, text))
        assert cfg.preset == "desk"
        assert cfg.detector.history_len == 30          # file wins
        assert cfg.detector.swd_history_len == 12      # preset value kept
        assert cfg.agent.learning_rate == 0.15         # preset value kept
        assert cfg.master_seed == 42

    def test_unknown_preset_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "[experiment]\npreset = huge\n" + MINIMAL)
        with pytest.raises(ConfigError, match="unknown preset 'huge'"):
            load_config(path)

    def test_seed_argument_wins_over_everything(self, tmp_path):
        assert load_config("desk", seed=77).master_seed == 77
        text = "[experiment]\npreset = desk\nmaster_seed = 42\n"
        assert load_config(write_cfg(tmp_path, text), seed=77).master_seed == 77
