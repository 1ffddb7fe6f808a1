import json
from pathlib import Path

import pytest

from levelkit import level_doc
from wayfinder import levels as levels_pkg
from wayfinder.cli import main

LEVELS_DIR = Path(levels_pkg.__file__).parent

COHORT_GOLDEN_R = 0.9989674770290113
COHORT_AGGREGATE_R = 0.9994630003703835


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    doc = json.loads(captured.out) if captured.out else None
    return code, doc, captured.err


def level_path(level_id):
    return str(LEVELS_DIR / f"{level_id}.json")


class TestValidate:
    def test_bundled_levels_pass(self, capsys):
        for n in range(1, 6):
            code, doc, _ = run_cli(capsys, "validate", level_path(f"level{n}"))
            assert code == 0
            assert doc == {"level_id": f"level{n}", "violations": []}

    def test_rule_violation_exits_one(self, capsys, tmp_path):
        doc = level_doc(
            ["#####", "#...#", "#####"],
            (1, 1),
            [{"order": 1, "chest": (3, 0), "contents": ["torch"], "target": "torch"}],
        )
        doc["start"]["x"], doc["start"]["y"] = 0, 0  # blocked corner
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        code, out, _ = run_cli(capsys, "validate", str(path))
        assert code == 1
        codes = [v["code"] for v in out["violations"]]
        assert "start_blocked" in codes

    def test_schema_error_exits_one(self, capsys, tmp_path):
        path = tmp_path / "thin.json"
        path.write_text('{"level_id": "x"}', encoding="utf-8")
        code, out, _ = run_cli(capsys, "validate", str(path))
        assert code == 1
        assert out["violations"][0]["code"] == "schema_error"

    def test_malformed_json_exits_two(self, capsys, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"level_id": ', encoding="utf-8")
        code, out, err = run_cli(capsys, "validate", str(path))
        assert code == 2
        assert out is None
        assert "line" in err

    def test_missing_file_exits_two(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "validate", str(tmp_path / "nope.json"))
        assert code == 2
        assert "nope.json" in err


class TestSimulate:
    def test_optimal_run(self, capsys):
        code, doc, _ = run_cli(
            capsys, "simulate", "--level", level_path("level1"), "--agent", "optimal"
        )
        assert code == 0
        assert doc["metrics"]["normalized_distance"] == 1.0
        assert doc["session"]["final_phase"] == {"kind": "complete", "craft_success": True}

    def test_noisy_golden(self, capsys):
        code, doc, _ = run_cli(
            capsys,
            "simulate",
            "--level", level_path("level1"),
            "--agent", "noisy",
            "--seed", "7",
            "--detour-rate", "0.3",
        )
        assert code == 0
        assert doc["metrics"]["normalized_distance"] == 1.9090909090909092

    def test_out_dir_persists_run(self, capsys, tmp_path):
        out_dir = tmp_path / "data"
        code, doc, _ = run_cli(
            capsys,
            "simulate",
            "--level", level_path("level1"),
            "--session-id", "run-1",
            "--out-dir", str(out_dir),
        )
        assert code == 0
        assert (out_dir / "sessions" / "run-1.json").exists()
        assert (out_dir / "reports" / "run-1.metrics.json").exists()
        assert (out_dir / "levels" / "level1.json").exists()

    def test_bad_rate_exits_two(self, capsys):
        code, _, err = run_cli(
            capsys,
            "simulate",
            "--level", level_path("level1"),
            "--agent", "noisy",
            "--detour-rate", "1.5",
        )
        assert code == 2
        assert "detour_rate" in err

    def test_missing_level_file_exits_two(self, capsys):
        code, _, _ = run_cli(capsys, "simulate", "--level", "/does/not/exist.json")
        assert code == 2


class TestAnalyze:
    HEADER = "participant_id,level_rank,normalized_distance\n"

    def write(self, path, rows):
        path.write_text(
            self.HEADER + "".join(f"{p},{r},{v}\n" for p, r, v in rows),
            encoding="utf-8",
        )

    def test_identical_files_correlate_perfectly(self, capsys, tmp_path):
        a = tmp_path / "a.csv"
        self.write(a, [("p1", 1, 1.0), ("p1", 2, 1.5), ("p2", 1, 1.2), ("p2", 2, 2.0)])
        code, doc, _ = run_cli(
            capsys, "analyze", "--pairs-a", str(a), "--pairs-b", str(a)
        )
        assert code == 0
        assert doc["r"] == 1.0
        assert doc["n"] == 4
        assert doc["band"] == "very_high"
        assert doc["unmatched_a"] == [] and doc["unmatched_b"] == []

    def test_single_pair_insufficient(self, capsys, tmp_path):
        a = tmp_path / "a.csv"
        self.write(a, [("p1", 1, 1.0)])
        code, _, err = run_cli(capsys, "analyze", "--pairs-a", str(a), "--pairs-b", str(a))
        assert code == 1
        assert "2 pairs" in err

    def test_bad_header_exits_one(self, capsys, tmp_path):
        a = tmp_path / "a.csv"
        good = tmp_path / "b.csv"
        a.write_text("wrong,header,names\n", encoding="utf-8")
        self.write(good, [("p1", 1, 1.0), ("p2", 1, 2.0)])
        code, _, err = run_cli(
            capsys, "analyze", "--pairs-a", str(a), "--pairs-b", str(good)
        )
        assert code == 1
        assert "header" in err

    def test_missing_file_exits_two(self, capsys, tmp_path):
        good = tmp_path / "b.csv"
        self.write(good, [("p1", 1, 1.0), ("p2", 1, 2.0)])
        code, _, _ = run_cli(
            capsys, "analyze", "--pairs-a", str(tmp_path / "nope.csv"), "--pairs-b", str(good)
        )
        assert code == 2

    def test_unmatched_rows_reported(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        self.write(a, [("p1", 1, 1.0), ("p1", 2, 1.5), ("p9", 1, 3.0)])
        self.write(b, [("p1", 1, 1.1), ("p1", 2, 1.4), ("p8", 1, 2.0)])
        code, doc, _ = run_cli(capsys, "analyze", "--pairs-a", str(a), "--pairs-b", str(b))
        assert code == 0
        assert doc["n"] == 2
        assert doc["unmatched_a"] == [
            {"participant_id": "p9", "level_rank": 1, "value": 3.0}
        ]
        assert doc["unmatched_b"] == [
            {"participant_id": "p8", "level_rank": 1, "value": 2.0}
        ]

    def test_zscore_and_aggregate_modes(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        rows_a = [("p1", 1, 1.0), ("p2", 1, 2.0), ("p1", 2, 3.0), ("p2", 2, 5.0)]
        rows_b = [("p1", 1, 1.1), ("p2", 1, 2.2), ("p1", 2, 2.9), ("p2", 2, 5.3)]
        self.write(a, rows_a)
        self.write(b, rows_b)
        code, doc, _ = run_cli(
            capsys,
            "analyze",
            "--pairs-a", str(a),
            "--pairs-b", str(b),
            "--normalization", "zscore_per_level",
        )
        assert code == 0
        assert doc["mode"] == {"normalization": "zscore_per_level", "aggregate": "none"}
        code, doc, _ = run_cli(
            capsys,
            "analyze",
            "--pairs-a", str(a),
            "--pairs-b", str(b),
            "--aggregate", "participant",
        )
        assert code == 0
        assert doc["n"] == 2  # one aggregate row per participant


class TestReplay:
    def simulate_into(self, capsys, tmp_path, **kwargs):
        out_dir = tmp_path / "data"
        argv = [
            "simulate",
            "--level", level_path("level1"),
            "--agent", "noisy",
            "--seed", "7",
            "--detour-rate", "0.3",
            "--session-id", "run-1",
            "--out-dir", str(out_dir),
        ]
        code, doc, _ = run_cli(capsys, *argv)
        assert code == 0
        return out_dir, out_dir / "sessions" / "run-1.json"

    def test_clean_replay(self, capsys, tmp_path):
        _, session_path = self.simulate_into(capsys, tmp_path)
        code, doc, _ = run_cli(
            capsys, "replay", str(session_path), "--level", level_path("level1")
        )
        assert code == 0
        assert doc["normalized_distance"] == 1.9090909090909092

    def test_level_resolved_from_data_root(self, capsys, tmp_path, monkeypatch):
        out_dir, session_path = self.simulate_into(capsys, tmp_path)
        monkeypatch.setenv("WAYFINDER_DATA", str(out_dir))
        code, doc, _ = run_cli(capsys, "replay", str(session_path))
        assert code == 0

    def test_illegal_sample_tamper_diverges(self, capsys, tmp_path):
        _, session_path = self.simulate_into(capsys, tmp_path)
        doc = json.loads(session_path.read_text(encoding="utf-8"))
        doc["trajectory"][3]["x"] = 0.5  # border column is blocked
        session_path.write_text(json.dumps(doc), encoding="utf-8")
        code, _, err = run_cli(
            capsys, "replay", str(session_path), "--level", level_path("level1")
        )
        assert code == 1
        assert "replay diverged" in err

    def test_inventory_tamper_mismatches(self, capsys, tmp_path):
        _, session_path = self.simulate_into(capsys, tmp_path)
        doc = json.loads(session_path.read_text(encoding="utf-8"))
        doc["inventory"].append("stone")
        session_path.write_text(json.dumps(doc), encoding="utf-8")
        code, _, err = run_cli(
            capsys, "replay", str(session_path), "--level", level_path("level1")
        )
        assert code == 1
        assert "replay mismatch" in err

    def test_check_against_stored_report(self, capsys, tmp_path):
        out_dir, session_path = self.simulate_into(capsys, tmp_path)
        code, _, _ = run_cli(
            capsys,
            "replay", str(session_path),
            "--level", level_path("level1"),
            "--data-root", str(out_dir),
            "--check",
        )
        assert code == 0

    def test_check_detects_tampered_report(self, capsys, tmp_path):
        out_dir, session_path = self.simulate_into(capsys, tmp_path)
        report_path = out_dir / "reports" / "run-1.metrics.json"
        report = json.loads(report_path.read_text(encoding="utf-8"))
        report["normalized_distance"] = 1.0
        report_path.write_text(json.dumps(report), encoding="utf-8")
        code, _, err = run_cli(
            capsys,
            "replay", str(session_path),
            "--level", level_path("level1"),
            "--data-root", str(out_dir),
            "--check",
        )
        assert code == 1
        assert "metrics mismatch" in err

    def test_missing_session_exits_two(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "replay", str(tmp_path / "nope.json"))
        assert code == 2


class TestExportTrajectories:
    def test_empty_directory_renders_grid_only(self, capsys, tmp_path):
        sessions = tmp_path / "sessions"
        sessions.mkdir()
        out = tmp_path / "overlay.svg"
        code, doc, _ = run_cli(
            capsys,
            "export-trajectories",
            "--level", level_path("level1"),
            "--sessions", str(sessions),
            "--out", str(out),
        )
        assert code == 0
        assert doc["sessions"] == 0
        svg = out.read_text(encoding="utf-8")
        assert "<polyline" not in svg and "<svg" in svg

    def test_renders_sessions_and_csv(self, capsys, tmp_path):
        out_dir = tmp_path / "data"
        run_cli(
            capsys,
            "simulate",
            "--level", level_path("level1"),
            "--session-id", "run-1",
            "--out-dir", str(out_dir),
        )
        out_svg = tmp_path / "overlay.svg"
        out_csv = tmp_path / "overlay.csv"
        code, doc, _ = run_cli(
            capsys,
            "export-trajectories",
            "--level", level_path("level1"),
            "--sessions", str(out_dir / "sessions"),
            "--out", str(out_svg),
            "--csv", str(out_csv),
        )
        assert code == 0
        assert doc["sessions"] == 1
        assert 'data-session="run-1"' in out_svg.read_text(encoding="utf-8")
        assert out_csv.read_text(encoding="utf-8").startswith("session_id,")

    def test_mixed_levels_exit_one(self, capsys, tmp_path):
        out_dir = tmp_path / "data"
        for level_id in ("level1", "level2"):
            run_cli(
                capsys,
                "simulate",
                "--level", level_path(level_id),
                "--session-id", f"run-{level_id}",
                "--out-dir", str(out_dir),
            )
        code, _, err = run_cli(
            capsys,
            "export-trajectories",
            "--level", level_path("level1"),
            "--sessions", str(out_dir / "sessions"),
            "--out", str(tmp_path / "overlay.svg"),
        )
        assert code == 1
        assert "level_mismatch" in err

    def test_sessions_path_must_be_directory(self, capsys, tmp_path):
        code, _, _ = run_cli(
            capsys,
            "export-trajectories",
            "--level", level_path("level1"),
            "--sessions", str(tmp_path / "missing"),
            "--out", str(tmp_path / "overlay.svg"),
        )
        assert code == 2


class TestCohort:
    def test_golden_defaults(self, capsys):
        code, doc, _ = run_cli(capsys, "cohort")
        assert code == 0
        assert doc["r"] == COHORT_GOLDEN_R
        assert doc["n"] == 50
        assert doc["band"] == "very_high"
        assert doc["participants"] == 10

    def test_outputs_feed_analyze(self, capsys, tmp_path):
        out_dir = tmp_path / "cohort"
        code, doc, _ = run_cli(capsys, "cohort", "--out-dir", str(out_dir))
        assert code == 0
        pairs_a = out_dir / "reports" / "pairs_a.csv"
        pairs_b = out_dir / "reports" / "pairs_b.csv"
        assert pairs_a.exists() and pairs_b.exists()
        assert (out_dir / "reports" / "participants.json").exists()
        assert (out_dir / "reports" / "correlation.json").exists()
        assert len(list((out_dir / "sessions").glob("*.json"))) == 50

        code, analyzed, _ = run_cli(
            capsys, "analyze", "--pairs-a", str(pairs_a), "--pairs-b", str(pairs_b)
        )
        assert code == 0
        assert analyzed["r"] == COHORT_GOLDEN_R

        code, aggregated, _ = run_cli(
            capsys,
            "analyze",
            "--pairs-a", str(pairs_a),
            "--pairs-b", str(pairs_b),
            "--aggregate", "participant",
        )
        assert code == 0
        assert aggregated["r"] == COHORT_AGGREGATE_R
        assert aggregated["n"] == 10

    def test_zero_jitter_is_exact(self, capsys):
        code, doc, _ = run_cli(
            capsys, "cohort", "--participants", "4", "--jitter", "0",
        )
        assert code == 0
        assert doc["r"] == 1.0

    def test_custom_levels_dir(self, capsys, tmp_path):
        levels_dir = tmp_path / "levels"
        levels_dir.mkdir()
        for level_id in ("level1", "level2"):
            src = Path(level_path(level_id)).read_text(encoding="utf-8")
            (levels_dir / f"{level_id}.json").write_text(src, encoding="utf-8")
        code, doc, _ = run_cli(
            capsys,
            "cohort",
            "--participants", "3",
            "--levels-dir", str(levels_dir),
        )
        assert code == 0
        assert doc["levels"] == 2
        assert doc["n"] == 6

    def test_empty_levels_dir_exits_two(self, capsys, tmp_path):
        empty = tmp_path / "levels"
        empty.mkdir()
        code, _, _ = run_cli(capsys, "cohort", "--levels-dir", str(empty))
        assert code == 2
