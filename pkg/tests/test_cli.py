import json
import os
from fractions import Fraction

import pytest

from evso import cli
from evso.frame_source import read_y4m

EXPECTED_CONFIG = """{
  "theta": 320,
  "alpha": 3000,
  "beta": 15000,
  "k_window": 10,
  "taus": [500, 1500, 3000, 6000],
  "delta": 0.0001,
  "profiles": {"evso": [0.6, 0.83, 0.9, 0.93, 1], "evso_plus": [0.5, 0.73, 0.83, 0.9, 1], "evso_plus_plus": [0.43, 0.6, 0.7, 0.8, 0.93]}
}"""


def _synth_clip(tmp_path, name="clip.y4m", count=45):
    path = tmp_path / name
    code = cli.main([
        "synth", "moving-block", "--dims", "96x64", "--count", str(count),
        "--block-edge", "32", "--velocity", "8", "--out", str(path),
    ])
    assert code == 0
    return path


def test_show_config_prints_defaults_exactly(capsys):
    assert cli.main(["--show-config"]) == 0
    assert capsys.readouterr().out.strip() == EXPECTED_CONFIG


def test_config_file_overrides_defaults(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"theta": 400, "alpha": 12}))
    assert cli.main(["--config", str(cfg), "--show-config"]) == 0
    out = capsys.readouterr().out
    assert '"theta": 400' in out
    assert '"alpha": 12' in out
    assert '"beta": 15000' in out


def test_config_file_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"thetas": 1}))
    assert cli.main(["--config", str(cfg), "--show-config"]) == 1
    assert "unknown config key" in capsys.readouterr().err


def test_no_command_prints_help(capsys):
    assert cli.main([]) == 2
    assert "usage: evso" in capsys.readouterr().out


def test_synth_and_analyze_round_trip(tmp_path, capsys):
    clip = _synth_clip(tmp_path)
    capsys.readouterr()
    assert cli.main(["analyze", str(clip)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["width"] == 96 and doc["height"] == 64
    assert doc["frame_count"] == 45
    assert len(doc["pairs"]) == 44
    assert all(p["m_diff"] >= 0 for p in doc["pairs"])
    assert all(p["ssim"] is None for p in doc["pairs"])


def test_analyze_with_ssim_to_file(tmp_path):
    clip = _synth_clip(tmp_path)
    out = tmp_path / "analysis.json"
    assert cli.main(["analyze", str(clip), "--with-ssim",
                     "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert all(0.0 < p["ssim"] <= 1.0 for p in doc["pairs"])


def test_split_accepts_saved_analysis(tmp_path, capsys):
    clip = _synth_clip(tmp_path)
    analysis = tmp_path / "analysis.json"
    assert cli.main(["analyze", str(clip), "--out", str(analysis)]) == 0
    capsys.readouterr()
    assert cli.main(["split", "--analysis", str(analysis)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["chunks"][0]["start"] == 0
    assert doc["chunks"][-1]["end"] == 45
    assert doc["gamma"] == "30"


def test_split_requires_some_input(capsys):
    assert cli.main(["split"]) == 1
    assert "error:" in capsys.readouterr().err


def test_schedule_outputs_rates_per_profile(tmp_path, capsys):
    clip = _synth_clip(tmp_path)
    capsys.readouterr()
    assert cli.main(["schedule", str(clip)]) == 0
    doc = json.loads(capsys.readouterr().out)
    for chunk in doc["chunks"]:
        assert set(chunk["rates"]) == {"evso", "evso_plus", "evso_plus_plus"}
        for rate in chunk["rates"].values():
            assert 0 < rate <= 30


def test_process_hold_mode_writes_full_length_stream(tmp_path, capsys):
    clip = _synth_clip(tmp_path)
    capsys.readouterr()
    out = tmp_path / "held.y4m"
    assert cli.main(["process", str(clip), "--profile", "evso_plus_plus",
                     "--mode", "hold", "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    held = read_y4m(out.read_bytes())
    assert len(held) == 45
    assert held.fps == Fraction(30)
    assert summary["kept_frames"] < 45


def test_process_segment_mode_writes_chunk_files(tmp_path, capsys):
    clip = _synth_clip(tmp_path)
    capsys.readouterr()
    outdir = tmp_path / "segs"
    assert cli.main(["process", str(clip), "--profile", "two_thirds",
                     "--out", str(outdir)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["kept_frames"] == 30
    files = sorted(os.listdir(outdir))
    assert files == ["chunk_000.y4m"]
    segment = read_y4m((outdir / files[0]).read_bytes())
    assert len(segment) == 30
    assert segment.fps == Fraction(20)


def test_pipeline_builds_complete_tree(tmp_path, capsys):
    clip = _synth_clip(tmp_path)
    outdir = tmp_path / "tree"
    assert cli.main(["pipeline", str(clip), str(outdir)]) == 0
    capsys.readouterr()
    for rel in ("manifest.mpd", "schedule.json", "quality_report.json",
                "segments/baseline/chunk_000.y4m",
                "segments/high/chunk_000.y4m",
                "segments/medium/chunk_000.y4m",
                "segments/low/chunk_000.y4m"):
        assert (outdir / rel).is_file(), rel
    report = json.loads((outdir / "quality_report.json").read_text())
    assert set(report["levels"]) == {"baseline", "high", "medium", "low",
                                     "two_thirds"}
    assert report["levels"]["baseline"]["mean_ssim_pct"] == 100.0
    assert report["levels"]["baseline"]["avg_frame_rate"] == 30.0
    # refuses to reuse the tree unless forced
    assert cli.main(["pipeline", str(clip), str(outdir)]) == 1
    capsys.readouterr()
    assert cli.main(["pipeline", str(clip), str(outdir), "--force"]) == 0


def test_manifest_rebuild_matches_pipeline_output(tmp_path, capsys):
    clip = _synth_clip(tmp_path)
    outdir = tmp_path / "tree"
    assert cli.main(["pipeline", str(clip), str(outdir)]) == 0
    original = (outdir / "manifest.mpd").read_bytes()
    rebuilt_path = tmp_path / "rebuilt.mpd"
    assert cli.main(["manifest", str(outdir), "--out", str(rebuilt_path)]) == 0
    assert rebuilt_path.read_bytes() == original
    capsys.readouterr()
    assert cli.main(["manifest", "--parse", str(outdir / "manifest.mpd")]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [v["level"] for v in doc["video_sets"]] == [
        "baseline", "high", "medium", "low"]


def test_correlate_custom_corpus(tmp_path, capsys):
    corpus = tmp_path / "corpus.json"
    corpus.write_text(json.dumps([
        {"kind": "static", "width": 32, "height": 32, "count": 10, "luma": 64},
        {"kind": "noise", "width": 32, "height": 32, "count": 10, "seed": 3},
    ]))
    assert cli.main(["correlate", "--corpus", str(corpus)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["pairs"] == 18
    assert -1.0 <= doc["pearson_r"] <= 1.0


def test_simulate_writes_session_csv(tmp_path, capsys):
    clip = _synth_clip(tmp_path)
    outdir = tmp_path / "tree"
    assert cli.main(["pipeline", str(clip), str(outdir)]) == 0
    trace = tmp_path / "trace.csv"
    trace.write_text("segment_index,bandwidth_bps,battery_level\n"
                     "0,1000000000,high\n")
    session = tmp_path / "session.csv"
    assert cli.main(["simulate", str(outdir / "manifest.mpd"),
                     "--trace", str(trace), "--out", str(session)]) == 0
    lines = session.read_text().strip().splitlines()
    assert lines[0].startswith("segment_index,")
    assert lines[1].split(",")[3] == "high"


def test_missing_input_reports_error(tmp_path, capsys):
    assert cli.main(["analyze", str(tmp_path / "nope.y4m")]) == 1
    assert "error:" in capsys.readouterr().err
