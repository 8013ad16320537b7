"""Stage wiring, artifact contracts, and error surfaces of the command line."""

import csv
import hashlib
import json
import os

import pytest
from click.testing import CliRunner

from knowspan.cli import METRIC_COLUMNS, main

FAST_TRAIN = ["--dim", "8", "--epochs", "2"]


@pytest.fixture
def runner():
    return CliRunner()


def run_ok(runner, args):
    result = runner.invoke(main, args)
    assert result.exit_code == 0, result.stderr or result.output
    return result


def run_fail(runner, args):
    """Failed invocations must emit exactly one JSON object on stderr."""
    result = runner.invoke(main, args)
    assert result.exit_code != 0
    lines = [ln for ln in result.stderr.splitlines() if ln.strip()]
    assert len(lines) == 1
    return json.loads(lines[0])


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def record(pid, year, codes, journal="J-a", refs=(), authors=3, pages=10, title=8):
    return {
        "id": pid,
        "year": year,
        "journal": journal,
        "pacs_codes": codes,
        "author_count": authors,
        "n_pages": pages,
        "title_length": title,
        "references": list(refs),
    }


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def tiny_corpus(path):
    """Eight papers, two journals, a known citation pattern."""
    codes_a = ["11.22.Aa", "11.22.Bb"]
    codes_b = ["43.50.Cc", "43.50.Dd"]
    write_jsonl(
        path,
        [
            record("A", 2000, codes_a, authors=2, pages=4, title=5),
            record("P", 2001, codes_a + ["43.50.Cc"], refs=["A"], authors=5, pages=12),
            record("C1", 2002, codes_b, journal="J-b", refs=["P"], title=11),
            record("C2", 2002, codes_b, refs=["P"], authors=1, pages=7),
            record("C3", 2002, codes_a, journal="J-b", refs=["P"], title=14),
            record("C4", 2002, codes_b, refs=["P", "A"], authors=7, pages=20),
            record("C5", 2002, codes_a, refs=["A"], authors=4, title=6),
            # cites nothing and is cited by nobody: every count stays zero
            record("Z", 2002, codes_b, authors=6, pages=9, title=9),
        ],
    )


# ---------------------------------------------------------------- stages

def test_stagewise_run_produces_each_artifact(runner, tmp_path):
    out = str(tmp_path)
    run_ok(runner, ["synth", "--outdir", out, "--papers", "150", "--seed", "5"])
    assert (tmp_path / "corpus.jsonl").exists()
    run_ok(runner, ["ingest", "--outdir", out])
    assert (tmp_path / "corpus.parsed.jsonl").exists()
    report = json.loads((tmp_path / "parse_report.json").read_text())
    assert report["n_parsed"] == 150
    assert report["n_skipped"] == 0
    run_ok(runner, ["train", "--outdir", out, *FAST_TRAIN, "--loss-log"])
    assert (tmp_path / "embedding.txt").exists()
    header, loss_rows = read_csv(tmp_path / "loss_log.csv")
    assert header == ["epoch", "mean_loss"]
    assert len(loss_rows) == 2
    run_ok(runner, ["metrics", "--outdir", out])
    assert (tmp_path / "metrics_space.csv").exists()
    assert not (tmp_path / "metrics.csv").exists()  # merge waits for disrupt
    run_ok(runner, ["disrupt", "--outdir", out])
    assert (tmp_path / "disruption.csv").exists()
    assert (tmp_path / "metrics.csv").exists()
    run_ok(runner, ["correlate", "--outdir", out])
    assert (tmp_path / "correlations.csv").exists()
    run_ok(runner, ["regress", "--outdir", out, "--model", "model1"])
    assert (tmp_path / "regression_model1.csv").exists()
    run_ok(runner, ["curves", "--outdir", out, "--model", "model1", "--points", "5"])
    assert (tmp_path / "curves_model1.csv").exists()


def test_metrics_without_embedding_names_train(runner, tmp_path):
    out = str(tmp_path)
    run_ok(runner, ["synth", "--outdir", out, "--papers", "50"])
    run_ok(runner, ["ingest", "--outdir", out])
    payload = run_fail(runner, ["metrics", "--outdir", out])
    assert payload["error"] == "missing_artifact"
    assert payload["path"] == "embedding.txt"
    assert payload["producer"] == "train"
    assert "train" in payload["message"]


def test_ingest_without_corpus_names_synth(runner, tmp_path):
    payload = run_fail(runner, ["ingest", "--outdir", str(tmp_path)])
    assert payload["path"] == "corpus.jsonl"
    assert payload["producer"] == "synth"


def test_correlate_without_merged_table_names_both_producers(runner, tmp_path):
    payload = run_fail(runner, ["correlate", "--outdir", str(tmp_path)])
    assert payload["path"] == "metrics.csv"
    assert payload["producer"] == "metrics,disrupt"
    assert "metrics" in payload["message"] and "disrupt" in payload["message"]


def test_train_before_ingest_names_ingest(runner, tmp_path):
    payload = run_fail(runner, ["train", "--outdir", str(tmp_path)])
    assert payload["producer"] == "ingest"


def test_unknown_model_is_structured_error(runner, tmp_path):
    out = str(tmp_path)
    run_ok(runner, ["pipeline", "--outdir", out, "--synth", "--papers", "120", *FAST_TRAIN, "--points", "3"])
    payload = run_fail(runner, ["regress", "--outdir", out, "--model", "model99"])
    assert payload["error"] == "unknown_model"
    assert "model99" in payload["message"]


# ---------------------------------------------------------------- contracts

def test_merged_metrics_column_contract(runner, tmp_path):
    out = str(tmp_path)
    run_ok(runner, ["pipeline", "--outdir", out, "--synth", "--papers", "200", *FAST_TRAIN, "--points", "3"])
    header, rows = read_csv(tmp_path / "metrics.csv")
    assert tuple(header) == METRIC_COLUMNS
    assert len(rows) == 200
    for row in rows:
        assert len(row) == len(METRIC_COLUMNS)
        assert row[0].startswith("P")
        for cell in row[1:]:
            if cell != "":
                float(cell)  # every populated cell is numeric


def test_undefined_disruption_cells_are_empty_not_zero(runner, tmp_path):
    out = str(tmp_path)
    tiny_corpus(tmp_path / "corpus.jsonl")
    run_ok(runner, ["ingest", "--outdir", out])
    run_ok(runner, ["train", "--outdir", out, *FAST_TRAIN])
    run_ok(runner, ["metrics", "--outdir", out])
    run_ok(runner, ["disrupt", "--outdir", out])
    header, rows = read_csv(tmp_path / "metrics.csv")
    by_id = {row[0]: dict(zip(header, row)) for row in rows}
    assert by_id["Z"]["d_score"] == ""
    assert by_id["Z"]["d_percentile"] == ""
    assert by_id["Z"]["d_n_i"] == "0"
    # P has the worked 3/1/1 split under the disjoint variant
    assert by_id["P"]["d_score"] == "0.4"
    assert by_id["P"]["d_n_i"] == "3"
    assert by_id["P"]["d_n_j"] == "1"
    assert by_id["P"]["d_n_k"] == "1"


def test_overlapping_variant_changes_the_counts(runner, tmp_path):
    out = str(tmp_path)
    tiny_corpus(tmp_path / "corpus.jsonl")
    run_ok(runner, ["ingest", "--outdir", out])
    run_ok(runner, ["disrupt", "--outdir", out, "--d-variant", "overlapping"])
    header, rows = read_csv(tmp_path / "disruption.csv")
    by_id = {row[0]: dict(zip(header, row)) for row in rows}
    assert by_id["P"]["d_n_i"] == "4"
    assert by_id["P"]["d_score"] == "0.5"


def test_exclude_self_empties_single_member_cells(runner, tmp_path):
    out = str(tmp_path)
    tiny_corpus(tmp_path / "corpus.jsonl")
    run_ok(runner, ["ingest", "--outdir", out])
    run_ok(runner, ["train", "--outdir", out, *FAST_TRAIN])
    run_ok(runner, ["metrics", "--outdir", out])
    _, rows = read_csv(tmp_path / "metrics_space.csv")
    plain = {row[0]: row[1] for row in rows}
    assert all(cell != "" for cell in plain.values())
    run_ok(runner, ["metrics", "--outdir", out, "--exclude-self"])
    _, rows = read_csv(tmp_path / "metrics_space.csv")
    excluded = {row[0]: row[1] for row in rows}
    # ("J-a", 2000) and ("J-a", 2001) hold one paper each
    assert excluded["A"] == "" and excluded["P"] == ""
    assert excluded["C2"] != ""


def test_correlations_put_r_above_and_p_below(runner, tmp_path):
    out = str(tmp_path)
    run_ok(runner, ["pipeline", "--outdir", out, "--synth", "--papers", "200", *FAST_TRAIN, "--points", "3"])
    run_ok(
        runner,
        ["correlate", "--outdir", out, "--columns", "team_size,citation_count,years"],
    )
    rows = list(csv.reader(open(tmp_path / "correlations.csv", newline="")))
    assert rows[0] == ["", "team_size", "citation_count", "years"]
    names = [row[0] for row in rows[1:]]
    assert names == ["team_size", "citation_count", "years"]
    for i in range(1, 4):
        assert rows[i][i] == "1.0"
    r_above = float(rows[1][2])
    p_below = float(rows[2][1])
    assert -1.0 <= r_above <= 1.0
    assert 0.0 <= p_below <= 1.0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["stages"]["correlate"]["df"] == 198


def test_regress_all_emits_all_eight_tables(runner, tmp_path):
    out = str(tmp_path)
    run_ok(runner, ["pipeline", "--outdir", out, "--synth", "--papers", "300", *FAST_TRAIN, "--points", "3"])
    for k in range(1, 9):
        header, rows = read_csv(tmp_path / f"regression_model{k}.csv")
        assert header == ["term", "coefficient", "std_error", "t", "p", "stars"]
        assert rows[0][0] == "const"
        assert rows[-2][0] == "adjusted_r2"
        assert rows[-1][0] == "n"
    # three-predictor moderated presets carry 17 terms including the constant
    _, rows = read_csv(tmp_path / "regression_model4.csv")
    assert len(rows) - 2 == 17
    _, rows = read_csv(tmp_path / "regression_model8.csv")
    assert len(rows) - 2 == 17


def test_curves_are_long_format_within_observed_range(runner, tmp_path):
    out = str(tmp_path)
    run_ok(runner, ["pipeline", "--outdir", out, "--synth", "--papers", "200", *FAST_TRAIN, "--points", "7"])
    header, rows = read_csv(tmp_path / "curves_model4.csv")
    assert header == ["predictor", "predictor_value", "moderator_level", "prediction", "extrapolated"]
    predictors = {row[0] for row in rows}
    assert predictors == {"network_distance", "article_distance_log", "journal_distance"}
    # 3 predictors x 7 grid points x 3 moderator levels
    assert len(rows) == 63
    assert {row[4] for row in rows} == {"false"}
    levels = {row[2] for row in rows}
    assert len(levels) == 3


def test_tree_export_writes_edge_list(runner, tmp_path):
    out = str(tmp_path)
    run_ok(runner, ["synth", "--outdir", out, "--papers", "60"])
    run_ok(runner, ["ingest", "--outdir", out])
    run_ok(runner, ["train", "--outdir", out, *FAST_TRAIN])
    run_ok(runner, ["metrics", "--outdir", out, "--export-tree"])
    header, rows = read_csv(tmp_path / "tree_edges.csv")
    assert header == ["child_label", "parent_label", "level"]
    assert ["physics", "", ""] not in rows
    roots = [row for row in rows if row[1] == "physics"]
    assert roots and all(row[2] == "2" for row in roots)


# ---------------------------------------------------------------- manifest

def sha256_of(path):
    return "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()


def test_manifest_records_stages_digests_and_no_paths(runner, tmp_path):
    out = str(tmp_path)
    run_ok(runner, ["pipeline", "--outdir", out, "--synth", "--papers", "150", *FAST_TRAIN, "--points", "3"])
    text = (tmp_path / "manifest.json").read_text()
    assert out not in text  # artifact names only, never absolute paths
    manifest = json.loads(text)
    assert set(manifest["stages"]) == {
        "synth", "ingest", "train", "metrics", "disrupt", "merge",
        "correlate", "regress", "curves",
    }
    assert manifest["versions"]["knowspan"]
    train_stage = manifest["stages"]["train"]
    assert train_stage["outputs"]["embedding.txt"] == sha256_of(tmp_path / "embedding.txt")
    assert train_stage["inputs"]["corpus.parsed.jsonl"] == sha256_of(
        tmp_path / "corpus.parsed.jsonl"
    )
    assert train_stage["seed"] == 0
    assert train_stage["config_hash"].startswith("sha256:")


def test_pipeline_rerun_is_byte_identical(runner, tmp_path):
    dirs = (tmp_path / "a", tmp_path / "b")
    for d in dirs:
        run_ok(
            runner,
            ["pipeline", "--outdir", str(d), "--synth", "--papers", "150",
             *FAST_TRAIN, "--points", "3", "--loss-log"],
        )
    names = sorted(p.name for p in dirs[0].iterdir())
    assert names == sorted(p.name for p in dirs[1].iterdir())
    for name in names:
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes(), name


def test_pipeline_does_not_mutate_its_input(runner, tmp_path):
    staging = tmp_path / "staging"
    run_ok(runner, ["synth", "--outdir", str(staging), "--papers", "150"])
    source = staging / "corpus.jsonl"
    before = source.read_bytes()
    out = tmp_path / "work"
    run_ok(
        runner,
        ["pipeline", "--outdir", str(out), "--input", str(source), *FAST_TRAIN, "--points", "3"],
    )
    assert source.read_bytes() == before
    assert (out / "metrics.csv").exists()
    assert not (out / "corpus.jsonl").exists()  # input stays where it was


# ---------------------------------------------------------------- config file

def test_config_file_supplies_defaults_and_flags_win(runner, tmp_path):
    out = str(tmp_path)
    config = tmp_path / "run.cfg"
    config.write_text("epochs = 1\ndim = 6  # comment\n\n")
    run_ok(runner, ["synth", "--outdir", out, "--papers", "80"])
    run_ok(runner, ["ingest", "--outdir", out])
    run_ok(runner, ["train", "--outdir", out, "--config", str(config)])
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["stages"]["train"]["config"]["epochs"] == 1
    assert manifest["stages"]["train"]["config"]["dim"] == 6
    run_ok(runner, ["train", "--outdir", out, "--config", str(config), "--dim", "10"])
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["stages"]["train"]["config"]["dim"] == 10
    assert manifest["stages"]["train"]["config"]["epochs"] == 1


def test_config_file_can_rewrite_a_model_preset(runner, tmp_path):
    out = str(tmp_path)
    run_ok(runner, ["pipeline", "--outdir", out, "--synth", "--papers", "200", *FAST_TRAIN, "--points", "3"])
    config = tmp_path / "models.cfg"
    config.write_text("model1.controls = n_pages\nmodel1.moderator = none\n")
    run_ok(runner, ["regress", "--outdir", out, "--model", "model1", "--config", str(config)])
    _, rows = read_csv(tmp_path / "regression_model1.csv")
    terms = [row[0] for row in rows[:-2]]
    assert terms == ["const", "n_pages", "network_distance", "network_distance^2"]


def test_malformed_config_line_is_structured_error(runner, tmp_path):
    config = tmp_path / "bad.cfg"
    config.write_text("dim 12\n")
    payload = run_fail(runner, ["train", "--outdir", str(tmp_path), "--config", str(config)])
    assert payload["error"] == "bad_config"
    assert "key = value" in payload["message"]
