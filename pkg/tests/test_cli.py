"""Command-line interface: every subcommand end to end in a temp directory."""

import json

import pytest

from argmine.cli import build_parser, main
from argmine.documents import read_corpus, write_corpus
from argmine.synth import generate


@pytest.fixture(scope="module")
def corpus_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "corpus.jsonl"
    write_corpus(generate(12, seed=4), path)
    return path


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory, corpus_path):
    """One small trained run shared by the eval/predict tests."""
    out = tmp_path_factory.mktemp("run")
    code = main(
        [
            "train",
            "--corpus", str(corpus_path),
            "--out", str(out),
            "--d", "16",
            "--epochs", "2",
            "--batch-size", "4",
            "--lr-max", "1e-3",
            "--seed", "0",
        ]
    )
    assert code == 0
    return out


class TestParser:
    def test_requires_subcommand(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_bad_bool_rejected(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["train", "--corpus", "x", "--out", "y", "--use-html", "maybe"])

    def test_bool_parsing_accepts_common_spellings(self):
        parser = build_parser()
        args = parser.parse_args(["train", "--corpus", "x", "--out", "y", "--use-html", "false"])
        assert args.use_html is False
        args = parser.parse_args(["train", "--corpus", "x", "--out", "y", "--use-html", "TRUE"])
        assert args.use_html is True


class TestSynthCommand:
    def test_writes_valid_corpus(self, tmp_path):
        out = tmp_path / "synth.jsonl"
        code = main(["synth", "--docs", "5", "--seed", "3", "--out", str(out)])
        assert code == 0
        docs = read_corpus(out)
        assert len(docs) == 5
        assert all(d.annotation is not None for d in docs)

    def test_respects_signal_and_interleave(self, tmp_path):
        out_a = tmp_path / "a.jsonl"
        out_b = tmp_path / "b.jsonl"
        main(["synth", "--docs", "3", "--seed", "3", "--signal", "1.0", "--out", str(out_a)])
        main(["synth", "--docs", "3", "--seed", "3", "--signal", "0.0", "--out", str(out_b)])
        texts_a = [s.text for d in read_corpus(out_a) for s in d.segments]
        texts_b = [s.text for d in read_corpus(out_b) for s in d.segments]
        assert texts_a != texts_b


class TestIngestCommand:
    def test_single_html_file(self, tmp_path):
        html = tmp_path / "page.html"
        html.write_text("<p>第一句。第二句！</p>", encoding="utf-8")
        out = tmp_path / "out.jsonl"
        assert main(["ingest", "--in", str(html), "--out", str(out)]) == 0
        docs = read_corpus(out)
        assert len(docs) == 1
        assert docs[0].doc_id == "page"
        assert [s.text for s in docs[0].segments] == ["第一句。", "第二句！"]

    def test_jsonl_input_skips_bad_records(self, tmp_path, capsys):
        src = tmp_path / "pages.jsonl"
        records = [
            {"doc_id": "good", "html": "<p>有效内容。</p>"},
            {"doc_id": "empty", "html": "<p> </p>"},
            {"doc_id": "good2", "html": "<b>另一个。</b>"},
        ]
        src.write_text("\n".join(json.dumps(r, ensure_ascii=False) for r in records), encoding="utf-8")
        out = tmp_path / "out.jsonl"
        assert main(["ingest", "--in", str(src), "--out", str(out)]) == 0
        docs = read_corpus(out)
        assert [d.doc_id for d in docs] == ["good", "good2"]

    def test_max_segments_flag(self, tmp_path):
        html = tmp_path / "long.html"
        html.write_text("<p>" + "句。" * 8 + "</p>", encoding="utf-8")
        out = tmp_path / "out.jsonl"
        assert main(["ingest", "--in", str(html), "--out", str(out), "--max-segments", "3"]) == 0
        assert len(read_corpus(out)[0].segments) == 3


class TestTrainEvalPredictDecode:
    def test_train_writes_checkpoint_and_metrics(self, run_dir):
        assert (run_dir / "best" / "params.bin").exists()
        assert (run_dir / "best" / "manifest.json").exists()
        lines = (run_dir / "metrics.jsonl").read_text().splitlines()
        assert len(lines) == 2
        record = json.loads(lines[0])
        assert record["epoch"] == 1
        assert record["val_component_weighted_f1"] is not None

    def test_eval_writes_report(self, run_dir, corpus_path, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        code = main(
            ["eval", "--corpus", str(corpus_path), "--ckpt", str(run_dir / "best"),
             "--report", str(report_path), "--decoded"]
        )
        assert code == 0
        report = json.loads(report_path.read_text())
        assert set(report) >= {"component", "relation", "major_density", "decoded"}
        assert "Component Detection" in capsys.readouterr().out

    def test_predict_then_decode(self, run_dir, corpus_path, tmp_path):
        preds_path = tmp_path / "preds.jsonl"
        code = main(
            ["predict", "--corpus", str(corpus_path), "--ckpt", str(run_dir / "best"),
             "--out", str(preds_path)]
        )
        assert code == 0
        preds = [json.loads(l) for l in preds_path.read_text().splitlines()]
        assert len(preds) == 12
        first = preds[0]
        n = len(first["component"])
        assert len(first["major"]) == n
        assert len(first["relation"]) == n and len(first["relation"][0]) == n

        structs_path = tmp_path / "structures.jsonl"
        code = main(["decode", "--pred", str(preds_path), "--out", str(structs_path)])
        assert code == 0
        structures = [json.loads(l) for l in structs_path.read_text().splitlines()]
        assert len(structures) == 12
        for record in structures:
            assert "doc_id" in record and "components" in record and "supports" in record
            kinds = {c["kind"] for c in record["components"]}
            assert kinds <= {"claim", "premise"}

    def test_decode_threshold_validation(self, run_dir, corpus_path, tmp_path):
        preds_path = tmp_path / "preds.jsonl"
        main(["predict", "--corpus", str(corpus_path), "--ckpt", str(run_dir / "best"),
              "--out", str(preds_path)])
        with pytest.raises(ValueError, match="probability"):
            main(["decode", "--pred", str(preds_path), "--out", str(tmp_path / "s.jsonl"),
                  "--tau-occ", "1.5"])

    def test_train_with_explicit_val_corpus(self, corpus_path, tmp_path):
        val_path = tmp_path / "val.jsonl"
        write_corpus(generate(3, seed=99), val_path)
        out = tmp_path / "run"
        code = main(
            ["train", "--corpus", str(corpus_path), "--val-corpus", str(val_path),
             "--out", str(out), "--d", "16", "--epochs", "1", "--batch-size", "4"]
        )
        assert code == 0
        assert (out / "best" / "params.bin").exists()

    def test_train_corpus_too_small_for_holdout(self, tmp_path):
        tiny = tmp_path / "tiny.jsonl"
        write_corpus(generate(1, seed=0), tiny)
        out = tmp_path / "run"
        with pytest.raises(SystemExit):
            main(["train", "--corpus", str(tiny), "--out", str(out), "--d", "16", "--epochs", "1"])
