import dataclasses
import json
import shutil

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prosody_cwt.annotate import annotate_words
from prosody_cwt.config import Config
from prosody_cwt.errors import InvalidInputError, ParseError, RunError
from prosody_cwt.evaluate import (
    Confusion,
    annotate_corpus,
    calibration_mask,
    evaluate_results,
    majority_baseline,
    metrics,
    paragraph_of,
    paragraph_word_scales,
    read_manifest,
    run_corpus,
)
from prosody_cwt.io import read_word_prosody
from prosody_cwt.synth import make_corpus, write_corpus


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    write_corpus(out, make_corpus(12, seed=7))
    return out


class TestMetrics:
    """Confusion counts and derived scores."""

    def test_arithmetic(self):
        c = Confusion(tp=3, fp=1, fn=2, tn=4)
        assert c.accuracy == pytest.approx(0.7)
        assert c.precision == pytest.approx(0.75)
        assert c.recall == pytest.approx(0.6)
        assert c.f1 == pytest.approx(2 / 3)

    def test_from_labels(self):
        pred = [1, 1, 1, 1, 0, 0, 0, 0, 0, 0]
        ref = [1, 1, 1, 0, 1, 1, 0, 0, 0, 0]
        assert metrics(pred, ref) == Confusion(3, 1, 2, 4)

    def test_all_negative(self):
        c = metrics([0, 0, 0], [1, 0, 1])
        assert (c.precision, c.recall, c.f1) == (0.0, 0.0, 0.0)

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            metrics([1, 0], [1])
        with pytest.raises(InvalidInputError):
            metrics([], [])

    @settings(max_examples=100)
    @given(st.lists(st.booleans(), min_size=1, max_size=50))
    def test_self_agreement(self, x):
        c = metrics(x, x)
        assert c.accuracy == 1.0
        assert c.f1 == (1.0 if any(x) else 0.0)

    @settings(max_examples=100)
    @given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=50))
    def test_transpose(self, pairs):
        p, r = zip(*pairs)
        a, b = metrics(p, r), metrics(r, p)
        assert (a.fp, a.fn) == (b.fn, b.fp)
        assert a.accuracy == b.accuracy
        assert a.transposed() == b


class TestMajority:
    """Most frequent class accuracy."""

    def test_sixty_percent(self):
        assert majority_baseline([1, 1, 1, 0, 0]) == pytest.approx(0.6)

    def test_all_negative(self):
        assert majority_baseline([0, 0, 0]) == 1.0


class TestManifest:
    """Manifest parsing."""

    def test_paths_resolve(self, corpus_dir):
        entries = read_manifest(corpus_dir / "manifest.tsv")
        assert len(entries) == 12
        assert entries[0].tracks[0] == corpus_dir / "synth000.f0"
        assert entries[0].refs == corpus_dir / "synth000.refs"

    def test_duplicate_id(self, tmp_path):
        p = tmp_path / "m.tsv"
        p.write_text("a\tx.f0,x.en\tx.words\na\ty.f0,y.en\ty.words\n")
        with pytest.raises(ParseError, match=":2:"):
            read_manifest(p)

    def test_column_count(self, tmp_path):
        p = tmp_path / "m.tsv"
        p.write_text("a\tx.f0,x.en\n")
        with pytest.raises(ParseError):
            read_manifest(p)


class TestParagraphs:
    """Paragraph-level word scale."""

    def test_key(self):
        assert paragraph_of("f2b_p1_s3") == "f2b_p1"
        assert paragraph_of("plain") == "plain"

    def test_pooled_scale(self):
        utts = [dataclasses.replace(u, id=f"story{i // 2}_{i}") for i, u in enumerate(make_corpus(3, seed=0))]
        scales = paragraph_word_scales(utts)
        first = utts[:2]
        spans = sum(u.words.span[1] - u.words.span[0] for u in first)
        words = sum(u.words.n_words for u in first)
        assert scales["story0"] == pytest.approx(spans / words)
        x0, xn = utts[2].words.span
        assert scales["story1"] == pytest.approx((xn - x0) / utts[2].words.n_words)


class TestCalibration:
    """Calibration subset selection."""

    def test_first_ten_percent(self):
        m = calibration_mask(95, Config())
        assert m.sum() == 10 and m[:10].all()

    def test_random_is_seeded(self):
        cfg = Config(calib_selection="random", calib_seed=3)
        np.testing.assert_array_equal(calibration_mask(200, cfg), calibration_mask(200, cfg))
        assert calibration_mask(200, cfg).sum() == 20


class TestRunCorpus:
    """End-to-end corpus runs."""

    def test_empty_manifest(self, tmp_path):
        p = tmp_path / "m.tsv"
        p.write_text("# nothing\n")
        with pytest.raises(RunError):
            run_corpus(p)

    def test_single_utterance_matches_direct_call(self, tmp_path):
        (utt,) = make_corpus(1, seed=11)
        manifest = write_corpus(tmp_path / "c", [utt])
        run_corpus(manifest, Config(binarize="kmeans"), out_dir=tmp_path / "out")
        rows = read_word_prosody(tmp_path / "out" / f"{utt.id}.tsv")
        direct = annotate_words(utt)
        np.testing.assert_allclose([r.prominence for r in rows], [w.prominence for w in direct], atol=5e-7)
        np.testing.assert_allclose([r.boundary for r in rows], [w.boundary for w in direct], atol=5e-7)

    def test_report_files(self, corpus_dir, tmp_path):
        report = run_corpus(corpus_dir / "manifest.tsv", out_dir=tmp_path)
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["n_utterances"] == 12
        assert "f0_en_dur" in (tmp_path / "report.txt").read_text()
        for method in ("cwt_loma", "raw"):
            for task in ("prominence", "boundary"):
                assert 0.0 <= report.accuracy(method, task) <= 1.0

    def test_manifest_order_invariance(self, corpus_dir, tmp_path):
        lines = (corpus_dir / "manifest.tsv").read_text().splitlines()
        rev = corpus_dir / "reversed.tsv"
        rev.write_text("\n".join(reversed(lines)) + "\n")
        run_corpus(corpus_dir / "manifest.tsv", out_dir=tmp_path / "a")
        run_corpus(rev, out_dir=tmp_path / "b")
        for f in sorted((tmp_path / "a").iterdir()):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name

    def test_parallel_matches_serial(self, corpus_dir):
        utts = make_corpus(4, seed=9)
        serial = annotate_corpus(utts, jobs=1)
        parallel = annotate_corpus(utts, jobs=2)
        assert [r.cwt for r in serial] == [r.cwt for r in parallel]

    def test_failure_threshold(self, corpus_dir, tmp_path):
        work = tmp_path / "c"
        shutil.copytree(corpus_dir, work)
        (work / "synth000.f0").write_text("1.0\nnan\n")
        report = run_corpus(work / "manifest.tsv")
        assert report.skipped == ["synth000"]
        (work / "synth001.f0").write_text("garbage\n")
        with pytest.raises(RunError, match="2 of 12"):
            run_corpus(work / "manifest.tsv")

    def test_threshold_needs_labels(self):
        utts = [dataclasses.replace(u, refs=None) for u in make_corpus(2, seed=1)]
        results = annotate_corpus(utts)
        with pytest.raises(RunError, match="k-means"):
            evaluate_results(results, Config())
        report, _ = evaluate_results(results, Config(binarize="kmeans"))
        assert report.scores == {}
