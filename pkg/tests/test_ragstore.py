from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reqsmith.clarifier import AnswerSource, ClarifyingQuestion
from reqsmith.core import Characteristic
from reqsmith.ragstore import (
    ContextChunk,
    HashedBagEmbedder,
    VectorIndex,
    chunk_document,
    ingest_files,
)

# -- independent oracles -----------------------------------------------------


def brute_force_windows(n: int, size: int, overlap: int) -> list[tuple[int, int]]:
    """Oracle: enumerate every stride offset, then apply the keep/merge rule."""
    stride = size - overlap
    spans = [(o, min(o + size, n)) for o in range(0, n, stride)]
    if len(spans) > 1 and (spans[-1][1] - spans[-1][0]) < overlap:
        last = spans.pop()
        prev = spans.pop()
        spans.append((prev[0], last[1]))
    return spans


def brute_force_topk(index: VectorIndex, query: str, k: int):
    """Oracle: per-chunk dot products, python sort on (-score, chunk_id)."""
    query_vector = index.embedder.embed(query)
    scored = []
    for chunk in index._chunks:
        vector = index.embedder.embed(chunk.text)
        scored.append((float(np.dot(vector, query_vector)), chunk.id))
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return scored[:k]


# -- chunking ----------------------------------------------------------------


def test_chunk_offsets_for_kilochar_text():
    text = "a" * 1000
    chunks = chunk_document(text, 400, 100)
    assert [c.offset for c in chunks] == [0, 300, 600, 900]
    assert [len(c.text) for c in chunks] == [400, 400, 400, 100]


def test_chunk_short_text_is_single():
    chunks = chunk_document("short", 400, 100)
    assert len(chunks) == 1
    assert chunks[0].offset == 0
    assert chunks[0].text == "short"


def test_chunk_zero_overlap():
    chunks = chunk_document("x" * 250, 100, 0)
    assert [c.offset for c in chunks] == [0, 100, 200]
    assert [len(c.text) for c in chunks] == [100, 100, 50]


def test_chunk_merges_a_too_short_tail():
    chunks = chunk_document("y" * 950, 400, 100)
    # tail window at 900 would be 50 chars < overlap, so it merges back
    assert [c.offset for c in chunks] == [0, 300, 600]
    assert [len(c.text) for c in chunks] == [400, 400, 350]


def test_chunk_config_error():
    with pytest.raises(ValueError):
        chunk_document("abc", 100, 100)
    with pytest.raises(ValueError):
        chunk_document("abc", 50, 100)
    with pytest.raises(ValueError):
        chunk_document("", 100, 10)


@given(
    n=st.integers(1, 3000),
    size=st.integers(2, 500),
    overlap_fraction=st.floats(0, 0.95),
)
@settings(max_examples=200)
def test_chunking_matches_brute_force_windower(n, size, overlap_fraction):
    overlap = min(int(size * overlap_fraction), size - 1)
    text = "".join(chr(ord("a") + (i % 26)) for i in range(n))
    chunks = chunk_document(text, size, overlap)
    spans = brute_force_windows(n, size, overlap)
    assert [(c.offset, c.offset + len(c.text)) for c in chunks] == spans
    # offsets strictly increasing, text bounds respected
    offsets = [c.offset for c in chunks]
    assert offsets == sorted(set(offsets))
    assert all(c.offset + len(c.text) <= n for c in chunks)
    # stripping the overlaps reconstructs the document exactly
    rebuilt = chunks[0].text + "".join(c.text[overlap:] for c in chunks[1:])
    assert rebuilt == text


# -- embedding ---------------------------------------------------------------


def test_embedder_is_deterministic_and_unit_norm():
    embedder = HashedBagEmbedder(64)
    a = embedder.embed("The report lists products")
    b = embedder.embed("The report lists products")
    assert np.array_equal(a, b)
    assert math.isclose(float(np.linalg.norm(a)), 1.0, abs_tol=1e-9)


def test_repeated_token_scales_to_same_direction():
    embedder = HashedBagEmbedder(64)
    assert np.allclose(embedder.embed("report report"), embedder.embed("report"))


def test_embed_empty_is_error():
    embedder = HashedBagEmbedder(64)
    with pytest.raises(ValueError):
        embedder.embed("   ")


@given(st.text(alphabet="abc def", min_size=1).filter(lambda s: any(c.isalnum() for c in s)))
def test_embeddings_always_unit_norm(text):
    embedder = HashedBagEmbedder(32)
    assert math.isclose(float(np.linalg.norm(embedder.embed(text))), 1.0, abs_tol=1e-9)


# -- retrieval ---------------------------------------------------------------


def _seeded_index(n_chunks: int, seed: int = 7, dimension: int = 64) -> VectorIndex:
    rng = random.Random(seed)
    vocabulary = [f"tok{i}" for i in range(50)]
    index = VectorIndex(HashedBagEmbedder(dimension))
    chunks = []
    for i in range(n_chunks):
        words = rng.choices(vocabulary, k=rng.randint(3, 12))
        if i % 7 == 0:  # force exact duplicates, hence score ties
            words = ["tok1", "tok2", "tok3"]
        chunks.append(
            ContextChunk(
                id=f"doc:{i:05d}", document_id="doc", offset=i, text=" ".join(words)
            )
        )
    index.add_chunks(chunks)
    return index


def test_identity_query_ranks_first():
    index = _seeded_index(50)
    text = index.chunk("doc:00003").text
    results = index.retrieve(text, 1)
    assert results[0].score == pytest.approx(1.0, abs=1e-9)
    assert index.chunk(results[0].chunk_id).text == text


def test_retrieve_matches_brute_force_with_ties():
    index = _seeded_index(300)
    rng = random.Random(11)
    vocabulary = [f"tok{i}" for i in range(50)]
    for _ in range(25):
        query = " ".join(rng.choices(vocabulary, k=5))
        for k in (1, 4, 10):
            results = index.retrieve(query, k)
            oracle = brute_force_topk(index, query, k)
            assert [(r.chunk_id, round(r.score, 12)) for r in results] == [
                (cid, round(score, 12)) for score, cid in oracle
            ]
            assert [r.rank for r in results] == list(range(1, len(results) + 1))


def test_empty_index_returns_empty():
    index = VectorIndex(HashedBagEmbedder(16))
    assert index.retrieve("anything", 5) == []


def test_k_larger_than_index_returns_all():
    index = _seeded_index(6)
    assert len(index.retrieve("tok1 tok2", 100)) == 6


def test_k_must_be_positive():
    with pytest.raises(ValueError):
        _seeded_index(3).retrieve("tok1", 0)


def test_concurrent_reads_during_ingestion_stay_consistent():
    import threading

    index = VectorIndex(HashedBagEmbedder(32))
    index.add_document("seed", "alpha beta gamma delta " * 50, 100, 20)
    errors: list[Exception] = []

    def reader():
        try:
            for _ in range(200):
                results = index.retrieve("alpha beta", 3)
                assert results
        except Exception as exc:  # noqa: BLE001 - collected for the assertion
            errors.append(exc)

    def writer():
        for i in range(15):
            index.add_document(f"doc{i}", f"word{i} alpha content " * 30, 120, 30)

    threads = [threading.Thread(target=reader) for _ in range(4)]
    threads.append(threading.Thread(target=writer))
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    assert errors == []


def test_duplicate_chunk_ids_rejected():
    index = VectorIndex(HashedBagEmbedder(16))
    chunk = ContextChunk(id="a:0", document_id="a", offset=0, text="hello world")
    index.add_chunks([chunk])
    with pytest.raises(ValueError):
        index.add_chunks([chunk])


# -- persistence -------------------------------------------------------------


def test_save_load_round_trip(tmp_path):
    index = _seeded_index(40)
    path = tmp_path / "project.ragidx"
    index.save(path)
    loaded = VectorIndex.load(path)
    assert len(loaded) == len(index)
    assert loaded.dimension == index.dimension
    for chunk in index._chunks:
        twin = loaded.chunk(chunk.id)
        assert twin.text == chunk.text
        assert twin.document_id == chunk.document_id
        assert twin.offset == chunk.offset
    query = "tok1 tok2 tok3"
    assert [
        (r.chunk_id, round(r.score, 12)) for r in loaded.retrieve(query, 5)
    ] == [(r.chunk_id, round(r.score, 12)) for r in index.retrieve(query, 5)]


def test_load_preserves_multiline_texts(tmp_path):
    index = VectorIndex(HashedBagEmbedder(16))
    text = "line one\nline two\n\ttabbed line three"
    index.add_chunks(
        [ContextChunk(id="m:0", document_id="m", offset=0, text=text)]
    )
    path = tmp_path / "multi.ragidx"
    index.save(path)
    assert VectorIndex.load(path).chunk("m:0").text == text


def test_load_rejects_foreign_files(tmp_path):
    path = tmp_path / "bogus.ragidx"
    path.write_bytes(b"NOTANIDX" + b"\x00" * 16)
    (tmp_path / "bogus.ragidx.texts").write_text("", encoding="utf-8")
    with pytest.raises(ValueError):
        VectorIndex.load(path)


def test_ingest_files_uses_path_as_document_id(tmp_path):
    doc = tmp_path / "standards.txt"
    doc.write_text("Reports must be exported in PDF and CSV formats.", encoding="utf-8")
    index = VectorIndex(HashedBagEmbedder(32))
    count = ingest_files(index, [doc])
    assert count == 1
    assert index._chunks[0].document_id == str(doc)


# -- grounded answers --------------------------------------------------------


def _question(text: str) -> ClarifyingQuestion:
    return ClarifyingQuestion(
        id="q1", requirement_id="r1", target=Characteristic.UNAMBIGUOUS, text=text
    )


def test_answer_question_grounds_in_standards_chunk(heuristic_backend):
    index = VectorIndex(HashedBagEmbedder(64))
    index.add_document(
        "standards",
        "All exported reports must be available in PDF and CSV formats. "
        "Coffee is stocked in the kitchen.",
    )
    exchange = index.answer_question(
        _question("What format should the generated report list follow?"),
        k=1,
        backend=heuristic_backend,
    )
    assert exchange.answered
    assert "PDF" in exchange.answer and "CSV" in exchange.answer
    assert exchange.source is AnswerSource.RAG
    assert exchange.provenance == ("standards:0",)


def test_answer_question_on_empty_index_comes_back_open(heuristic_backend):
    index = VectorIndex(HashedBagEmbedder(32))
    exchange = index.answer_question(_question("What format?"), 3, heuristic_backend)
    assert not exchange.answered
    assert exchange.provenance == ()


def test_answer_question_unanswerable_context_comes_back_open(heuristic_backend):
    index = VectorIndex(HashedBagEmbedder(32))
    index.add_document("menu", "Bananas are yellow and monkeys like them a lot.")
    exchange = index.answer_question(
        _question("What latency budget applies to checkout submissions?"),
        k=2,
        backend=heuristic_backend,
    )
    assert not exchange.answered


def test_answer_provenance_is_subset_of_retrieval(heuristic_backend):
    index = VectorIndex(HashedBagEmbedder(64))
    index.add_document("a", "Exported reports use PDF format for archival.")
    index.add_document("b", "Exported reports use CSV format for spreadsheets.")
    question = _question("What format do exported reports use?")
    retrieved = {r.chunk_id for r in index.retrieve(question.text, 2)}
    exchange = index.answer_question(question, 2, heuristic_backend)
    assert exchange.answered
    assert set(exchange.provenance) <= retrieved
