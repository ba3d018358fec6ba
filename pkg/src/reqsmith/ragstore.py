"""Document ingestion, deterministic embedding, exact top-k retrieval, and
grounded answering of clarifying questions.

The index is an exact cosine scan: project documentation corpora are small
enough that exactness buys testability over approximate neighbors. All
stored vectors are unit-normalized, so cosine similarity is a dot product.
"""

from __future__ import annotations

import hashlib
import re
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import httpx
import numpy as np

from . import prompts
from .clarifier import AnswerSource, ClarificationExchange, ClarifyingQuestion
from .gateway import BackendConfig, Responder, complete
from .prompting import PromptSpec, render

DEFAULT_CHUNK_SIZE = 800
DEFAULT_OVERLAP = 200
DEFAULT_TOP_K = 4
DEFAULT_DIMENSION = 512

_NORM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ContextChunk:
    id: str
    document_id: str
    offset: int
    text: str

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("chunk text must be non-empty")
        if self.offset < 0:
            raise ValueError("chunk offset must be >= 0")

    @property
    def length(self) -> int:
        return len(self.text)


@dataclass(frozen=True)
class ChunkEmbedding:
    chunk_id: str
    vector: np.ndarray

    def __post_init__(self) -> None:
        norm = float(np.linalg.norm(self.vector))
        if abs(norm - 1.0) > _NORM_TOLERANCE:
            raise ValueError(f"embedding for {self.chunk_id} has norm {norm}, not 1")


@dataclass(frozen=True)
class RetrievalResult:
    chunk_id: str
    score: float
    rank: int


def chunk_document(
    text: str,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_OVERLAP,
    document_id: str = "doc",
) -> list[ContextChunk]:
    """Cut ``text`` into windows of ``chunk_size`` with the given overlap.

    Windows start every ``chunk_size - overlap`` characters. A final shorter
    window is kept iff its length is at least ``overlap``; otherwise it is
    merged into the previous chunk, which then extends to the end of the
    text. Stripping the overlaps and concatenating reconstructs the input.
    """
    if chunk_size <= overlap or overlap < 0:
        raise ValueError("chunk_size must exceed overlap, overlap must be >= 0")
    if not text:
        raise ValueError("document text must be non-empty")

    stride = chunk_size - overlap
    spans = [
        (offset, min(offset + chunk_size, len(text)))
        for offset in range(0, len(text), stride)
    ]
    if len(spans) > 1 and spans[-1][1] - spans[-1][0] < overlap:
        last = spans.pop()
        prev = spans.pop()
        spans.append((prev[0], last[1]))

    return [
        ContextChunk(
            id=f"{document_id}:{offset}",
            document_id=document_id,
            offset=offset,
            text=text[offset:end],
        )
        for offset, end in spans
    ]


class Embedder(Protocol):
    """Pluggable embedding contract: fixed dimension, unit-normalized output."""

    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


class HashedBagEmbedder:
    """Bundled deterministic embedder: hashed bag of lowercased tokens.

    Each alphanumeric token is hashed to one of ``dimension`` buckets, the
    bucket counts are L2-normalized. No training data, no randomness: the
    same string embeds identically forever.
    """

    _TOKEN_RE = re.compile(r"[a-z0-9]+")

    def __init__(self, dimension: int = DEFAULT_DIMENSION):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension

    def _bucket(self, token: str) -> int:
        digest = hashlib.sha1(token.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little") % self.dimension

    def embed(self, text: str) -> np.ndarray:
        if not text.strip():
            raise ValueError("cannot embed empty text")
        vector = np.zeros(self.dimension, dtype=np.float64)
        for token in self._TOKEN_RE.findall(text.lower()):
            vector[self._bucket(token)] += 1.0
        norm = float(np.linalg.norm(vector))
        if norm == 0.0:
            raise ValueError("text has no embeddable tokens")
        return vector / norm


class VectorIndex:
    """Exact-scan cosine index over context chunks.

    Reads are safe from any thread; ingestion takes the internal lock per
    document batch.
    """

    def __init__(self, embedder: Embedder | None = None):
        self.embedder = embedder or HashedBagEmbedder()
        self._chunks: list[ContextChunk] = []
        self._by_id: dict[str, ContextChunk] = {}
        self._matrix = np.empty((0, self.embedder.dimension), dtype=np.float64)
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._chunks)

    @property
    def dimension(self) -> int:
        return self.embedder.dimension

    def chunk(self, chunk_id: str) -> ContextChunk:
        return self._by_id[chunk_id]

    def add_document(
        self,
        document_id: str,
        text: str,
        chunk_size: int = DEFAULT_CHUNK_SIZE,
        overlap: int = DEFAULT_OVERLAP,
    ) -> list[ContextChunk]:
        chunks = chunk_document(text, chunk_size, overlap, document_id=document_id)
        self.add_chunks(chunks)
        return chunks

    def add_chunks(self, chunks: Sequence[ContextChunk]) -> None:
        if not chunks:
            return
        vectors = np.vstack([self.embedder.embed(chunk.text) for chunk in chunks])
        for chunk, vector in zip(chunks, vectors):
            ChunkEmbedding(chunk_id=chunk.id, vector=vector)  # norm check
        with self._lock:
            for chunk in chunks:
                if chunk.id in self._by_id:
                    raise ValueError(f"duplicate chunk id {chunk.id!r}")
            # copy-on-write publication keeps concurrent readers consistent
            new_chunks = self._chunks + list(chunks)
            new_by_id = dict(self._by_id)
            for chunk in chunks:
                new_by_id[chunk.id] = chunk
            self._matrix = np.vstack([self._matrix, vectors])
            self._chunks = new_chunks
            self._by_id = new_by_id

    def retrieve(self, query: str, k: int) -> list[RetrievalResult]:
        """Exact top-k by cosine, ties broken by ascending chunk id.

        Scores are computed row-by-row (not as one matrix product) so that
        exact ties stay exact: blocked BLAS summation can perturb the last
        ulp and silently reorder tied chunks.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        with self._lock:  # consistent snapshot; both rebound on ingest
            matrix = self._matrix
            chunks = self._chunks
        if not chunks:
            return []
        query_vector = self.embedder.embed(query)
        scores = np.fromiter(
            (np.dot(row, query_vector) for row in matrix),
            dtype=np.float64,
            count=matrix.shape[0],
        )
        ids = np.array([chunk.id for chunk in chunks])
        # lexsort's last key is primary: descending score, then ascending id
        order = np.lexsort((ids, -scores))[:k]
        return [
            RetrievalResult(
                chunk_id=str(ids[index]), score=float(scores[index]), rank=rank
            )
            for rank, index in enumerate(order, start=1)
        ]

    # -- grounded answering --

    def answer_question(
        self,
        question: ClarifyingQuestion,
        k: int,
        backend: BackendConfig,
        *,
        engine: Responder | None = None,
        transport: httpx.BaseTransport | None = None,
    ) -> ClarificationExchange:
        """Answer from the top-k chunks; unanswerable questions come back open.

        The returned exchange carries the retrieved chunk ids as provenance
        when an answer was produced. An empty retrieval (or a backend that
        finds nothing in the context) yields an unanswered exchange so the
        caller can route the question to stakeholders instead.
        """
        results = self.retrieve(question.text, k)
        if not results:
            return ClarificationExchange(question=question)

        context_parts = [
            f"[chunk {result.chunk_id}]\n{self.chunk(result.chunk_id).text}"
            for result in results
        ]
        spec = PromptSpec(
            instruction=prompts.ANSWER_INSTRUCTION,
            context="\n\n".join(context_parts),
            input=question.text,
        )
        completion = complete(backend, render(spec), engine=engine, transport=transport)
        answer = completion.text.strip()
        if not answer:
            return ClarificationExchange(question=question)
        return ClarificationExchange(
            question=question,
            answer=answer,
            source=AnswerSource.RAG,
            provenance=tuple(result.chunk_id for result in results),
        )

    # -- persistence --

    _MAGIC = b"RQIDX001"

    def save(self, path: str | Path) -> None:
        """Write the index file plus the ``<path>.texts`` sidecar."""
        path = Path(path)
        with self._lock:
            chunks = list(self._chunks)
            matrix = self._matrix.copy()
        with open(path, "wb") as fh:
            fh.write(self._MAGIC)
            fh.write(struct.pack("<II", self.dimension, len(chunks)))
            for chunk, vector in zip(chunks, matrix):
                cid = chunk.id.encode("utf-8")
                did = chunk.document_id.encode("utf-8")
                fh.write(struct.pack("<H", len(cid)))
                fh.write(cid)
                fh.write(struct.pack("<H", len(did)))
                fh.write(did)
                fh.write(struct.pack("<QQ", chunk.offset, chunk.length))
                fh.write(struct.pack(f"<{self.dimension}d", *vector))
        with open(self._sidecar(path), "w", encoding="utf-8") as fh:
            for chunk in chunks:
                fh.write(f"{chunk.id}\t{len(chunk.text)}\n")
                fh.write(chunk.text)
                fh.write("\n")

    @classmethod
    def load(cls, path: str | Path, embedder: Embedder | None = None) -> "VectorIndex":
        path = Path(path)
        texts = cls._read_sidecar(cls._sidecar(path))
        with open(path, "rb") as fh:
            magic = fh.read(len(cls._MAGIC))
            if magic != cls._MAGIC:
                raise ValueError(f"{path} is not an index file")
            dimension, count = struct.unpack("<II", fh.read(8))
            index = cls(embedder=embedder or HashedBagEmbedder(dimension))
            if index.dimension != dimension:
                raise ValueError(
                    f"index dimension {dimension} != embedder {index.dimension}"
                )
            chunks: list[ContextChunk] = []
            vectors = np.empty((count, dimension), dtype=np.float64)
            for i in range(count):
                (cid_len,) = struct.unpack("<H", fh.read(2))
                chunk_id = fh.read(cid_len).decode("utf-8")
                (did_len,) = struct.unpack("<H", fh.read(2))
                document_id = fh.read(did_len).decode("utf-8")
                offset, length = struct.unpack("<QQ", fh.read(16))
                vectors[i] = struct.unpack(f"<{dimension}d", fh.read(8 * dimension))
                text = texts[chunk_id]
                if len(text) != length:
                    raise ValueError(f"sidecar text length mismatch for {chunk_id}")
                chunks.append(
                    ContextChunk(
                        id=chunk_id,
                        document_id=document_id,
                        offset=offset,
                        text=text,
                    )
                )
        with index._lock:
            index._chunks = chunks
            index._by_id = {chunk.id: chunk for chunk in chunks}
            index._matrix = vectors
        return index

    @staticmethod
    def _sidecar(path: Path) -> Path:
        return path.with_name(path.name + ".texts")

    @staticmethod
    def _read_sidecar(path: Path) -> dict[str, str]:
        texts: dict[str, str] = {}
        content = path.read_text(encoding="utf-8")
        pos = 0
        while pos < len(content):
            newline = content.index("\n", pos)
            header = content[pos:newline]
            chunk_id, _, length_text = header.rpartition("\t")
            length = int(length_text)
            start = newline + 1
            texts[chunk_id] = content[start : start + length]
            pos = start + length + 1  # skip the trailing separator newline
        return texts


def ingest_files(
    index: VectorIndex,
    paths: Sequence[str | Path],
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_OVERLAP,
) -> int:
    """Ingest UTF-8 text files, one document per file, id from the path."""
    total = 0
    for path in paths:
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        total += len(
            index.add_document(str(path), text, chunk_size=chunk_size, overlap=overlap)
        )
    return total
