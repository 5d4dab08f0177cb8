"""
Corpus persistence: the JSONL corpus format and the DPR1 binary index.

JSONL: one object per line, {"doc_id": str, "vectors": [[float, ...], ...]}.
An optional "dim" field gives the dimension of documents with no vectors.

DPR1 (little-endian throughout):

    magic      4 bytes  b"DPR1"
    version    u32      FORMAT_VERSION
    dim        u32
    count      u64
    per document:
        id_len u16, id (utf-8), n u32, n * dim float32 row-major

Vectors are stored as float32 and always read back as float64.
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Set

import numpy as np

from pruning_errors import (
    BadMagicError,
    InvariantViolationError,
    ParseError,
    TruncatedFileError,
    VersionUnsupportedError,
)
from token_matrix import QueryMatrix, TokenMatrix, validate_query_matrix, validate_token_matrix

logger = logging.getLogger(__name__)

MAGIC_NUMBER = b"DPR1"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<IIQ")
_ID_LEN = struct.Struct("<H")
_COUNT = struct.Struct("<I")


@dataclass
class CorpusIndex:
    """
    Ordered collection of documents sharing one embedding dimension.

    dim stays None until the first document is added. Document ids are
    unique within an index.
    """
    dim: Optional[int] = None
    docs: List[TokenMatrix] = field(default_factory=list)
    format_version: int = FORMAT_VERSION
    _ids: Set[str] = field(default_factory=set, init=False, repr=False)

    def __post_init__(self):
        docs, self.docs = list(self.docs), []
        for doc in docs:
            self.add(doc)

    def add(self, doc: TokenMatrix):
        if self.dim is None:
            self.dim = doc.d
        elif doc.d != self.dim:
            raise InvariantViolationError(
                doc.doc_id, f"dimension {doc.d} differs from index dimension {self.dim}"
            )
        if doc.doc_id in self._ids:
            raise InvariantViolationError(doc.doc_id, "duplicate doc_id")
        self._ids.add(doc.doc_id)
        self.docs.append(doc)

    def __len__(self):
        return len(self.docs)

    def __iter__(self) -> Iterator[TokenMatrix]:
        return iter(self.docs)

    def doc_ids(self) -> List[str]:
        return [doc.doc_id for doc in self.docs]

    def get(self, doc_id) -> TokenMatrix:
        for doc in self.docs:
            if doc.doc_id == doc_id:
                return doc
        raise KeyError(doc_id)

    @property
    def total_tokens(self) -> int:
        return sum(doc.n for doc in self.docs)

    def structurally_equal(self, other: "CorpusIndex") -> bool:
        """Same dimension, ids, order and bit-identical vectors"""
        if self.dim != other.dim or self.doc_ids() != other.doc_ids():
            return False
        return all(
            a.vectors.shape == b.vectors.shape and np.array_equal(a.vectors, b.vectors)
            for a, b in zip(self.docs, other.docs)
        )


def _validated_doc(doc_id, vectors, dim):
    try:
        arr = np.asarray(vectors, dtype=np.float64)
        if arr.size == 0 and dim is not None:
            arr = arr.reshape(0, dim)
        return validate_token_matrix(TokenMatrix(doc_id, arr))
    except InvariantViolationError:
        raise
    except (ValueError, TypeError) as e:
        raise InvariantViolationError(doc_id, str(e)) from e


def _json_records(path, id_field):
    """Yield (line_number, object) for every non-blank line"""
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(line_number, f"invalid JSON: {e.msg}") from None
            if not isinstance(obj, dict):
                raise ParseError(line_number, "expected a JSON object")
            if not isinstance(obj.get(id_field), str):
                raise ParseError(line_number, f"missing or non-string {id_field!r}")
            if not isinstance(obj.get("vectors"), list):
                raise ParseError(line_number, "missing or non-list 'vectors'")
            yield line_number, obj


def read_corpus_jsonl(path) -> CorpusIndex:
    """
    Read a JSONL corpus and validate every document.

    Raises:
        ParseError: malformed line (carries the line number)
        InvariantViolationError: invalid or inconsistent document (carries the doc_id)
    """
    records = []
    dim = None
    for line_number, obj in _json_records(path, "doc_id"):
        declared = obj.get("dim")
        if declared is not None and (not isinstance(declared, int) or declared < 1):
            raise ParseError(line_number, f"'dim' must be a positive integer, got {declared!r}")
        if dim is None:
            if declared is not None:
                dim = declared
            elif obj["vectors"]:
                first = obj["vectors"][0]
                dim = len(first) if isinstance(first, list) else None
        records.append((obj["doc_id"], obj["vectors"]))

    index = CorpusIndex()
    for doc_id, vectors in records:
        if not vectors and dim is None:
            raise InvariantViolationError(doc_id, "cannot infer the dimension of an empty document")
        index.add(_validated_doc(doc_id, vectors, dim))
    logger.info(f"Read {len(index)} documents ({index.total_tokens} tokens) from {path}")
    return index


def write_corpus_jsonl(index: CorpusIndex, path):
    with open(path, "w", encoding="utf-8") as f:
        for doc in index:
            obj = {"doc_id": doc.doc_id, "vectors": doc.vectors.tolist()}
            if doc.n == 0:
                obj["dim"] = doc.d
            f.write(json.dumps(obj) + "\n")


def read_queries_jsonl(path) -> List[QueryMatrix]:
    """Read {"query_id": str, "vectors": [[...], ...]} lines"""
    queries = []
    for line_number, obj in _json_records(path, "query_id"):
        try:
            q = QueryMatrix(obj["query_id"], np.asarray(obj["vectors"], dtype=np.float64))
            queries.append(validate_query_matrix(q))
        except (ValueError, TypeError) as e:
            raise InvariantViolationError(obj["query_id"], str(e)) from e
    return queries


def write_index_binary(index: CorpusIndex, path):
    """Write an index in the DPR1 format"""
    with open(path, "wb") as f:
        f.write(MAGIC_NUMBER)
        f.write(_HEADER.pack(FORMAT_VERSION, index.dim or 0, len(index)))
        for doc in index:
            raw_id = doc.doc_id.encode("utf-8")
            if len(raw_id) > 0xFFFF:
                raise InvariantViolationError(doc.doc_id, "doc_id longer than 65535 bytes")
            f.write(_ID_LEN.pack(len(raw_id)))
            f.write(raw_id)
            f.write(_COUNT.pack(doc.n))
            f.write(np.ascontiguousarray(doc.vectors, dtype="<f4").tobytes())


def _take(data, pos, size, ordinal, what):
    if pos + size > len(data):
        raise TruncatedFileError(ordinal, f"{what} needs {size} bytes, {len(data) - pos} left")
    return pos + size


def read_index_binary(path) -> CorpusIndex:
    """
    Read a DPR1 index.

    Raises:
        BadMagicError, VersionUnsupportedError, TruncatedFileError,
        InvariantViolationError
    """
    with open(path, "rb") as f:
        data = f.read()

    if data[:4] != MAGIC_NUMBER:
        raise BadMagicError(f"{path}: not a DPR1 index (magic {data[:4]!r})")
    if len(data) < 4 + _HEADER.size:
        raise TruncatedFileError(0, "file ends inside the header")
    version, dim, count = _HEADER.unpack_from(data, 4)
    if version != FORMAT_VERSION:
        raise VersionUnsupportedError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    if count and dim == 0:
        raise InvariantViolationError("<header>", "zero dimension with a nonempty index")

    index = CorpusIndex(dim=dim or None, format_version=version)
    pos = 4 + _HEADER.size
    for ordinal in range(count):
        end = _take(data, pos, _ID_LEN.size, ordinal, "id length")
        (id_len,) = _ID_LEN.unpack_from(data, pos)
        pos, end = end, _take(data, end, id_len, ordinal, "doc_id")
        try:
            doc_id = data[pos:end].decode("utf-8")
        except UnicodeDecodeError:
            raise InvariantViolationError(f"#{ordinal}", "doc_id is not valid utf-8") from None
        pos, end = end, _take(data, end, _COUNT.size, ordinal, "token count")
        (n,) = _COUNT.unpack_from(data, pos)
        pos, end = end, _take(data, end, 4 * n * dim, ordinal, f"{n} vectors")
        vectors = np.frombuffer(data, dtype="<f4", count=n * dim, offset=pos).astype(np.float64)
        pos = end
        index.add(_validated_doc(doc_id, vectors.reshape(n, dim), dim))

    if pos != len(data):
        logger.warning(f"{path}: {len(data) - pos} trailing bytes after {count} documents")
    logger.info(f"Read {len(index)} documents ({index.total_tokens} tokens) from {path}")
    return index


def load_corpus(path) -> CorpusIndex:
    """Read either format, telling them apart by the DPR1 magic bytes"""
    with open(path, "rb") as f:
        head = f.read(len(MAGIC_NUMBER))
    if head == MAGIC_NUMBER:
        return read_index_binary(path)
    return read_corpus_jsonl(path)
