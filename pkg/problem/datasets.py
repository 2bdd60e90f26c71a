# problem/datasets.py
"""
Dataset descriptors, file formats and preprocessing.

A descriptor is either `file:<path>` (CSV or MatrixMarket) or
`randn-<m>-<d>[:seed=<u64>]`. Both yield a sample matrix with m rows
(samples) and d columns (features). Columns are normalized to unit norm
and centered; the model matrix handed to sparse PCA is the transpose,
D in R^{d x m}.
"""
from dataclasses import dataclass
import logging
from pathlib import Path
import re

import numpy as np
import scipy.io

from .exceptions import DatasetNotFound, DegenerateColumn, EmptyData, ParseError

logger = logging.getLogger(__name__)

SYNTHETIC_PATTERN = re.compile(r'^randn-(\d+)-(\d+)(?::seed=(\d+))?$')
MATRIX_MARKET_SUFFIXES = ('.mtx', '.mm')
MAX_SEED = 2 ** 64 - 1


@dataclass(frozen=True)
class DatasetDescriptor:
    kind: str  # 'file' or 'randn'
    path: Path = None
    samples: int = 0
    features: int = 0
    seed: int = None

    @classmethod
    def parse(cls, text, seed=None):
        """Parse a descriptor; an explicit `seed` overrides one embedded in the text."""
        text = (text or '').strip()
        if text.startswith('file:'):
            path = text[len('file:'):]
            if not path:
                raise ParseError("file descriptor without a path", descriptor=text)
            return cls(kind='file', path=Path(path))

        match = SYNTHETIC_PATTERN.match(text)
        if not match:
            raise ParseError("descriptor must be file:<path> or randn-<m>-<d>:seed=<u64>",
                             descriptor=text)
        samples, features = int(match.group(1)), int(match.group(2))
        if samples < 1 or features < 1:
            raise EmptyData("synthetic data needs m >= 1 and d >= 1",
                            samples=samples, features=features)
        embedded = match.group(3)
        chosen = seed if seed is not None else (int(embedded) if embedded is not None else None)
        if chosen is None:
            raise ParseError("synthetic descriptor needs a seed", descriptor=text)
        if not 0 <= chosen <= MAX_SEED:
            raise ParseError("seed must be an unsigned 64-bit integer", seed=chosen)
        return cls(kind='randn', samples=samples, features=features, seed=chosen)

    def __str__(self):
        if self.kind == 'file':
            return f"file:{self.path}"
        return f"randn-{self.samples}-{self.features}:seed={self.seed}"


# =====================================================
# FILE FORMATS
# =====================================================

def read_csv(path):
    """Dense CSV: header `rows,cols`, then one line of cols values per row."""
    path = Path(path)
    if not path.exists():
        raise DatasetNotFound("dataset file not found", path=str(path))
    lines = [line.strip() for line in path.read_text().splitlines() if line.strip()]
    if not lines:
        raise ParseError("empty CSV file", path=str(path))
    try:
        rows, cols = (int(part) for part in lines[0].split(','))
    except ValueError:
        raise ParseError("CSV header must be `n,m`", path=str(path), header=lines[0])
    body = lines[1:]
    if len(body) != rows:
        raise ParseError("CSV row count disagrees with header",
                         path=str(path), expected=rows, got=len(body))
    try:
        matrix = np.array([[float(value) for value in line.split(',')] for line in body],
                          dtype=float).reshape(rows, -1) if rows else np.zeros((0, cols))
    except ValueError as e:
        raise ParseError("CSV entries must be decimal literals with equal row lengths",
                         path=str(path), reason=str(e))
    if matrix.shape != (rows, cols):
        raise ParseError("CSV column count disagrees with header",
                         path=str(path), expected=cols, got=matrix.shape[1])
    return matrix


def write_csv(matrix, path):
    """Inverse of read_csv; values are written with round-trip precision."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{matrix.shape[0]},{matrix.shape[1]}"]
    lines.extend(','.join(repr(float(value)) for value in row) for row in matrix)
    path.write_text('\n'.join(lines) + '\n')
    logger.info(f"[DATA] wrote {matrix.shape[0]}x{matrix.shape[1]} matrix to {path}")
    return path


def read_matrix_market(path):
    path = Path(path)
    if not path.exists():
        raise DatasetNotFound("dataset file not found", path=str(path))
    try:
        loaded = scipy.io.mmread(str(path))
    except (ValueError, IndexError) as e:
        raise ParseError("unreadable MatrixMarket file", path=str(path), reason=str(e))
    if hasattr(loaded, 'toarray'):
        loaded = loaded.toarray()
    return np.asarray(loaded, dtype=float)


def synthesize(samples, features, seed):
    """i.i.d. standard normal samples from a seeded generator."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((samples, features))


# =====================================================
# PREPROCESSING
# =====================================================

def preprocess_samples(raw, literal_centering=False):
    """
    Normalize each column to unit norm, then center.

    Centering subtracts the column means; literal_centering subtracts the
    column sums instead (D - 1 1^T D).
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2 or raw.size == 0:
        raise EmptyData("sample matrix is empty", shape=raw.shape)
    norms = np.linalg.norm(raw, axis=0)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise DegenerateColumn("zero column cannot be normalized", columns=zero.tolist())
    normalized = raw / norms
    if literal_centering:
        return normalized - normalized.sum(axis=0, keepdims=True)
    return normalized - normalized.mean(axis=0, keepdims=True)


def load_samples(descriptor, seed=None):
    """Raw sample matrix (m x d) named by a descriptor string or DatasetDescriptor."""
    if not isinstance(descriptor, DatasetDescriptor):
        descriptor = DatasetDescriptor.parse(descriptor, seed=seed)
    if descriptor.kind == 'randn':
        return synthesize(descriptor.samples, descriptor.features, descriptor.seed)
    if descriptor.path.suffix.lower() in MATRIX_MARKET_SUFFIXES:
        return read_matrix_market(descriptor.path)
    return read_csv(descriptor.path)


def load_or_synthesize_data(descriptor, seed=None, literal_centering=False):
    """Model matrix D (features x samples) after normalization and centering."""
    raw = load_samples(descriptor, seed=seed)
    processed = preprocess_samples(raw, literal_centering=literal_centering)
    logger.info(f"[DATA] loaded {descriptor}: {raw.shape[0]} samples x {raw.shape[1]} features")
    return np.ascontiguousarray(processed.T)
