"""Labelings, contingency tables and label-file input.

Every measure in this package is a function of the contingency table between
two labelings, so this module is the only place raw labels are touched.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Hashable, Iterable, Sequence

import numpy as np

DEFAULT_GROUP_CAP = 10_000


class InputError(ValueError):
    """Malformed or inconsistent user input (labels, files, margins)."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Labeling:
    """An assignment of ``n`` objects to groups.

    Labels may be any hashable values. They are stored in canonical form:
    integers ``1..q`` assigned in order of first occurrence, so every group
    is non-empty and ``q`` is the number of occupied groups.

    >>> Labeling([7, 7, 3, 7]).labels.tolist()
    [1, 1, 2, 1]
    """

    __slots__ = ("_labels", "_sizes")

    def __init__(self, labels: Iterable[Hashable]):
        if isinstance(labels, Labeling):
            self._labels = labels._labels
            self._sizes = labels._sizes
            return
        ids: dict = {}
        canon = [ids.setdefault(x, len(ids) + 1) for x in labels]
        if not canon:
            raise InputError("a labeling needs at least one object")
        arr = np.asarray(canon, dtype=np.int64)
        self._labels = _readonly(arr)
        self._sizes = _readonly(np.bincount(arr - 1).astype(np.int64))

    @property
    def labels(self) -> np.ndarray:
        """Canonical labels in ``1..q`` (read-only array)."""
        return self._labels

    @property
    def sizes(self) -> np.ndarray:
        """Group sizes indexed by canonical id minus one."""
        return self._sizes

    @property
    def n(self) -> int:
        return int(self._labels.size)

    @property
    def q(self) -> int:
        return int(self._sizes.size)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, Labeling):
            return NotImplemented
        return np.array_equal(self._labels, other._labels)

    def __hash__(self) -> int:
        return hash(self._labels.tobytes())

    def __repr__(self) -> str:
        body = ",".join(map(str, self._labels[:20].tolist()))
        if self.n > 20:
            body += ",..."
        return f"Labeling(n={self.n}, q={self.q}, [{body}])"


def canonicalize(labels: Labeling | Iterable[Hashable]) -> Labeling:
    """Relabel to ``1..q`` by first occurrence. Idempotent."""
    return Labeling(labels)


class ContingencyTable:
    """Dense joint count matrix between a candidate (rows) and a truth (columns).

    Parameters
    ----------
    counts : array_like of int, shape (q_c, q_g)
        Non-negative counts with no all-zero row or column.
    cap : int
        Maximum allowed number of rows or columns.
    """

    __slots__ = ("_counts", "_rows", "_cols")

    def __init__(self, counts, cap: int = DEFAULT_GROUP_CAP):
        arr = np.array(counts, dtype=np.int64, ndmin=2)
        if arr.ndim != 2:
            raise InputError("contingency table must be two-dimensional")
        if arr.size == 0:
            raise InputError("contingency table is empty")
        if max(arr.shape) > cap:
            raise InputError(
                f"table shape {arr.shape} exceeds the group cap of {cap}"
            )
        if (arr < 0).any():
            raise InputError("contingency counts must be non-negative")
        rows = arr.sum(axis=1)
        cols = arr.sum(axis=0)
        if (rows == 0).any() or (cols == 0).any():
            raise InputError("contingency table has an all-zero row or column")
        self._counts = _readonly(arr)
        self._rows = _readonly(rows)
        self._cols = _readonly(cols)

    @property
    def counts(self) -> np.ndarray:
        return self._counts

    @property
    def row_sums(self) -> np.ndarray:
        """Candidate group sizes."""
        return self._rows

    @property
    def col_sums(self) -> np.ndarray:
        """Ground-truth group sizes."""
        return self._cols

    @property
    def n(self) -> int:
        return int(self._rows.sum())

    @property
    def shape(self) -> tuple[int, int]:
        return self._counts.shape

    def transpose(self) -> "ContingencyTable":
        return ContingencyTable(self._counts.T)

    @property
    def T(self) -> "ContingencyTable":
        return self.transpose()

    def is_permutation_diagonal(self) -> bool:
        """True when the table is a permuted diagonal (labelings identical up to renaming)."""
        nz = self._counts > 0
        return (
            self.shape[0] == self.shape[1]
            and bool((nz.sum(axis=0) == 1).all())
            and bool((nz.sum(axis=1) == 1).all())
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ContingencyTable):
            return NotImplemented
        return np.array_equal(self._counts, other._counts)

    def __hash__(self) -> int:
        return hash((self.shape, self._counts.tobytes()))

    def __repr__(self) -> str:
        return f"ContingencyTable({self._counts.tolist()})"


def diagonal_table(sizes: Sequence[int]) -> ContingencyTable:
    """Table of a labeling against itself."""
    return ContingencyTable(np.diag(np.asarray(sizes, dtype=np.int64)))


def contingency_from_labelings(
    c: Labeling | Iterable[Hashable],
    g: Labeling | Iterable[Hashable],
    cap: int = DEFAULT_GROUP_CAP,
) -> ContingencyTable:
    """Count objects in each (candidate group, truth group) pair.

    >>> contingency_from_labelings([1, 1, 1, 2], [1, 1, 2, 2]).counts.tolist()
    [[2, 1], [0, 1]]
    """
    c = Labeling(c)
    g = Labeling(g)
    if c.n != g.n:
        raise InputError(
            f"labelings have different lengths: candidate {c.n}, truth {g.n}"
        )
    if c.q > cap or g.q > cap:
        raise InputError(f"number of groups exceeds the cap of {cap}")
    flat = (c.labels - 1) * g.q + (g.labels - 1)
    counts = np.bincount(flat, minlength=c.q * g.q).reshape(c.q, g.q)
    return ContingencyTable(counts, cap=cap)


# --------------------------------------------------------------------------
# label files


def read_label_file(path: str | Path) -> tuple[list[str] | None, list[str]]:
    """Read one label per line, or ``id,label`` CSV rows.

    Blank lines and lines starting with ``#`` are skipped. A first CSV row of
    ``id,label`` is treated as a header. Returns ``(ids, labels)`` where ``ids``
    is None for the one-column format.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    lines = [
        ln for ln in (raw.strip() for raw in text.splitlines())
        if ln and not ln.startswith("#")
    ]
    if not lines:
        raise InputError(f"{path}: no labels found")
    rows = list(csv.reader(lines))
    widths = {len(r) for r in rows}
    if widths == {1}:
        return None, [r[0].strip() for r in rows]
    if widths != {2}:
        raise InputError(f"{path}: expected one label per line or id,label rows")
    rows = [[x.strip() for x in r] for r in rows]
    if [x.lower() for x in rows[0]] == ["id", "label"]:
        rows = rows[1:]
    ids = [r[0] for r in rows]
    if len(set(ids)) != len(ids):
        raise InputError(f"{path}: duplicate object ids")
    return ids, [r[1] for r in rows]


def load_labeling(path: str | Path) -> Labeling:
    return Labeling(read_label_file(path)[1])


def load_aligned(truth_path, cand_path) -> tuple[Labeling, Labeling]:
    """Load truth and candidate files, aligning by id when both carry ids.

    Returns ``(candidate, truth)``.
    """
    g_ids, g_lab = read_label_file(truth_path)
    c_ids, c_lab = read_label_file(cand_path)
    if (g_ids is None) != (c_ids is None):
        raise InputError(
            "one file has object ids and the other does not; cannot align them"
        )
    if g_ids is not None:
        if set(g_ids) != set(c_ids):
            missing = sorted(set(g_ids) ^ set(c_ids))[:5]
            raise InputError(f"object ids differ between files, e.g. {missing}")
        lookup = dict(zip(c_ids, c_lab))
        c_lab = [lookup[i] for i in g_ids]
    if len(g_lab) != len(c_lab):
        raise InputError(
            f"label files differ in length: truth {len(g_lab)}, candidate {len(c_lab)}"
        )
    return Labeling(c_lab), Labeling(g_lab)
