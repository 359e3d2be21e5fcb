"""
String metrics for plate reads: edit distance, normalised similarity and character-level matches.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np


def _distance_table(a: str, b: str) -> np.ndarray:
    table = np.zeros((len(a) + 1, len(b) + 1), dtype=np.int64)
    table[:, 0] = np.arange(len(a) + 1)
    table[0, :] = np.arange(len(b) + 1)
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            table[i, j] = min(table[i - 1, j] + 1, table[i, j - 1] + 1,
                              table[i - 1, j - 1] + (a[i - 1] != b[j - 1]))

    return table


def levenshtein(a: str, b: str) -> int:
    """
    Minimum number of single-character insertions, deletions and substitutions turning a into b.
    """

    return int(_distance_table(a, b)[len(a), len(b)])


def similarity(gt: str, pred: str) -> float:
    """
    1 - levenshtein / max length; two empty strings are identical.

    :param gt: (str) Ground truth.
    :param pred: (str) Prediction.
    :return: (float) Similarity in [0, 1].
    """

    longest = max(len(gt), len(pred))
    if longest == 0:
        return 1.0

    return 1.0 - levenshtein(gt, pred) / longest


def _alignment(gt: str, pred: str) -> List[Tuple[str, str, str]]:
    """
    Optimal alignment walked back from the end, preferring match, then substitution, deletion, insertion.

    :return: (list) (operation, gt char, pred char) in reading order; operation is one of
        match, sub, del, ins.
    """

    table = _distance_table(gt, pred)
    i, j = len(gt), len(pred)
    steps = []
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            diagonal = table[i - 1, j - 1]
            if gt[i - 1] == pred[j - 1] and table[i, j] == diagonal:
                steps.append(("match", gt[i - 1], pred[j - 1]))
                i, j = i - 1, j - 1
                continue
            if table[i, j] == diagonal + 1:
                steps.append(("sub", gt[i - 1], pred[j - 1]))
                i, j = i - 1, j - 1
                continue
        if i > 0 and table[i, j] == table[i - 1, j] + 1:
            steps.append(("del", gt[i - 1], ""))
            i -= 1
        else:
            steps.append(("ins", "", pred[j - 1]))
            j -= 1

    return steps[::-1]


@dataclass(frozen=True)
class CharCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "CharCounts") -> "CharCounts":
        return CharCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp > 0 else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn > 0 else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0


def char_prf(gt: str, pred: str) -> Tuple[int, int, int]:
    """
    Character-level true positives, false positives and false negatives from the edit alignment.

    :param gt: (str) Ground truth.
    :param pred: (str) Prediction.
    :return: (tuple) tp, fp = |pred| - tp, fn = |gt| - tp.
    """

    tp = sum(op == "match" for op, _, _ in _alignment(gt, pred))

    return tp, len(pred) - tp, len(gt) - tp


def char_counts(gt: str, pred: str) -> CharCounts:
    return CharCounts(*char_prf(gt, pred))


def alignment_markup(gt: str, pred: str) -> str:
    """
    Prediction rendered against the ground truth: matches verbatim, substitutions lower-case, missed
    characters as ``?`` and inserted characters in brackets.

    >>> alignment_markup("1234ABC", "1234XB")
    '1234xB?'
    """

    pieces = []
    for op, _, p in _alignment(gt, pred):
        if op == "match":
            pieces.append(p)
        elif op == "sub":
            pieces.append(p.lower())
        elif op == "del":
            pieces.append("?")
        else:
            pieces.append(f"[{p}]")

    return "".join(pieces)
