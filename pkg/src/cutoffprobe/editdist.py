"""Character-level Levenshtein distance, bit-parallel with early exit.

The core loop is Myers' bit-vector algorithm. Python integers act as
arbitrary-width bit vectors, so patterns longer than a machine word need no
explicit blocking. An optional cap triggers an early return as soon as the
running score proves the final distance must exceed it.
"""

from __future__ import annotations


def levenshtein(a: str, b: str, cap: int | None = None) -> int:
    """Edit distance between a and b.

    With `cap` set, returns the exact distance when it is <= cap and
    `cap + 1` as soon as the distance provably exceeds cap.
    """
    if a == b:
        return 0
    # Common affixes never change the distance; stripping them shrinks the
    # bit vectors and makes the cap fire earlier.
    lo = 0
    hi_a, hi_b = len(a), len(b)
    while lo < hi_a and lo < hi_b and a[lo] == b[lo]:
        lo += 1
    while hi_a > lo and hi_b > lo and a[hi_a - 1] == b[hi_b - 1]:
        hi_a -= 1
        hi_b -= 1
    a, b = a[lo:hi_a], b[lo:hi_b]
    if len(a) > len(b):
        a, b = b, a
    m, n = len(a), len(b)
    if cap is not None and n - m > cap:
        return cap + 1
    if m == 0:
        return n

    peq: dict[str, int] = {}
    for i, ch in enumerate(a):
        peq[ch] = peq.get(ch, 0) | (1 << i)

    full = (1 << m) - 1
    high = 1 << (m - 1)
    pv = full
    mv = 0
    score = m
    for j, ch in enumerate(b):
        eq = peq.get(ch, 0)
        xv = eq | mv
        xh = ((((eq & pv) + pv) & full) ^ pv) | eq
        ph = mv | (full & ~(xh | pv))
        mh = pv & xh
        if ph & high:
            score += 1
        elif mh & high:
            score -= 1
        ph = ((ph << 1) | 1) & full
        mh = (mh << 1) & full
        pv = mh | (full & ~(xv | ph))
        mv = ph & xv
        # Remaining columns can each lower the score by at most one.
        if cap is not None and score - (n - 1 - j) > cap:
            return cap + 1
    return score


def normalized_edit(matched: str, version: str) -> float:
    """Levenshtein distance divided by the matched document's character length.

    Normalizing by the matched side keeps long retrieved documents from being
    penalized merely for their length.
    """
    if not matched:
        raise ValueError("matched document is empty; normalization undefined")
    return levenshtein(matched, version) / len(matched)
