import itertools
import math
import sys
from collections.abc import Iterable

import numpy as np
from numpy.typing import NDArray

type TokenValues = tuple[NDArray[np.float64], ...]

GAP_FLOOR = 1e-30


def exact_sum(rows: Iterable[NDArray[np.float64]]) -> float:
    """Correctly rounded sum of every entry of a ragged table."""
    return math.fsum(
        itertools.chain.from_iterable(row.tolist() for row in rows),
    )


def abs_mass(rows: Iterable[NDArray[np.float64]]) -> float:
    return math.fsum(
        itertools.chain.from_iterable(np.abs(row).tolist() for row in rows),
    )


def flatten(rows: TokenValues) -> NDArray[np.float64]:
    if not rows:
        return np.zeros(0, dtype=np.float64)
    return np.concatenate(rows).astype(np.float64, copy=False)


def relative_gap(lhs: float, rhs: float) -> float:
    """|lhs - rhs| / max(|lhs|, |rhs|, 1e-30)."""
    denominator = max(abs(lhs), abs(rhs), GAP_FLOOR)
    return abs(lhs - rhs) / denominator


def scaled_gaps(
    lhs: NDArray[np.float64],
    rhs: NDArray[np.float64],
    scale: NDArray[np.float64] | float = 0.0,
) -> NDArray[np.float64]:
    """Element-wise gaps relative to max(|lhs|, |rhs|, |scale|, 1e-30).

    `scale` is the magnitude of the terms that were summed, so identities
    whose sides cancel to nearly zero are judged against that magnitude.
    Non-finite gaps become the largest float.
    """
    denominator = np.maximum(
        np.maximum(np.abs(lhs), np.abs(rhs)),
        np.maximum(np.abs(scale), GAP_FLOOR),
    )
    with np.errstate(invalid="ignore", over="ignore"):
        gaps = np.abs(lhs - rhs) / denominator
    return np.nan_to_num(
        gaps,
        nan=sys.float_info.max,
        posinf=sys.float_info.max,
    )


def grow_partials(
    partials: Iterable[float],
    values: Iterable[float],
) -> tuple[float, ...]:
    """Non-overlapping partials whose exact total is the sum of everything.

    `math.fsum(partials)` is then the correctly rounded total, whatever
    order the values arrived in.
    """
    result = list(partials)
    for value in values:
        x = value
        kept = 0
        for y in result:
            if abs(x) < abs(y):
                x, y = y, x
            high = x + y
            low = y - (high - x)
            if low:
                result[kept] = low
                kept += 1
            x = high
        result[kept:] = [x]
    return tuple(result)
