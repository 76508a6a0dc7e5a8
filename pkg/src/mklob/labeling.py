"""Spread-crossing labels and the exactly-one-positive prediction rule.

Classes are indexed UP=0, DOWN=1, NONE=2. A label triple with no positive
component (a future price landing exactly on today's opposite quote) has no
class; predictions against it are never correct.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .lob_data import OrderBookSnapshot

UP, DOWN, NONE = 0, 1, 2
ABSTAIN = -1
NO_CLASS = -1
CLASS_NAMES = ("up", "down", "none")


class Prediction(enum.Enum):
    UP = UP
    DOWN = DOWN
    NONE = NONE
    ABSTAIN = ABSTAIN


@dataclass(frozen=True)
class DirectionalLabel:
    y1: int
    y2: int
    y3: int

    def __post_init__(self):
        signs = (self.y1, self.y2, self.y3)
        if any(s not in (1, -1) for s in signs):
            raise ValueError("label components must be +1 or -1")
        if sum(s == 1 for s in signs) > 1:
            raise ValueError("at most one label component may be +1")

    def as_tuple(self) -> tuple:
        return (self.y1, self.y2, self.y3)

    @property
    def true_class(self) -> int:
        """Index of the positive component, or NO_CLASS."""
        for k, s in enumerate(self.as_tuple()):
            if s == 1:
                return k
        return NO_CLASS


def label_instance(now: OrderBookSnapshot, future: OrderBookSnapshot) -> DirectionalLabel:
    fb, fa = future.best_bid, future.best_ask
    nb, na = now.best_bid, now.best_ask
    return DirectionalLabel(
        1 if fb > na else -1,
        1 if fa < nb else -1,
        1 if (fb < na and fa > nb) else -1,
    )


def label_arrays(now_bid, now_ask, future_bid, future_ask) -> np.ndarray:
    """Vectorised :func:`label_instance`; returns an (n, 3) array of +/-1."""
    nb, na = np.asarray(now_bid, float), np.asarray(now_ask, float)
    fb, fa = np.asarray(future_bid, float), np.asarray(future_ask, float)
    out = np.stack([fb > na, fa < nb, (fb < na) & (fa > nb)], axis=-1)
    return np.where(out, 1, -1)


def combine_signs(s1: int, s2: int, s3: int) -> Prediction:
    """Keep a direction only when exactly one of the three classifiers is positive."""
    signs = (s1, s2, s3)
    if any(s not in (1, -1) for s in signs):
        raise ValueError("signs must be +1 or -1")
    positives = [k for k, s in enumerate(signs) if s == 1]
    if len(positives) != 1:
        return Prediction.ABSTAIN
    return Prediction(positives[0])


def combine_sign_arrays(signs: np.ndarray) -> np.ndarray:
    """Row-wise :func:`combine_signs` on an (n, 3) array; returns class codes or ABSTAIN."""
    pos = np.asarray(signs) > 0
    one = pos.sum(axis=1) == 1
    return np.where(one, np.argmax(pos, axis=1), ABSTAIN)


def true_classes(labels: np.ndarray) -> np.ndarray:
    """Class code per row of an (n, 3) label array; NO_CLASS when no component is positive."""
    pos = np.asarray(labels) > 0
    return np.where(pos.any(axis=1), np.argmax(pos, axis=1), NO_CLASS)


def is_correct(prediction: Prediction, label: DirectionalLabel) -> bool:
    return prediction is not Prediction.ABSTAIN and prediction.value == label.true_class
