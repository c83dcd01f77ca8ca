"""Basal-slice detection from label masks and ground-truth adaptation.

Scanning from the apex toward the base, a slice is basal when either the
LVC is not fully surrounded by LVM (it shares 4-neighbor edges with BG or
RVC), or the RVC area shrinks substantially relative to the slice below.
Adaptation clears every slice above the base and strips RVC on the basal
slice itself, leaving slices below untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stack import BG, LVC, LVM, RVC, CardiacStack, edge_count


@dataclass(frozen=True)
class BasalDetectionParams:
    """Thresholds of the RVC shrink test."""

    t1: float = 0.75  # max overlap(RVC, RVC below) / |RVC below|
    t2: float = 0.8  # max |RVC| / |RVC below|

    def __post_init__(self):
        for name, v in (("t1", self.t1), ("t2", self.t2)):
            if not 0 < v <= 1:
                raise ValueError(f"{name} must be in (0, 1], got {v}")


def detect_basal_slice(
    stack: CardiacStack, params: BasalDetectionParams | None = None
) -> int:
    """Index of the basal slice, or -1 when no slice triggers either rule.

    Depends only on the masks; every slice must carry one. The shrink test
    is skipped when the slice below is missing or has no RVC pixels.
    """
    if stack.masks is None:
        raise ValueError("basal-slice detection requires masks on every slice")
    p = params or BasalDetectionParams()
    masks = stack.masks
    for i in range(stack.n - 1, -1, -1):
        m = masks[i]
        if edge_count(m, LVC, BG) + edge_count(m, LVC, RVC) > 0:
            return i
        if i + 1 < stack.n:
            below = masks[i + 1] == RVC
            below_area = int(below.sum())
            if below_area > 0:
                here = m == RVC
                overlap = int((here & below).sum())
                if (
                    overlap / below_area <= p.t1
                    and int(here.sum()) / below_area <= p.t2
                ):
                    return i
    return -1


def adapt_ground_truth(stack: CardiacStack, base: int) -> CardiacStack:
    """Apply the basal adaptation rules for a given basal index.

    base == -1 returns the stack unchanged. Otherwise slices above the base
    become all background, the basal slice keeps LVC/LVM but loses RVC, and
    slices below keep their labels.
    """
    if stack.masks is None:
        raise ValueError("ground-truth adaptation requires masks")
    if not -1 <= base < stack.n:
        raise ValueError(f"base {base} outside [-1, {stack.n - 1}]")
    if base == -1:
        return stack
    masks = stack.masks.copy()
    masks[:base] = BG
    basal = masks[base]
    basal[basal == RVC] = BG
    return CardiacStack(
        images=stack.images,
        spacing=stack.spacing,
        thickness=stack.thickness,
        phase=stack.phase,
        base_index=base,
        masks=masks,
    )
