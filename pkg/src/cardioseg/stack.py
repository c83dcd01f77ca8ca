"""Short-axis image stacks, label masks, sub-stack indexing and edge counts.

Slices are ordered base to apex. Label codes: 0 background (BG), 1 left
ventricular cavity (LVC), 2 left ventricular myocardium (LVM), 3 right
ventricular cavity (RVC). Stacks are immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

BG, LVC, LVM, RVC = 0, 1, 2, 3
NUM_CLASSES = 4
CLASS_NAMES = {BG: "BG", LVC: "LVC", LVM: "LVM", RVC: "RVC"}


def round_half_away(x: float) -> int:
    """Round to nearest integer, ties away from zero."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


@dataclass(frozen=True)
class CardiacStack:
    """Ordered base-to-apex slice stack with physical spacing.

    images: (N, H, W) float array; masks: optional (N, H, W) uint8 labels.
    base_index: basal slice index in [-1, N-1], or None when unknown.
    """

    images: np.ndarray
    spacing: tuple[float, float]  # mm per pixel (row, col)
    thickness: float  # mm between slice centers
    phase: str = "ED"
    base_index: int | None = None
    masks: np.ndarray | None = None

    def __post_init__(self):
        # N == 0 is representable so sub-stack views may be empty; stacks
        # read from or written to disk are validated as N >= 1 separately
        img = np.asarray(self.images)
        if img.ndim != 3:
            raise ValueError(f"images must be (N, H, W), got {img.shape}")
        if min(self.spacing) <= 0 or self.thickness <= 0:
            raise ValueError("spacing and thickness must be positive")
        object.__setattr__(self, "images", img)
        if self.masks is not None:
            m = np.asarray(self.masks)
            if m.shape != img.shape:
                raise ValueError(
                    f"masks shape {m.shape} must match images shape {img.shape}"
                )
            object.__setattr__(self, "masks", m)
        if self.base_index is not None and not (-1 <= self.base_index < max(img.shape[0], 1)):
            raise ValueError(f"base_index {self.base_index} outside [-1, {img.shape[0] - 1}]")

    @property
    def n(self) -> int:
        return self.images.shape[0]

    @property
    def slice_shape(self) -> tuple[int, int]:
        return self.images.shape[1:]

    def with_masks(self, masks: np.ndarray) -> "CardiacStack":
        return replace(self, masks=masks)

    def with_base(self, base: int) -> "CardiacStack":
        return replace(self, base_index=base)


def substack(stack: CardiacStack, a: float, b: float) -> CardiacStack:
    """Slices with index in [round(a), round(b)), rounding ties away from zero.

    a and b are fractional slice positions in [0, N]. The view may be empty.
    """
    i0, i1 = substack_range(stack.n, a, b)
    i1 = max(i0, i1)
    return CardiacStack(
        images=stack.images[i0:i1],
        spacing=stack.spacing,
        thickness=stack.thickness,
        phase=stack.phase,
        base_index=None,
        masks=None if stack.masks is None else stack.masks[i0:i1],
    )


def substack_range(n: int, a: float, b: float) -> tuple[int, int]:
    """Index interval [round(a), round(b)) of the sub-stack selection rule."""
    if a > b:
        raise ValueError(f"sub-stack bounds out of order: {a} > {b}")
    if a < 0 or b > n:
        raise ValueError(f"sub-stack bounds [{a}, {b}] outside [0, {n}]")
    return round_half_away(a), round_half_away(b)


def edge_count(mask: np.ndarray, class_a: int, class_b: int) -> int:
    """Unordered 4-neighbor pixel pairs labeled exactly {class_a, class_b}."""
    if class_a == class_b:
        raise ValueError("edge_count requires two distinct classes")
    m = np.asarray(mask)
    count = 0
    for left, right in ((m[:, :-1], m[:, 1:]), (m[:-1, :], m[1:, :])):
        count += int(np.sum((left == class_a) & (right == class_b)))
        count += int(np.sum((left == class_b) & (right == class_a)))
    return count


def one_hot(mask: np.ndarray, num_classes: int = NUM_CLASSES) -> np.ndarray:
    """Per-pixel one-hot channels, shape (num_classes, H, W), float32."""
    m = np.asarray(mask)
    if m.max(initial=0) >= num_classes:
        raise ValueError(
            f"label code {int(m.max())} out of range for {num_classes} classes"
        )
    out = np.zeros((num_classes,) + m.shape, dtype=np.float32)
    for c in range(num_classes):
        out[c] = m == c
    return out


def largest_component(mask: np.ndarray, cls: int) -> np.ndarray:
    """Relabel all but the largest 4-connected component of cls to background.

    Ties keep the component discovered first in raster order. A mask without
    the class is returned unchanged (as a copy).
    """
    m = np.asarray(mask).copy()
    binary = m == cls
    if not binary.any():
        return m
    labels, n = ndimage.label(binary)  # default structure is 4-connectivity
    if n > 1:
        sizes = np.bincount(labels.ravel())[1:]
        keep = int(np.argmax(sizes)) + 1  # first max = smallest raster seed
        m[binary & (labels != keep)] = BG
    return m
