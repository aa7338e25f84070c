"""Selection of the fixed 5-frame network input from a raw press video.

The selected clip spans the loading phase: it starts at the first frame whose
mean intensity change crosses a threshold, ends at the (last) intensity peak,
and fills the middle with the frames nearest to the quarter points of the
intensity range. The clip is baseline-subtracted against its own first frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ClipTooShortError, DomainError, NoContactError

DEFAULT_NOISE_SIGMA = 0.003
TAU_SIGMA_FACTOR = 5.0


def default_tau(noise_sigma: float = DEFAULT_NOISE_SIGMA) -> float:
    """Contact threshold: five noise standard deviations above baseline."""
    return TAU_SIGMA_FACTOR * noise_sigma


@dataclass(frozen=True)
class SelectedClip:
    """Five baseline-subtracted frames plus their provenance."""

    frames: np.ndarray  # (5, H, W, 3), values in [-1, 1]
    source_indices: tuple[int, int, int, int, int]
    endpoint_index: int


def find_start(intensity: np.ndarray, tau: float) -> int:
    """Smallest index whose intensity change strictly exceeds tau."""
    intensity = np.asarray(intensity)
    if intensity.size == 0:
        raise DomainError("empty intensity series")
    above = np.nonzero(intensity > tau)[0]
    if above.size == 0:
        raise NoContactError(f"no frame exceeds the contact threshold {tau:.4g}")
    return int(above[0])


def find_end(intensity: np.ndarray) -> int:
    """Largest index attaining the series maximum."""
    intensity = np.asarray(intensity)
    if intensity.size == 0:
        raise DomainError("empty intensity series")
    peak = np.max(intensity)
    return int(np.nonzero(intensity == peak)[0][-1])


def _quantile_indices(intensity: np.ndarray, start: int, end: int) -> list[int]:
    """Three interior frames nearest to the 1/4, 2/4, 3/4 intensity quantiles,
    deduplicated by moving to the next unused frame (ties -> earlier frame)."""
    interior = np.arange(start + 1, end)
    if interior.size < 3:
        raise ClipTooShortError(
            f"only {interior.size + 2} distinct frames between start {start} and end {end}"
        )
    lo, hi = intensity[start], intensity[end]
    chosen: list[int] = []
    for q in (0.25, 0.5, 0.75):
        target = lo + q * (hi - lo)
        order = np.lexsort((interior, np.abs(intensity[interior] - target)))
        pick = next(int(interior[j]) for j in order if int(interior[j]) not in chosen)
        chosen.append(pick)
    return sorted(chosen)


def select_five(frames: np.ndarray, intensity: np.ndarray, start: int, end: int) -> SelectedClip:
    """Build the 5-frame clip for the window [start, end] and subtract the
    frame at ``start`` from every selected frame."""
    intensity = np.asarray(intensity)
    if not (0 <= start < end < len(intensity)):
        raise DomainError(f"invalid window [{start}, {end}] for {len(intensity)} frames")
    if intensity[end] <= intensity[start]:
        raise DomainError("no intensity growth between start and end")
    middle = _quantile_indices(intensity, start, end)
    indices = (start, *middle, end)
    baseline = frames[start]
    clip = np.stack([frames[i] - baseline for i in indices])
    return SelectedClip(clip, indices, end)


def truncate_endpoints(
    intensity: np.ndarray, tau: float, start: int | None = None
) -> list[tuple[int, int]]:
    """Augmentation endpoints: every frame e in the loading window with
    intensity >= 2*tau and e > start + 3, paired with the common start. A press
    truncated at e stands in for the same press stopped at a smaller force."""
    intensity = np.asarray(intensity)
    if start is None:
        start = find_start(intensity, tau)
    end = find_end(intensity)
    out = []
    for e in range(start + 4, end + 1):
        if intensity[e] >= 2.0 * tau:
            out.append((start, int(e)))
    return out


def clip_from_sequence(
    frames: np.ndarray,
    intensity: np.ndarray,
    tau: float,
    endpoint: int | None = None,
) -> SelectedClip:
    """Start/end detection plus selection in one call; ``endpoint`` overrides
    the detected end for truncation augmentation."""
    start = find_start(intensity, tau)
    end = find_end(intensity) if endpoint is None else int(endpoint)
    return select_five(frames, intensity, start, end)
