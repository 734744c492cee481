"""Spatial unwrapping of the short baseline and the ambiguity bootstrap up the chain."""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DegenerateBaselineError, UnwrapError
from .geometry import TWO_PI, BaselineSet, effective_baselines, phase_to_height, wrap
from .scene import HeightField
from .simulate import Interferogram, InterferogramStack, default_reference

_NEIGHBOURS = ((-1, 0), (1, 0), (0, -1), (0, 1))


@dataclass(frozen=True)
class UnwrappedField:
    phase: np.ndarray
    reference_pixel: tuple
    residue_count: int = 0

    def __post_init__(self):
        if self.residue_count < 0:
            raise ValueError("residue_count must be non-negative")
        if self.phase[tuple(self.reference_pixel)] != 0:
            raise ValueError("unwrapped phase must be zero at the reference pixel")

    @property
    def mask(self):
        return np.isfinite(self.phase)


@dataclass(frozen=True)
class AmbiguityField:
    ambiguities: np.ndarray
    failures: np.ndarray | None = None

    def __post_init__(self):
        if not np.issubdtype(np.asarray(self.ambiguities).dtype, np.integer):
            raise ValueError("ambiguities must be integers")

    @property
    def failure_fraction(self):
        if self.failures is None:
            return 0.0
        return float(np.mean(self.failures))


def count_residues(wrapped, mask=None):
    """Number of 2x2 loops whose wrapped-gradient circulation is non-zero."""
    w = np.asarray(wrapped, dtype=float)
    mask = np.isfinite(w) if mask is None else np.asarray(mask, bool) & np.isfinite(w)
    a, b, c, d = w[:-1, :-1], w[:-1, 1:], w[1:, 1:], w[1:, :-1]
    ok = mask[:-1, :-1] & mask[:-1, 1:] & mask[1:, 1:] & mask[1:, :-1]
    with np.errstate(invalid="ignore"):
        circ = wrap(b - a) + wrap(c - b) + wrap(d - c) + wrap(a - d)
    return int(np.count_nonzero(ok & (np.abs(circ) > np.pi)))


def _quality(w, mask):
    # mean absolute wrapped difference to valid 4-neighbours, negated
    total = np.zeros(w.shape)
    count = np.zeros(w.shape)
    for axis in (0, 1):
        diff = np.abs(wrap(np.diff(np.where(mask, w, 0.0), axis=axis)))
        both = mask.take(range(1, w.shape[axis]), axis=axis) & mask.take(range(w.shape[axis] - 1), axis=axis)
        diff = np.where(both, diff, 0.0)
        lo = [slice(None)] * 2
        hi = [slice(None)] * 2
        lo[axis], hi[axis] = slice(None, -1), slice(1, None)
        total[tuple(lo)] += diff
        total[tuple(hi)] += diff
        count[tuple(lo)] += both
        count[tuple(hi)] += both
    return -total / np.maximum(count, 1)


def spatial_unwrap(wrapped, mask=None, reference_pixel=None, strict=True):
    """Quality-guided flood fill from the reference pixel.

    Integer cycle counts are propagated rather than phases, so the output
    differs from the input by exact multiples of 2 pi before referencing.
    Cells the fill cannot reach raise ``UnwrapError`` when ``strict``; they
    are left as NaN otherwise.
    """
    w = np.asarray(wrapped, dtype=float)
    mask = np.isfinite(w) if mask is None else np.asarray(mask, bool) & np.isfinite(w)
    ref = default_reference(mask) if reference_pixel is None else tuple(int(v) for v in reference_pixel)
    if not mask[ref]:
        raise UnwrapError(f"reference pixel {ref} is masked out")
    rows, cols = w.shape
    quality = _quality(w, mask)
    cycles = np.zeros(w.shape, dtype=np.int64)
    done = np.zeros(w.shape, dtype=bool)
    done[ref] = True
    heap = []
    tick = 0

    def push(r, c):
        nonlocal tick
        for dr, dc in _NEIGHBOURS:
            rr, cc = r + dr, c + dc
            if 0 <= rr < rows and 0 <= cc < cols and mask[rr, cc] and not done[rr, cc]:
                heapq.heappush(heap, (-quality[rr, cc], tick, rr, cc, r, c))
                tick += 1

    push(*ref)
    while heap:
        _, _, r, c, pr, pc = heapq.heappop(heap)
        if done[r, c]:
            continue
        cycles[r, c] = cycles[pr, pc] + int(np.rint((w[pr, pc] - w[r, c]) / TWO_PI))
        done[r, c] = True
        push(r, c)

    unreachable = mask & ~done
    if unreachable.any() and strict:
        cells = [tuple(int(v) for v in rc) for rc in np.argwhere(unreachable)]
        shown = ", ".join(str(c) for c in cells[:10]) + (" ..." if len(cells) > 10 else "")
        raise UnwrapError(f"{len(cells)} masked-in cells are not connected to the reference: {shown}", cells)
    phase = w + TWO_PI * cycles
    phase = phase - phase[ref]
    phase[~done] = np.nan
    phase[ref] = 0.0
    return UnwrappedField(phase, ref, count_residues(w, mask))


def _smooth_wrapped(phase, mask, size):
    z = np.where(mask, np.exp(1j * np.where(mask, phase, 0.0)), 0.0)
    re = ndimage.uniform_filter(z.real, size, mode="nearest")
    im = ndimage.uniform_filter(z.imag, size, mode="nearest")
    return np.where(mask, np.angle(re + 1j * im), np.nan)


def _masked_mean(values, mask, size):
    num = ndimage.uniform_filter(np.where(mask, values, 0.0), size, mode="nearest")
    den = ndimage.uniform_filter(mask.astype(float), size, mode="nearest")
    return np.where(mask, num / np.maximum(den, 1e-12), np.nan)


def residual_trend(residual, mask, reference_pixel, smoothing=(5, 15), strict=True):
    """Smooth unwrapped trend of a wrapped residual field.

    A short complex average follows steep ramps and is unwrapped spatially.
    That rough trend is then averaged over the wide window, and a wide
    complex average of what is left recentres it, which suppresses most of
    the noise the short window lets through.
    """
    short, wide = smoothing
    rough = spatial_unwrap(_smooth_wrapped(residual, mask, short), mask, reference_pixel, strict=strict).phase
    if wide <= 1:
        return rough
    valid = mask & np.isfinite(rough)
    base = _masked_mean(rough, valid, wide)
    return base + _smooth_wrapped(residual - base, valid, wide)


def bootstrap_ambiguity(lower: UnwrappedField, b_lower, higher: Interferogram, reference_pixel=None,
                        smoothing=(5, 15), strict=True):
    """Carry the unwrapped phase of a shorter baseline to a longer one.

    The lower phase scaled by the baseline ratio predicts the higher phase
    (the pseudo phase). The wrapped residual between the two holds noise
    plus whatever the scaling cannot predict, such as orbit trends. Its
    spatial trend is unwrapped on a complex-smoothed copy (window
    ``smoothing`` cells; 1 disables smoothing), and every pixel then takes
    the 2 pi branch closest to that trend. A pixel counts as a link
    failure when the resulting residual exceeds pi in magnitude, i.e. when
    plain per-pixel rounding would have picked another ambiguity.
    """
    if b_lower == 0:
        raise DegenerateBaselineError("degenerate baseline: lower baseline is zero")
    ref = lower.reference_pixel if reference_pixel is None else tuple(reference_pixel)
    mask = lower.mask & np.isfinite(higher.wrapped_phase)
    ratio = higher.b_perp / b_lower
    d = wrap(higher.wrapped_phase - higher.wrapped_phase[ref])
    pseudo = ratio * lower.phase
    residual = wrap(d - pseudo)
    if smoothing is None:
        trend = spatial_unwrap(residual, mask, ref, strict=strict).phase
    else:
        trend = residual_trend(residual, mask, ref, smoothing, strict)
    residual = trend + wrap(residual - trend)
    with np.errstate(invalid="ignore"):
        amb = np.rint((pseudo + residual - d) / TWO_PI)
        failures = mask & (np.abs(residual) > np.pi)
    valid = np.isfinite(amb)
    ambiguities = np.where(valid, amb, 0).astype(np.int64)
    phase = np.where(valid, d + TWO_PI * ambiguities, np.nan)
    phase[ref] = 0.0
    return (AmbiguityField(ambiguities, failures),
            UnwrappedField(phase, ref, count_residues(higher.wrapped_phase, mask)))


@dataclass(frozen=True)
class AsymptoticResult:
    fields: list
    chain_fields: list
    ambiguities: list
    baseline_set: BaselineSet
    link_failure_fractions: list = field(default_factory=list)

    @property
    def residue_counts(self):
        return [f.residue_count for f in self.chain_fields]

    @property
    def success_rate(self):
        """Fraction of masked-in pixels with no link failure anywhere in the chain."""
        if not self.ambiguities:
            return 1.0
        any_fail = np.zeros_like(self.ambiguities[0].failures)
        for a in self.ambiguities:
            any_fail |= a.failures
        mask = self.chain_fields[0].mask
        return float(1.0 - any_fail[mask].mean())

    def __iter__(self):
        return iter(self.fields)

    def __len__(self):
        return len(self.fields)

    def __getitem__(self, k):
        return self.fields[k]


def asymptotic_unwrap(stack: InterferogramStack, baseline_set: BaselineSet | None = None, smoothing=(5, 15),
                      strict=True):
    """Unwrap every interferogram of ``stack`` through the effective-baseline chain.

    The first chain element is formed from the wrapped interferograms
    (differenced when it is a pseudo baseline) and unwrapped spatially; each
    following element is bootstrapped from its predecessor. ``fields`` holds
    one result per physical interferogram in stack order.
    """
    if baseline_set is None:
        baseline_set = effective_baselines(stack.baselines)
    if not np.allclose(baseline_set.physical, stack.baselines, rtol=1e-12):
        raise ValueError("baseline set does not match the stack baselines")
    ref = stack.reference_pixel
    wrapped = [ifg.wrapped_phase for ifg in stack]
    first = baseline_set.combination_map[0]
    sbi = wrap(first.combine(wrapped)) if not first.is_physical else wrapped[first.minuend]
    sbi = np.where(stack.mask, sbi, np.nan)
    current = spatial_unwrap(sbi, stack.mask, ref, strict=strict)
    chain_fields, ambiguities, fractions = [current], [], []
    fields = [None] * len(stack)
    if first.is_physical:
        fields[first.minuend] = current
    for k in range(1, len(baseline_set)):
        idx = baseline_set.combination_map[k].minuend
        amb, current = bootstrap_ambiguity(current, baseline_set.effective[k - 1], stack[idx], ref,
                                           smoothing=smoothing, strict=strict)
        chain_fields.append(current)
        ambiguities.append(amb)
        fractions.append(float(amb.failures[stack.mask].mean()))
        fields[idx] = current
    return AsymptoticResult(fields, chain_fields, ambiguities, baseline_set, fractions)


def initial_height(sbi_unwrapped: UnwrappedField, geom, b_perp):
    return HeightField(phase_to_height(geom, b_perp, sbi_unwrapped.phase))
