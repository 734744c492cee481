"""Synthetic multi-baseline interferogram stacks.

Each interferogram is the wrapped sum of the topographic phase, an orbit
error screen for pairs formed between the two satellites, an atmospheric
contribution and Gaussian phase noise set by the coherence.

Orbit errors use a target-centred TCN frame (track, cross, normal). The
master sits at ``R * (0, sin(theta), cos(theta))`` from the target, and the
slave at the master position minus the baseline vector.
"""
from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .errors import DegenerateGeometryError, FormatError, PhaseContinuityWarning
from .geometry import (BaselineConfiguration, InterferogramKind, RadarGeometry, coherence_to_phase_std,
                       effective_baselines, equivalent_baselines, height_ambiguity, height_to_phase, wrap)
from .rng import make_rng
from .scene import HeightField, max_height_difference

FD_STEP = 1e-3


@dataclass(frozen=True)
class Interferogram:
    wrapped_phase: np.ndarray
    b_perp: float
    coherence: float
    kind: InterferogramKind
    azimuth_time: np.ndarray

    def __post_init__(self):
        phase = np.asarray(self.wrapped_phase, dtype=float)
        finite = phase[np.isfinite(phase)]
        if finite.size and (finite.min() <= -np.pi or finite.max() > np.pi):
            raise ValueError("wrapped phase must lie in (-pi, pi]")
        if not 0 < self.coherence <= 1:
            raise ValueError("coherence must lie in (0, 1]")
        if len(self.azimuth_time) != phase.shape[0]:
            raise ValueError("azimuth_time needs one entry per row")
        object.__setattr__(self, "wrapped_phase", phase)
        object.__setattr__(self, "kind", InterferogramKind(self.kind))
        object.__setattr__(self, "azimuth_time", np.asarray(self.azimuth_time, dtype=float))

    @property
    def shape(self):
        return self.wrapped_phase.shape

    @property
    def phase_std(self):
        return coherence_to_phase_std(self.coherence)


@dataclass(frozen=True)
class InterferogramStack:
    interferograms: tuple
    geometry: RadarGeometry
    reference_pixel: tuple
    mask: np.ndarray | None = None
    configuration: BaselineConfiguration | None = None

    def __post_init__(self):
        ifgs = tuple(self.interferograms)
        if not ifgs:
            raise ValueError("stack needs at least one interferogram")
        shape = ifgs[0].shape
        for k, ifg in enumerate(ifgs):
            if ifg.shape != shape:
                raise ValueError(f"interferogram {k} has shape {ifg.shape}, expected {shape}")
        b = [ifg.b_perp for ifg in ifgs]
        if any(b2 <= b1 for b1, b2 in zip(b, b[1:])):
            raise ValueError("interferograms must be sorted by strictly ascending b_perp")
        mask = np.ones(shape, bool)
        for ifg in ifgs:
            mask &= np.isfinite(ifg.wrapped_phase)
        if self.mask is not None:
            mask &= np.asarray(self.mask, dtype=bool)
        ref = tuple(int(v) for v in self.reference_pixel)
        if not (0 <= ref[0] < shape[0] and 0 <= ref[1] < shape[1]) or not mask[ref]:
            raise ValueError(f"reference pixel {ref} is not a masked-in cell")
        object.__setattr__(self, "interferograms", ifgs)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "reference_pixel", ref)

    @property
    def shape(self):
        return self.interferograms[0].shape

    @property
    def baselines(self):
        return [ifg.b_perp for ifg in self.interferograms]

    @property
    def kinds(self):
        return [ifg.kind for ifg in self.interferograms]

    def __len__(self):
        return len(self.interferograms)

    def __iter__(self):
        return iter(self.interferograms)

    def __getitem__(self, k):
        return self.interferograms[k]


@dataclass(frozen=True)
class OrbitErrorParams:
    delta_bc: float = 0.0
    delta_bc_rate: float = 0.0
    delta_bn: float = 0.0
    delta_bn_rate: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError("orbit error parameters must be finite")

    def as_array(self):
        return np.array([self.delta_bc, self.delta_bc_rate, self.delta_bn, self.delta_bn_rate], dtype=float)

    @classmethod
    def from_array(cls, values):
        return cls(*(float(v) for v in values))


@dataclass(frozen=True)
class AtmosphericScreen:
    delay_phase: np.ndarray
    spatial_exponent: float = 8.0 / 3.0
    rms: float = 0.0

    def __post_init__(self):
        if self.rms < 0:
            raise ValueError("rms must be non-negative")


@dataclass(frozen=True)
class SatelliteState:
    """Master position and slave baseline in TCN coordinates (arrays broadcast)."""
    master_position: np.ndarray
    baseline_vector: np.ndarray
    target_unit_los: np.ndarray | None = None

    def __post_init__(self):
        rm = np.asarray(self.master_position, dtype=float)
        if np.any(np.linalg.norm(rm, axis=-1) == 0):
            raise DegenerateGeometryError("master position coincides with the target")
        object.__setattr__(self, "master_position", rm)
        object.__setattr__(self, "baseline_vector", np.asarray(self.baseline_vector, dtype=float))
        if self.target_unit_los is None:
            object.__setattr__(self, "target_unit_los", -rm / np.linalg.norm(rm, axis=-1, keepdims=True))


def sample_phase_noise(sigma, n, seed):
    """I.i.d. zero-mean Gaussian draws; ``n`` may be a count or a shape."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    draws = make_rng(seed, "phase_noise").standard_normal(n)
    return sigma * draws


def _slave_range(master, baseline):
    return np.linalg.norm(master - baseline, axis=-1)


def range_partials(state: SatelliteState, step=FD_STEP):
    """Central differences of the slave range w.r.t. the cross and normal baseline."""
    rm, b = np.broadcast_arrays(state.master_position, state.baseline_vector)
    if np.any(_slave_range(rm, b) <= 2 * step):
        raise DegenerateGeometryError("slave position coincides with the target")
    out = []
    for axis in (1, 2):
        e = np.zeros(3)
        e[axis] = step
        out.append((_slave_range(rm, b + e) - _slave_range(rm, b - e)) / (2 * step))
    return {"d_r/d_Bc": out[0], "d_r/d_Bn": out[1]}


def range_partials_closed_form(state: SatelliteState):
    rm, b = np.broadcast_arrays(state.master_position, state.baseline_vector)
    diff = rm - b
    rs = np.linalg.norm(diff, axis=-1)
    return {"d_r/d_Bc": -diff[..., 1] / rs, "d_r/d_Bn": -diff[..., 2] / rs}


def scene_states(geom: RadarGeometry, shape, b_perp):
    """Per-pixel states: range grows across columns, baseline is fixed per pair."""
    rows, cols = shape
    ranges = geom.column_ranges(cols)
    look = geom.column_look_angles(cols)
    master = np.stack([np.zeros(cols), ranges * np.sin(look), ranges * np.cos(look)], axis=-1)
    theta0 = geom.incidence
    baseline = b_perp * np.array([0.0, np.cos(theta0), -np.sin(theta0)])
    master = np.broadcast_to(master, (rows, cols, 3))
    return SatelliteState(master, np.broadcast_to(baseline, (rows, cols, 3)))


def orbit_columns(geom: RadarGeometry, state: SatelliteState, factor=1):
    """Phase per unit of (dBc, dBc_rate, dBn, dBn_rate), shape (rows, cols, 4)."""
    partials = range_partials(state)
    pc, pn = partials["d_r/d_Bc"], partials["d_r/d_Bn"]
    t = geom.row_times(pc.shape[0])[:, None]
    scale = factor * 4.0 * np.pi / geom.wavelength
    return scale * np.stack([pc, pc * t, pn, pn * t], axis=-1)


def orbit_phase_screen(geom: RadarGeometry, state_per_pixel: SatelliteState, params: OrbitErrorParams,
                       monostatic_factor=1):
    if monostatic_factor not in (1, 2):
        raise ValueError("monostatic_factor must be 1 or 2")
    return orbit_columns(geom, state_per_pixel, monostatic_factor) @ params.as_array()


def turbulence_screen(rows, cols, rms, exponent=8.0 / 3.0, outer_scale=None, seed=0):
    """Isotropic power-law screen scaled to ``rms`` radians, zero mean.

    The power spectrum is ``(k**2 + k0**2) ** (-exponent / 2)`` with
    ``k0 = 1 / outer_scale`` (cells); without an outer scale the DC term is
    simply dropped.
    """
    if rms < 0:
        raise ValueError("rms must be non-negative")
    if rms == 0:
        return AtmosphericScreen(np.zeros((rows, cols)), exponent, 0.0)
    rng = make_rng(seed, "turbulence")
    ky = np.fft.fftfreq(rows)[:, None]
    kx = np.fft.fftfreq(cols)[None, :]
    k0 = 0.0 if outer_scale is None else 1.0 / outer_scale
    k2 = kx ** 2 + ky ** 2 + k0 ** 2
    k2[0, 0] = np.inf
    amplitude = k2 ** (-exponent / 4.0)
    white = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    field = np.fft.ifft2(white * amplitude).real
    field -= field.mean()
    field *= rms / np.sqrt(np.mean(field ** 2))
    return AtmosphericScreen(field, exponent, float(rms))


def path_difference_screen(screen, geom: RadarGeometry, b_perp, layer_height=1000.0):
    """Differential delay seen by two receivers looking through the same screen.

    At ``layer_height`` the two rays are ``b_perp * layer_height / altitude``
    apart, so the bi-static phase is the screen shifted by that distance
    along range minus the unshifted screen.
    """
    screen = np.asarray(screen, dtype=float)
    altitude = geom.slant_range * np.cos(geom.incidence)
    shift = b_perp * layer_height / altitude / geom.range_spacing
    k = np.fft.fftfreq(screen.shape[1])
    shifted = np.fft.ifft(np.fft.fft(screen, axis=1) * np.exp(2j * np.pi * k * shift), axis=1).real
    return shifted - screen


def default_reference(mask):
    mask = np.asarray(mask, dtype=bool)
    rr, cc = np.nonzero(mask)
    if rr.size == 0:
        raise ValueError("mask is empty")
    centre = ((mask.shape[0] - 1) / 2.0, (mask.shape[1] - 1) / 2.0)
    k = np.argmin((rr - centre[0]) ** 2 + (cc - centre[1]) ** 2)
    return int(rr[k]), int(cc[k])


def simulate_stack(scene: HeightField, geom: RadarGeometry, cfg: BaselineConfiguration, gamma=0.99,
                   orbit: OrbitErrorParams | None = None, atmos: AtmosphericScreen | None = None,
                   seed=0, reference_pixel=None, layer_height=1000.0):
    """Wrapped interferograms for the equivalent baselines of ``cfg``.

    ``gamma`` is one coherence shared by all pairs or one value per pair.
    Orbit screens enter pairs formed between the satellites (twice for the
    mono-static pairs). The atmosphere enters mono-static pairs in full and
    bi-static pairs through the receiver path difference only.
    """
    baselines = equivalent_baselines(cfg)
    kinds = cfg.kinds
    gammas = np.broadcast_to(np.asarray(gamma, dtype=float), (len(baselines),))
    sigmas = [coherence_to_phase_std(g) for g in gammas]
    if atmos is not None and atmos.delay_phase.shape != scene.shape:
        raise ValueError("atmospheric screen does not match the scene grid")

    b1 = effective_baselines(baselines).shortest
    span, amb = max_height_difference(scene), height_ambiguity(geom, b1)
    if span >= amb:
        warnings.warn(f"PC assumption at risk: height span {span:.1f} m >= ambiguity {amb:.1f} m of B1={b1:g} m",
                      PhaseContinuityWarning, stacklevel=2)

    mask = scene.mask
    ref = default_reference(mask) if reference_pixel is None else tuple(reference_pixel)
    heights = np.where(mask, scene.heights, 0.0)
    times = geom.row_times(scene.rows)
    ifgs = []
    for k, (b, kind, g, sigma) in enumerate(zip(baselines, kinds, gammas, sigmas)):
        phase = height_to_phase(geom, b, heights)
        if orbit is not None and kind.orbit_factor:
            phase = phase + orbit_phase_screen(geom, scene_states(geom, scene.shape, b), orbit, kind.orbit_factor)
        if atmos is not None:
            if kind is InterferogramKind.MONOSTATIC:
                phase = phase + atmos.delay_phase
            elif kind is InterferogramKind.BISTATIC:
                phase = phase + path_difference_screen(atmos.delay_phase, geom, b, layer_height)
        if sigma > 0:
            phase = phase + sigma * make_rng(seed, "phase_noise", k).standard_normal(scene.shape)
        wrapped = np.where(mask, wrap(phase), np.nan)
        ifgs.append(Interferogram(wrapped, float(b), float(g), kind, times))
    return InterferogramStack(tuple(ifgs), geom, ref, mask, cfg)


def geometry_to_dict(geom: RadarGeometry):
    return dataclasses.asdict(geom)


def write_stack(stack: InterferogramStack, directory, seed=None, prefix="ifg"):
    directory = Path(directory)
    members = []
    for k, ifg in enumerate(stack):
        name = f"{prefix}_{k + 1}.csv"
        io.write_grid_csv(directory / name, {"b_perp": float(ifg.b_perp), "coherence": float(ifg.coherence),
                                             "kind": ifg.kind.value}, ifg.wrapped_phase)
        members.append(name)
    cfg = stack.configuration
    manifest = {
        "members": members,
        "geometry": geometry_to_dict(stack.geometry),
        "reference_pixel": list(stack.reference_pixel),
        "seed": seed,
        "configuration": None if cfg is None else {"mode": int(cfg.mode), "antenna_baseline": cfg.antenna_baseline,
                                                   "satellite_baseline": cfg.satellite_baseline},
    }
    io.write_json(directory / "manifest.json", manifest)
    return directory / "manifest.json"


def read_stack(manifest_path):
    manifest_path = Path(manifest_path)
    manifest = io.read_json(manifest_path)
    try:
        geom = RadarGeometry(**manifest["geometry"])
        members = manifest["members"]
        ref = tuple(manifest["reference_pixel"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{manifest_path}: invalid manifest ({exc})") from exc
    ifgs, shape = [], None
    for name in members:
        path = manifest_path.parent / name
        header, grid = io.read_grid_csv(path)
        if shape is not None and grid.shape != shape:
            raise FormatError(f"{path}: grid {grid.shape} does not match {shape} of the first member")
        shape = grid.shape
        try:
            ifgs.append(Interferogram(grid, float(header["b_perp"]), float(header["coherence"]),
                                      InterferogramKind(header["kind"]), geom.row_times(grid.shape[0])))
        except (KeyError, ValueError) as exc:
            raise FormatError(f"{path} line 2: {exc}") from exc
    cfg = manifest.get("configuration")
    cfg = None if cfg is None else BaselineConfiguration(cfg["antenna_baseline"], cfg["satellite_baseline"], cfg["mode"])
    try:
        return InterferogramStack(tuple(ifgs), geom, ref, None, cfg)
    except ValueError as exc:
        raise FormatError(f"{manifest_path}: {exc}") from exc
