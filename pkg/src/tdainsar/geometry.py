"""Imaging geometry, phase/height conversion and baseline bookkeeping.

Conventions
-----------
* Phases are in radians and wrapped to the principal interval (-pi, pi],
  +pi being kept on the boundary.
* Rows are azimuth, columns are slant range. Column 0 is near range and sits
  at ``RadarGeometry.slant_range``.
* Perpendicular baselines are positive lengths in metres.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ApproximationWarning, DegenerateBaselineError

SPEED_OF_LIGHT = 299792458.0
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class RadarGeometry:
    wavelength: float
    slant_range: float
    incidence: float
    range_spacing: float = 0.93
    azimuth_spacing: float = 2.0
    azimuth_time_step: float = 2.0 / 7600.0

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if not self.slant_range > 0:
            raise ValueError("slant_range must be positive")
        if not 0 < self.incidence < np.pi / 2:
            raise ValueError("incidence must lie in (0, pi/2)")
        for name in ("range_spacing", "azimuth_spacing", "azimuth_time_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_frequency(cls, frequency_hz, slant_range, incidence_deg, **kw):
        return cls(SPEED_OF_LIGHT / frequency_hz, slant_range, math.radians(incidence_deg), **kw)

    @classmethod
    def default(cls, **kw):
        """X-band spaceborne defaults: 9.6 GHz, 608015 m, 30 deg."""
        return cls.from_frequency(9.6e9, 608015.0, 30.0, **kw)

    @property
    def sensitivity_scale(self):
        """lambda * R * sin(theta), the numerator shared by every height formula."""
        return self.wavelength * self.slant_range * math.sin(self.incidence)

    def column_ranges(self, cols):
        return self.slant_range + np.arange(cols) * self.range_spacing

    def column_look_angles(self, cols):
        # flat earth: the platform altitude is fixed by the near-range look angle
        altitude = self.slant_range * math.cos(self.incidence)
        return np.arccos(altitude / self.column_ranges(cols))

    def row_times(self, rows):
        # centred on the middle row so offset and rate columns decorrelate
        return (np.arange(rows) - (rows - 1) / 2.0) * self.azimuth_time_step


class Mode(enum.IntEnum):
    CONFIG1 = 1
    CONFIG2 = 2
    CONFIG3 = 3
    CONFIG4 = 4

    @property
    def monostatic(self):
        return self is Mode.CONFIG4


class InterferogramKind(str, enum.Enum):
    DUAL_ANTENNA = "dual_antenna"
    BISTATIC = "dual_satellite_bistatic"
    MONOSTATIC = "dual_satellite_monostatic"

    @property
    def orbit_factor(self):
        """Multiplier of the orbit phase; the single-platform pair sees none."""
        return {"dual_antenna": 0, "dual_satellite_bistatic": 1, "dual_satellite_monostatic": 2}[self.value]


_KINDS = {
    Mode.CONFIG1: (InterferogramKind.DUAL_ANTENNA, InterferogramKind.BISTATIC, InterferogramKind.BISTATIC),
    Mode.CONFIG2: (InterferogramKind.BISTATIC,) * 3,
    Mode.CONFIG3: (InterferogramKind.BISTATIC,) * 3,
    Mode.CONFIG4: (InterferogramKind.DUAL_ANTENNA, InterferogramKind.MONOSTATIC, InterferogramKind.MONOSTATIC),
}


@dataclass(frozen=True)
class BaselineConfiguration:
    antenna_baseline: float
    satellite_baseline: float
    mode: Mode = Mode.CONFIG2

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not self.antenna_baseline > 0 or not self.satellite_baseline > 0:
            raise ValueError("antenna and satellite baselines must be positive")

    @property
    def monostatic(self):
        return self.mode.monostatic

    @property
    def kinds(self):
        """Interferogram kind of each equivalent baseline, ascending."""
        return _KINDS[self.mode]


@dataclass(frozen=True)
class Combination:
    """``sign * (physical[minuend] - multiplier * physical[subtrahend])``.

    A plain physical member has ``subtrahend=None`` and ``multiplier=0``.
    """
    minuend: int
    subtrahend: int | None = None
    multiplier: int = 0
    sign: int = 1

    @property
    def is_physical(self):
        return self.subtrahend is None

    def value(self, physical):
        out = physical[self.minuend]
        if self.subtrahend is not None:
            out = out - self.multiplier * physical[self.subtrahend]
        return self.sign * out

    def combine(self, phases):
        """Apply the same integer combination to per-interferogram phases."""
        return self.value(phases)

    def variance(self, physical_variances):
        var = physical_variances[self.minuend]
        if self.subtrahend is not None:
            var = var + self.multiplier ** 2 * physical_variances[self.subtrahend]
        return var


@dataclass(frozen=True)
class BaselineSet:
    physical: tuple
    effective: tuple
    combination_map: tuple = field(default=())

    def __post_init__(self):
        phys = np.asarray(self.physical, dtype=float)
        if phys.size == 0 or np.any(phys <= 0) or np.any(np.diff(phys) <= 0):
            raise ValueError("physical baselines must be positive and strictly ascending")
        if np.any(np.diff(self.effective) <= 0):
            raise ValueError("effective baselines must be strictly ascending")
        if self.effective[-1] != self.physical[-1]:
            raise ValueError("longest effective baseline must equal the longest physical one")
        if len(self.combination_map) != len(self.effective):
            raise ValueError("combination_map must have one entry per effective baseline")
        for b, comb in zip(self.effective, self.combination_map):
            if not math.isclose(comb.value(self.physical), b, rel_tol=1e-12, abs_tol=1e-12):
                raise ValueError(f"combination {comb} does not reproduce {b}")

    @classmethod
    def from_physical(cls, physical):
        physical = tuple(float(b) for b in physical)
        return cls(physical, physical, tuple(Combination(i) for i in range(len(physical))))

    @property
    def shortest(self):
        return self.effective[0]

    @property
    def longest(self):
        return self.effective[-1]

    def __len__(self):
        return len(self.effective)

    def chain_variances(self, physical_variances):
        """Phase variance of every chain element given per-physical variances."""
        pv = np.broadcast_to(np.asarray(physical_variances, dtype=float), (len(self.physical),))
        return np.array([c.variance(pv) for c in self.combination_map])


def wrap(phase):
    """Wrap to (-pi, pi]. Values already inside the interval are returned untouched."""
    x = np.asarray(phase, dtype=float)
    inside = (x > -np.pi) & (x <= np.pi)
    out = x - TWO_PI * np.ceil((x - np.pi) / TWO_PI)
    out = np.where(out <= -np.pi, out + TWO_PI, out)
    out = np.where(out > np.pi, out - TWO_PI, out)
    out = np.where(inside, x, out)
    return out if out.ndim else float(out)


def height_sensitivity(geom: RadarGeometry, b_perp):
    """Interferometric phase per metre of height, 4 pi B / (lambda R sin theta)."""
    return 4.0 * np.pi * np.asarray(b_perp, dtype=float) / geom.sensitivity_scale


def phase_to_height(geom: RadarGeometry, b_perp, phase):
    b_perp = np.asarray(b_perp, dtype=float)
    if np.any(b_perp == 0):
        raise DegenerateBaselineError("degenerate baseline: perpendicular baseline is zero")
    return np.asarray(phase, dtype=float) * geom.sensitivity_scale / (4.0 * np.pi * b_perp)


def height_to_phase(geom: RadarGeometry, b_perp, height):
    return height_sensitivity(geom, b_perp) * np.asarray(height, dtype=float)


def height_ambiguity(geom: RadarGeometry, b1):
    if not np.all(np.asarray(b1) > 0):
        raise DegenerateBaselineError("height ambiguity needs a positive baseline")
    return geom.sensitivity_scale / (2.0 * np.asarray(b1, dtype=float))


def coherence_to_phase_std(gamma):
    """Gaussian approximation of the interferometric phase std for a point target."""
    g = np.asarray(gamma, dtype=float)
    if np.any(~(g > 0)) or np.any(g > 1):
        raise ValueError("coherence must lie in (0, 1]")
    if np.any(g < 0.9):
        warnings.warn("coherence below 0.9: Gaussian phase approximation is loose",
                      ApproximationWarning, stacklevel=2)
    out = np.sqrt((1.0 - g ** 2) / (2.0 * g ** 2))
    return out if out.ndim else float(out)


def equivalent_baselines(cfg: BaselineConfiguration):
    l1, l2 = float(cfg.antenna_baseline), float(cfg.satellite_baseline)
    table = {
        Mode.CONFIG1: (l1 / 2, l2 / 2, l2 + l1),
        Mode.CONFIG2: (l2 / 2, l2 / 2 + l1, l2 + l1),
        Mode.CONFIG3: (l1 + l2 / 2, l2 + l1 / 2, l2 + l1),
        Mode.CONFIG4: (l1 / 2, l2 + l1 / 2, l2 + l1),
    }
    return list(table[cfg.mode])


def simplified_baselines(cfg: BaselineConfiguration):
    """Three-channel bi-static system: one transmitter pair, two long receivers.

    Only two interferograms exist, [L2/2 + L1, L2 + L1]; their difference
    supplies the short pseudo baseline.
    """
    l1, l2 = float(cfg.antenna_baseline), float(cfg.satellite_baseline)
    return [l2 / 2 + l1, l2 + l1]


def effective_baselines(physical, max_int=5):
    """Shortest usable chain built from integer combinations of ``physical``.

    Pseudo baselines are ``|B_j - i * B_1|`` for the longer members ``B_j``
    against the shortest physical ``B_1`` with ``1 <= i <= max_int``. The
    shortest candidate opens the chain; ties go to the smaller noise
    inflation (``1 + i**2``) and to physical members over combinations.
    The remaining chain is every physical baseline longer than it.
    """
    phys = [float(b) for b in physical]
    if not phys:
        raise ValueError("effective_baselines needs at least one physical baseline")
    if any(b <= 0 for b in phys) or any(b2 <= b1 for b1, b2 in zip(phys, phys[1:])):
        raise ValueError("physical baselines must be positive and strictly ascending")
    if max_int < 0:
        raise ValueError("max_int must be non-negative")

    tol = 1e-9 * phys[-1]
    best, best_key = Combination(0), (phys[0], 1)
    for j in range(1, len(phys)):
        for i in range(1, int(max_int) + 1):
            diff = phys[j] - i * phys[0]
            length = abs(diff)
            if length <= tol:
                continue
            key = (length, 1 + i * i)
            if length < best_key[0] - tol or (abs(length - best_key[0]) <= tol and key[1] < best_key[1]):
                best, best_key = Combination(j, 0, i, 1 if diff > 0 else -1), key
    b1 = best.value(phys)
    chain = [b1]
    cmap = [best]
    for idx, b in enumerate(phys):
        if b > b1 + tol:
            chain.append(b)
            cmap.append(Combination(idx))
    return BaselineSet(tuple(phys), tuple(chain), tuple(cmap))


@dataclass(frozen=True)
class HelixFormation:
    horizontal_amplitude: float
    vertical_amplitude: float
    vertical_phase_offset: float = 0.0

    def __post_init__(self):
        if self.horizontal_amplitude < 0 or self.vertical_amplitude < 0:
            raise ValueError("helix amplitudes must be non-negative")


def helix_perpendicular_baseline(formation: HelixFormation, arg_of_latitude, geom: RadarGeometry):
    u = np.asarray(arg_of_latitude, dtype=float)
    cross = formation.horizontal_amplitude * np.cos(u)
    radial = formation.vertical_amplitude * np.sin(u + formation.vertical_phase_offset)
    return cross * math.cos(geom.incidence) + radial * math.sin(geom.incidence)
