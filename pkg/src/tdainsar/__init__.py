"""Tandem dual-antenna SAR interferometry: simulation, unwrapping, baseline design and height inversion."""
from .errors import (ApproximationWarning, DegenerateBaselineError, DegenerateGeometryError, FormatError,
                     PhaseContinuityWarning, RankDeficientError, TdaError, UnwrapError)
from .geometry import (BaselineConfiguration, BaselineSet, InterferogramKind, Mode, RadarGeometry,
                       effective_baselines, equivalent_baselines, height_ambiguity, phase_to_height, wrap)
from .scene import HeightField
from .simulate import Interferogram, InterferogramStack, OrbitErrorParams, simulate_stack
from .unwrap import asymptotic_unwrap
from .estimate import build_joint_model, estimate_heights_only, solve_joint
from .design import DesignSettings, optimize

__version__ = "0.1.0"
