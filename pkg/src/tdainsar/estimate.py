"""Joint least-squares inversion of heights, orbit errors and atmospheric delays.

Unknowns are ordered as

    [dBc, dBc_rate, dBn, dBn_rate] + [one offset per interferogram]
        + [one height per pixel] + [one delay per pixel but the reference]

With offsets the reference height is held at zero and drops out of the
height block; without them every pixel has a height column.

and rows are interferogram-major (row = ifg * m + pixel). The height and
delay blocks only couple unknowns of one pixel, so the solver eliminates
those per pixel with a small QR factorisation, solves the orbit block on the
projected system, and back-substitutes. Nothing of size m x m is ever formed.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import RankDeficientError
from .geometry import InterferogramKind, coherence_to_phase_std, height_sensitivity, phase_to_height
from .scene import HeightField
from .simulate import InterferogramStack, OrbitErrorParams, orbit_columns, scene_states

ORBIT_LABELS = ("delta_bc", "delta_bc_rate", "delta_bn", "delta_bn_rate")
_MIN_PHASE_STD = 1e-6
_RANK_TOL = 1e-10


@dataclass(frozen=True)
class JointModel:
    matrix: sparse.csr_matrix
    observations: np.ndarray
    weights: np.ndarray
    shape: tuple
    pixels: np.ndarray
    reference_pixel: tuple
    reference_index: int
    height_coefficients: np.ndarray
    orbit_coefficients: np.ndarray | None
    delay_rows: np.ndarray | None
    offsets: bool = False
    geometry: object = None
    zero_columns: tuple = ()

    @property
    def n_interferograms(self):
        return len(self.height_coefficients)

    @property
    def n_pixels(self):
        return len(self.pixels)

    @property
    def n_orbit(self):
        return 0 if self.orbit_coefficients is None else 4

    @property
    def n_offsets(self):
        return self.n_interferograms if self.offsets else 0

    @property
    def n_global(self):
        return self.n_orbit + self.n_offsets

    @property
    def height_pixels(self):
        """Indices (into ``pixels``) that carry a height column."""
        idx = np.arange(self.n_pixels)
        return np.delete(idx, self.reference_index) if self.offsets else idx

    @property
    def delay_pixels(self):
        return np.delete(np.arange(self.n_pixels), self.reference_index)

    @property
    def column_labels(self):
        labels = list(ORBIT_LABELS[:self.n_orbit])
        labels += [f"offset[{e}]" for e in range(self.n_offsets)]
        labels += [f"height[{self.pixels[i]}]" for i in self.height_pixels]
        if self.delay_rows is not None:
            labels += [f"delay[{self.pixels[i]}]" for i in self.delay_pixels]
        return labels

    @property
    def rank_deficient(self):
        return bool(self.zero_columns)


@dataclass(frozen=True)
class EstimateResult:
    heights: HeightField
    orbit: OrbitErrorParams
    delays: np.ndarray | None
    residual_rms: float
    posterior_height_std: np.ndarray
    condition_indicator: float
    orbit_std: np.ndarray | None = None
    offsets: np.ndarray | None = None

    def __post_init__(self):
        if self.residual_rms < 0:
            raise ValueError("residual_rms must be non-negative")


def _fields(unwrapped):
    return list(getattr(unwrapped, "fields", unwrapped))


def build_joint_model(stack: InterferogramStack, unwrapped, *, orbit=True, delays=None, offsets=True,
                      monostatic_factor=None, states=None):
    """Assemble the weighted joint model from unwrapped interferograms.

    ``delays`` defaults to True when the stack holds mono-static pairs; a
    delay column then enters those rows for every pixel except the
    reference. ``offsets`` adds one constant per interferogram, which takes
    up the noise of the reference pixel that referencing spreads over the
    whole field; the reference height is then fixed at zero instead of
    being a column. ``monostatic_factor`` overrides the orbit multiplier of
    the mono-static rows (2 by default). ``states`` optionally replaces the
    per-interferogram ``SatelliteState`` used for the orbit partials.
    """
    fields = _fields(unwrapped)
    if len(fields) != len(stack):
        raise ValueError(f"got {len(fields)} unwrapped fields for {len(stack)} interferograms")
    geom = stack.geometry
    ref = tuple(stack.reference_pixel)
    mask = fields[0].mask
    for k, f in enumerate(fields):
        if tuple(f.reference_pixel) != ref:
            raise ValueError(f"unwrapped field {k} uses reference {f.reference_pixel}, expected {ref}")
        if not np.array_equal(f.mask, mask):
            raise ValueError(f"unwrapped field {k} has an inconsistent mask")
    if not mask[ref]:
        raise ValueError("reference pixel is masked out")

    pixels = np.flatnonzero(mask)
    ref_index = int(np.searchsorted(pixels, np.ravel_multi_index(ref, mask.shape)))
    m, n_ifg = len(pixels), len(stack)
    kinds = stack.kinds
    mono = np.array([k is InterferogramKind.MONOSTATIC for k in kinds])
    if delays is None:
        delays = bool(mono.any())
    delay_rows = mono.copy() if delays and mono.any() else None

    obs = np.empty((n_ifg, m))
    for e, f in enumerate(fields):
        obs[e] = (f.phase - f.phase[ref]).ravel()[pixels]
    k_height = np.array([float(height_sensitivity(geom, b)) for b in stack.baselines])
    sigma = np.array([max(coherence_to_phase_std(ifg.coherence), _MIN_PHASE_STD) for ifg in stack])
    weights = np.repeat(1.0 / sigma ** 2, m)

    orbit_coeff = None
    if orbit:
        orbit_coeff = np.zeros((n_ifg, m, 4))
        for e, (ifg, kind) in enumerate(zip(stack, kinds)):
            factor = kind.orbit_factor
            if kind is InterferogramKind.MONOSTATIC and monostatic_factor is not None:
                factor = monostatic_factor
            if not factor:
                continue
            state = scene_states(geom, stack.shape, ifg.b_perp) if states is None else states[e]
            cols = orbit_columns(geom, state, factor).reshape(-1, 4)
            orbit_coeff[e] = cols[pixels] - cols[pixels[ref_index]]

    model = JointModel(None, obs.ravel(), weights, mask.shape, pixels, ref, ref_index, k_height, orbit_coeff,
                       delay_rows, bool(offsets), geom)
    rows, cols, vals = [], [], []
    base = np.arange(m)
    h_pix, d_pix = model.height_pixels, model.delay_pixels
    h0 = model.n_global
    d0 = h0 + len(h_pix)
    for e in range(n_ifg):
        r = e * m + base
        for j in range(model.n_orbit):
            rows.append(r)
            cols.append(np.full(m, j))
            vals.append(orbit_coeff[e, :, j])
        if offsets:
            rows.append(r)
            cols.append(np.full(m, model.n_orbit + e))
            vals.append(np.ones(m))
        rows.append(e * m + h_pix)
        cols.append(h0 + np.arange(len(h_pix)))
        vals.append(np.full(len(h_pix), k_height[e]))
        if delay_rows is not None and delay_rows[e]:
            rows.append(e * m + d_pix)
            cols.append(d0 + np.arange(len(d_pix)))
            vals.append(np.ones(len(d_pix)))
    n_cols = d0 + (0 if delay_rows is None else len(d_pix))
    matrix = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                               shape=(n_ifg * m, n_cols))
    zero = ()
    if orbit_coeff is not None:
        norms = np.sqrt((orbit_coeff ** 2).sum(axis=(0, 1)))
        zero = tuple(ORBIT_LABELS[j] for j in range(4) if norms[j] == 0)
    return dataclasses.replace(model, matrix=matrix, zero_columns=zero)


def _global_labels(model):
    return list(ORBIT_LABELS[:model.n_orbit]) + [f"offset[{e}]" for e in range(model.n_offsets)]


def _null_direction_message(vector, labels):
    return " ".join(f"{v:+.3f}*{name}" for v, name in zip(vector, labels) if abs(v) > 1e-3)


def solve_joint(model: JointModel):
    """Weighted least squares by per-pixel QR elimination and an SVD of the global block.

    Per pixel, the local columns (height, delay) are projected out with a
    QR factorisation; the stacked projections of the global columns (orbit,
    offsets) are solved by SVD, which also supplies the condition indicator
    as the ratio of extreme singular values of the column-normalised block.
    Local unknowns are recovered by back-substitution.
    """
    n_ifg, m = model.n_interferograms, model.n_pixels
    sw = np.sqrt(model.weights.reshape(n_ifg, m)[:, 0])
    y = model.observations.reshape(n_ifg, m) * sw[:, None]
    if model.zero_columns:
        name = model.zero_columns[0]
        hint = " (constant azimuth time)" if name.endswith("rate") else ""
        raise RankDeficientError(f"orbit column {name} is identically zero{hint}: parameter not estimable", name)

    n_g = model.n_global
    a = np.zeros((n_ifg, m, n_g))
    if model.n_orbit:
        a[:, :, :4] = model.orbit_coefficients
    for e in range(model.n_offsets):
        a[e, :, model.n_orbit + e] = 1.0
    a *= sw[:, None, None]

    has_delay = model.delay_rows is not None
    groups = []
    for is_ref in (False, True):
        idx = np.array([model.reference_index]) if is_ref else np.delete(np.arange(m), model.reference_index)
        if idx.size == 0:
            continue
        cols = []
        if not (is_ref and model.offsets):
            cols.append(model.height_coefficients)
        if has_delay and not is_ref:
            cols.append(model.delay_rows.astype(float))
        local = np.stack(cols, axis=1) * sw[:, None] if cols else np.zeros((n_ifg, 0))
        q, r = np.linalg.qr(local, mode="complete")
        n_loc = local.shape[1]
        lcond = 1.0
        if n_loc:
            s = np.linalg.svd(local, compute_uv=False)
            if s.size < n_loc or s[-1] <= _RANK_TOL * s[0]:
                raise RankDeficientError("height and delay columns are indistinguishable: the delay-free rows "
                                         "do not constrain the height", "height-delay")
            lcond = s[0] / s[-1]
        groups.append((idx, q[:, :n_loc], q[:, n_loc:], r[:n_loc], lcond))

    cond = max(g[4] for g in groups)
    g_hat = np.zeros(n_g)
    cov_g = np.zeros((n_g, n_g))
    if n_g:
        blocks, rhs = [], []
        for idx, q1, q2, r, _ in groups:
            blocks.append(np.einsum("ek,epj->kpj", q2, a[:, idx, :]).reshape(-1, n_g))
            rhs.append((q2.T @ y[:, idx]).ravel())
        gmat, z = np.concatenate(blocks), np.concatenate(rhs)
        scale = np.linalg.norm(gmat, axis=0)
        if np.any(scale == 0):
            name = _global_labels(model)[int(np.argmin(scale))]
            raise RankDeficientError(f"{name} has no support once heights are eliminated", name)
        if gmat.shape[0] < n_g:
            raise RankDeficientError(f"{n_g} global parameters but only {gmat.shape[0]} independent observations",
                                     "global")
        u, s, vt = np.linalg.svd(gmat / scale, full_matrices=False)
        if s[-1] <= _RANK_TOL * s[0]:
            direction = vt[-1] / scale
            direction /= np.abs(direction).max()
            raise RankDeficientError("global parameters indistinguishable along "
                                     + _null_direction_message(direction, _global_labels(model)), direction)
        cond = max(cond, s[0] / s[-1])
        g_hat = (vt.T @ ((u.T @ z) / s)) / scale
        vs = vt.T / s
        cov_g = (vs @ vs.T) / np.outer(scale, scale)

    local_est = np.zeros((2, m))
    resid = np.zeros_like(y)
    var_h_unit = np.zeros(m)
    for idx, q1, q2, r, _ in groups:
        yy = y[:, idx] - np.einsum("epj,j->ep", a[:, idx, :], g_hat)
        n_loc = r.shape[0]
        if n_loc:
            est = np.linalg.solve(r, q1.T @ yy)
            local_est[:n_loc, idx] = est
            resid[:, idx] = yy - (q1 @ r) @ est
            rinv = np.linalg.inv(r)
            h_map = np.einsum("k,ke,epj->pj", rinv[0], q1.T, a[:, idx, :])
            var_h_unit[idx] = (rinv @ rinv.T)[0, 0] + np.einsum("pj,jk,pk->p", h_map, cov_g, h_map)
        else:
            resid[:, idx] = yy

    n_obs, n_unknown = model.matrix.shape
    dof = n_obs - n_unknown
    sigma0_sq = float((resid ** 2).sum() / dof) if dof > 0 else 1.0
    residual_rms = float(np.sqrt(np.mean((resid / sw[:, None]) ** 2)))

    ref_index = model.reference_index
    local_est[:, ref_index] = 0.0
    var_h_unit[ref_index] = 0.0
    heights = np.full(model.shape, np.nan)
    heights.ravel()[model.pixels] = local_est[0]
    std = np.full(model.shape, np.nan)
    std.ravel()[model.pixels] = np.sqrt(sigma0_sq * var_h_unit)
    delays = None
    if has_delay:
        delays = np.full(model.shape, np.nan)
        delays.ravel()[model.pixels] = local_est[1]
    g_std = np.sqrt(sigma0_sq * np.diag(cov_g))
    orbit = OrbitErrorParams.from_array(g_hat[:4]) if model.n_orbit else OrbitErrorParams()
    orbit_std = g_std[:4] if model.n_orbit else None
    offsets = g_hat[model.n_orbit:] if model.n_offsets else None
    return EstimateResult(HeightField(heights), orbit, delays, residual_rms, std, float(cond), orbit_std, offsets)


def solution_vector(model: JointModel, result: EstimateResult):
    """Unknowns of ``result`` in the column order of ``model.matrix``."""
    x = [result.orbit.as_array()] if model.n_orbit else []
    if model.n_offsets:
        x.append(np.asarray(result.offsets, dtype=float))
    h = result.heights.heights.ravel()[model.pixels]
    x.append(h[model.height_pixels])
    if model.delay_rows is not None:
        x.append(result.delays.ravel()[model.pixels][model.delay_pixels])
    return np.concatenate(x)


def residuals(model: JointModel, result: EstimateResult):
    """Unweighted residual vector in model row order."""
    return model.observations - model.matrix @ solution_vector(model, result)


def estimate_heights_only(stack: InterferogramStack, unwrapped):
    """Heights from the longest-baseline unwrapped phase with no error modelling."""
    fields = _fields(unwrapped)
    geom, ref = stack.geometry, tuple(stack.reference_pixel)
    lbi, b = fields[-1], stack.baselines[-1]
    h = phase_to_height(geom, b, lbi.phase - lbi.phase[ref])
    sigma = coherence_to_phase_std(stack[-1].coherence)
    std = np.where(np.isfinite(h), abs(float(phase_to_height(geom, b, sigma))), np.nan)
    std[ref] = 0.0
    return EstimateResult(HeightField(h), OrbitErrorParams(), None, 0.0, std, 1.0, None)
