"""Contact mechanics: hardness -> modulus mapping, Hertz-style force laws,
and the gel surface deformation field.

Conventions: lengths in mm, moduli in Pa, forces in N. The indentation depth
``approach`` is the mutual approach of gel and object; the gel absorbs the
fraction ``gel_share`` of it (compliance split).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, optimize

from .errors import DomainError, SaturationError

MM = 1e-3  # metres per millimetre

# Shore 00 -> Young's modulus mapping constants.
#
# Two steps: (1) an additive offset turning a Shore 00 reading into an
# approximate Shore A equivalent (durometer conversion charts put Shore A 45
# near Shore 00 87, hence offset 42); (2) the Gent (1958) relation between
# Shore A hardness and Young's modulus. Below GENT_KNEE_SHORE_A the Gent
# formula leaves its useful range, so the curve continues as an exponential
# matched in value and log-slope at the knee, which keeps the mapping smooth,
# positive and strictly increasing for all Shore 00 readings in (0, 100).
SHORE_A_OFFSET = 42.0
GENT_KNEE_SHORE_A = 10.0
POISSON_SILICONE = 0.49


@dataclass(frozen=True)
class Shore00:
    """A durometer reading on the Shore 00 scale."""

    value: float

    def __post_init__(self):
        if not (0.0 <= self.value <= 100.0):
            raise DomainError(f"Shore 00 reading {self.value} outside [0, 100]")


@dataclass(frozen=True)
class ElasticBody:
    """Linear-elastic half-space material. ``youngs_modulus = inf`` marks a
    rigid body (zero compliance)."""

    youngs_modulus: float  # Pa
    poisson_ratio: float = POISSON_SILICONE

    def __post_init__(self):
        if math.isnan(self.youngs_modulus) or self.youngs_modulus <= 0.0:
            raise DomainError(f"Young's modulus must be positive, got {self.youngs_modulus}")
        if not (0.0 <= self.poisson_ratio < 0.5):
            raise DomainError(f"Poisson ratio must lie in [0, 0.5), got {self.poisson_ratio}")

    @property
    def compliance(self) -> float:
        """(1 - nu^2) / E in 1/Pa; zero for a rigid body."""
        if math.isinf(self.youngs_modulus):
            return 0.0
        return (1.0 - self.poisson_ratio**2) / self.youngs_modulus

    @classmethod
    def rigid(cls) -> "ElasticBody":
        return cls(math.inf, 0.0)


# --- indenter shapes ---------------------------------------------------------


@dataclass(frozen=True)
class Sphere:
    radius_mm: float

    def __post_init__(self):
        if self.radius_mm <= 0:
            raise DomainError("sphere radius must be positive")


@dataclass(frozen=True)
class Cylinder:
    radius_mm: float
    axis_angle_rad: float = 0.0

    def __post_init__(self):
        if self.radius_mm <= 0:
            raise DomainError("cylinder radius must be positive")


@dataclass(frozen=True)
class Flat:
    pass


@dataclass(frozen=True)
class Edge:
    dihedral_rad: float = math.pi / 2
    tip_rounding_mm: float = 0.5
    axis_angle_rad: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.dihedral_rad < math.pi):
            raise DomainError("edge dihedral must lie in (0, pi)")
        if self.tip_rounding_mm <= 0:
            raise DomainError("tip rounding must be positive")


@dataclass(frozen=True)
class Corner:
    solid_angle_sr: float = math.pi / 2
    tip_rounding_mm: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.solid_angle_sr < 2 * math.pi):
            raise DomainError("corner solid angle must lie in (0, 2*pi)")
        if self.tip_rounding_mm <= 0:
            raise DomainError("tip rounding must be positive")


@dataclass(frozen=True, eq=False)
class HeightField:
    """Rectangular grid of indenter protrusion heights (mm); larger values
    stick out further toward the gel."""

    heights_mm: np.ndarray
    pitch_mm: float

    def __post_init__(self):
        h = np.asarray(self.heights_mm, dtype=float)
        if h.ndim != 2 or not np.all(np.isfinite(h)):
            raise DomainError("height field must be a finite 2-D grid")
        if self.pitch_mm <= 0:
            raise DomainError("height field pitch must be positive")
        object.__setattr__(self, "heights_mm", h)


IndenterShape = Sphere | Cylinder | Flat | Edge | Corner | HeightField


@dataclass(frozen=True)
class GelSpec:
    """Geometry and material of the sensing gel plus camera resolution."""

    hardness: Shore00 = Shore00(17.0)
    thickness_mm: float = 2.4
    sensing_area_mm: tuple[float, float] = (18.4, 13.8)  # (width, height)
    marker_pitch_mm: float = 1.3
    image_resolution_px: tuple[int, int] = (120, 90)  # (width, height)

    @property
    def pixel_pitch_mm(self) -> float:
        px = self.sensing_area_mm[0] / self.image_resolution_px[0]
        py = self.sensing_area_mm[1] / self.image_resolution_px[1]
        if abs(px - py) > 1e-9 * max(px, py):
            raise DomainError("non-square pixels: resolution must divide the sensing area evenly")
        return px

    @property
    def body(self) -> ElasticBody:
        return shore00_to_modulus(self.hardness)


@dataclass(frozen=True)
class ContactState:
    approach_mm: float
    force_n: float
    contact_radius_mm: float
    gel_share: float = 1.0


@dataclass(frozen=True, eq=False)
class HeightMap:
    """Gel surface displacement grid in mm, positive into the gel."""

    grid: np.ndarray
    pitch_mm: float


# --- hardness -> modulus ------------------------------------------------------


def _gent_modulus_mpa(shore_a: float) -> float:
    """Gent relation E(S_A) in MPa."""
    return 0.0981 * (56.0 + 7.62336 * shore_a) / (0.137505 * (254.0 - 2.54 * shore_a))


def _gent_log_slope(shore_a: float) -> float:
    """d/dS log E of the Gent relation."""
    return 7.62336 / (56.0 + 7.62336 * shore_a) + 2.54 / (254.0 - 2.54 * shore_a)


def shore00_to_modulus(hardness: Shore00 | float) -> ElasticBody:
    """Map a Shore 00 reading to an elastic body (Poisson ratio 0.49).

    Strictly increasing on (0, 100); see module docstring for the mapping.
    """
    h = hardness.value if isinstance(hardness, Shore00) else float(hardness)
    if not (0.0 < h < 100.0):
        raise DomainError(f"Shore 00 hardness {h} outside (0, 100)")
    shore_a = h - SHORE_A_OFFSET
    if shore_a >= GENT_KNEE_SHORE_A:
        e_mpa = _gent_modulus_mpa(shore_a)
    else:
        knee = GENT_KNEE_SHORE_A
        e_mpa = _gent_modulus_mpa(knee) * math.exp(_gent_log_slope(knee) * (shore_a - knee))
    return ElasticBody(e_mpa * 1e6, POISSON_SILICONE)


def modulus_to_shore00(youngs_modulus_pa: float) -> float:
    """Numerical inverse of shore00_to_modulus (bisection on the monotone map)."""
    lo, hi = 1e-9, 100.0 - 1e-9
    e_lo = shore00_to_modulus(lo).youngs_modulus
    e_hi = shore00_to_modulus(hi).youngs_modulus
    if not (e_lo <= youngs_modulus_pa <= e_hi):
        raise DomainError(f"modulus {youngs_modulus_pa} Pa outside the mapped range")
    return float(
        optimize.brentq(
            lambda h: math.log(shore00_to_modulus(h).youngs_modulus) - math.log(youngs_modulus_pa),
            lo,
            hi,
            xtol=1e-12,
            rtol=1e-15,
        )
    )


def effective_modulus(gel: ElasticBody, obj: ElasticBody) -> float:
    """Combined contact modulus E*: 1/E* = (1-nu1^2)/E1 + (1-nu2^2)/E2."""
    total = gel.compliance + obj.compliance
    if total <= 0.0:
        raise DomainError("two rigid bodies have no finite contact modulus")
    return 1.0 / total


def gel_share_of(gel: ElasticBody, obj: ElasticBody) -> float:
    """Fraction of the mutual approach absorbed by the gel: k_gel/(k_gel+k_obj)."""
    total = gel.compliance + obj.compliance
    if total <= 0.0:
        raise DomainError("two rigid bodies share no deformation")
    return gel.compliance / total


# --- force laws ---------------------------------------------------------------


def hertz_sphere(
    radius_mm: float,
    e_star_pa: float,
    approach_mm: float,
    gel_share: float = 1.0,
    max_approach_mm: float | None = None,
) -> ContactState:
    """Hertz sphere-on-half-space: F = (4/3) E* sqrt(R) d^(3/2), a = sqrt(R d)."""
    if radius_mm <= 0:
        raise DomainError("radius must be positive")
    if approach_mm < 0:
        raise DomainError("approach must be nonnegative")
    if max_approach_mm is not None and approach_mm > max_approach_mm:
        raise SaturationError(
            f"approach {approach_mm:.3f} mm exceeds the allowed {max_approach_mm:.3f} mm"
        )
    force = (4.0 / 3.0) * e_star_pa * math.sqrt(radius_mm * MM) * (approach_mm * MM) ** 1.5
    radius_contact = math.sqrt(radius_mm * approach_mm)
    return ContactState(approach_mm, force, radius_contact, gel_share)


def hertz_pressure_peak_pa(radius_mm: float, e_star_pa: float, approach_mm: float) -> float:
    """Peak of the Hertz pressure distribution p0 = (2/pi) E* sqrt(d/R)."""
    if approach_mm == 0.0:
        return 0.0
    return (2.0 / math.pi) * e_star_pa * math.sqrt(approach_mm / radius_mm)


def _cylinder_contact_length_mm(axis_angle_rad: float, spec: GelSpec) -> float:
    """Length of the cylinder axis clipped to the sensing rectangle."""
    w, h = spec.sensing_area_mm
    c, s = abs(math.cos(axis_angle_rad)), abs(math.sin(axis_angle_rad))
    half = min(w / (2 * c) if c > 1e-12 else math.inf, h / (2 * s) if s > 1e-12 else math.inf)
    return 2.0 * half


def hertz_cylinder(
    radius_mm: float,
    e_star_pa: float,
    approach_mm: float,
    length_mm: float,
    gel_share: float = 1.0,
) -> ContactState:
    """Line contact: load per unit length P' = (pi/4) E* d, half-width a = sqrt(R d)."""
    if radius_mm <= 0 or length_mm <= 0:
        raise DomainError("radius and length must be positive")
    if approach_mm < 0:
        raise DomainError("approach must be nonnegative")
    per_length = (math.pi / 4.0) * e_star_pa * (approach_mm * MM)
    force = per_length * (length_mm * MM)
    half_width = math.sqrt(radius_mm * approach_mm)
    return ContactState(approach_mm, force, half_width, gel_share)


def _edge_slope(dihedral_rad: float) -> float:
    return 1.0 / math.tan(dihedral_rad / 2.0)


def _corner_slope(solid_angle_sr: float) -> float:
    half_apex = math.acos(1.0 - solid_angle_sr / (2.0 * math.pi))
    return 1.0 / math.tan(half_apex)


def _rounded_extent_mm(slope: float, tip_rounding_mm: float, approach_mm: float) -> float:
    """Contact half-extent of a rounded wedge/cone profile m*(sqrt(d^2+r0^2)-r0)."""
    if approach_mm <= 0.0:
        return 0.0
    if slope <= 1e-9:
        return math.inf
    u = approach_mm / slope
    return math.sqrt(u * (u + 2.0 * tip_rounding_mm))


def contact_for_shape(
    shape: IndenterShape,
    gel: ElasticBody,
    obj: ElasticBody,
    approach_mm: float,
    spec: GelSpec,
) -> ContactState:
    """Dispatching force law; raises SaturationError past the gel thickness."""
    if approach_mm < 0:
        raise DomainError("approach must be nonnegative")
    if approach_mm > spec.thickness_mm:
        raise SaturationError(
            f"approach {approach_mm:.3f} mm exceeds gel thickness {spec.thickness_mm} mm"
        )
    e_star = effective_modulus(gel, obj)
    share = gel_share_of(gel, obj)
    w, h = spec.sensing_area_mm
    max_radius = 0.5 * math.hypot(w, h)

    if isinstance(shape, Sphere):
        state = hertz_sphere(shape.radius_mm, e_star, approach_mm, share)
    elif isinstance(shape, Cylinder):
        length = _cylinder_contact_length_mm(shape.axis_angle_rad, spec)
        state = hertz_cylinder(shape.radius_mm, e_star, approach_mm, length, share)
    elif isinstance(shape, Flat):
        area_m2 = (w * MM) * (h * MM)
        force = e_star * area_m2 * (approach_mm / spec.thickness_mm)
        state = ContactState(approach_mm, force, math.sqrt(w * h / math.pi), share)
    elif isinstance(shape, Edge):
        base = hertz_sphere(shape.tip_rounding_mm, e_star, approach_mm, share)
        extent = _rounded_extent_mm(_edge_slope(shape.dihedral_rad), shape.tip_rounding_mm, approach_mm)
        state = ContactState(approach_mm, base.force_n, min(extent, max_radius), share)
    elif isinstance(shape, Corner):
        base = hertz_sphere(shape.tip_rounding_mm, e_star, approach_mm, share)
        extent = _rounded_extent_mm(_corner_slope(shape.solid_angle_sr), shape.tip_rounding_mm, approach_mm)
        state = ContactState(approach_mm, base.force_n, min(extent, max_radius), share)
    elif isinstance(shape, HeightField):
        depth = np.max(shape.heights_mm) - shape.heights_mm
        pen = np.clip(approach_mm - depth, 0.0, None)
        # Winkler (elastic foundation) pressure: p = E* w / t
        volume_mm3 = float(np.sum(pen)) * shape.pitch_mm**2
        force = e_star * (volume_mm3 / spec.thickness_mm) * 1e-6
        area_mm2 = float(np.count_nonzero(pen)) * shape.pitch_mm**2
        state = ContactState(approach_mm, force, math.sqrt(area_mm2 / math.pi), share)
    else:
        raise DomainError(f"unsupported indenter shape {type(shape).__name__}")

    return ContactState(
        state.approach_mm, state.force_n, min(state.contact_radius_mm, max_radius), share
    )


# --- surface deformation ------------------------------------------------------


def _pixel_grid_mm(spec: GelSpec):
    w, h = spec.sensing_area_mm
    nx, ny = spec.image_resolution_px
    pitch = spec.pixel_pitch_mm
    xs = (np.arange(nx) + 0.5) * pitch - w / 2.0
    ys = (np.arange(ny) + 0.5) * pitch - h / 2.0
    return np.meshgrid(xs, ys)


def _indenter_penetration(
    shape: IndenterShape, approach_mm: float, spec: GelSpec, center_mm: tuple[float, float]
) -> np.ndarray:
    """Total mutual penetration profile (mm, >= 0) on the pixel grid."""
    xg, yg = _pixel_grid_mm(spec)
    dx, dy = xg - center_mm[0], yg - center_mm[1]

    if isinstance(shape, Sphere):
        profile = dx**2 + dy**2
        pen = approach_mm - profile / (2.0 * shape.radius_mm)
    elif isinstance(shape, Cylinder):
        d = -math.sin(shape.axis_angle_rad) * dx + math.cos(shape.axis_angle_rad) * dy
        pen = approach_mm - d**2 / (2.0 * shape.radius_mm)
    elif isinstance(shape, Flat):
        pen = np.full_like(dx, approach_mm)
    elif isinstance(shape, Edge):
        d = -math.sin(shape.axis_angle_rad) * dx + math.cos(shape.axis_angle_rad) * dy
        r0 = shape.tip_rounding_mm
        pen = approach_mm - _edge_slope(shape.dihedral_rad) * (np.hypot(d, r0) - r0)
    elif isinstance(shape, Corner):
        r = np.hypot(dx, dy)
        r0 = shape.tip_rounding_mm
        pen = approach_mm - _corner_slope(shape.solid_angle_sr) * (np.hypot(r, r0) - r0)
    elif isinstance(shape, HeightField):
        hf = shape.heights_mm
        rows = (dy + hf.shape[0] * shape.pitch_mm / 2.0) / shape.pitch_mm - 0.5
        cols = (dx + hf.shape[1] * shape.pitch_mm / 2.0) / shape.pitch_mm - 0.5
        depth_field = np.max(hf) - hf
        # outside the field the indenter recedes entirely
        depth = ndimage.map_coordinates(
            depth_field, [rows, cols], order=1, mode="constant", cval=np.max(depth_field) + 10.0
        )
        pen = approach_mm - depth
    else:
        raise DomainError(f"unsupported indenter shape {type(shape).__name__}")

    return np.clip(pen, 0.0, None)


def gel_surface(
    shape: IndenterShape,
    state: ContactState,
    spec: GelSpec,
    center_mm: tuple[float, float] = (0.0, 0.0),
) -> HeightMap:
    """Gel surface displacement: gel_share times the penetration profile inside
    the contact patch, with a smoothed skirt (kernel width = thickness/2)
    decaying outside it."""
    pen = _indenter_penetration(shape, state.approach_mm, spec, center_mm)
    pitch = spec.pixel_pitch_mm
    sigma_px = (spec.thickness_mm / 2.0) / pitch
    skirt = ndimage.gaussian_filter(pen, sigma=sigma_px, mode="constant")
    total = np.maximum(pen, skirt)
    grid = np.minimum(state.gel_share * total, spec.thickness_mm)
    return HeightMap(grid, pitch)
