"""Discrete marginals and the geometric scenarios they live on.

Measures are weighted point clouds in R^(n+1).  Layered target spaces are
unions of affine pieces (offset + orthonormal basis + unit normal) carrying
an ordered partition.  All generated measures are mass-exact: weights are
constructed, not sampled.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import ConfigurationError, DataError, UnsupportedShapeError

WEIGHT_TOL = 1e-12
DISTINCT_TOL = 1e-12


def _readonly(a):
    arr = np.array(a, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Layer:
    """One affine piece of a layered space.

    offset is the separating coordinate (e.g. the last-coordinate value of
    the piece), anchor a point on the piece, basis an orthonormal set of
    tangent vectors (rows), normal the unit normal, index the 1-based
    ordinal in the partition.
    """

    offset: float
    anchor: np.ndarray
    basis: np.ndarray
    normal: np.ndarray
    index: int

    def __post_init__(self):
        object.__setattr__(self, "anchor", _readonly(self.anchor))
        object.__setattr__(self, "basis", _readonly(np.atleast_2d(self.basis)))
        object.__setattr__(self, "normal", _readonly(self.normal))
        if abs(np.linalg.norm(self.normal) - 1.0) > 1e-12:
            raise DataError(f"layer {self.index}: normal is not unit length")
        if self.basis.shape[0] > 0:
            gram = self.basis @ self.basis.T
            if not np.allclose(gram, np.eye(self.basis.shape[0]), atol=1e-12):
                raise DataError(f"layer {self.index}: basis is not orthonormal")
            if np.max(np.abs(self.basis @ self.normal)) > 1e-12:
                raise DataError(f"layer {self.index}: normal not orthogonal to basis")


@dataclass(frozen=True)
class LayeredSpace:
    """Ordered union of affine pieces; partition_order fixes the Borel order."""

    layers: tuple
    partition_order: tuple = ()
    source_layer: Optional[Layer] = None

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not self.partition_order:
            object.__setattr__(self, "partition_order", tuple(l.index for l in layers))
        offsets = [l.offset for l in layers]
        for a in range(len(offsets)):
            for b in range(a + 1, len(offsets)):
                if abs(offsets[a] - offsets[b]) <= DISTINCT_TOL:
                    raise DataError("layer offsets must be pairwise distinct")
        if sorted(self.partition_order) != sorted(l.index for l in layers):
            raise DataError("partition_order must permute the layer indices")

    @property
    def num_layers(self):
        return len(self.layers)

    def layer(self, index):
        for l in self.layers:
            if l.index == index:
                return l
        raise DataError(f"no layer with index {index}")


class DiscreteMeasure:
    """Weighted point cloud; optionally tagged with layer indices and atom flags."""

    def __init__(self, points, weights, layer_tag=None, atom_mask=None):
        self.points = _readonly(np.atleast_2d(points))
        self.weights = _readonly(weights)
        if self.points.shape[0] != self.weights.shape[0]:
            raise DataError("points/weights length mismatch")
        if not np.all(np.isfinite(self.points)):
            raise DataError("points contain non-finite entries")
        if np.any(self.weights < -0.0) or np.any(self.weights < 0):
            raise DataError("weights must be nonnegative")
        if abs(float(self.weights.sum()) - 1.0) > WEIGHT_TOL:
            raise DataError(f"weights sum to {self.weights.sum()!r}, not 1")
        if layer_tag is not None:
            tags = np.array(layer_tag, dtype=int)
            tags.flags.writeable = False
            if tags.shape[0] != self.size:
                raise DataError("layer_tag length mismatch")
            self.layer_tag = tags
        else:
            self.layer_tag = None
        if atom_mask is not None:
            mask = np.array(atom_mask, dtype=bool)
            mask.flags.writeable = False
            self.atom_mask = mask
        else:
            self.atom_mask = None
        self._check_distinct()

    def _check_distinct(self):
        seen = {}
        for i, p in enumerate(self.points):
            key = tuple(np.round(p / (10 * DISTINCT_TOL)).astype(np.int64))
            if key in seen:
                j = seen[key]
                if np.max(np.abs(self.points[j] - p)) <= DISTINCT_TOL:
                    raise DataError(f"points {j} and {i} coincide")
            seen[key] = i

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def per_layer_mass(self):
        """Total weight per layer index; requires layer tags."""
        if self.layer_tag is None:
            raise DataError("measure has no layer tags")
        out = {}
        for tag in np.unique(self.layer_tag):
            out[int(tag)] = float(self.weights[self.layer_tag == tag].sum())
        return out

    def is_atom(self, i):
        return bool(self.atom_mask[i]) if self.atom_mask is not None else False

    def __repr__(self):
        return f"DiscreteMeasure(size={self.size}, dim={self.dim})"


@dataclass(frozen=True)
class MixedMeasureSpec:
    """Volume density + surface density + interior mass split s = mu(X \\ X0)."""

    s: float
    interior_density: Optional[Callable] = None
    boundary_density: Optional[Callable] = None

    def __post_init__(self):
        if not (0.0 <= self.s <= 1.0):
            raise ConfigurationError(f"split s={self.s} outside [0, 1]")


@dataclass(frozen=True)
class CurveChart:
    """Discretized 1-d manifold chart: nodes with unit tangents and normals."""

    positions: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    closed: bool
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "positions", _readonly(self.positions))
        object.__setattr__(self, "tangents", _readonly(self.tangents))
        object.__setattr__(self, "normals", _readonly(self.normals))

    @property
    def size(self):
        return self.positions.shape[0]


def circle_chart(nodes, radius=1.0, center=(0.0, 0.0)):
    """Equal-angle chart of a circle; normals point outward."""
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    center = np.asarray(center, dtype=float)
    normals = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    positions = center + radius * normals
    tangents = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
    return CurveChart(positions, tangents, normals, closed=True, name="circle")


def ellipse_chart(nodes, a=1.0, b=0.8, center=(0.0, 0.0)):
    """Equal-parameter chart of an axis-aligned ellipse (strictly convex)."""
    if a <= 0 or b <= 0:
        raise UnsupportedShapeError("ellipse axes must be positive")
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    center = np.asarray(center, dtype=float)
    positions = center + np.stack([a * np.cos(theta), b * np.sin(theta)], axis=1)
    grad = np.stack([np.cos(theta) / a, np.sin(theta) / b], axis=1)
    normals = grad / np.linalg.norm(grad, axis=1, keepdims=True)
    tang = np.stack([-a * np.sin(theta), b * np.cos(theta)], axis=1)
    tangents = tang / np.linalg.norm(tang, axis=1, keepdims=True)
    return CurveChart(positions, tangents, normals, closed=True, name="ellipse")


def segment_chart(p0, p1, nodes):
    """Open segment chart; the 2-d normal is the left-hand perpendicular."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    ts = np.linspace(0.0, 1.0, nodes)
    positions = p0[None, :] + ts[:, None] * (p1 - p0)[None, :]
    d = (p1 - p0) / np.linalg.norm(p1 - p0)
    tangents = np.tile(d, (nodes, 1))
    if p0.shape[0] != 2:
        raise UnsupportedShapeError("segment_chart normals only defined in 2-d")
    normal = np.array([-d[1], d[0]])
    normals = np.tile(normal, (nodes, 1))
    return CurveChart(positions, tangents, normals, closed=False, name="segment")


# ---------------------------------------------------------------------------
# scenario generators
# ---------------------------------------------------------------------------


def _cell_centers(grid, n):
    """Cell centers of the uniform grid on [0,1]^n, shape (grid^n, n)."""
    axis = (np.arange(grid) + 0.5) / grid
    if n == 1:
        return axis[:, None]
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _validate_simplex(t, K):
    t = np.asarray(t, dtype=float)
    if t.shape != (K,):
        raise ConfigurationError(f"weight vector must have {K} entries, got shape {t.shape}")
    if np.any(t < 0):
        raise ConfigurationError("layer weights must be nonnegative")
    if abs(float(t.sum()) - 1.0) > WEIGHT_TOL:
        raise ConfigurationError(f"layer weights sum to {t.sum()!r}, not 1")
    return t


def _perturbed_cell_weights(count, seed, perturb):
    """Uniform cell masses, optionally perturbed multiplicatively and renormalized."""
    w = np.full(count, 1.0 / count)
    if perturb:
        rng = np.random.default_rng(seed)
        w = w * (1.0 + perturb * rng.uniform(-1.0, 1.0, size=count))
        w = w / w.sum()
    return w


def make_layered_scenario(K, n, grid, seed=0, t=None, perturb=0.0,
                          offsets=None, layer1_atomic=False, x_offset=0.0):
    """Source on a flat horizontal piece, target on K stacked parallel pieces.

    The source discretizes an absolutely continuous density on [0,1]^n x
    {x_offset} by uniform cells; target layer k reuses the same horizontal
    cell grid at height offsets[k-1] and carries total mass t[k-1] exactly.
    Both sides share the same (optionally perturbed) density pattern, so the
    discretization is compatible with the continuum hypotheses: every layer
    with k >= 2 is absolutely continuous, and only layer 1 may be atomic.

    Returns (source, target, space).
    """
    if K < 1:
        raise ConfigurationError("K must be >= 1")
    if grid < 2:
        raise ConfigurationError("grid must be >= 2")
    t = _validate_simplex(np.full(K, 1.0 / K) if t is None else t, K)
    if offsets is None:
        offsets = [float(k) for k in range(1, K + 1)]
    offsets = [float(o) for o in offsets]
    if len(offsets) != K:
        raise ConfigurationError("offsets must have one entry per layer")

    centers = _cell_centers(grid, n)
    m = centers.shape[0]
    base_w = _perturbed_cell_weights(m, seed, perturb)

    src_pts = np.hstack([centers, np.full((m, 1), x_offset)])
    source = DiscreteMeasure(src_pts, base_w)

    tgt_pts, tgt_w, tags, atoms = [], [], [], []
    for k in range(1, K + 1):
        if k == 1 and layer1_atomic:
            atom = np.concatenate([np.full(n, 0.5), [offsets[0]]])
            tgt_pts.append(atom[None, :])
            tgt_w.append(np.array([t[0]]))
            tags.append(np.array([1]))
            atoms.append(np.array([True]))
        else:
            pts = np.hstack([centers, np.full((m, 1), offsets[k - 1])])
            tgt_pts.append(pts)
            tgt_w.append(t[k - 1] * base_w)
            tags.append(np.full(m, k))
            atoms.append(np.zeros(m, dtype=bool))
    target = DiscreteMeasure(np.vstack(tgt_pts), np.concatenate(tgt_w),
                             layer_tag=np.concatenate(tags),
                             atom_mask=np.concatenate(atoms))

    d = n + 1
    basis = np.eye(d)[:n]
    normal = np.eye(d)[n]
    layers = tuple(
        Layer(offset=offsets[k - 1],
              anchor=np.concatenate([np.zeros(n), [offsets[k - 1]]]),
              basis=basis, normal=normal, index=k)
        for k in range(1, K + 1)
    )
    src_layer = Layer(offset=x_offset, anchor=np.concatenate([np.zeros(n), [x_offset]]),
                      basis=basis, normal=normal, index=0)
    space = LayeredSpace(layers, source_layer=src_layer)
    return source, target, space


def make_tilted_scenario(K, grid, seed=0, t=None, perturb=0.0, angles=None,
                         stagger=None, separation=2.0, perp_layer=None):
    """Planar (n=1) quadratic-cost scenario with tilted target lines.

    The source lies on the horizontal line through the origin (unit normal
    e2).  Layer k is a segment on a line whose tangent makes angle
    angles[k-1] with e1; its normal n_k then satisfies <n, n_k> = cos(angle).
    Targets are placed so their projections on the source tangent interleave
    with the source grid (scale 1/cos(angle), small per-layer stagger), which
    keeps the discrete instance generic.  Setting perp_layer=k forces layer k
    perpendicular to the source line (the tilted hypothesis fails there) and
    suppresses the stagger and density perturbation for that layer, giving an
    exactly symmetric, non-unique instance.

    Returns (source, target, space).
    """
    if K < 1:
        raise ConfigurationError("K must be >= 1")
    if grid < 2:
        raise ConfigurationError("grid must be >= 2")
    t = _validate_simplex(np.full(K, 1.0 / K) if t is None else t, K)
    if angles is None:
        angles = [0.35 * ((-1) ** k) * (1.0 + 0.2 * k) for k in range(K)]
    angles = [float(a) for a in angles]
    if len(angles) != K:
        raise ConfigurationError("angles must have one entry per layer")
    if stagger is None:
        stagger = 1.0 / (8.0 * grid * max(K, 1))

    s = (np.arange(grid) + 0.5) / grid
    w = _perturbed_cell_weights(grid, seed, perturb)
    u = np.array([1.0, 0.0])         # source tangent
    n_src = np.array([0.0, 1.0])     # source normal

    src_pts = np.stack([s, np.zeros(grid)], axis=1)
    source = DiscreteMeasure(src_pts, w)

    tgt_pts, tgt_w, tags = [], [], []
    layers = []
    for k in range(1, K + 1):
        ang = angles[k - 1]
        if perp_layer == k:
            u_k = np.array([0.0, 1.0])
            n_k = np.array([1.0, 0.0])
            anchor = np.array([0.5, k * separation])
            pts = anchor[None, :] + (s - 0.5)[:, None] * u_k[None, :]
            wk = np.full(grid, t[k - 1] / grid)
        else:
            u_k = np.array([np.cos(ang), np.sin(ang)])
            n_k = np.array([-np.sin(ang), np.cos(ang)])
            delta = (k - 1) * stagger
            anchor = np.array([delta, k * separation])
            scale = 1.0 / np.cos(ang)
            pts = anchor[None, :] + (s * scale)[:, None] * u_k[None, :]
            wk = t[k - 1] * w
        tgt_pts.append(pts)
        tgt_w.append(wk)
        tags.append(np.full(grid, k))
        layers.append(Layer(offset=float(k * separation), anchor=anchor,
                            basis=u_k[None, :], normal=n_k, index=k))

    target = DiscreteMeasure(np.vstack(tgt_pts), np.concatenate(tgt_w),
                             layer_tag=np.concatenate(tags))
    src_layer = Layer(offset=0.0, anchor=np.zeros(2), basis=u[None, :],
                      normal=n_src, index=0)
    space = LayeredSpace(tuple(layers), source_layer=src_layer)
    return source, target, space


def make_threemarginal_scenario(K, L, grid, seed=0, t=None, r=None, perturb=0.0,
                                y_offsets=None, z_offsets=None):
    """Three aligned planar marginals for the pairwise inner-product surplus.

    X sits on the horizontal axis (height 0); Y has K layers at heights
    y_offsets, Z has L layers at heights z_offsets, all reusing the source
    grid and density pattern so layer masses are exact.

    Returns (mu, nu, gamma, space_y, space_z).
    """
    if K < 1 or L < 1:
        raise ConfigurationError("K and L must be >= 1")
    if grid < 2:
        raise ConfigurationError("grid must be >= 2")
    t = _validate_simplex(np.full(K, 1.0 / K) if t is None else t, K)
    r = _validate_simplex(np.full(L, 1.0 / L) if r is None else r, L)
    y_offsets = [float(o) for o in (y_offsets or range(1, K + 1))]
    z_offsets = [float(o) for o in (z_offsets or range(1, L + 1))]
    if len(y_offsets) != K or len(z_offsets) != L:
        raise ConfigurationError("offset lists must match K and L")

    s = (np.arange(grid) + 0.5) / grid
    w = _perturbed_cell_weights(grid, seed, perturb)
    mu = DiscreteMeasure(np.stack([s, np.zeros(grid)], axis=1), w)

    def stack_layers(offsets, masses):
        pts, ws, tags, layers = [], [], [], []
        for k, off in enumerate(offsets, start=1):
            pts.append(np.stack([s, np.full(grid, off)], axis=1))
            ws.append(masses[k - 1] * w)
            tags.append(np.full(grid, k))
            layers.append(Layer(offset=off, anchor=np.array([0.0, off]),
                                basis=np.array([[1.0, 0.0]]),
                                normal=np.array([0.0, 1.0]), index=k))
        meas = DiscreteMeasure(np.vstack(pts), np.concatenate(ws),
                               layer_tag=np.concatenate(tags))
        src_layer = Layer(offset=0.0, anchor=np.zeros(2),
                          basis=np.array([[1.0, 0.0]]),
                          normal=np.array([0.0, 1.0]), index=0)
        return meas, LayeredSpace(tuple(layers), source_layer=src_layer)

    nu, space_y = stack_layers(y_offsets, t)
    gamma, space_z = stack_layers(z_offsets, r)
    return mu, nu, gamma, space_y, space_z


def make_counterexample_atomic(grid=100):
    """Lebesgue-on-a-segment source versus two atoms, one per layer.

    Source discretizes the unit segment at height 0; the target puts mass
    1/2 on each of the points (1, 1) and (1, -1).

    Returns (source, target, space).
    """
    s = (np.arange(grid) + 0.5) / grid
    source = DiscreteMeasure(np.stack([s, np.zeros(grid)], axis=1),
                             np.full(grid, 1.0 / grid))
    target = DiscreteMeasure(np.array([[1.0, 1.0], [1.0, -1.0]]),
                             np.array([0.5, 0.5]),
                             layer_tag=np.array([1, 2]),
                             atom_mask=np.array([True, True]))
    basis = np.array([[1.0, 0.0]])
    normal = np.array([0.0, 1.0])
    layers = (
        Layer(offset=1.0, anchor=np.array([0.0, 1.0]), basis=basis, normal=normal, index=1),
        Layer(offset=-1.0, anchor=np.array([0.0, -1.0]), basis=basis, normal=normal, index=2),
    )
    src_layer = Layer(offset=0.0, anchor=np.zeros(2), basis=basis, normal=normal, index=0)
    return source, target, LayeredSpace(layers, source_layer=src_layer)


def make_counterexample_perpendicular(grid=10):
    """Uniform grids on two perpendicular unit segments through the origin."""
    s = (np.arange(grid) + 0.5) / grid
    mu = DiscreteMeasure(np.stack([s, np.zeros(grid)], axis=1), np.full(grid, 1.0 / grid))
    nu = DiscreteMeasure(np.stack([np.zeros(grid), s], axis=1), np.full(grid, 1.0 / grid))
    return mu, nu


def _disk_interior_cells(grid, radius, axes=None):
    """Centers and areas of bounding-box cells safely inside the disk/ellipse."""
    a, b = (radius, radius) if axes is None else axes
    cell_x = 2.0 * a / grid
    cell_y = 2.0 * b / grid
    xs = -a + (np.arange(grid) + 0.5) * cell_x
    ys = -b + (np.arange(grid) + 0.5) * cell_y
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    half_diag = 0.5 * np.hypot(cell_x, cell_y)
    level = (pts[:, 0] / a) ** 2 + (pts[:, 1] / b) ** 2
    margin = half_diag / min(a, b)
    keep = np.sqrt(level) <= 1.0 - margin
    return pts[keep], cell_x * cell_y


def make_mixed_boundary_scenario(spec, shape="ball", grid=16, seed=0,
                                 radius=1.0, axes=(1.0, 0.8), dim=2):
    """Mixed interior-plus-boundary measure on a strictly convex body.

    grid controls both resolutions: the interior is a grid x grid uniform-cell
    discretization of the body, the boundary carries `grid` nodes (equal-angle
    on circles/ellipses, latitude-band equal-area on the 3-d sphere).  Each
    boundary point records its unit outward normal in the metadata.

    Returns (measure, metadata) where metadata[i] is a dict with keys
    'region' ('interior' or 'boundary') and 'normal' (None for interior).
    """
    if not isinstance(spec, MixedMeasureSpec):
        raise ConfigurationError("spec must be a MixedMeasureSpec")
    if shape not in ("ball", "ellipsoid"):
        raise UnsupportedShapeError(f"shape {shape!r} is not strictly convex or not supported")
    if dim not in (2, 3):
        raise UnsupportedShapeError("only 2-d and 3-d bodies are supported")
    if dim == 3 and shape != "ball":
        raise UnsupportedShapeError("3-d support is limited to the ball")

    s = spec.s
    alpha = spec.interior_density or (lambda p: 1.0)
    beta = spec.boundary_density or (lambda p: 1.0)

    pts_list, w_list, meta = [], [], []

    if dim == 2:
        ax = (radius, radius) if shape == "ball" else axes
        if shape == "ellipsoid" and (ax[0] <= 0 or ax[1] <= 0):
            raise UnsupportedShapeError("ellipsoid axes must be positive")
        if s > 0:
            centers, cell_area = _disk_interior_cells(grid, radius, None if shape == "ball" else ax)
            wi = np.array([max(float(alpha(p)), 0.0) for p in centers]) * cell_area
            if wi.sum() <= 0:
                raise ConfigurationError("interior density vanishes on the whole grid")
            wi = s * wi / wi.sum()
            pts_list.append(centers)
            w_list.append(wi)
            meta.extend({"region": "interior", "normal": None} for _ in range(len(centers)))
        if s < 1:
            chart = circle_chart(grid, radius) if shape == "ball" else ellipse_chart(grid, *ax)
            wb = np.array([max(float(beta(p)), 0.0) for p in chart.positions])
            if wb.sum() <= 0:
                raise ConfigurationError("boundary density vanishes on the whole chart")
            wb = (1.0 - s) * wb / wb.sum()
            pts_list.append(chart.positions)
            w_list.append(wb)
            meta.extend({"region": "boundary", "normal": chart.normals[i]}
                        for i in range(chart.size))
    else:
        if s > 0:
            cell = 2.0 * radius / grid
            axis = -radius + (np.arange(grid) + 0.5) * cell
            gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
            centers = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
            half_diag = 0.5 * cell * np.sqrt(3.0)
            centers = centers[np.linalg.norm(centers, axis=1) <= radius - half_diag]
            wi = np.array([max(float(alpha(p)), 0.0) for p in centers]) * cell ** 3
            wi = s * wi / wi.sum()
            pts_list.append(centers)
            w_list.append(wi)
            meta.extend({"region": "interior", "normal": None} for _ in range(len(centers)))
        if s < 1:
            # latitude bands of equal area, nodes spread along each band
            n_bands = max(2, int(np.sqrt(grid)))
            per_band = max(1, grid // n_bands)
            normals = []
            for bi in range(n_bands):
                zc = 1.0 - (2.0 * bi + 1.0) / n_bands  # band-center cosine
                rho = np.sqrt(max(0.0, 1.0 - zc * zc))
                for ti in range(per_band):
                    phi = 2.0 * np.pi * (ti + 0.5 * (bi % 2)) / per_band
                    normals.append([rho * np.cos(phi), rho * np.sin(phi), zc])
            normals = np.asarray(normals)
            bpts = radius * normals
            wb = np.array([max(float(beta(p)), 0.0) for p in bpts])
            wb = (1.0 - s) * wb / wb.sum()
            pts_list.append(bpts)
            w_list.append(wb)
            meta.extend({"region": "boundary", "normal": normals[i]}
                        for i in range(len(bpts)))

    measure = DiscreteMeasure(np.vstack(pts_list), np.concatenate(w_list))
    return measure, meta


def make_random_measure(size, dim=2, seed=0, denominator=1024, box=1.0):
    """Random measure with exactly representable dyadic weights (oracle-friendly)."""
    rng = np.random.default_rng(seed)
    if size > denominator:
        raise ConfigurationError("size exceeds weight denominator")
    cuts = np.sort(rng.choice(np.arange(1, denominator), size=size - 1, replace=False))
    parts = np.diff(np.concatenate([[0], cuts, [denominator]]))
    if np.any(parts == 0):
        return make_random_measure(size, dim, seed + 7919, denominator, box)
    weights = parts / float(denominator)
    points = rng.uniform(-box, box, size=(size, dim))
    return DiscreteMeasure(points, weights)


def dump_measure_tsv(measure, path):
    """Write `weight<TAB>coord_0<TAB>...<TAB>coord_n<TAB>layer` rows (layer 0 = untagged)."""
    with open(path, "w") as fh:
        cols = "\t".join(f"coord_{k}" for k in range(measure.dim))
        fh.write(f"# weight\t{cols}\tlayer\n")
        for i in range(measure.size):
            tag = int(measure.layer_tag[i]) if measure.layer_tag is not None else 0
            coords = "\t".join(f"{c:.17g}" for c in measure.points[i])
            fh.write(f"{measure.weights[i]:.17g}\t{coords}\t{tag}\n")
