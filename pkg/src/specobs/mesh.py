"""Conforming triangulations of the punctured disk and of the full disk.

Both boundary curves are star-shaped about the obstacle center, so the domain
is meshed by nested closed layers blended between the two curves; consecutive
layers are stitched by an angular two-pointer sweep that picks the better of
the two candidate triangles at each step.  The construction is deterministic
given (domain, t, h, seed): node counts depend only on the t = 0 geometry, and
all layer angles are offset by the reduced phase so the mesh morphs smoothly
with t and is mirror-symmetric whenever the domain is.

Markers: 1 = outer boundary (disk), 2 = inner boundary (obstacle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MeshFailure
from .geometry import TWO_PI, DiskSpec, DomainSpec

OUTER = 1
INNER = 2

MIN_ANGLE_DEG = 20.0

@dataclass(frozen=True)
class TriMesh:
    """Triangulation with marked boundary edges.

    vertices : (nv, 2) float array.
    triangles : (nt, 3) int array, counterclockwise.
    boundary_edges : (nbe, 2) int array of vertex pairs.
    boundary_markers : (nbe,) int array, OUTER or INNER.
    target_h : requested maximum edge length.
    element_regions : optional (nt,) int array; 1 inside the obstacle, 0
        outside (present on full-disk meshes).
    domain, t : generating geometry, kept so refinement can project new
        boundary vertices back onto the exact curves.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_markers: np.ndarray
    target_h: float
    element_regions: Optional[np.ndarray] = None
    domain: Optional[DomainSpec] = None
    t: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("vertices", "triangles", "boundary_edges", "boundary_markers"):
            getattr(self, name).setflags(write=False)
        if self.element_regions is not None:
            self.element_regions.setflags(write=False)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices
        t = self.triangles
        d1 = p[t[:, 1]] - p[t[:, 0]]
        d2 = p[t[:, 2]] - p[t[:, 0]]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def area(self) -> float:
        return float(self.triangle_areas().sum())

    def boundary_nodes(self, marker: int) -> np.ndarray:
        edges = self.boundary_edges[self.boundary_markers == marker]
        return np.unique(edges)

    def dirichlet_nodes(self) -> np.ndarray:
        return np.unique(self.boundary_edges)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def triangulate(domain: DomainSpec, t: float, h: float, seed: int = 0) -> TriMesh:
    """Mesh the punctured disk at rotation t with target edge length h."""
    gap = domain.gap_min
    if h <= 0.0:
        raise MeshFailure("target edge length must be positive")
    if h >= gap / 2.0:
        raise MeshFailure(
            f"annular gap {gap:.4g} is thinner than 2h = {2 * h:.4g}; reduce h"
        )
    t_red = _reduce_phase(t, domain.obstacle.n)

    inner = _obstacle_radius_funcs(domain, t_red)
    outer = _disk_radius_funcs(domain.disk)
    layers = _annular_layers(domain, t_red, h, seed, inner, outer)
    verts, tris, inner_loop, outer_loop = _stitch_layers(layers)

    ie, im = _loop_edges(inner_loop, INNER)
    oe, om = _loop_edges(outer_loop, OUTER)
    return TriMesh(
        vertices=verts,
        triangles=tris,
        boundary_edges=np.vstack([oe, ie]),
        boundary_markers=np.concatenate([om, im]),
        target_h=h,
        domain=domain,
        t=t_red,
        seed=seed,
    )


def triangulate_disk(domain: DomainSpec, t: float, h: float, seed: int = 0) -> TriMesh:
    """Mesh the whole disk with the rotated obstacle as a marked subregion.

    The obstacle boundary is an interior interface shared exactly by the two
    regions, so element region markers agree with the centroid-in-obstacle
    rule up to the polygonal boundary approximation.
    """
    gap = domain.gap_min
    if h <= 0.0:
        raise MeshFailure("target edge length must be positive")
    if h >= gap / 2.0:
        raise MeshFailure(
            f"annular gap {gap:.4g} is thinner than 2h = {2 * h:.4g}; reduce h"
        )
    t_red = _reduce_phase(t, domain.obstacle.n)

    inner = _obstacle_radius_funcs(domain, t_red)
    outer = _disk_radius_funcs(domain.disk)

    ann_layers = _annular_layers(domain, t_red, h, seed, inner, outer)
    interface_count = ann_layers[0].pts.shape[0]
    size = _annular_size(domain, h, inner, outer)
    core_layers = _core_layers(domain, t_red, h, seed, inner, interface_count, size=size)

    # core: center fan + rings out to the obstacle boundary
    verts = [np.zeros((1, 2))]
    tris = []
    offset = 1
    ring_offsets = []
    for lay in core_layers:
        ring_offsets.append(offset)
        verts.append(lay.pts)
        offset += lay.pts.shape[0]
    m = core_layers[0].pts.shape[0]
    for j in range(m):
        tris.append((0, ring_offsets[0] + j, ring_offsets[0] + (j + 1) % m))
    for i in range(len(core_layers) - 1):
        tris.extend(
            _merge_loops(core_layers[i], core_layers[i + 1], ring_offsets[i], ring_offsets[i + 1])
        )
    n_inside = len(tris)

    # annulus: the obstacle-boundary ring doubles as its first layer
    interface_offset = ring_offsets[-1]
    prev = core_layers[-1]
    prev_offset = interface_offset
    off = offset
    for lay in ann_layers[1:]:
        verts.append(lay.pts)
        tris.extend(_merge_loops(prev, lay, prev_offset, off))
        prev, prev_offset = lay, off
        off += lay.pts.shape[0]
    outer_loop = np.arange(prev_offset, prev_offset + prev.pts.shape[0])

    vertices = np.vstack(verts)
    triangles = np.asarray(tris, dtype=np.int32)
    regions = np.zeros(triangles.shape[0], dtype=np.int8)
    regions[:n_inside] = 1

    be, bm = _loop_edges(outer_loop, OUTER)
    return TriMesh(
        vertices=vertices,
        triangles=triangles,
        boundary_edges=be,
        boundary_markers=bm,
        target_h=h,
        element_regions=regions,
        domain=domain,
        t=t_red,
        seed=seed,
    )


def _reduce_phase(t: float, n: int) -> float:
    period = TWO_PI / n
    out = math.fmod(t, period)
    return out + period if out < 0.0 else out


def _obstacle_radius_funcs(domain: DomainSpec, t_red: float):
    obstacle = domain.obstacle

    def value(phi):
        return obstacle.body_radius(np.asarray(phi) - t_red)

    def value0(phi):
        return obstacle.body_radius(np.asarray(phi))

    return value, value0


def _disk_radius_funcs(disk: DiskSpec):
    return disk.radius, disk.radius


def _round_count(perimeter: float, h: float, multiple: int) -> int:
    raw = max(perimeter / h, 3 * multiple)
    return int(multiple * math.ceil(raw / multiple))


from collections import namedtuple

_Layer = namedtuple("_Layer", ["pts", "ang", "ref"])


def _annular_layers(domain, t_red, h, seed, inner, outer, first_count=None):
    """Node layers blending the obstacle boundary into the disk boundary.

    The angular spacing of each layer tracks the geometric mean of the local
    radial spacing so the gap variation around the loop cannot flatten the
    cells; boundaries are always sampled at arc spacing <= h.  Each layer also
    carries its reference (t = 0) node positions, used for the t-independent
    stitching decisions.
    """
    n = domain.obstacle.n
    inner_t, inner_0 = inner
    outer_t, outer_0 = outer
    grid = np.linspace(0.0, TWO_PI, 2048, endpoint=False)

    f0 = inner_0(grid)
    g0 = outer_0(grid)
    gap = g0 - f0
    gap_max = float(gap.max())
    levels = max(3, math.ceil(gap_max / h))
    mu = np.arange(levels + 1) / levels
    size = _annular_size(domain, h, inner, outer)

    rng = np.random.default_rng(seed) if seed else None
    layers = []
    for i, m in enumerate(mu):
        blend0 = (1.0 - m) * f0 + m * g0
        per = _perimeter_from_samples(blend0, grid)
        count = _round_count(per, size, 2 * n)
        if i == 0 and first_count is not None:
            count = first_count
        jitter = 0.0
        if rng is not None and 0 < i < levels:
            jitter = float(rng.uniform(0.0, 1.0)) * TWO_PI / count
        psi = jitter + TWO_PI * np.arange(count) / count
        ang = t_red + psi
        r = (1.0 - m) * inner_t(ang) + m * outer_t(ang)
        pts = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
        r_ref = (1.0 - m) * inner_0(psi) + m * outer_0(psi)
        ref = np.column_stack([r_ref * np.cos(psi), r_ref * np.sin(psi)])
        layers.append(_Layer(pts, ang, ref))
    return layers


def _annular_size(domain, h, inner, outer) -> float:
    """Angular node spacing of the annular layers: geometric mean of the
    radial spacing range, capped at h."""
    grid = np.linspace(0.0, TWO_PI, 2048, endpoint=False)
    gap = outer[1](grid) - inner[1](grid)
    gap_max = float(gap.max())
    levels = max(3, math.ceil(gap_max / h))
    return min(h, math.sqrt(float(gap.min()) * gap_max) / levels)


def _core_layers(domain, t_red, h, seed, inner, boundary_count, size=None):
    """Concentric scaled copies of the obstacle boundary, out from the center.

    The outermost ring carries exactly `boundary_count` nodes so it can be
    shared with the surrounding annulus mesh; `size` is that mesh's angular
    target so the counts ramp smoothly into the interface.
    """
    n = domain.obstacle.n
    inner_t, inner_0 = inner
    grid = np.linspace(0.0, TWO_PI, 2048, endpoint=False)
    f0 = inner_0(grid)
    r_mean = float(f0.mean())
    if size is None:
        size = h
    levels = max(2, math.ceil(r_mean / size))
    boundary_per = _perimeter_from_samples(f0, grid)

    rng = np.random.default_rng(seed + 7919) if seed else None
    layers = []
    for i in range(1, levels + 1):
        m = i / levels
        if i == levels:
            count = boundary_count
        else:
            count = 2 * n * math.ceil(boundary_per * m / (size * 2 * n))
            count = min(max(count, 2 * n), boundary_count)
        jitter = 0.0
        if rng is not None and i < levels:
            jitter = float(rng.uniform(0.0, 1.0)) * TWO_PI / count
        psi = jitter + TWO_PI * np.arange(count) / count
        ang = t_red + psi
        r = m * inner_t(ang)
        pts = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
        r_ref = m * inner_0(psi)
        ref = np.column_stack([r_ref * np.cos(psi), r_ref * np.sin(psi)])
        layers.append(_Layer(pts, ang, ref))
    return layers


def _perimeter_from_samples(r: np.ndarray, grid: np.ndarray) -> float:
    x = r * np.cos(grid)
    y = r * np.sin(grid)
    dx = np.diff(np.append(x, x[0]))
    dy = np.diff(np.append(y, y[0]))
    return float(np.hypot(dx, dy).sum())


def _stitch_layers(layers):
    verts = []
    offset = 0
    offsets = []
    for lay in layers:
        offsets.append(offset)
        verts.append(lay.pts)
        offset += lay.pts.shape[0]
    tris = []
    for i in range(len(layers) - 1):
        tris.extend(_merge_loops(layers[i], layers[i + 1], offsets[i], offsets[i + 1]))
    inner_loop = np.arange(offsets[0], offsets[0] + layers[0].pts.shape[0])
    nl = layers[-1].pts.shape[0]
    outer_loop = np.arange(offsets[-1], offsets[-1] + nl)
    return np.vstack(verts), np.asarray(tris, dtype=np.int32), inner_loop, outer_loop


def _merge_loops(layer_a, layer_b, off_a, off_b):
    """Stitch two nested closed node loops into a triangle strip.

    The sweep walks both loops in angular order; when the two candidate
    advances are angularly close, the better-shaped triangle is taken, judged
    on the reference (t = 0) node positions so the connectivity is identical
    for every rotation phase.
    """
    ang_a, ang_b = layer_a.ang, layer_b.ang
    na, nb = len(ang_a), len(ang_b)
    base = ang_a[0]
    ua = np.concatenate([ang_a, [ang_a[0] + TWO_PI]])
    shift = np.floor((ang_b - base) / TWO_PI + 1e-15)
    b_rel = ang_b - shift * TWO_PI
    b_rel = np.where(b_rel < base - 1e-12, b_rel + TWO_PI, b_rel)
    order = np.argsort(b_rel, kind="stable")
    ub = np.concatenate([b_rel[order], [b_rel[order[0]] + TWO_PI]])
    idx_b = np.concatenate([order, [order[0]]])

    ra = np.vstack([layer_a.ref, layer_a.ref[:1]])
    rb = np.vstack([layer_b.ref[idx_b[:-1]], layer_b.ref[idx_b[0]][None, :]])

    # candidates within this angular window of each other are decided by
    # shape quality; beyond it the angular order rules, which bounds how far
    # one pointer can run ahead
    window = 0.75 * TWO_PI / max(na, nb)

    tris = []
    i = j = 0
    while i < na or j < nb:
        if j >= nb:
            advance_a = True
        elif i >= na:
            advance_a = False
        elif abs(ua[i + 1] - ub[j + 1]) < window:
            qa = _min_angle(ra[i], rb[j], ra[i + 1])
            qb = _min_angle(ra[i], rb[j], rb[j + 1])
            advance_a = qa >= qb
        else:
            advance_a = ua[i + 1] <= ub[j + 1]
        if advance_a:
            tris.append((off_a + i % na, off_b + idx_b[j], off_a + (i + 1) % na))
            i += 1
        else:
            tris.append((off_a + i % na, off_b + idx_b[j], off_b + idx_b[j + 1]))
            j += 1
    return tris


def _min_angle(p0, p1, p2) -> float:
    a = np.linalg.norm(p1 - p0)
    b = np.linalg.norm(p2 - p1)
    c = np.linalg.norm(p0 - p2)
    s = max(a, b, c)
    if s == 0.0:
        return 0.0
    area2 = abs((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]))
    if area2 <= 0.0:
        return 0.0
    # smallest angle is opposite the smallest side
    sides = sorted((a, b, c))
    return math.asin(max(-1.0, min(1.0, area2 / (sides[1] * sides[2]))))


def _loop_edges(loop: np.ndarray, marker: int):
    edges = np.column_stack([loop, np.roll(loop, -1)]).astype(np.int32)
    markers = np.full(edges.shape[0], marker, dtype=np.int8)
    return edges, markers


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------


def refine(mesh: TriMesh) -> TriMesh:
    """Uniform refinement: each triangle splits in four.

    New vertices on marked boundary edges (and on the obstacle interface of a
    full-disk mesh) are projected radially back onto the exact curve.
    """
    verts = mesh.vertices
    tris = mesh.triangles
    nv = verts.shape[0]

    edges = np.vstack(
        [tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]]
    )
    edges_sorted = np.sort(edges, axis=1)
    uniq, inverse = np.unique(edges_sorted, axis=0, return_inverse=True)
    mid = 0.5 * (verts[uniq[:, 0]] + verts[uniq[:, 1]])

    mid = _project_midpoints(mesh, uniq, mid)

    new_verts = np.vstack([verts, mid])
    e01 = nv + inverse[: len(tris)]
    e12 = nv + inverse[len(tris) : 2 * len(tris)]
    e20 = nv + inverse[2 * len(tris) :]
    t0 = np.column_stack([tris[:, 0], e01, e20])
    t1 = np.column_stack([tris[:, 1], e12, e01])
    t2 = np.column_stack([tris[:, 2], e20, e12])
    t3 = np.column_stack([e01, e12, e20])
    new_tris = np.vstack([t0, t1, t2, t3]).astype(np.int32)

    regions = None
    if mesh.element_regions is not None:
        regions = np.tile(mesh.element_regions, 4).astype(np.int8)

    edge_lookup = {tuple(e): nv + k for k, e in enumerate(map(tuple, uniq))}
    be = []
    bmk = []
    for (i, j), m in zip(mesh.boundary_edges, mesh.boundary_markers):
        k = edge_lookup[(min(i, j), max(i, j))]
        be.append((i, k))
        be.append((k, j))
        bmk.extend((m, m))

    return TriMesh(
        vertices=new_verts,
        triangles=new_tris,
        boundary_edges=np.asarray(be, dtype=np.int32),
        boundary_markers=np.asarray(bmk, dtype=np.int8),
        target_h=mesh.target_h / 2.0,
        element_regions=regions,
        domain=mesh.domain,
        t=mesh.t,
        seed=mesh.seed,
    )


def _project_midpoints(mesh: TriMesh, uniq: np.ndarray, mid: np.ndarray) -> np.ndarray:
    if mesh.domain is None:
        return mid
    obstacle = mesh.domain.obstacle
    disk = mesh.domain.disk
    curve_for_edge = {}

    for (i, j), m in zip(mesh.boundary_edges, mesh.boundary_markers):
        curve_for_edge[(min(i, j), max(i, j))] = int(m)

    if mesh.element_regions is not None:
        # interface edges separate elements of different regions
        for key in _interface_edges(mesh):
            curve_for_edge.setdefault(key, INNER)

    mid = mid.copy()
    for k, (i, j) in enumerate(map(tuple, uniq)):
        marker = curve_for_edge.get((i, j))
        if marker is None:
            continue
        phi = math.atan2(mid[k, 1], mid[k, 0])
        if marker == OUTER:
            r = disk.radius(phi)
        else:
            r = obstacle.body_radius(phi - mesh.t)
        mid[k, 0] = r * math.cos(phi)
        mid[k, 1] = r * math.sin(phi)
    return mid


def _interface_edges(mesh: TriMesh):
    """Sorted vertex pairs of edges separating obstacle and exterior elements."""
    tris = mesh.triangles
    regions = mesh.element_regions
    edge_owner = {}
    pairs = set()
    for ti in range(tris.shape[0]):
        for a, b in ((0, 1), (1, 2), (2, 0)):
            key = (min(tris[ti, a], tris[ti, b]), max(tris[ti, a], tris[ti, b]))
            if key in edge_owner:
                if regions[edge_owner[key]] != regions[ti]:
                    pairs.add(key)
            else:
                edge_owner[key] = ti
    return pairs


# ---------------------------------------------------------------------------
# quality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QualityReport:
    min_angle_deg: float
    max_angle_deg: float
    h_max: float
    h_min: float
    aspect_histogram: np.ndarray
    num_triangles: int
    passes: bool


def mesh_quality(mesh: TriMesh, min_angle_deg: float = MIN_ANGLE_DEG) -> QualityReport:
    """Angle and edge-length statistics with a pass/fail quality gate."""
    p = mesh.vertices
    t = mesh.triangles
    v0, v1, v2 = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    angles = _triangle_angles(v0, v1, v2)
    lengths = np.stack(
        [
            np.linalg.norm(v1 - v0, axis=1),
            np.linalg.norm(v2 - v1, axis=1),
            np.linalg.norm(v0 - v2, axis=1),
        ]
    )
    areas = mesh.triangle_areas()
    aspect = lengths.max(axis=0) / np.maximum(lengths.min(axis=0), 1e-300)
    hist, _ = np.histogram(aspect, bins=np.array([1.0, 1.5, 2.0, 3.0, 5.0, np.inf]))
    min_angle = float(np.degrees(angles.min()))
    passes = bool(np.all(areas > 0.0)) and min_angle >= min_angle_deg
    return QualityReport(
        min_angle_deg=min_angle,
        max_angle_deg=float(np.degrees(angles.max())),
        h_max=float(lengths.max()),
        h_min=float(lengths.min()),
        aspect_histogram=hist,
        num_triangles=mesh.num_triangles,
        passes=passes,
    )


def _triangle_angles(v0, v1, v2):
    def ang(a, b, c):
        u = b - a
        w = c - a
        cu = np.linalg.norm(u, axis=1)
        cw = np.linalg.norm(w, axis=1)
        denom = np.maximum(cu * cw, 1e-300)
        cosang = np.clip(np.einsum("ij,ij->i", u, w) / denom, -1.0, 1.0)
        return np.arccos(cosang)

    a0 = ang(v0, v1, v2)
    a1 = ang(v1, v2, v0)
    a2 = np.pi - a0 - a1
    return np.stack([a0, a1, a2])
