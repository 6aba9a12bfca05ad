"""Triangle meshes for printing: icospheres, capped cylinders, binary STL."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..chainmodel import ChainTopology
from ..errors import InvalidMesh
from ..geometry import AtomSites, PhysicalScale

STL_TAG = b"PBM-STL v1"
STL_RECORD = np.dtype(
    [("normal", "<f4", (3,)), ("v0", "<f4", (3,)), ("v1", "<f4", (3,)), ("v2", "<f4", (3,)), ("attr", "<u2")]
)
MIN_TRIANGLE_AREA = 1e-12
BOND_RADIUS_RATIO = 0.25
DEFAULT_SUBDIV = 2
CYLINDER_SEGMENTS = 16


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Vertices in inches, triangles as index triples, shells as triangle ranges."""

    vertices: np.ndarray
    triangles: np.ndarray
    shells: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        f = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", f)
        if not self.shells and len(f):
            object.__setattr__(self, "shells", ((0, len(f)),))

    def __len__(self):
        return len(self.triangles)

    @property
    def normals(self):
        tri = self.vertices[self.triangles]
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        return np.divide(n, norm, out=np.zeros_like(n), where=norm > 0)

    def areas(self):
        tri = self.vertices[self.triangles]
        return 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)

    def signed_volume(self, shell=None):
        tris = self.triangles if shell is None else self.triangles[slice(*self.shells[shell])]
        tri = self.vertices[tris]
        return float(np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0)

    def shell(self, k):
        lo, hi = self.shells[k]
        return self.triangles[lo:hi]


def concat(meshes) -> TriMesh:
    verts, tris, shells = [], [], []
    v_off = t_off = 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + v_off)
        for lo, hi in m.shells:
            shells.append((lo + t_off, hi + t_off))
        v_off += len(m.vertices)
        t_off += len(m.triangles)
    if not verts:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    return TriMesh(np.vstack(verts), np.vstack(tris), tuple(shells))


@lru_cache(maxsize=8)
def _unit_icosphere(subdiv):
    t = (1.0 + 5 ** 0.5) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(subdiv):
        cache = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    v = np.array(verts)
    f = np.array(faces, dtype=np.int64)
    v.setflags(write=False)
    f.setflags(write=False)
    return v, f


def icosphere(center, radius, subdiv=DEFAULT_SUBDIV) -> TriMesh:
    """Closed, outward-wound sphere of ``20 * 4**subdiv`` triangles."""
    if not 0 <= subdiv <= 4:
        raise ValueError("subdiv must be in 0..4")
    v, f = _unit_icosphere(subdiv)
    return TriMesh(v * radius + np.asarray(center, dtype=float), f.copy())


def capped_cylinder(p0, p1, radius, segments=CYLINDER_SEGMENTS) -> TriMesh:
    """Closed cylinder from ``p0`` to ``p1`` with flat end caps."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    axis = p1 - p0
    length = np.linalg.norm(axis)
    if length == 0:
        raise ValueError("cylinder of zero length")
    w = axis / length
    helper = np.array([1.0, 0.0, 0.0]) if abs(w[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(w, helper)
    u /= np.linalg.norm(u)
    v = np.cross(w, u)
    ang = 2 * np.pi * np.arange(segments) / segments
    ring = radius * (np.cos(ang)[:, None] * u + np.sin(ang)[:, None] * v)
    verts = np.vstack([p0 + ring, p1 + ring, p0, p1])
    c0, c1 = 2 * segments, 2 * segments + 1
    tris = []
    for k in range(segments):
        k1 = (k + 1) % segments
        a, b = k, k1
        c, d = segments + k, segments + k1
        # (u, v, w) is right-handed, so ring order is counter-clockwise about w
        tris += [(a, b, d), (a, d, c)]
        tris.append((c0, b, a))
        tris.append((c1, c, d))
    return TriMesh(verts, np.array(tris, dtype=np.int64))


def mesh_model(a: AtomSites, t: ChainTopology, s: PhysicalScale | None = None,
               sphere_subdiv: int = DEFAULT_SUBDIV, bond_radius_ratio: float = BOND_RADIUS_RATIO) -> TriMesh:
    """One sphere shell per atom and one cylinder shell per bond, in inches.

    Shells overlap rather than being boolean-unioned; slicers merge them.
    """
    s = s or PhysicalScale()
    if not 0 <= sphere_subdiv <= 4:
        raise ValueError("sphere_subdiv must be in 0..4")
    centers = a.positions * s.inches_per_angstrom
    radii = s.atom_radii(t) * s.radius_factor * s.inches_per_angstrom
    parts = [icosphere(c, r, sphere_subdiv) for c, r in zip(centers, radii)]
    for i, j in t.bonds:
        r = bond_radius_ratio * min(radii[i], radii[j])
        parts.append(capped_cylinder(centers[i], centers[j], r))
    return concat(parts)


def audit_mesh(m: TriMesh):
    """Raise :class:`InvalidMesh` unless every shell is closed, outward and non-degenerate."""
    if len(m.triangles) == 0:
        return
    if not np.all(np.isfinite(m.vertices)):
        raise InvalidMesh("non-finite vertex")
    if m.triangles.min() < 0 or m.triangles.max() >= len(m.vertices):
        raise InvalidMesh("triangle index out of range")
    areas = m.areas()
    if np.any(areas <= MIN_TRIANGLE_AREA):
        raise InvalidMesh(f"{int(np.sum(areas <= MIN_TRIANGLE_AREA))} degenerate triangles")
    for k in range(len(m.shells)):
        tris = m.shell(k)
        edges = np.vstack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
        undirected = np.sort(edges, axis=1)
        _, counts = np.unique(undirected, axis=0, return_counts=True)
        if np.any(counts != 2):
            raise InvalidMesh(f"shell {k} is not watertight")
        # each directed edge must appear once: neighbours traverse it oppositely
        _, dcounts = np.unique(edges, axis=0, return_counts=True)
        if np.any(dcounts != 1):
            raise InvalidMesh(f"shell {k} has inconsistent winding")
        if m.signed_volume(k) <= 0:
            raise InvalidMesh(f"shell {k} is inside out")


def write_stl(m: TriMesh) -> bytes:
    """Binary little-endian STL: 80-byte header, uint32 count, 50 bytes per triangle."""
    audit_mesh(m)
    header = STL_TAG.ljust(80, b"\0")
    records = np.zeros(len(m.triangles), dtype=STL_RECORD)
    if len(m.triangles):
        tri = m.vertices[m.triangles]
        records["normal"] = m.normals
        records["v0"] = tri[:, 0]
        records["v1"] = tri[:, 1]
        records["v2"] = tri[:, 2]
    return header + struct.pack("<I", len(records)) + records.tobytes()


def read_stl(data: bytes):
    """Parse binary STL produced by :func:`write_stl` into (normals, triangles) float32 arrays."""
    if len(data) < 84:
        raise InvalidMesh("STL shorter than its header")
    (count,) = struct.unpack_from("<I", data, 80)
    if len(data) != 84 + 50 * count:
        raise InvalidMesh(f"STL length {len(data)} does not match {count} triangles")
    rec = np.frombuffer(data, dtype=STL_RECORD, count=count, offset=84)
    return rec["normal"].copy(), np.stack([rec["v0"], rec["v1"], rec["v2"]], axis=1)
