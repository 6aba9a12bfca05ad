import io
import json
import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from peppy.chainmodel import Conformation, build_topology, canonical_conformation, default_config
from peppy.errors import InvalidMesh, MalformedPBM, UnsupportedVersion
from peppy.fab import (
    ACCEPTOR,
    DETENT,
    DONOR,
    N_OUT,
    S_OUT,
    BioModel,
    MagnetSpec,
    TriMesh,
    audit_mesh,
    capped_cylinder,
    icosphere,
    magnet_layout,
    mesh_model,
    read_pbm,
    read_stl,
    write_pbm,
    write_pdb,
    write_stl,
)
from peppy.fold import EnergyParams
from peppy.geometry import PhysicalScale, forward_kinematics
from peppy.pdbio import conformation_from_trace, extract_backbone, parse_pdb
from peppy.validation import random_biomodel

trimesh = pytest.importorskip("trimesh")


def one_residue(code="A"):
    t = build_topology(code)
    return t, forward_kinematics(t, default_config().backbone, canonical_conformation("alpha_helix", 1))


# ---- magnets ----------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 5, 13, 30])
def test_magnet_counts(n):
    specs = magnet_layout(build_topology("A" * n))
    roles = [m.role for m in specs]
    assert roles.count(DETENT) == 2 * (n - 1)
    assert roles.count(DONOR) == n
    assert roles.count(ACCEPTOR) == n


def test_magnet_polarity():
    specs = magnet_layout(build_topology("ACDEFGHIKLMNP"))
    assert {m.polarity for m in specs if m.role == DONOR} == {N_OUT}
    assert {m.polarity for m in specs if m.role == ACCEPTOR} == {S_OUT}


def test_detent_ring_encodes_angles():
    t = build_topology("AAAA")
    s = PhysicalScale()
    specs = [m for m in magnet_layout(t, s=s) if m.role == DETENT]
    assert [m.anchor for m in specs] == list(range(6))
    for m, dih in zip(specs, t.rotatable_dihedrals):
        col = 0 if dih.kind == "phi" else 1
        expected = tuple(d[col] for d in default_config().conformations.detents())
        assert m.detent_angles_deg == expected
        radius = 0.4 * s.atom_radii(t)[dih.atoms[2]] * s.radius_factor * s.inches_per_angstrom
        for angle, p in zip(expected, m.ring_positions):
            assert math.hypot(p[0], p[1]) == pytest.approx(radius)
            assert math.degrees(math.atan2(p[1], p[0])) == pytest.approx(angle)


def test_magnet_positions_scale():
    t = build_topology("AA")
    a = magnet_layout(t, s=PhysicalScale(inches_per_angstrom=0.2))
    b = magnet_layout(t, s=PhysicalScale(inches_per_angstrom=0.4))
    for x, y in zip(a, b):
        assert np.allclose(np.array(y.position), 2 * np.array(x.position))


def test_magnet_spec_validation():
    with pytest.raises(ValueError):
        MagnetSpec("bogus", 0, (0, 0, 0), N_OUT, 1)
    with pytest.raises(ValueError):
        MagnetSpec(DONOR, 0, (0, 0, float("nan")), N_OUT, 1)
    with pytest.raises(ValueError):
        MagnetSpec(DONOR, 0, (0, 0, 0), N_OUT, 0)


# ---- meshes -----------------------------------------------------------------

@pytest.mark.parametrize("k", range(5))
def test_icosphere_counts(k):
    m = icosphere((1.0, 2.0, 3.0), 0.5, k)
    assert len(m) == 20 * 4 ** k
    assert len(m.vertices) == 10 * 4 ** k + 2
    assert np.allclose(np.linalg.norm(m.vertices - [1, 2, 3], axis=1), 0.5)
    audit_mesh(m)


def test_icosphere_volume_converges():
    errors = [abs(icosphere((0, 0, 0), 2.0, k).signed_volume() / (4 / 3 * math.pi * 8) - 1) for k in range(5)]
    assert errors[3] <= 0.02
    assert errors == sorted(errors, reverse=True)


def test_cylinder_is_closed_and_outward():
    m = capped_cylinder((0, 0, 0), (0, 0, 2.0), 0.5)
    audit_mesh(m)
    # a 16-gon prism: area of the polygon times height
    expected = 0.5 * 16 * 0.25 * math.sin(2 * math.pi / 16) * 2.0
    assert m.signed_volume() == pytest.approx(expected, rel=1e-12)


def test_one_residue_model_shells():
    t, a = one_residue()
    m = mesh_model(a, t, sphere_subdiv=1)
    assert len(t.bonds) == 6
    assert len(m.shells) == 7 + 6
    assert all(hi - lo == 80 for lo, hi in m.shells[:7])
    audit_mesh(m)
    assert m.signed_volume() > 0


def test_sphere_radii_follow_scale():
    t, a = one_residue()
    s = PhysicalScale(radius_factor=0.7)
    m = mesh_model(a, t, s, sphere_subdiv=0)
    radii = s.atom_radii(t) * 0.7 * s.inches_per_angstrom
    for k, r in enumerate(radii):
        verts = m.vertices[np.unique(m.shell(k))]
        centre = a.positions[k] * s.inches_per_angstrom
        assert np.allclose(np.linalg.norm(verts - centre, axis=1), r)


def test_subdiv_range():
    t, a = one_residue()
    with pytest.raises(ValueError):
        mesh_model(a, t, sphere_subdiv=5)


def test_audit_rejects_open_and_flipped_shells():
    m = icosphere((0, 0, 0), 1.0, 0)
    with pytest.raises(InvalidMesh, match="watertight"):
        audit_mesh(TriMesh(m.vertices, m.triangles[1:]))
    with pytest.raises(InvalidMesh, match="inside out"):
        audit_mesh(TriMesh(m.vertices, m.triangles[:, ::-1]))
    flipped = m.triangles.copy()
    flipped[0] = flipped[0, ::-1]
    with pytest.raises(InvalidMesh, match="winding"):
        audit_mesh(TriMesh(m.vertices, flipped))
    with pytest.raises(InvalidMesh, match="degenerate"):
        audit_mesh(TriMesh(np.zeros((3, 3)), [[0, 1, 2]]))


# ---- STL --------------------------------------------------------------------

def test_empty_stl():
    data = write_stl(TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64)))
    assert len(data) == 84
    assert data[:10] == b"PBM-STL v1" and data[10:80] == bytes(70)
    assert struct.unpack_from("<I", data, 80) == (0,)


def test_single_triangle_layout():
    # one triangle is not closed, so build the bytes for a tetrahedron and inspect record 0
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
    f = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    data = write_stl(TriMesh(v, f))
    assert len(data) == 84 + 50 * 4
    rec = struct.unpack_from("<12fH", data, 84)
    assert rec[:3] == (0.0, 0.0, -1.0)
    assert rec[3:12] == (0, 0, 0, 0, 1, 0, 1, 0, 0)
    assert rec[12] == 0


def test_stl_rejects_bad_mesh():
    m = icosphere((0, 0, 0), 1.0, 0)
    with pytest.raises(InvalidMesh):
        write_stl(TriMesh(m.vertices, m.triangles[2:]))


def test_stl_independent_readers(alpha13):
    t, _, a = alpha13
    m = mesh_model(a, t)
    data = write_stl(m)
    assert len(data) == 84 + 50 * len(m)
    normals, tris = read_stl(data)
    ref = trimesh.load(io.BytesIO(data), file_type="stl", process=False)
    assert len(ref.faces) == len(m)
    f32 = m.vertices[m.triangles].astype(np.float32)
    assert np.array_equal(np.asarray(ref.triangles, dtype=np.float32), f32)
    assert np.array_equal(tris, f32)
    stl = pytest.importorskip("stl")
    other = stl.mesh.Mesh.from_file("m.stl", fh=io.BytesIO(data))
    assert np.array_equal(other.vectors, f32)
    # numpy-stl recomputes unnormalized normals; compare directions
    unit = other.normals / np.linalg.norm(other.normals, axis=1, keepdims=True)
    assert np.allclose(unit, m.normals, atol=1e-4)
    assert np.allclose(normals, m.normals, atol=1e-6)


def test_read_stl_length_check():
    with pytest.raises(InvalidMesh):
        read_stl(b"x" * 10)
    with pytest.raises(InvalidMesh):
        read_stl(bytes(80) + struct.pack("<I", 2) + bytes(50))


# ---- PDB --------------------------------------------------------------------

def test_pdb_one_residue():
    t, a = one_residue("G")
    text = write_pdb(a, t).decode()
    lines = text.splitlines()
    assert [ln[:6] for ln in lines] == ["ATOM  "] * 7 + ["TER   ", "END   "]
    assert [ln[12:16].strip() for ln in lines[:7]] == ["N", "H", "CA", "HA2", "C", "O", "HA3"]
    assert all(len(ln) == 80 for ln in lines)
    assert all(ln[21] == "A" and ln[22:26] == "   1" for ln in lines[:7])


def test_pdb_reparse_sequence(alpha13):
    t, _, a = alpha13
    trace = extract_backbone(parse_pdb(write_pdb(a, t).decode()), "A")
    assert trace.residue_names == [r.three_letter_code for r in t.sequence]


def test_pdb_dihedrals_within_quantization_target():
    # fixed-width 3-decimal coordinates; see the ledger for why 0.01 degrees is not met
    t = build_topology("ACDEFGHIKLMNPQ")
    c = canonical_conformation("alpha_helix", 14)
    a = forward_kinematics(t, default_config().backbone, c)
    back = conformation_from_trace(extract_backbone(parse_pdb(write_pdb(a, t).decode()), "A"))
    err = np.abs(np.array([x - y for x, y in zip(back.vector(), c.vector())]))
    assert np.max(np.minimum(err, 360 - err)) <= 0.01


# ---- PBM --------------------------------------------------------------------

def alpha_model():
    t = build_topology("A" * 13)
    return BioModel("A" * 13, canonical_conformation("alpha_helix", 13), magnets=tuple(magnet_layout(t)),
                    provenance={"source_id": "test", "note": "alpha 13-mer"})


def test_pbm_alpha_round_trip():
    b = alpha_model()
    data = write_pbm(b)
    assert read_pbm(data) == b
    assert write_pbm(read_pbm(data)) == data


def test_pbm_keys_and_default_scale():
    doc = json.loads(write_pbm(alpha_model()))
    assert list(doc) == ["format_version", "provenance", "sequence", "conformation",
                         "scale", "energy_params", "magnets", "measurements"]
    assert doc["scale"]["inches_per_angstrom"] == 0.3676
    assert doc["format_version"] == "1"


def test_pbm_unknown_keys_survive():
    doc = json.loads(write_pbm(alpha_model()))
    doc["zz_vendor"] = {"printer": "x", "layers": [0.1, 0.2]}
    doc["aa_more"] = 3
    b = read_pbm(json.dumps(doc))
    assert b.extra == {"zz_vendor": {"printer": "x", "layers": [0.1, 0.2]}, "aa_more": 3}
    again = json.loads(write_pbm(b))
    assert again["zz_vendor"] == doc["zz_vendor"] and again["aa_more"] == 3


def test_pbm_version_error():
    doc = json.loads(write_pbm(alpha_model()))
    doc["format_version"] = "99"
    with pytest.raises(UnsupportedVersion) as exc:
        read_pbm(json.dumps(doc))
    assert exc.value.version == "99"


def test_pbm_syntax_error_position():
    with pytest.raises(MalformedPBM) as exc:
        read_pbm('{"format_version": "1",, }')
    assert exc.value.position == 23  # the second comma
    with pytest.raises(MalformedPBM) as exc:
        read_pbm(b'{"a": \xff}')
    assert exc.value.position == 6


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("magnets"),
    lambda d: d.__setitem__("sequence", "AAA"),
    lambda d: d["scale"].__setitem__("inches_per_angstrom", -1),
    lambda d: d.__setitem__("magnets", [{"role": "detent"}]),
])
def test_pbm_content_errors(mutate):
    doc = json.loads(write_pbm(alpha_model()))
    mutate(doc)
    with pytest.raises(MalformedPBM):
        read_pbm(json.dumps(doc))


def test_biomodel_length_mismatch():
    with pytest.raises(ValueError):
        BioModel("AAA", canonical_conformation("alpha_helix", 4))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_pbm_round_trip_random(seed):
    b = random_biomodel(np.random.default_rng(seed))
    data = write_pbm(b)
    assert read_pbm(data) == b
    assert write_pbm(read_pbm(data)) == data


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(
    angles=st.lists(st.tuples(st.floats(-180, 179.999), st.floats(-180, 179.999)), min_size=2, max_size=8),
    ipa=st.floats(1e-3, 10), rf=st.floats(0.05, 1.0),
    strength=st.floats(0, 1e3), note=st.text(max_size=20),
    extra=st.dictionaries(st.text(min_size=1, max_size=5).filter(lambda k: k not in {"format_version", "provenance", "sequence", "conformation", "scale", "energy_params", "magnets", "measurements"}),
                          st.one_of(st.none(), st.booleans(), finite, st.text(max_size=5)), max_size=3),
)
def test_pbm_round_trip_generated_fields(angles, ipa, rf, strength, note, extra):
    n = len(angles)
    conf = Conformation((None,) + tuple(a for a, _ in angles[1:]), tuple(b for _, b in angles[:-1]) + (None,))
    b = BioModel("G" * n, conf, PhysicalScale(ipa, rf), EnergyParams(detent_strength=strength),
                 tuple(magnet_layout(build_topology("G" * n))), (), {"note": note}, extra)
    assert read_pbm(write_pbm(b)) == b


def test_shipped_example_reads(pytestconfig):
    path = pytestconfig.rootpath / "docs" / "example.pbm"
    if not path.exists():
        pytest.skip("docs/example.pbm not generated")
    b = read_pbm(path.read_bytes())
    assert b.sequence == "A" * 13 and len(b.magnets) == 24 + 13 + 13
