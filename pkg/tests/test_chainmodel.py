import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from peppy.chainmodel import (
    ATOM_NAMES,
    BackboneGeometry,
    Conformation,
    SideChainClass,
    build_topology,
    canonical_conformation,
    default_config,
    load_config,
    lookup_residue,
    wrap_angle,
)
from peppy.errors import EmptyChain, UnknownConformation, UnknownResidue

# IUPAC-IUB standard amino-acid codes, typed in independently of the package data.
IUPAC = {
    "A": "ALA", "R": "ARG", "N": "ASN", "D": "ASP", "C": "CYS", "Q": "GLN", "E": "GLU",
    "G": "GLY", "H": "HIS", "I": "ILE", "L": "LEU", "K": "LYS", "M": "MET", "F": "PHE",
    "P": "PRO", "S": "SER", "T": "THR", "W": "TRP", "Y": "TYR", "V": "VAL",
}
ONE_LETTER = "".join(sorted(IUPAC))


def test_residue_table_matches_iupac():
    residues = default_config().residues
    assert len(residues) == 20
    assert {r.one_letter_code: r.three_letter_code for r in residues} == IUPAC
    for r in residues:
        assert r.side_chain_radius > 0


def test_side_chain_classes():
    assert lookup_residue("A").side_chain_class is SideChainClass.METHYL
    assert lookup_residue("GLY").side_chain_class is SideChainClass.HYDROGEN
    others = {r.one_letter_code for r in default_config().residues} - {"A", "G"}
    assert all(lookup_residue(c).side_chain_class is SideChainClass.GENERIC_PLUG for c in others)


@pytest.mark.parametrize("code", ["a", "ala", "Ala", " ALA "])
def test_lookup_is_case_insensitive(code):
    assert lookup_residue(code).three_letter_code == "ALA"


@pytest.mark.parametrize("code", ["Z", "XYZ", "", "B"])
def test_lookup_unknown(code):
    with pytest.raises(UnknownResidue) as exc:
        lookup_residue(code)
    assert repr(code) in str(exc.value) or code == ""


@pytest.mark.parametrize("seq, atoms, dihedrals", [("A", 7, 0), ("AAA", 21, 4), ("A" * 13, 91, 24)])
def test_topology_counts(seq, atoms, dihedrals):
    t = build_topology(seq)
    assert len(t.atoms) == atoms
    assert len(t.rotatable_dihedrals) == dihedrals


def test_three_residue_dihedral_order():
    t = build_topology("AAA")
    assert [(d.kind, d.residue_index) for d in t.rotatable_dihedrals] == [
        ("phi", 1), ("phi", 2), ("psi", 0), ("psi", 1)
    ]


def test_sequence_forms_agree():
    a = build_topology("GAK")
    assert build_topology("GLY-ALA-LYS").to_json() == a.to_json()
    assert build_topology(["G", "ALA", "lys"]).to_json() == a.to_json()


def test_empty_and_bad_sequences():
    with pytest.raises(EmptyChain):
        build_topology("")
    with pytest.raises(UnknownResidue, match="'Z'"):
        build_topology("AZA")


@settings(max_examples=60, deadline=None)
@given(st.text(alphabet=ONE_LETTER, min_size=1, max_size=50))
def test_topology_invariants(seq):
    t = build_topology(seq)
    n = len(seq)
    assert len(t.atoms) == 7 * n
    assert len(t.rotatable_dihedrals) == 2 * (n - 1)
    assert [a.name for a in t.atoms] == list(ATOM_NAMES) * n
    g = nx.Graph(list(t.bonds))
    g.add_nodes_from(range(len(t.atoms)))
    assert nx.is_connected(g)
    for a, b in t.bonds:
        assert abs(t.atoms[a].residue_index - t.atoms[b].residue_index) <= 1
    for d in t.rotatable_dihedrals:
        i = d.residue_index
        if d.kind == "phi":
            expected = (t.atom_index(i - 1, "C"), t.atom_index(i, "N"), t.atom_index(i, "CA"), t.atom_index(i, "C"))
        else:
            expected = (t.atom_index(i, "N"), t.atom_index(i, "CA"), t.atom_index(i, "C"), t.atom_index(i + 1, "N"))
        assert d.atoms == expected
    assert build_topology(seq).to_json() == t.to_json()


def test_graph_distance_matches_networkx():
    t = build_topology("GAWKP")
    g = nx.Graph(list(t.bonds))
    lengths = dict(nx.all_pairs_shortest_path_length(g))
    for i in range(len(t.atoms)):
        for j in range(len(t.atoms)):
            assert t.graph_distance[i, j] == lengths[i][j]
    assert np.array_equal(t.exclusion_mask, t.graph_distance <= 3)


def test_canonical_alpha():
    c = canonical_conformation("alpha_helix", 13)
    assert c.phi[0] is None and c.psi[-1] is None
    assert set(c.phi[1:]) == {-57.0} and set(c.psi[:-1]) == {-47.0}


def test_canonical_single_residue():
    c = canonical_conformation("alpha_helix", 1)
    assert c.phi == (None,) and c.psi == (None,)
    assert len(c.vector()) == 0


def test_canonical_turn_sits_in_middle():
    c = canonical_conformation("beta_turn_I", 6)
    pairs = c.pairs()
    assert pairs[2] == (-60.0, -30.0)
    assert pairs[3] == (-90.0, 0.0)
    assert pairs[1] == (-139.0, 135.0)


def test_unknown_conformation():
    with pytest.raises(UnknownConformation):
        canonical_conformation("spiral", 5)


def test_detents_alpha_first():
    assert default_config().conformations.detents() == ((-57.0, -47.0), (-139.0, 135.0))


def test_backbone_defaults_and_validation():
    g = default_config().backbone
    assert (g.n_ca, g.ca_c, g.c_n, g.c_o, g.n_h) == (1.458, 1.525, 1.329, 1.231, 1.010)
    assert g.omega_deg == 180.0
    with pytest.raises(ValueError):
        BackboneGeometry(**{**g.as_dict(), "n_ca": 2.5})
    with pytest.raises(ValueError):
        BackboneGeometry(**{**g.as_dict(), "omega_deg": 170.0})


def test_conformation_validation():
    with pytest.raises(ValueError):
        Conformation((-57.0, -57.0), (-47.0, None))  # phi of residue 1 must be absent
    with pytest.raises(ValueError):
        Conformation((None, 180.0), (-47.0, None))  # 180 is outside [-180, 180)
    c = Conformation.from_pairs([(10, 190), (-190, 5)])
    assert c.psi[0] == -170.0 and c.phi[1] == 170.0


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_wrap_angle_range(x):
    w = wrap_angle(x)
    assert -180.0 <= w < 180.0
    assert abs(((x - w) / 360.0) - round((x - w) / 360.0)) < 1e-6


def test_config_override(tmp_path, monkeypatch):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"backbone": {"n_ca": 1.47}}))
    assert load_config(path).backbone.n_ca == 1.47
    assert load_config(path).backbone.ca_c == 1.525
    monkeypatch.setenv("PEPPY_CONFIG", str(path))
    assert load_config().backbone.n_ca == 1.47
    monkeypatch.delenv("PEPPY_CONFIG")
    assert load_config().backbone.n_ca == 1.458
