"""Fabrication back end: magnets, meshes, STL/PDB export and the PBM format."""

from .magnets import ACCEPTOR, DETENT, DONOR, N_OUT, S_OUT, MagnetSpec, magnet_layout
from .mesh import TriMesh, audit_mesh, capped_cylinder, icosphere, mesh_model, read_stl, write_stl
from .pbm import FORMAT_VERSION, BioModel, read_pbm, write_pbm
from .pdbout import write_pdb

__all__ = [
    "ACCEPTOR", "DETENT", "DONOR", "N_OUT", "S_OUT", "MagnetSpec", "magnet_layout",
    "TriMesh", "audit_mesh", "capped_cylinder", "icosphere", "mesh_model", "read_stl", "write_stl",
    "FORMAT_VERSION", "BioModel", "read_pbm", "write_pbm", "write_pdb",
]
