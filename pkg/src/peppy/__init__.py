"""To-scale, 3D-printable foldable polypeptide models from sequences or PDB files."""

__version__ = "0.1.0"

from .chainmodel import (
    BackboneGeometry,
    ChainTopology,
    Conformation,
    ResidueSpec,
    build_topology,
    canonical_conformation,
    default_config,
    load_config,
    lookup_residue,
)
from .errors import PeppyError
from .fold import EnergyParams, FoldResult, gradient, minimize, snap, total_energy
from .geometry import (
    AtomSites,
    PhysicalScale,
    detect_clashes,
    find_hbonds,
    forward_kinematics,
    from_physical,
    measure,
    to_physical,
)
from .pdbio import compute_dihedral, conformation_from_trace, extract_backbone, parse_pdb

__all__ = [
    "BackboneGeometry", "ChainTopology", "Conformation", "ResidueSpec", "build_topology",
    "canonical_conformation", "default_config", "load_config", "lookup_residue", "PeppyError",
    "EnergyParams", "FoldResult", "gradient", "minimize", "snap", "total_energy",
    "AtomSites", "PhysicalScale", "detect_clashes", "find_hbonds", "forward_kinematics",
    "from_physical", "measure", "to_physical",
    "compute_dihedral", "conformation_from_trace", "extract_backbone", "parse_pdb",
]
