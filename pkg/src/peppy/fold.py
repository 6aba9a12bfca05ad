"""Detent energy model and torsion-space minimizer.

Energy terms, all dimensionless:

* detent wells, one Gaussian per magnet-biased angle on every phi/psi;
* hard-sphere overlap penalty ``k_c * overlap**2``;
* backbone H-bond attraction, ``-k_h`` per close O/N pair, ramped to zero;
* optional gravity, ``coefficient * (centre-of-mass height above lowest atom)``.

Angles are in degrees throughout, so gradients are per degree.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, TextIO

import numpy as np

from . import kernels
from .chainmodel import (
    ATOM_NAMES,
    ATOMS_PER_RESIDUE,
    BackboneGeometry,
    ChainTopology,
    Conformation,
    SideChainClass,
    default_config,
    wrap_angle,
)
from .errors import ShapeMismatch
from .geometry import PhysicalScale, forward_kinematics_vector, hbond_candidates

DEG = math.pi / 180.0
DEFAULT_TOLERANCE = 1e-4
DEFAULT_MAX_ITERS = 5000
MAX_MOVE_DEG = 5.0


def _default_detents():
    return default_config().conformations.detents()


@dataclass(frozen=True)
class EnergyParams:
    """Weights of the energy terms; only their ratios matter.

    ``detents`` holds the (phi, psi) rest pairs; each angle kind gets one well
    per entry.  ``hbond_ramp`` is the width in angstrom over which an H-bond
    fades from full strength to zero at ``hbond_range``.
    """

    detent_strength: float = 1.0
    detent_width: float = 20.0
    clash_stiffness: float = 100.0
    hbond_strength: float = 0.5
    hbond_range: float = 3.5
    hbond_ramp: float = 0.25
    gravity_enabled: bool = False
    gravity_coefficient: float = 0.0
    detents: tuple[tuple[float, float], ...] = field(default_factory=_default_detents)

    def __post_init__(self):
        for name in ("detent_strength", "clash_stiffness", "hbond_strength", "gravity_coefficient"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.detent_width > 0:
            raise ValueError("detent_width must be positive")
        if not 0 < self.hbond_ramp <= self.hbond_range:
            raise ValueError("hbond_ramp must be in (0, hbond_range]")
        object.__setattr__(self, "detents", tuple((float(p), float(q)) for p, q in self.detents))

    def replace(self, **changes):
        return EnergyParams(**{**asdict(self), **changes})

    def to_dict(self):
        d = asdict(self)
        d["detents"] = [list(p) for p in self.detents]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "detents" in d:
            d["detents"] = tuple(tuple(p) for p in d["detents"])
        return cls(**d)


@dataclass(frozen=True)
class EnergyTerms:
    detent: float
    clash: float
    hbond: float
    gravity: float

    @property
    def total(self):
        return self.detent + self.clash + self.hbond + self.gravity


class EnergyModel:
    """Energy and gradient of one chain as functions of its angle vector.

    Building this once caches everything that does not depend on the angles,
    which is what the minimizer wants.
    """

    def __init__(self, t: ChainTopology, p: EnergyParams | None = None,
                 s: PhysicalScale | None = None, g: BackboneGeometry | None = None):
        self.topology = t
        self.params = p = p or EnergyParams()
        self.scale = s = s or PhysicalScale()
        self.geometry = g or default_config().backbone
        self.n = t.n_residues
        self.size = 2 * (self.n - 1)
        self.radii = s.atom_radii(t)
        self.excluded = np.ascontiguousarray(t.exclusion_mask, dtype=np.uint8)
        self.hb_o, self.hb_n = hbond_candidates(t)
        n_phi = self.n - 1
        self.kind_is_phi = np.arange(self.size) < n_phi
        det = np.array(p.detents, dtype=float).reshape(-1, 2)
        self.centers = np.where(self.kind_is_phi[:, None], det[:, 0][None, :], det[:, 1][None, :])
        self.masses = self._masses()
        # axis atoms and first moving atom of every rotatable dihedral
        self.axis = np.array([d.atoms[1:3] for d in t.rotatable_dihedrals], dtype=np.int64).reshape(-1, 2)
        self.first_moving = np.array(
            [d.residue_index * ATOMS_PER_RESIDUE + ATOM_NAMES.index("HA" if d.kind == "phi" else "O")
             for d in t.rotatable_dihedrals],
            dtype=np.int64,
        )

    def _masses(self):
        table = default_config().element_masses
        m = np.empty(len(self.topology.atoms))
        for k, atom in enumerate(self.topology.atoms):
            if atom.name == "SC":
                res = self.topology.sequence[atom.residue_index]
                m[k] = table["H"] if res.side_chain_class is SideChainClass.HYDROGEN else res.side_chain_mass
            else:
                m[k] = table[atom.element]
        return m

    def check(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        if len(x) != self.size:
            raise ShapeMismatch(f"expected {self.size} angles, got {len(x)}")
        return x

    def positions(self, x):
        return forward_kinematics_vector(self.topology, self.geometry, x)

    def _detent(self, x):
        p = self.params
        if self.size == 0 or not len(self.centers[0]) or p.detent_strength == 0:
            return 0.0, np.zeros(self.size)
        delta = wrap_angle(x[:, None] - self.centers)
        w = np.exp(-(delta * delta) / (2.0 * p.detent_width ** 2))
        e = -p.detent_strength * float(w.sum())
        grad = p.detent_strength * np.sum(w * delta, axis=1) / p.detent_width ** 2
        return e, grad

    def _gravity(self, pos):
        p = self.params
        if not p.gravity_enabled or p.gravity_coefficient == 0:
            return 0.0, None
        z = pos[:, 2]
        total = self.masses.sum()
        low = int(np.argmin(z))
        e = p.gravity_coefficient * (float(self.masses @ z) / total - z[low])
        grad = np.zeros_like(pos)
        grad[:, 2] = p.gravity_coefficient * self.masses / total
        grad[low, 2] -= p.gravity_coefficient
        return e, grad

    def _cartesian(self, pos):
        p = self.params
        e_clash, e_hb, grad = kernels.pair_terms(
            pos, self.radii, self.excluded, self.scale.radius_factor, p.clash_stiffness,
            self.hb_o, self.hb_n, p.hbond_strength, p.hbond_range, p.hbond_ramp,
        )
        e_grav, g_grav = self._gravity(pos)
        if g_grav is not None:
            grad = grad + g_grav
        return e_clash, e_hb, e_grav, grad

    def terms(self, x) -> EnergyTerms:
        x = self.check(x)
        e_det, _ = self._detent(x)
        e_clash, e_hb, e_grav, _ = self._cartesian(self.positions(x))
        return EnergyTerms(e_det, e_clash, e_hb, e_grav)

    def energy(self, x) -> float:
        return self.terms(x).total

    def energy_and_gradient(self, x):
        x = self.check(x)
        e_det, g = self._detent(x)
        if self.size == 0:
            return e_det, g
        pos = self.positions(x)
        e_clash, e_hb, e_grav, cart = self._cartesian(pos)
        return e_det + e_clash + e_hb + e_grav, g + self._torques(pos, cart)

    def gradient(self, x):
        return self.energy_and_gradient(x)[1]

    def _torques(self, pos, cart):
        # Turning dihedral k by dtheta rotates every downstream atom about its
        # bond axis u through p: dx = dtheta * u x (x - p), so
        # dE/dtheta = u . sum_moving (x - p) x g.  Suffix sums make that O(n).
        if not np.any(cart):
            return np.zeros(self.size)
        torque = np.cross(pos, cart)
        suffix_t = np.cumsum(torque[::-1], axis=0)[::-1]
        suffix_g = np.cumsum(cart[::-1], axis=0)[::-1]
        b, c = self.axis[:, 0], self.axis[:, 1]
        u = pos[c] - pos[b]
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        first = self.first_moving
        moment = suffix_t[first] - np.cross(pos[c], suffix_g[first])
        # phi(i) moves HA, C, O, SC of residue i and all later residues: exactly
        # the suffix from HA(i). psi(i) moves the suffix from O(i) minus SC(i).
        psi = ~self.kind_is_phi
        if np.any(psi):
            sc = first[psi] + (ATOM_NAMES.index("SC") - ATOM_NAMES.index("O"))
            pc = pos[c[psi]]
            moment[psi] -= np.cross(pos[sc] - pc, cart[sc])
        return np.einsum("ij,ij->i", u, moment) * DEG


def _model(c: Conformation, t: ChainTopology, p, s, g=None):
    if len(c) != t.n_residues:
        raise ShapeMismatch(f"conformation has {len(c)} residues, topology has {t.n_residues}")
    return EnergyModel(t, p, s, g)


def total_energy(c: Conformation, t: ChainTopology, p: EnergyParams | None = None,
                 s: PhysicalScale | None = None) -> float:
    return _model(c, t, p, s).energy(c.vector())


def energy_terms(c: Conformation, t: ChainTopology, p: EnergyParams | None = None,
                 s: PhysicalScale | None = None) -> EnergyTerms:
    return _model(c, t, p, s).terms(c.vector())


def gradient(c: Conformation, t: ChainTopology, p: EnergyParams | None = None,
             s: PhysicalScale | None = None) -> np.ndarray:
    """dE/dtheta per degree, in rotatable-dihedral order (all phi, then all psi)."""
    return _model(c, t, p, s).gradient(c.vector())


@dataclass(frozen=True)
class Step:
    iteration: int
    energy: float
    grad_norm: float
    angles: tuple[float, ...]


@dataclass(frozen=True)
class FoldResult:
    conformation: Conformation
    energy: float
    iterations: int
    converged: bool
    grad_norm: float


def minimize(c0: Conformation, t: ChainTopology, p: EnergyParams | None = None,
             s: PhysicalScale | None = None, tolerance: float = DEFAULT_TOLERANCE,
             max_iters: int = DEFAULT_MAX_ITERS, *, initial_step: float = 100.0,
             max_move_deg: float = MAX_MOVE_DEG, probe_deg: float = 1.0,
             on_step: Callable[[Step], None] | None = None,
             geometry: BackboneGeometry | None = None) -> FoldResult:
    """Gradient descent with a backtracking (Armijo) line search.

    Each line search starts from the Barzilai-Borwein step of the previous
    move (twice the last step when curvature is not positive) and halves it
    until the sufficient-decrease test passes.  No angle moves more than
    ``max_move_deg`` in one step, so the search cannot hop over a barrier
    into a neighbouring well.
    Once the gradient infinity-norm drops to ``tolerance`` the point is
    probed by moving each angle ``probe_deg`` either way; any probe that
    lowers the energy is taken and descent resumes.  This stops the search
    from settling on the flat far tails of the wells, where the gradient is
    tiny but the point is no minimum.  Energy never increases between
    accepted steps.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    model = _model(c0, t, p, s, geometry)
    x = c0.vector()
    e, g = model.energy_and_gradient(x)
    gnorm = float(np.max(np.abs(g))) if len(g) else 0.0
    if on_step:
        on_step(Step(0, e, gnorm, tuple(map(float, x))))
    step = initial_step
    converged = False
    it = 0
    while it < max_iters:
        if gnorm <= tolerance:
            moved = _probe(model, x, e, probe_deg)
            if moved is None:
                converged = True
                break
            x, e = moved
            g = model.gradient(x)
            gnorm = float(np.max(np.abs(g)))
            it += 1
            if on_step:
                on_step(Step(it, e, gnorm, tuple(map(float, x))))
            continue
        gg = float(g @ g)
        accepted = False
        step = min(step, max_move_deg / gnorm)
        while step * gnorm > 1e-12:
            x_new = wrap_angle(x - step * g)
            e_new = model.energy(x_new)
            if e_new <= e - 1e-4 * step * gg or (e_new < e and step * gnorm < 1e-6):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break  # line search stalled above tolerance
        e, g_new = model.energy_and_gradient(x_new)
        sk = wrap_angle(x_new - x)
        yk = g_new - g
        sy = float(sk @ yk)
        step = float(sk @ sk) / sy if sy > 0 else 2.0 * step
        x, g = x_new, g_new
        gnorm = float(np.max(np.abs(g)))
        it += 1
        if on_step:
            on_step(Step(it, e, gnorm, tuple(map(float, x))))
    if not converged and gnorm <= tolerance and it >= max_iters:
        converged = _probe(model, x, e, probe_deg) is None
    return FoldResult(Conformation.from_vector(t.n_residues, x), e, it, converged, gnorm)


def _probe(model: EnergyModel, x, e, probe_deg):
    best = None
    for k in range(len(x)):
        for sign in (1.0, -1.0):
            trial = x.copy()
            trial[k] = wrap_angle(trial[k] + sign * probe_deg)
            e_trial = model.energy(trial)
            if e_trial < e and (best is None or e_trial < best[1]):
                best = (trial, e_trial)
    return best


def snap(c: Conformation, detent_table: Iterable[tuple[float, float]] | None = None) -> Conformation:
    """Replace each (phi, psi) by the nearest detent pair under wrapped distance.

    Terminal residues have only one angle; the distance then uses that angle
    alone.  Ties go to the earlier table entry, so list the alpha pair first.
    """
    table = list(detent_table) if detent_table is not None else list(_default_detents())
    if not table:
        raise ValueError("detent table is empty")
    out = []
    for phi, psi in c.pairs():
        best, best_d = None, math.inf
        for dphi, dpsi in table:
            d = 0.0
            if phi is not None:
                d += wrap_angle(phi - dphi) ** 2
            if psi is not None:
                d += wrap_angle(psi - dpsi) ** 2
            if d < best_d:
                best, best_d = (dphi, dpsi), d
        out.append(best)
    return Conformation.from_pairs(out)


TRAJECTORY_HEADER = "# iteration energy grad_inf_norm angles(phi 2..n, psi 1..n-1; degrees)"


def write_trajectory(steps: Iterable[Step], stream: TextIO):
    """One whitespace-separated line per accepted step."""
    stream.write(TRAJECTORY_HEADER + "\n")
    for st in steps:
        fields = [str(st.iteration), repr(float(st.energy)), repr(float(st.grad_norm))]
        fields += [repr(float(a)) for a in st.angles]
        stream.write(" ".join(fields) + "\n")


def read_trajectory(stream: TextIO) -> list[Step]:
    steps = []
    for line in stream:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        steps.append(Step(int(parts[0]), float(parts[1]), float(parts[2]), tuple(float(v) for v in parts[3:])))
    return steps
