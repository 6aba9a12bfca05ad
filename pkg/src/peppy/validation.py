"""Acceptance suite shared by ``peppy validate`` and the test suite.

Each criterion returns a :class:`CriterionResult` made of sub-checks; the
criterion passes only when every sub-check does.
"""

from __future__ import annotations

import math
import os
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chainmodel import Conformation, build_topology, canonical_conformation, default_config, wrap_angle
from .errors import PeppyError
from .fab import BioModel, MagnetSpec, audit_mesh, icosphere, magnet_layout, mesh_model, read_pbm, write_pbm
from .fab.mesh import TriMesh, write_stl
from .fab.pdbout import write_pdb
from .fold import EnergyModel, EnergyParams, minimize
from .geometry import (
    AtomSites,
    Measurement,
    PhysicalScale,
    detect_clashes,
    find_hbonds,
    forward_kinematics,
    from_physical,
    measure,
    to_physical,
)
from .pdbio import conformation_from_trace, extract_backbone, parse_pdb, trace_from_sites
from .rama import compare, feasibility_map, histogram

FIXTURE_ENV = "PEPPY_FIXTURES"
SEED = 20240611


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self):
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name, passed, detail):
        self.checks.append(Check(name, bool(passed), detail))

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number}. {self.title} ({self.seconds:.1f} s)"


def fixture_dirs():
    dirs = []
    if os.environ.get(FIXTURE_ENV):
        dirs.append(Path(os.environ[FIXTURE_ENV]))
    dirs.append(Path.cwd() / "tests" / "fixtures")
    dirs.append(Path(__file__).resolve().parents[2] / "tests" / "fixtures")
    return dirs


def find_fixture(name):
    for d in fixture_dirs():
        for candidate in (d / name, d / name.lower(), d / name.upper()):
            if candidate.is_file():
                return candidate
    return None


def _geom():
    return default_config().backbone


def _alpha13():
    t = build_topology("A" * 13)
    c = canonical_conformation("alpha_helix", 13)
    return t, c, forward_kinematics(t, _geom(), c)


def _max_wrapped(a, b):
    diffs = [abs(wrap_angle(x - y)) for x, y in zip(a, b) if x is not None and y is not None]
    return max(diffs) if diffs else 0.0


def criterion_1():
    r = CriterionResult(1, "Scale conversion (1 A = 0.3676 in)")
    inch = to_physical(18.362)
    r.add("18.362 A -> in", abs(inch - 6.750) <= 0.001, f"{inch:.4f} in (expected 6.750 +/- 0.001)")
    ang = from_physical(4.853)
    r.add("4.853 in -> A", abs(ang - 13.202) <= 0.001, f"{ang:.4f} A (expected 13.202 +/- 0.001)")
    return r


def criterion_2():
    r = CriterionResult(2, "Helix span of 13-residue alpha poly-Ala")
    t, _, a = _alpha13()
    m = measure(a, t, "helix-span")
    r.add("CA1-CA13 in [17.8, 19.0] A", 17.8 <= m.value_angstrom <= 19.0,
          f"{m.value_angstrom:.3f} A = {m.value_inch:.3f} in (model target 6.75 in, crystal 18.4 A)")
    return r


def criterion_3():
    r = CriterionResult(3, "Hydrogen-bond ladder of the same helix")
    t, _, a = _alpha13()
    hb = find_hbonds(a, t)
    expected = {(i + 4, i) for i in range(9)}
    r.add("exactly the 9 i->i+4 pairs", set(hb.pairs()) == expected and len(hb) == 9,
          f"{len(hb)} bonds: {hb.pairs()}")
    mean = hb.mean_distance()
    r.add("mean O-N in [2.85, 3.30] A", 2.85 <= mean <= 3.30,
          f"{mean:.3f} A (crystal 3.00 +/- 0.12, model 3.18 +/- 0.11)")
    return r


def random_conformation(rng, n):
    return Conformation.from_vector(n, rng.uniform(-180.0, 180.0, 2 * (n - 1)))


def criterion_4(n_cases=200):
    r = CriterionResult(4, "Dihedral round trip")
    rng = np.random.default_rng(SEED + 4)
    geom = _geom()
    worst_direct = worst_pdb = 0.0
    codes = [res.one_letter_code for res in default_config().residues]
    for _ in range(n_cases):
        n = int(rng.integers(4, 21))
        seq = "".join(rng.choice(codes, n))
        t = build_topology(seq)
        c = random_conformation(rng, n)
        a = forward_kinematics(t, geom, c)
        back = conformation_from_trace(trace_from_sites(a.positions, [s.three_letter_code for s in t.sequence]))
        worst_direct = max(worst_direct, _max_wrapped(c.phi + c.psi, back.phi + back.psi))
        parsed = parse_pdb(write_pdb(a, t))
        via = conformation_from_trace(extract_backbone(parsed, "A"))
        worst_pdb = max(worst_pdb, _max_wrapped(c.phi + c.psi, via.phi + via.psi))
    r.add("direct <= 1e-6 deg", worst_direct <= 1e-6, f"max error {worst_direct:.2e} deg over {n_cases} chains")
    r.add("through PDB text <= 0.01 deg", worst_pdb <= 0.01, f"max error {worst_pdb:.4f} deg")
    return r


def criterion_5():
    r = CriterionResult(5, "Ramachandran feasibility structure")
    maps = {f: feasibility_map(s=PhysicalScale(radius_factor=f)) for f in (0.6, 0.7, 0.8)}
    m = maps[0.7]
    conf = default_config().conformations
    cells = {
        "alpha": conf["alpha_helix"].pairs[0],
        "antiparallel beta": conf["antiparallel_beta"].pairs[0],
        "parallel beta": conf["parallel_beta"].pairs[0],
    }
    for label, pair in cells.items():
        r.add(f"{label} {pair} feasible", bool(m[pair]), f"cell {m.cell(*pair)}")
    r.add("(0, 0) infeasible", not m[(0.0, 0.0)], f"cell {m.cell(0.0, 0.0)}")
    mono = bool(np.all(maps[0.6].values >= maps[0.7].values) and np.all(maps[0.7].values >= maps[0.8].values))
    counts = {f: int(v.values.sum()) for f, v in maps.items()}
    r.add("monotone in radius factor", mono, f"feasible cells {counts}")
    path = find_fixture("2ZTA.pdb")
    if path is None:
        r.add("2ZTA coverage >= 0.9", False,
              "fixture 2ZTA.pdb not found (run scripts/fetch_fixtures.py); no score computed")
    else:
        trace = extract_backbone(parse_pdb(path.read_bytes(), "2ZTA"), "B")
        observed = histogram([conformation_from_trace(trace)], m.bin_width, "2ZTA:B")
        score = compare(observed, m).score
        r.add("2ZTA coverage >= 0.9", score >= 0.9, f"score {score:.3f} over {observed.total()} residues")
    return r


def _fd_gradient(model, x, h=1e-4):
    fd = np.empty_like(x)
    for k in range(len(x)):
        up = x.copy()
        dn = x.copy()
        up[k] += h
        dn[k] -= h
        fd[k] = (model.energy(up) - model.energy(dn)) / (2 * h)
    return fd


def random_clash_free(rng, t, model, max_tries=10000):
    n = t.n_residues
    detents = default_config().conformations.detents()
    for _ in range(max_tries):
        base = np.array([detents[int(rng.integers(len(detents)))] for _ in range(n)])
        c = Conformation.from_pairs(base + rng.uniform(-40, 40, base.shape))
        x = c.vector()
        pos = model.positions(x)
        if not len(detect_clashes(AtomSites(pos), t, model.scale)):
            return x
    raise RuntimeError("could not sample a clash-free conformation")


def criterion_6(n_basin=50, n_grad=100):
    r = CriterionResult(6, "Fold basin and gradient accuracy")
    rng = np.random.default_rng(SEED + 6)
    t, alpha, _ = _alpha13()
    x0 = alpha.vector()
    good = 0
    worst_dev = 0.0
    for _ in range(n_basin):
        start = Conformation.from_vector(13, x0 + rng.uniform(-15.0, 15.0, len(x0)))
        res = minimize(start, t)
        dev = float(np.max(np.abs(wrap_angle(res.conformation.vector() - x0))))
        worst_dev = max(worst_dev, dev)
        good += res.converged and dev <= 2.0
    r.add("basin: 100% within 2 deg", good == n_basin,
          f"{good}/{n_basin} runs converged within 2 deg (worst deviation {worst_dev:.1f} deg)")
    worst = 0.0
    for k in range(n_grad):
        n = 4 + k % 10
        tk = build_topology("A" * n)
        model = EnergyModel(tk)
        x = random_clash_free(rng, tk, model)
        g = model.gradient(x)
        fd = _fd_gradient(model, x)
        worst = max(worst, float(np.max(np.abs(g - fd)) / max(np.max(np.abs(fd)), 1e-300)))
    r.add("gradient vs central FD, rel <= 1e-5", worst <= 1e-5,
          f"worst relative error {worst:.2e} over {n_grad} clash-free conformations")
    return r


def random_biomodel(rng):
    """A randomized, internally consistent BioModel (used for round-trip checks)."""
    codes = [res.one_letter_code for res in default_config().residues]
    n = int(rng.integers(1, 16))
    seq = "".join(rng.choice(codes, n))
    conf = random_conformation(rng, n) if n > 1 else Conformation((None,), (None,))
    radii = {k: float(v) for k, v in zip("CNOHS", rng.uniform(0.9, 2.2, 5))}
    scale = PhysicalScale(float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.3, 1.0)), radii)
    params = EnergyParams(
        detent_strength=float(rng.uniform(0, 3)), detent_width=float(rng.uniform(1, 40)),
        clash_stiffness=float(rng.uniform(0, 500)), hbond_strength=float(rng.uniform(0, 2)),
        hbond_range=3.5, hbond_ramp=float(rng.uniform(0.05, 1.0)),
        gravity_enabled=bool(rng.integers(2)), gravity_coefficient=float(rng.uniform(0, 1)),
        detents=tuple((float(a), float(b)) for a, b in rng.uniform(-180, 180, (int(rng.integers(1, 4)), 2))),
    )
    t = build_topology(seq)
    magnets = tuple(magnet_layout(t, params.detents, scale))
    meas = tuple(
        Measurement(f"ca:1-{int(rng.integers(1, n + 1))}", tuple(float(v) for v in rng.normal(10, 3, rng.integers(0, 4))),
                    scale.inches_per_angstrom)
        for _ in range(int(rng.integers(0, 3)))
    )
    provenance = {"source_id": f"random-{int(rng.integers(1 << 30))}", "note": "generated ångström test"}
    extra = {"x_custom": {"list": [1, 2.5, None, "s"], "flag": True}} if rng.integers(2) else {}
    return BioModel(seq, conf, scale, params, magnets, meas, provenance, extra)


def criterion_7(n_models=100):
    r = CriterionResult(7, "Fabrication exactness")
    geom = _geom()
    meshes = {"empty": TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))}
    t1 = build_topology("G")
    meshes["1-residue Gly"] = mesh_model(forward_kinematics(t1, geom, canonical_conformation("alpha_helix", 1)), t1)
    t, _, a = _alpha13()
    for k in range(3):
        meshes[f"alpha 13-mer subdiv {k}"] = mesh_model(a, t, sphere_subdiv=k)
    tb = build_topology("ACDEFGHIKL")
    meshes["beta 10-mer"] = mesh_model(forward_kinematics(tb, geom, canonical_conformation("antiparallel_beta", 10)), tb)
    bad = []
    for name, m in meshes.items():
        try:
            audit_mesh(m)
            data = write_stl(m)
        except PeppyError as exc:
            bad.append(f"{name}: {exc}")
            continue
        if len(data) != 84 + 50 * len(m):
            bad.append(f"{name}: {len(data)} bytes for {len(m)} triangles")
    r.add("STL length 84 + 50T and audits", not bad, "; ".join(bad) or f"{len(meshes)} meshes ok")
    sphere = icosphere((0.0, 0.0, 0.0), 1.0, 3)
    ratio = sphere.signed_volume() / (4.0 / 3.0 * math.pi)
    r.add("icosphere subdiv 3 volume within 2%", abs(ratio - 1.0) <= 0.02, f"volume ratio {ratio:.4f}")
    rng = np.random.default_rng(SEED + 7)
    failures = 0
    for _ in range(n_models):
        b = random_biomodel(rng)
        data = write_pbm(b)
        if read_pbm(data) != b or write_pbm(read_pbm(data)) != data:
            failures += 1
    r.add("PBM round trip identity", failures == 0, f"{n_models - failures}/{n_models} models identical")
    return r


def brute_force_clashes(positions, topology, scale):
    """Independent O(n^2) clash scan with its own graph search and radius table."""
    n = len(topology.atoms)
    adj = {k: set() for k in range(n)}
    for a, b in topology.bonds:
        adj[a].add(b)
        adj[b].add(a)
    found = []
    for i in range(n):
        near = {i: 0}
        queue = deque([i])
        while queue:
            u = queue.popleft()
            if near[u] == 3:
                continue
            for v in adj[u]:
                if v not in near:
                    near[v] = near[u] + 1
                    queue.append(v)
        ri = _radius(topology, i, scale)
        for j in range(i + 1, n):
            if j in near:
                continue
            d = math.dist(positions[i], positions[j])
            if d < scale.radius_factor * (ri + _radius(topology, j, scale)):
                found.append((i, j))
    return found


def _radius(topology, k, scale):
    atom = topology.atoms[k]
    if atom.name != "SC":
        return scale.vdw_radii[atom.element]
    res = topology.sequence[atom.residue_index]
    return scale.vdw_radii["H"] if res.three_letter_code == "GLY" else res.side_chain_radius


def criterion_8(n_cases=50):
    r = CriterionResult(8, "Clash detection matches brute force")
    rng = np.random.default_rng(SEED + 8)
    geom = _geom()
    scale = PhysicalScale()
    codes = [res.one_letter_code for res in default_config().residues]
    mismatches = 0
    total = 0
    for k in range(n_cases):
        n = 50 if k == 0 else int(rng.integers(1, 51))
        t = build_topology("".join(rng.choice(codes, n)))
        a = forward_kinematics(t, geom, random_conformation(rng, n) if n > 1 else Conformation((None,), (None,)))
        fast = detect_clashes(a, t, scale).pairs()
        slow = brute_force_clashes(a.positions.tolist(), t, scale)
        total += len(slow)
        mismatches += fast != slow
    r.add("identical pair sets", mismatches == 0,
          f"{n_cases - mismatches}/{n_cases} conformations identical ({total} clashes in total)")
    return r


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
    5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8,
}


def run_criterion(number) -> CriterionResult:
    start = time.perf_counter()
    result = CRITERIA[number]()
    result.seconds = time.perf_counter() - start
    return result


def run_all():
    return [run_criterion(k) for k in sorted(CRITERIA)]


def fixture_report():
    """Crystal measurements of the GCN4 leucine zipper, when its file is present."""
    path = find_fixture("2ZTA.pdb")
    if path is None:
        return ["2ZTA fixture: not found (scripts/fetch_fixtures.py downloads it)"]
    s = parse_pdb(path.read_bytes(), "2ZTA")
    lines = []
    for chain in s.chains():
        trace = extract_backbone(s, chain)
        res = trace.residues
        if len(res) >= 13:
            d = float(np.linalg.norm(res[12].ca - res[0].ca))
            lines.append(f"2ZTA:{chain} CA1-CA13 {d:.3f} A = {to_physical(d):.3f} in (crystal reference 18.4 A, printed model 6.75 in)")
        on = [float(np.linalg.norm(res[i].o - res[i + 4].n)) for i in range(len(res) - 4)]
        if on:
            lines.append(f"2ZTA:{chain} O(i)-N(i+4) mean {np.mean(on):.3f} +/- {np.std(on, ddof=1):.3f} A "
                         f"over {len(on)} pairs (crystal reference 3.00 +/- 0.12 A)")
    return lines
