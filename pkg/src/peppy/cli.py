"""``peppy`` command line: import, build, measure, rama, clash, fold, export, validate.

Exit codes: 0 success, 1 domain error (or a failed validation), 2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import __version__
from .chainmodel import Conformation, build_topology, canonical_conformation, load_config
from .errors import PeppyError
from .fab import BioModel, magnet_layout, mesh_model, read_pbm, write_pbm, write_pdb, write_stl
from .fold import EnergyParams, minimize, write_trajectory
from .geometry import PhysicalScale, detect_clashes, forward_kinematics, measure, measurements_csv
from .pdbio import conformation_from_trace, extract_backbone, parse_pdb
from .rama import FEASIBILITY, HISTOGRAM, compare, export_map, feasibility_map, histogram, import_map_csv


@dataclass
class CommandResult:
    exit_code: int
    report: str = ""
    output_path: str | None = None


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _parser():
    p = _Parser(prog="peppy", description="Build, check and export to-scale foldable peptide models.")
    p.add_argument("--version", action="version", version=f"peppy {__version__}")
    p.add_argument("--config", help="configuration JSON overriding the shipped tables (default: $PEPPY_CONFIG)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("import", help="PDB chain to PBM model")
    s.add_argument("pdb", help="input PDB file")
    s.add_argument("--chain", required=True, help="chain identifier")
    s.add_argument("--out", required=True, help="output PBM path")

    s = sub.add_parser("build", help="sequence plus named or tabulated conformation to PBM")
    s.add_argument("--seq", required=True, help="one-letter codes, or three-letter codes joined by '-'")
    s.add_argument("--conf", required=True,
                   help="conformation name (alpha_helix, antiparallel_beta, ...) or a JSON file of [phi, psi] pairs")
    s.add_argument("--out", required=True, help="output PBM path")

    s = sub.add_parser("measure", help="metrology on a PBM model")
    s.add_argument("pbm")
    s.add_argument("--feature", required=True, action="append",
                   help="atom:I-J, ca:I-J, n:I-J (1-based), helix-span or hbonds; repeatable")
    s.add_argument("--csv", action="store_true", help="print CSV rows instead of text")

    s = sub.add_parser("rama", help="Ramachandran maps")
    rsub = s.add_subparsers(dest="rama_command", required=True, parser_class=_Parser)
    r = rsub.add_parser("feasibility", help="steric feasibility map of a probe peptide")
    r.add_argument("--probe", default="AAA", help="probe sequence, central residue swept (default AAA)")
    r.add_argument("--bin", type=float, default=10.0, help="bin width in degrees dividing 360 (default 10)")
    r.add_argument("--radius-factor", type=float, default=None, help="hard-sphere factor (default 0.7)")
    r.add_argument("--format", choices=("csv", "pgm"), default="csv")
    r.add_argument("--out", required=True)
    r = rsub.add_parser("histogram", help="observed (phi, psi) histogram of PDB or PBM files")
    r.add_argument("inputs", nargs="+", help="PDB or PBM files")
    r.add_argument("--chain", help="chain for PDB inputs (default: every chain)")
    r.add_argument("--bin", type=float, default=10.0)
    r.add_argument("--format", choices=("csv", "pgm"), default="csv")
    r.add_argument("--out", required=True)
    r = rsub.add_parser("compare", help="coverage of an observed map by a feasibility map")
    r.add_argument("--observed", required=True, help="histogram CSV")
    r.add_argument("--feasible", required=True, help="feasibility CSV")
    r.add_argument("--top", type=int, default=10, help="discrepant cells to list (default 10)")

    s = sub.add_parser("clash", help="hard-sphere clash report")
    s.add_argument("pbm")

    s = sub.add_parser("fold", help="minimize the detent energy")
    s.add_argument("pbm")
    s.add_argument("--out", required=True, help="output PBM path")
    s.add_argument("--trajectory", help="write one line per accepted step to this path")
    s.add_argument("--tolerance", type=float, default=1e-4, help="gradient infinity-norm tolerance")
    s.add_argument("--max-iters", type=int, default=5000)

    s = sub.add_parser("export", help="STL mesh or PDB text")
    s.add_argument("pbm")
    s.add_argument("--format", required=True, choices=("stl", "pdb"))
    s.add_argument("--out", required=True)
    s.add_argument("--subdiv", type=int, default=2, choices=range(5), help="icosphere subdivision (default 2)")
    s.add_argument("--bond-ratio", type=float, default=0.25, help="bond radius over smaller sphere radius")

    s = sub.add_parser("validate", help="run the acceptance suite")
    s.add_argument("--criteria", help="comma-separated criterion numbers (default: all)")
    return p


class _Context:
    def __init__(self, config_path):
        self.config = load_config(config_path)
        self.geometry = self.config.backbone

    def scale(self, radius_factor=None):
        s = PhysicalScale(vdw_radii=dict(self.config.vdw_radii))
        return s if radius_factor is None else s.with_radius_factor(radius_factor)

    def params(self):
        return EnergyParams(detents=self.config.conformations.detents())

    def topology(self, sequence):
        return build_topology(sequence, self.config)

    def model(self, sequence, conformation, provenance):
        t = self.topology(sequence)
        s = self.scale()
        p = self.params()
        return BioModel(t.sequence_string, conformation, s, p,
                        tuple(magnet_layout(t, p.detents, s, self.geometry)), (), provenance)

    def sites(self, b: BioModel):
        t = self.topology(b.sequence)
        return t, forward_kinematics(t, self.geometry, b.conformation)


def _write(path, data: bytes):
    Path(path).write_bytes(data)


def _read_pbm(path):
    return read_pbm(Path(path).read_bytes())


def _cmd_import(ctx, a):
    s = parse_pdb(Path(a.pdb).read_bytes(), Path(a.pdb).stem)
    trace = extract_backbone(s, a.chain)
    conf = conformation_from_trace(trace)
    seq = "-".join(trace.residue_names)
    b = ctx.model(seq, conf, {"source_id": f"{s.source_id}:{a.chain}",
                              "note": f"imported from {Path(a.pdb).name} chain {a.chain}, "
                                      f"residues {trace.residues[0].residue_seq_number}-"
                                      f"{trace.residues[-1].residue_seq_number}"})
    _write(a.out, write_pbm(b))
    return CommandResult(0, f"imported {len(conf)} residues ({b.sequence}) -> {a.out}", a.out)


def _load_conformation(ctx, spec, n):
    path = Path(spec)
    if path.suffix.lower() == ".json" or path.is_file():
        doc = json.loads(path.read_text(encoding="utf-8"))
        if isinstance(doc, dict):
            return Conformation(tuple(doc["phi"]), tuple(doc["psi"]))
        return Conformation.from_pairs([tuple(p) for p in doc])
    return canonical_conformation(spec, n, ctx.config)


def _cmd_build(ctx, a):
    t = ctx.topology(a.seq)
    conf = _load_conformation(ctx, a.conf, t.n_residues)
    if len(conf) != t.n_residues:
        raise PeppyError(f"conformation has {len(conf)} residues, sequence {t.n_residues}")
    b = ctx.model(a.seq, conf, {"source_id": "build", "note": f"built from sequence with conformation {a.conf}"})
    _write(a.out, write_pbm(b))
    return CommandResult(0, f"built {t.n_residues} residues ({b.sequence}) -> {a.out}", a.out)


def _cmd_measure(ctx, a):
    b = _read_pbm(a.pbm)
    t, sites = ctx.sites(b)
    records = [measure(sites, t, f, b.scale) for f in a.feature]
    if a.csv:
        return CommandResult(0, measurements_csv(records).rstrip("\n"))
    return CommandResult(0, "\n".join(str(m) for m in records))


def _observed_confs(ctx, inputs, chain):
    for name in inputs:
        data = Path(name).read_bytes()
        if data.lstrip().startswith(b"{"):
            yield read_pbm(data).conformation
            continue
        s = parse_pdb(data, Path(name).stem)
        for ch in [chain] if chain else s.chains():
            trace = extract_backbone(s, ch)
            if len(trace) >= 2:
                yield conformation_from_trace(trace)


def _cmd_rama(ctx, a):
    if a.rama_command == "feasibility":
        m = feasibility_map(a.probe, ctx.scale(a.radius_factor), a.bin, ctx.config)
        _write(a.out, export_map(m, a.format))
        return CommandResult(
            0, f"{int(m.values.sum())}/{m.values.size} cells feasible ({m.source}) -> {a.out}", a.out)
    if a.rama_command == "histogram":
        m = histogram(list(_observed_confs(ctx, a.inputs, a.chain)), a.bin, ",".join(a.inputs))
        _write(a.out, export_map(m, a.format))
        return CommandResult(0, f"{m.total()} (phi, psi) pairs binned -> {a.out}", a.out)
    observed = import_map_csv(Path(a.observed).read_bytes(), HISTOGRAM)
    feasible = import_map_csv(Path(a.feasible).read_bytes(), FEASIBILITY)
    result = compare(observed, feasible)
    lines = [f"coverage score {result.score:.4f} ({observed.total()} observed pairs)"]
    for d in result.discrepancies[: a.top]:
        lines.append(f"  infeasible cell phi={d.phi_center:g} psi={d.psi_center:g}: {d.count}")
    return CommandResult(0, "\n".join(lines))


def _cmd_clash(ctx, a):
    b = _read_pbm(a.pbm)
    t, sites = ctx.sites(b)
    report = detect_clashes(sites, t, b.scale)
    lines = [f"{len(report)} clashes, total overlap {report.total_overlap:.4f} A"]
    for c in report.clashes:
        ai, aj = t.atoms[c.i], t.atoms[c.j]
        lines.append(f"  {ai.name}{ai.residue_index + 1}-{aj.name}{aj.residue_index + 1} "
                     f"d={c.distance:.3f} A overlap={c.overlap:.3f} A")
    return CommandResult(0, "\n".join(lines))


def _cmd_fold(ctx, a):
    b = _read_pbm(a.pbm)
    t = ctx.topology(b.sequence)
    steps = []
    res = minimize(b.conformation, t, b.energy_params, b.scale, a.tolerance, a.max_iters,
                   on_step=steps.append if a.trajectory else None, geometry=ctx.geometry)
    if a.trajectory:
        with open(a.trajectory, "w", encoding="utf-8") as fh:
            write_trajectory(steps, fh)
    _write(a.out, write_pbm(replace(b, conformation=res.conformation)))
    state = "converged" if res.converged else "not converged"
    return CommandResult(
        0, f"{state} after {res.iterations} iterations: E = {res.energy:.6f}, |grad|inf = {res.grad_norm:.2e} -> {a.out}",
        a.out)


def _cmd_export(ctx, a):
    b = _read_pbm(a.pbm)
    t, sites = ctx.sites(b)
    if a.format == "pdb":
        data = write_pdb(sites, t)
        _write(a.out, data)
        return CommandResult(0, f"{len(t.atoms)} atoms -> {a.out}", a.out)
    mesh = mesh_model(sites, t, b.scale, a.subdiv, a.bond_ratio)
    data = write_stl(mesh)
    _write(a.out, data)
    return CommandResult(0, f"{len(mesh)} triangles, {len(data)} bytes -> {a.out}", a.out)


def _cmd_validate(ctx, a):
    from .validation import CRITERIA, fixture_report, run_criterion

    numbers = sorted(CRITERIA)
    if a.criteria:
        try:
            numbers = [int(x) for x in a.criteria.split(",")]
        except ValueError:
            raise UsageError(f"--criteria expects numbers, got {a.criteria!r}") from None
        unknown = [k for k in numbers if k not in CRITERIA]
        if unknown:
            raise UsageError(f"unknown criteria {unknown}")
    lines = []
    ok = True
    for k in numbers:
        r = run_criterion(k)
        ok &= r.passed
        lines.append(r.line())
        for c in r.checks:
            lines.append(f"    {'ok  ' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    lines += fixture_report()
    lines.append("all criteria passed" if ok else "some criteria FAILED")
    return CommandResult(0 if ok else 1, "\n".join(lines))


COMMANDS = {
    "import": _cmd_import, "build": _cmd_build, "measure": _cmd_measure, "rama": _cmd_rama,
    "clash": _cmd_clash, "fold": _cmd_fold, "export": _cmd_export, "validate": _cmd_validate,
}


def run(argv) -> CommandResult:
    """Run one command. ``argv[0]`` is the program name, as in ``sys.argv``."""
    argv = list(argv)
    if not argv:
        return CommandResult(2, "usage: peppy <command> ...")
    out = io.StringIO()
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(out):
            args = _parser().parse_args(argv[1:])
    except UsageError as exc:
        return CommandResult(2, str(exc).rstrip())
    except SystemExit as exc:  # --help and --version
        return CommandResult(0 if not exc.code else 2, out.getvalue().rstrip())
    try:
        ctx = _Context(args.config)
        return COMMANDS[args.command](ctx, args)
    except UsageError as exc:
        return CommandResult(2, str(exc))
    except PeppyError as exc:
        return CommandResult(1, f"error: {type(exc).__name__}: {exc}")
    except (OSError, ValueError, KeyError) as exc:
        return CommandResult(1, f"error: {type(exc).__name__}: {exc}")


def main(argv=None):
    result = run(sys.argv if argv is None else argv)
    stream = sys.stdout if result.exit_code == 0 else sys.stderr
    if result.report:
        print(result.report, file=stream)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
