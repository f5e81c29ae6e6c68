"""PDBQT reader/writer for ligands, rigid receptors, and docked multi-model outputs.

ATOM/HETATM records use the PDB fixed-column layout plus the PDBQT charge/type
extension (1-based, inclusive):

    record name 1-6 | serial 7-11 | atom name 13-16 | residue name 18-20 |
    chain 22 | residue seq 23-26 | x 31-38 | y 39-46 | z 47-54 (%8.3f) |
    occupancy 55-60 | temp factor 61-66 (%6.2f) | partial charge 67-76
    (%10.3f, right-aligned) | autodock type 78-79

Structural records: ROOT/ENDROOT, BRANCH a b / ENDBRANCH a b, TORSDOF n,
MODEL n / ENDMDL, and `REMARK VINA RESULT:` with three right-aligned fields.
Lines shorter than 79 characters are treated as right-padded with spaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


class PDBQTError(ValueError):
    """Base class for PDBQT parse/write failures."""


class MalformedRecord(PDBQTError):
    pass


class UnbalancedBranch(PDBQTError):
    pass


class MissingRoot(PDBQTError):
    pass


class WaterPresent(PDBQTError):
    pass


class MissingResultRemark(PDBQTError):
    pass


class InvariantViolation(PDBQTError):
    pass


# AutoDock types that mark hydrogens; every other type counts as heavy.
HYDROGEN_TYPES = frozenset({"H", "HD"})


@dataclass(frozen=True)
class AtomRecord:
    serial: int
    name: str
    residue_name: str
    chain: str
    residue_seq: int
    x: float
    y: float
    z: float
    occupancy: float = 0.0
    temp_factor: float = 0.0
    partial_charge: float = 0.0
    autodock_type: str = "C"
    record: str = "ATOM"

    @property
    def is_heavy(self) -> bool:
        return self.autodock_type not in HYDROGEN_TYPES

    @property
    def coords(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def moved_to(self, x: float, y: float, z: float) -> "AtomRecord":
        return replace(self, x=x, y=y, z=z)


@dataclass(frozen=True)
class Branch:
    """One rotatable bond: serials of its two pivot atoms plus every atom
    index (0-based, into the owning model's atom list) distal to the bond."""

    parent_serial: int
    child_serial: int
    distal_indices: frozenset[int]


@dataclass(frozen=True)
class TorsionTree:
    root_indices: frozenset[int]
    branches: tuple[Branch, ...] = ()
    torsdof: int = 0


@dataclass(frozen=True)
class LigandModel:
    id: str
    atoms: tuple[AtomRecord, ...]
    torsion_tree: TorsionTree

    @property
    def heavy_count(self) -> int:
        return sum(1 for a in self.atoms if a.is_heavy)


@dataclass(frozen=True)
class ReceptorModel:
    id: str
    atoms: tuple[AtomRecord, ...]


@dataclass(frozen=True)
class DockedMode:
    mode_index: int
    energy: float
    rmsd_lb: float
    rmsd_ub: float
    atoms: tuple[AtomRecord, ...]
    # Verbatim non-atom records found inside the MODEL block (kept for
    # round-trip fidelity; re-emitted after the result remark).
    extra_records: tuple[str, ...] = ()


@dataclass(frozen=True)
class MultiModelOutput:
    ligand_id: str
    modes: tuple[DockedMode, ...]


_RESULT_PREFIX = "REMARK VINA RESULT:"
_NAME_PREFIX = "REMARK  Name ="


def _column(line: str, start: int, end: int) -> str:
    """1-based inclusive column slice of a conceptually right-padded line."""
    return line[start - 1 : end]


def parse_atom_line(line: str, lineno: int = 0) -> AtomRecord:
    padded = line.rstrip("\r\n").ljust(79)
    record = _column(padded, 1, 6).strip()
    where = f"line {lineno}" if lineno else "atom record"
    try:
        serial = int(_column(padded, 7, 11))
    except ValueError:
        raise MalformedRecord(f"{where}: unparseable atom serial {_column(padded, 7, 11)!r}")
    try:
        x = float(_column(padded, 31, 38))
        y = float(_column(padded, 39, 46))
        z = float(_column(padded, 47, 54))
    except ValueError:
        raise MalformedRecord(f"{where}: unparseable coordinates")
    if not all(math.isfinite(v) for v in (x, y, z)):
        raise MalformedRecord(f"{where}: non-finite coordinates")

    def _float_or_zero(text: str, what: str) -> float:
        text = text.strip()
        if not text:
            return 0.0
        try:
            return float(text)
        except ValueError:
            raise MalformedRecord(f"{where}: unparseable {what} {text!r}")

    seq_text = _column(padded, 23, 26).strip()
    try:
        residue_seq = int(seq_text) if seq_text else 0
    except ValueError:
        raise MalformedRecord(f"{where}: unparseable residue sequence {seq_text!r}")
    autodock_type = _column(padded, 78, 79).strip()
    if not autodock_type:
        raise MalformedRecord(f"{where}: missing autodock atom type")
    return AtomRecord(
        serial=serial,
        name=_column(padded, 13, 16).strip(),
        residue_name=_column(padded, 18, 20).strip(),
        chain=_column(padded, 22, 22),
        residue_seq=residue_seq,
        x=x,
        y=y,
        z=z,
        occupancy=_float_or_zero(_column(padded, 55, 60), "occupancy"),
        temp_factor=_float_or_zero(_column(padded, 61, 66), "temp factor"),
        partial_charge=_float_or_zero(_column(padded, 67, 76), "partial charge"),
        autodock_type=autodock_type,
        record=record,
    )


def format_atom_line(atom: AtomRecord) -> str:
    for label, value, limit in (
        ("coordinate", atom.x, 10000.0),
        ("coordinate", atom.y, 10000.0),
        ("coordinate", atom.z, 10000.0),
        ("partial charge", atom.partial_charge, 100000.0),
    ):
        if not math.isfinite(value) or abs(value) >= limit:
            raise InvariantViolation(f"{label} {value!r} does not fit its fixed-width field")
    if not (0 <= atom.serial <= 99999 and -999 <= atom.residue_seq <= 9999):
        raise InvariantViolation("atom serial or residue seq does not fit its field")
    return (
        f"{atom.record:<6.6}"
        f"{atom.serial:5d}"
        f" {atom.name:<4.4}"
        f" {atom.residue_name:<3.3}"
        f" {atom.chain:1.1}"
        f"{atom.residue_seq:4d}"
        f"    "
        f"{atom.x:8.3f}{atom.y:8.3f}{atom.z:8.3f}"
        f"{atom.occupancy:6.2f}{atom.temp_factor:6.2f}"
        f"{atom.partial_charge:10.3f}"
        f" {atom.autodock_type:<2.2}"
    )


def _is_atom_line(line: str) -> bool:
    return line.startswith("ATOM") or line.startswith("HETATM")


def parse_ligand(text: str, ligand_id: str = "ligand") -> LigandModel:
    """Parse a torsion-tree ligand file into a LigandModel.

    Raises MissingRoot when no ROOT block exists or atoms precede it,
    UnbalancedBranch on BRANCH/ENDBRANCH mismatches, and MalformedRecord
    for anything else structurally broken.
    """
    atoms: list[AtomRecord] = []
    root_indices: set[int] = set()
    seen_root = False
    in_root = False
    torsdof: int | None = None
    # stack entries: (parent_serial, child_serial, first_atom_index, order)
    open_branches: list[tuple[int, int, int, int]] = []
    branch_slots: list[Branch | None] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        stripped = line.strip()
        if not stripped:
            continue
        if _is_atom_line(stripped):
            if not seen_root:
                raise MissingRoot(f"line {lineno}: atom record before ROOT block")
            if not in_root and not open_branches:
                raise MalformedRecord(f"line {lineno}: atom outside ROOT/BRANCH block")
            atom = parse_atom_line(line, lineno)
            atoms.append(atom)
            if in_root:
                root_indices.add(len(atoms) - 1)
        elif stripped == "ROOT":
            if seen_root:
                raise MalformedRecord(f"line {lineno}: duplicate ROOT record")
            seen_root = True
            in_root = True
        elif stripped == "ENDROOT":
            if not in_root:
                raise MalformedRecord(f"line {lineno}: ENDROOT without open ROOT")
            in_root = False
        elif stripped.startswith("BRANCH"):
            if in_root:
                raise MalformedRecord(f"line {lineno}: BRANCH inside ROOT block")
            a, b = _parse_branch_serials(stripped, "BRANCH", lineno)
            open_branches.append((a, b, len(atoms), len(branch_slots)))
            branch_slots.append(None)
        elif stripped.startswith("ENDBRANCH"):
            a, b = _parse_branch_serials(stripped, "ENDBRANCH", lineno)
            if not open_branches:
                raise UnbalancedBranch(f"line {lineno}: ENDBRANCH {a} {b} without open BRANCH")
            pa, pb, first_idx, order = open_branches.pop()
            if (pa, pb) != (a, b):
                raise UnbalancedBranch(
                    f"line {lineno}: ENDBRANCH {a} {b} closes BRANCH {pa} {pb}"
                )
            branch_slots[order] = Branch(pa, pb, frozenset(range(first_idx, len(atoms))))
        elif stripped.startswith("TORSDOF"):
            try:
                torsdof = int(stripped.split()[1])
            except (IndexError, ValueError):
                raise MalformedRecord(f"line {lineno}: unparseable TORSDOF record")
            if torsdof < 0:
                raise MalformedRecord(f"line {lineno}: negative TORSDOF")
        else:
            # Unknown record types (REMARK, USER, ...) are skipped on ligand parse.
            continue

    if not seen_root:
        raise MissingRoot("no ROOT block in ligand file")
    if in_root:
        raise MalformedRecord("ROOT block never closed by ENDROOT")
    if open_branches:
        a, b, _, _ = open_branches[-1]
        raise UnbalancedBranch(f"BRANCH {a} {b} never closed")
    if not atoms:
        raise MalformedRecord("ligand file contains no atoms")

    serials = [a.serial for a in atoms]
    if len(set(serials)) != len(serials):
        raise MalformedRecord("duplicate atom serials in ligand")
    known = set(serials)
    branches = tuple(b for b in branch_slots if b is not None)
    for br in branches:
        if br.parent_serial not in known or br.child_serial not in known:
            raise MalformedRecord(
                f"BRANCH {br.parent_serial} {br.child_serial} refers to unknown atom serial"
            )

    tree = TorsionTree(
        root_indices=frozenset(root_indices),
        branches=branches,
        torsdof=torsdof if torsdof is not None else 0,
    )
    return LigandModel(id=ligand_id, atoms=tuple(atoms), torsion_tree=tree)


def _parse_branch_serials(line: str, keyword: str, lineno: int) -> tuple[int, int]:
    parts = line.split()
    if len(parts) != 3 or parts[0] != keyword:
        raise MalformedRecord(f"line {lineno}: unparseable {keyword} record {line!r}")
    try:
        return int(parts[1]), int(parts[2])
    except ValueError:
        raise MalformedRecord(f"line {lineno}: non-integer serials in {keyword} record")


def parse_receptor(text: str, receptor_id: str = "receptor") -> ReceptorModel:
    """Parse a rigid receptor: atoms only; torsion records are ignored.

    Water residues signal an unprepared receptor and are rejected.
    """
    atoms: list[AtomRecord] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not _is_atom_line(stripped):
            continue
        atom = parse_atom_line(raw, lineno)
        if atom.residue_name == "HOH":
            raise WaterPresent(
                f"line {lineno}: water residue HOH present; remove waters before docking"
            )
        atoms.append(atom)
    if not atoms:
        raise MalformedRecord("receptor file contains no atoms")
    return ReceptorModel(id=receptor_id, atoms=tuple(atoms))


def validate_output(result: MultiModelOutput) -> None:
    """Raise InvariantViolation unless `result` satisfies the mode invariants."""
    if not result.modes:
        raise InvariantViolation("output must contain at least one mode")
    for pos, mode in enumerate(result.modes, start=1):
        if mode.mode_index != pos:
            raise InvariantViolation(
                f"mode indices must run 1..n; found {mode.mode_index} at position {pos}"
            )
        if not (0.0 <= mode.rmsd_lb <= mode.rmsd_ub):
            raise InvariantViolation(
                f"mode {pos}: require 0 <= rmsd_lb <= rmsd_ub, got "
                f"{mode.rmsd_lb}/{mode.rmsd_ub}"
            )
    first = result.modes[0]
    if first.rmsd_lb != 0.0 or first.rmsd_ub != 0.0:
        raise InvariantViolation("mode 1 must have rmsd_lb = rmsd_ub = 0")
    energies = [m.energy for m in result.modes]
    if any(a > b for a, b in zip(energies, energies[1:])):
        raise InvariantViolation(f"mode energies must be non-decreasing, got {energies}")


def write_output(result: MultiModelOutput) -> str:
    """Serialize a docked multi-model result; inverse of parse_output."""
    validate_output(result)
    lines = [f"{_NAME_PREFIX} {result.ligand_id}"]
    for mode in result.modes:
        lines.append(f"MODEL {mode.mode_index}")
        lines.append(
            f"{_RESULT_PREFIX}{mode.energy:10.1f} {mode.rmsd_lb:10.3f} {mode.rmsd_ub:10.3f}"
        )
        lines.extend(mode.extra_records)
        lines.extend(format_atom_line(a) for a in mode.atoms)
        lines.append("ENDMDL")
    return "\n".join(lines) + "\n"


def parse_output(text: str, default_id: str = "docked") -> MultiModelOutput:
    """Parse a multi-model docking output (ours or engine-produced).

    Non-atom records inside each MODEL are preserved verbatim so that
    write_output can round-trip them.
    """
    ligand_id = default_id
    modes: list[DockedMode] = []
    in_model = False
    model_index = 0
    result_values: tuple[float, float, float] | None = None
    atoms: list[AtomRecord] = []
    extras: list[str] = []

    def _finish(lineno: int) -> None:
        nonlocal result_values, atoms, extras
        if result_values is None:
            raise MissingResultRemark(
                f"MODEL {model_index} ended at line {lineno} without a VINA RESULT remark"
            )
        energy, lb, ub = result_values
        modes.append(
            DockedMode(
                mode_index=model_index,
                energy=energy,
                rmsd_lb=lb,
                rmsd_ub=ub,
                atoms=tuple(atoms),
                extra_records=tuple(extras),
            )
        )
        result_values = None
        atoms = []
        extras = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("MODEL"):
            if in_model:
                raise MalformedRecord(f"line {lineno}: MODEL inside open MODEL block")
            try:
                model_index = int(stripped.split()[1])
            except (IndexError, ValueError):
                raise MalformedRecord(f"line {lineno}: unparseable MODEL record")
            if model_index != len(modes) + 1:
                raise MalformedRecord(
                    f"line {lineno}: MODEL indices must be consecutive from 1, got {model_index}"
                )
            in_model = True
        elif stripped.startswith("ENDMDL"):
            if not in_model:
                raise MalformedRecord(f"line {lineno}: ENDMDL without open MODEL")
            _finish(lineno)
            in_model = False
        elif not in_model:
            if stripped.startswith(_NAME_PREFIX):
                ligand_id = stripped[len(_NAME_PREFIX) :].strip() or default_id
            # Anything else outside MODEL blocks is header noise; skip it.
        elif stripped.startswith(_RESULT_PREFIX):
            fields = stripped[len(_RESULT_PREFIX) :].split()
            if len(fields) != 3:
                raise MalformedRecord(
                    f"line {lineno}: expected three numeric fields after result remark"
                )
            try:
                result_values = (float(fields[0]), float(fields[1]), float(fields[2]))
            except ValueError:
                raise MalformedRecord(f"line {lineno}: non-numeric result remark fields")
        elif _is_atom_line(stripped):
            atoms.append(parse_atom_line(line, lineno))
        else:
            extras.append(line)

    if in_model:
        raise MalformedRecord("final MODEL block never closed by ENDMDL")
    if not modes:
        raise MalformedRecord("output contains no MODEL blocks")
    return MultiModelOutput(ligand_id=ligand_id, modes=tuple(modes))
