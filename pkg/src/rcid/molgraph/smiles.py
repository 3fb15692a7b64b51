"""A small SMILES reader covering the organic subset.

Supported: B C N O P S F Cl Br I, lowercase aromatic b c n o p s, bracket
atoms with optional isotope (ignored), chirality marks (ignored), hydrogen
count, charge and atom map (ignored), bond symbols - = # : / \\, branches,
and ring closures as single digits or %nn. A bond written without a symbol
is aromatic when both endpoints are aromatic, single otherwise. Stereo
slashes are kept as a per-bond direction tag only.

Every parse failure raises a subclass of SmilesParseError carrying the
0-based character position.
"""

from __future__ import annotations

import re

from .graph import ATOMIC_NUMBER, Atom, Bond, MolGraph

ORGANIC_SUBSET = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
AROMATIC_ORGANIC = {"b", "c", "n", "o", "p", "s"}

_BOND_SYMBOLS = {
    "-": ("single", 0),
    "=": ("double", 0),
    "#": ("triple", 0),
    ":": ("aromatic", 0),
    "/": ("single", 1),
    "\\": ("single", 2),
}

_BRACKET_RE = re.compile(
    r"^(?P<isotope>\d+)?"
    r"(?P<symbol>[A-Z][a-z]?|[bcnops])"
    r"(?P<chiral>@{1,2})?"
    r"(?P<hcount>H\d*)?"
    r"(?P<charge>\+\d+|-\d+|\++|-+)?"
    r"(?P<map>:\d+)?$"
)


class SmilesParseError(ValueError):
    """Base class for parse failures; ``position`` is a 0-based index."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (position {position})")
        self.position = position


class EmptyInput(SmilesParseError):
    pass


class UnbalancedBranch(SmilesParseError):
    pass


class UnmatchedRingBond(SmilesParseError):
    pass


class UnknownElement(SmilesParseError):
    pass


def parse_smiles(text: str) -> MolGraph:
    """Parse a SMILES string into a MolGraph."""
    if text is None or not text.strip():
        raise EmptyInput("empty SMILES input", 0)
    s = text.strip()

    atoms: list[Atom] = []
    bonds: list[tuple[int, int, str | None, int]] = []  # a, b, symbol, direction
    prev: int | None = None
    branch_stack: list[int | None] = []
    open_rings: dict[int, tuple[int, str | None, int]] = {}  # num -> (atom, sym, pos)
    pending: tuple[str, int] | None = None  # (bond symbol, position)

    def add_atom(atom: Atom) -> None:
        nonlocal prev, pending
        atoms.append(atom)
        idx = len(atoms) - 1
        if prev is not None:
            _add_bond(bonds, atoms, prev, idx, pending)
        elif pending is not None:
            raise SmilesParseError("bond symbol with no preceding atom", pending[1])
        pending = None
        prev = idx

    def ring_closure(num: int, pos: int) -> None:
        nonlocal pending
        if prev is None:
            raise UnmatchedRingBond("ring closure before any atom", pos)
        if num in open_rings:
            other, open_sym, _ = open_rings.pop(num)
            if other == prev:
                raise UnmatchedRingBond("ring closure bonds an atom to itself", pos)
            close_sym = pending[0] if pending is not None else None
            if open_sym and close_sym and open_sym != close_sym:
                raise SmilesParseError(
                    f"conflicting ring bond symbols {open_sym!r} and {close_sym!r}", pos
                )
            sym = close_sym or open_sym
            spec = None if sym is None else (sym, pos)
            _add_bond(bonds, atoms, other, prev, spec)
        else:
            sym = pending[0] if pending is not None else None
            open_rings[num] = (prev, sym, pos)
        pending = None

    i = 0
    n = len(s)
    while i < n:
        ch = s[i]
        if ch == "[":
            end = s.find("]", i)
            if end == -1:
                raise SmilesParseError("unclosed bracket atom", i)
            add_atom(_parse_bracket(s[i + 1 : end], i + 1))
            i = end + 1
        elif ch == "(":
            if prev is None:
                raise UnbalancedBranch("branch opened before any atom", i)
            branch_stack.append(prev)
            i += 1
        elif ch == ")":
            if not branch_stack:
                raise UnbalancedBranch("unmatched closing parenthesis", i)
            if pending is not None:
                raise SmilesParseError("dangling bond symbol before branch close", pending[1])
            prev = branch_stack.pop()
            i += 1
        elif ch in _BOND_SYMBOLS:
            if pending is not None:
                raise SmilesParseError("two bond symbols in a row", i)
            pending = (ch, i)
            i += 1
        elif ch.isdigit():
            ring_closure(int(ch), i)
            i += 1
        elif ch == "%":
            if i + 2 >= n or not (s[i + 1].isdigit() and s[i + 2].isdigit()):
                raise UnmatchedRingBond("%% ring closure needs two digits", i)
            ring_closure(int(s[i + 1 : i + 3]), i)
            i += 3
        elif ch == "C" and i + 1 < n and s[i + 1] == "l":
            add_atom(Atom(ATOMIC_NUMBER["Cl"]))
            i += 2
        elif ch == "B" and i + 1 < n and s[i + 1] == "r":
            add_atom(Atom(ATOMIC_NUMBER["Br"]))
            i += 2
        elif ch in ORGANIC_SUBSET:
            add_atom(Atom(ATOMIC_NUMBER[ch]))
            i += 1
        elif ch in AROMATIC_ORGANIC:
            add_atom(Atom(ATOMIC_NUMBER[ch.upper()], aromatic=True))
            i += 1
        elif ch == ".":
            raise SmilesParseError("disconnected components are not supported", i)
        else:
            raise UnknownElement(f"unexpected character {ch!r}", i)

    if branch_stack:
        raise UnbalancedBranch("unclosed branch at end of input", n)
    if pending is not None:
        raise SmilesParseError("dangling bond symbol at end of input", pending[1])
    if open_rings:
        num, (_, _, pos) = min(open_rings.items(), key=lambda kv: kv[1][2])
        raise UnmatchedRingBond(f"ring bond {num} never closed", pos)

    real_bonds = [
        Bond(a, b, order, direction=direction)
        for a, b, order, direction in _resolve_bonds(bonds, atoms)
    ]
    return MolGraph(atoms, real_bonds)


def _add_bond(
    bonds: list[tuple[int, int, str | None, int]],
    atoms: list[Atom],
    a: int,
    b: int,
    spec: tuple[str, int] | None,
) -> None:
    sym = spec[0] if spec is not None else None
    direction = _BOND_SYMBOLS[sym][1] if sym else 0
    bonds.append((a, b, sym, direction))


def _resolve_bonds(bonds, atoms):
    for a, b, sym, direction in bonds:
        if sym is None:
            aromatic = atoms[a].aromatic and atoms[b].aromatic
            order = "aromatic" if aromatic else "single"
        else:
            order = _BOND_SYMBOLS[sym][0]
        yield a, b, order, direction


def _parse_bracket(body: str, position: int) -> Atom:
    match = _BRACKET_RE.match(body)
    if match is None:
        raise SmilesParseError(f"malformed bracket atom [{body}]", position)
    symbol = match.group("symbol")
    aromatic = symbol[0].islower()
    lookup = symbol.upper() if aromatic and len(symbol) == 1 else symbol
    if aromatic and len(symbol) == 1 and symbol not in AROMATIC_ORGANIC:
        raise UnknownElement(f"unknown aromatic symbol {symbol!r}", position)
    element = ATOMIC_NUMBER.get(lookup)
    if element is None:
        raise UnknownElement(f"unknown element symbol {symbol!r}", position)

    hcount = 0
    hspec = match.group("hcount")
    if hspec is not None:
        hcount = int(hspec[1:]) if len(hspec) > 1 else 1

    charge = 0
    cspec = match.group("charge")
    if cspec is not None:
        if cspec in ("+", "-") or cspec.strip("+") == "" or cspec.strip("-") == "":
            charge = len(cspec) if cspec[0] == "+" else -len(cspec)
        else:
            charge = int(cspec)

    return Atom(element, formal_charge=charge, aromatic=aromatic, explicit_h=hcount)
