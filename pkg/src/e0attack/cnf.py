"""ANF to CNF: AND gates for monomials, cut XOR chains for the sums.

Source variables get DIMACS indices ``1..n`` in increasing variable order;
auxiliary variables follow.  Each distinct monomial of degree >= 2 gets one
AND auxiliary shared by every polynomial that uses it.  A polynomial
``m_1 + ... + m_k + c`` becomes the constraint ``l_1 xor ... xor l_k = c``,
cut into pieces of at most ``cut`` literals linked by fresh chain variables.
"""

from __future__ import annotations

import io
import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .poly import BoolPoly, Var, iter_bits
from .order import universe_of


class UnmappedVariable(KeyError):
    pass


@dataclass(frozen=True)
class AuxRecord:
    index: int
    kind: str                      # "and" or "chain"
    inputs: tuple[int, ...]        # literals it is defined from


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]
    var_map: Mapping[Var, int]
    aux: tuple[AuxRecord, ...] = ()
    xors: tuple[tuple[int, ...], ...] = ()   # native XOR lines: xor of literals is true

    @property
    def num_clauses(self) -> int:
        return len(self.clauses) + len(self.xors)

    @property
    def index_to_var(self) -> dict[int, Var]:
        return {i: v for v, i in self.var_map.items()}


def xor_clauses(lits: Sequence[int], rhs: int) -> list[tuple[int, ...]]:
    """Clauses forbidding every assignment of ``lits`` whose parity differs from ``rhs``."""
    out = []
    k = len(lits)
    for pattern in range(1 << k):
        if (pattern.bit_count() & 1) != (rhs & 1):
            out.append(tuple(-l if pattern >> i & 1 else l for i, l in enumerate(lits)))
    return out


def and_clauses(out: int, inputs: Sequence[int]) -> list[tuple[int, ...]]:
    return [(-out, v) for v in inputs] + [(out, *(-v for v in inputs))]


class _Builder:
    def __init__(self, variables: Sequence[Var], cut: int, native_xor: bool):
        if cut < 3:
            raise ValueError("cut width must be at least 3")
        self.var_map = {v: i + 1 for i, v in enumerate(sorted(set(variables)))}
        self.gidx = {v.index: i for v, i in self.var_map.items()}
        self.n = len(self.var_map)
        self.cut = cut
        self.native = native_xor
        self.clauses: list[tuple[int, ...]] = []
        self.xors: list[tuple[int, ...]] = []
        self.aux: list[AuxRecord] = []
        self.monomials: dict[int, int] = {}

    def fresh(self, kind: str, inputs: Sequence[int]) -> int:
        self.n += 1
        self.aux.append(AuxRecord(self.n, kind, tuple(inputs)))
        return self.n

    def literal(self, m: int) -> int:
        hit = self.monomials.get(m)
        if hit is not None:
            return hit
        try:
            ins = [self.gidx[i] for i in iter_bits(m)]
        except KeyError as e:
            raise UnmappedVariable(str(Var.from_index(e.args[0]))) from None
        if len(ins) == 1:
            lit = ins[0]
        else:
            lit = self.fresh("and", ins)
            self.clauses.extend(and_clauses(lit, ins))
        self.monomials[m] = lit
        return lit

    def add_poly(self, p: BoolPoly) -> None:
        rhs = 1 if 0 in p.terms else 0
        lits = [self.literal(m) for m in sorted(p.terms - {0}, key=_order_key)]
        if not lits:
            if rhs:
                self.clauses.append(())
            return
        if self.native:
            first = -lits[0] if rhs == 0 else lits[0]
            self.xors.append((first, *lits[1:]))
            return
        # Chain: t_1 = l_1 ^ .. ^ l_{cut-1}, t_2 = t_1 ^ next cut-2 literals, ...
        while len(lits) > self.cut:
            head, lits = lits[:self.cut - 1], lits[self.cut - 1:]
            t = self.fresh("chain", head)
            self.clauses.extend(xor_clauses(head + [t], 0))
            lits = [t] + lits
        self.clauses.extend(xor_clauses(lits, rhs))

    def formula(self) -> CnfFormula:
        return CnfFormula(self.n, tuple(self.clauses), dict(self.var_map), tuple(self.aux), tuple(self.xors))


def _order_key(m: int):
    return (m.bit_count(), m)


def compile(source, cut: int = 4, native_xor: bool = False,
            variables: Iterable[Var] | None = None) -> CnfFormula:
    """CNF of an attack instance, or of any sequence of polynomials."""
    polys = getattr(source, "generators", source)
    polys = list(polys)
    if variables is None:
        variables = getattr(source, "variables", None)
    if variables is None:
        variables = universe_of(polys)
    b = _Builder(list(variables), cut, native_xor)
    for p in polys:
        b.add_poly(p)
    return b.formula()


def inject_guess(cnf: CnfFormula, guess: Mapping[Var, int]) -> CnfFormula:
    """A copy of ``cnf`` with one unit clause per guessed variable."""
    units = []
    for v, val in guess.items():
        idx = cnf.var_map.get(v)
        if idx is None:
            raise UnmappedVariable(str(v))
        units.append((idx if val & 1 else -idx,))
    return replace(cnf, clauses=cnf.clauses + tuple(units))


# -- DIMACS ---------------------------------------------------------------------

def dimacs_text(cnf: CnfFormula) -> str:
    buf = io.StringIO()
    buf.write(f"p cnf {cnf.num_vars} {cnf.num_clauses}\n")
    for cl in cnf.clauses:
        buf.write(" ".join(map(str, cl)) + (" 0\n" if cl else "0\n"))
    for xs in cnf.xors:
        buf.write("x" + " ".join(map(str, xs)) + " 0\n")
    return buf.getvalue()


def map_text(cnf: CnfFormula) -> str:
    return "".join(f"{v} {i}\n" for v, i in sorted(cnf.var_map.items(), key=lambda kv: kv[1]))


def write_dimacs(cnf: CnfFormula, destination: str | Path | IO[str],
                 map_path: str | Path | None = None, write_map: bool = True) -> None:
    """DIMACS to a path or text stream; with a path, the map goes to ``<path>.map`` by default."""
    text = dimacs_text(cnf)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        path = Path(destination)
        path.write_text(text)
        if map_path is None and write_map:
            map_path = path.with_name(path.name + ".map")
    if map_path is not None and write_map:
        Path(map_path).write_text(map_text(cnf))


def parse_dimacs(text: str) -> tuple[int, list[tuple[int, ...]], list[tuple[int, ...]]]:
    """``(num_vars, clauses, xor lines)``; the header count must match."""
    num_vars = declared = None
    clauses: list[tuple[int, ...]] = []
    xors: list[tuple[int, ...]] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            _, fmt, nv, nc = line.split()
            if fmt != "cnf":
                raise ValueError("not a cnf header")
            num_vars, declared = int(nv), int(nc)
            continue
        target = clauses
        if line.startswith("x"):
            target, line = xors, line[1:]
        lits = [int(tok) for tok in line.split()]
        if not lits or lits[-1] != 0:
            raise ValueError(f"clause line not zero-terminated: {line!r}")
        target.append(tuple(lits[:-1]))
    if num_vars is None:
        raise ValueError("missing header")
    if declared != len(clauses) + len(xors):
        raise ValueError("clause count does not match header")
    return num_vars, clauses, xors


def parse_map(text: str) -> dict[Var, int]:
    out = {}
    for line in text.splitlines():
        if line.strip():
            name, idx = line.split()
            out[Var.parse(name)] = int(idx)
    return out


# -- small model enumerator (test oracle) -------------------------------------------

def _propagate(clauses, xors, assign: dict[int, int]) -> bool:
    """Unit propagation in place; False on conflict."""
    changed = True
    while changed:
        changed = False
        for cl in clauses:
            free = None
            nfree = 0
            sat = False
            for l in cl:
                v = assign.get(abs(l))
                if v is None:
                    nfree += 1
                    free = l
                elif v == (l > 0):
                    sat = True
                    break
            if sat:
                continue
            if nfree == 0:
                return False
            if nfree == 1:
                assign[abs(free)] = 1 if free > 0 else 0
                changed = True
        for xs in xors:
            par, free = 0, []
            for l in xs:
                v = assign.get(abs(l))
                if v is None:
                    free.append(l)
                else:
                    par ^= v ^ (l < 0)
            if not free:
                if par != 1:
                    return False
            elif len(free) == 1:
                l = free[0]
                assign[abs(l)] = (1 ^ par) ^ (l < 0)
                changed = True
    return True


def enumerate_models(cnf: CnfFormula, project: Sequence[Var] | None = None,
                     limit_vars: int = 20) -> list[dict[Var, int]]:
    """All models projected onto ``project`` (default: every source variable).

    Branches on the projected variables and finishes each branch with a small
    DPLL over the rest; meant for formulas with at most ``limit_vars``
    projected variables.
    """
    project = list(project if project is not None else sorted(cnf.var_map))
    if len(project) > limit_vars:
        raise ValueError("too many variables for the enumeration checker")
    idx = [cnf.var_map[v] for v in project]
    clauses, xors = list(cnf.clauses), list(cnf.xors)
    out = []
    for bits in itertools.product((0, 1), repeat=len(idx)):
        assign = dict(zip(idx, bits))
        if _dpll(clauses, xors, assign, cnf.num_vars):
            out.append(dict(zip(project, bits)))
    return out


def _dpll(clauses, xors, assign: dict[int, int], n: int) -> bool:
    assign = dict(assign)
    if not _propagate(clauses, xors, assign):
        return False
    for v in range(1, n + 1):
        if v not in assign:
            for val in (0, 1):
                trial = dict(assign)
                trial[v] = val
                if _dpll(clauses, xors, trial, n):
                    return True
            return False
    return True


def is_satisfiable(cnf: CnfFormula) -> bool:
    return _dpll(list(cnf.clauses), list(cnf.xors), {}, cnf.num_vars)


__all__ = [
    "UnmappedVariable",
    "AuxRecord",
    "CnfFormula",
    "xor_clauses",
    "and_clauses",
    "compile",
    "inject_guess",
    "dimacs_text",
    "map_text",
    "write_dimacs",
    "parse_dimacs",
    "parse_map",
    "enumerate_models",
    "is_satisfiable",
]
