"""Static control-flow and dependence analysis.

The dependence graph drives two consumers: projecting dynamic edges onto a
static edge set (consistency checks) and connecting coefficient groups into
cause-effect chains. Edges are (from, to, label) with label "data" or
"control".

Control dependence follows the structured shape of the language: a
statement depends on its directly enclosing predicate, and a while
predicate depends on itself (each re-evaluation is guarded by the previous
one). Data dependence is definition-clear reaching definitions over the
CFG.
"""

from __future__ import annotations

from dataclasses import dataclass

from .nodes import Program

ENTRY = -1
EXIT = -2


@dataclass(frozen=True)
class StaticPdg:
    nodes: tuple[int, ...]
    edges: frozenset[tuple[int, int, str]]  # (from, to, "data"|"control")

    def data_edges(self) -> frozenset[tuple[int, int]]:
        return frozenset((a, b) for a, b, lab in self.edges if lab == "data")

    def control_edges(self) -> frozenset[tuple[int, int]]:
        return frozenset((a, b) for a, b, lab in self.edges if lab == "control")

    def neighbors(self, sid: int) -> set[int]:
        """Direction-agnostic adjacency, used by chain construction."""
        out = set()
        for a, b, _ in self.edges:
            if a == sid and b != sid:
                out.add(b)
            elif b == sid and a != sid:
                out.add(a)
        return out

    def edge_label(self, a: int, b: int) -> str | None:
        """Label of an edge between a and b in either direction.

        Data wins over control when both exist; forward direction wins
        over reverse.
        """
        best = None
        for x, y, lab in self.edges:
            if (x, y) == (a, b):
                if lab == "data":
                    return "data"
                best = best or "control"
            elif (x, y) == (b, a) and best is None:
                best = lab
        return best


def build_cfg(program: Program) -> dict[int, set[int]]:
    """Successor map over statement ids plus virtual ENTRY/EXIT nodes."""
    succ: dict[int, set[int]] = {sid: set() for sid in range(len(program))}
    succ[ENTRY] = set()
    succ[EXIT] = set()

    def wire(ids: tuple[int, ...], incoming: list[int]) -> list[int]:
        """Connect `incoming` exits to the sequence; return the new exits."""
        for sid in ids:
            for src in incoming:
                succ[src].add(sid)
            st = program.stmt(sid)
            if st.kind == "if":
                then_exits = wire(st.then_ids, [sid]) if st.then_ids else [sid]
                else_exits = wire(st.else_ids, [sid]) if st.else_ids else [sid]
                # pred with an empty branch flows straight through
                incoming = list(dict.fromkeys(then_exits + else_exits))
                if not st.then_ids and not st.else_ids:
                    incoming = [sid]
            elif st.kind == "while":
                body_exits = wire(st.body_ids, [sid]) if st.body_ids else [sid]
                for src in body_exits:
                    succ[src].add(sid)  # back edge
                incoming = [sid]  # false branch
            else:
                incoming = [sid]
        return incoming

    exits = wire(program.top_level, [ENTRY])
    for src in exits:
        succ[src].add(EXIT)
    if not program.top_level:
        succ[ENTRY].add(EXIT)
    return succ


def _reaching_definitions(program: Program, succ: dict[int, set[int]]):
    """Worklist dataflow; returns reach_in: sid -> set of (var, def_sid)."""
    defs_of: dict[str, set[int]] = {}
    for st in program.statements:
        if st.defines:
            defs_of.setdefault(st.defines, set()).add(st.id)

    pred: dict[int, set[int]] = {n: set() for n in succ}
    for a, outs in succ.items():
        for b in outs:
            pred[b].add(a)

    reach_in: dict[int, set[tuple[str, int]]] = {n: set() for n in succ}
    reach_out: dict[int, set[tuple[str, int]]] = {n: set() for n in succ}
    work = list(succ.keys())
    while work:
        node = work.pop()
        incoming: set[tuple[str, int]] = set()
        for p in pred[node]:
            incoming |= reach_out[p]
        reach_in[node] = incoming
        if node >= 0:
            st = program.stmt(node)
            if st.defines:
                out = {(v, d) for (v, d) in incoming if v != st.defines}
                out.add((st.defines, node))
            else:
                out = set(incoming)
        else:
            out = set(incoming)
        if out != reach_out[node]:
            reach_out[node] = out
            work.extend(succ[node])
    return reach_in


def build_static_pdg(program: Program) -> StaticPdg:
    edges: set[tuple[int, int, str]] = set()

    # control: directly enclosing predicate; while predicates self-depend
    for st in program.statements:
        for child in st.child_ids:
            edges.add((st.id, child, "control"))
        if st.kind == "while":
            edges.add((st.id, st.id, "control"))

    succ = build_cfg(program)
    reach_in = _reaching_definitions(program, succ)
    for st in program.statements:
        for var, def_sid in reach_in[st.id]:
            if var in st.uses:
                edges.add((def_sid, st.id, "data"))

    return StaticPdg(tuple(range(len(program))), frozenset(edges))
