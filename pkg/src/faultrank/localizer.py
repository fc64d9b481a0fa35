"""Score fusion, statement grouping, and the final ranking.

Coefficients from the fitted model become dynamic suspiciousness scores
(negative coefficients indicate the failing class), are min-max normalized
over the candidate set, fused with refined fault-proneness likelihoods
under four scenarios, and sorted. Selected statements with correlated
columns and near-equal coefficients are grouped; each group is presented
with a short dependence chain for context.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .enet import EnetModel, Scm
from .minilang.nodes import Program
from .minilang.pdg import StaticPdg
from .proneness import FplTable


@dataclass(frozen=True)
class RankEntry:
    statement_id: int
    final: float
    dynamic: float
    refined_fpl: float
    scenario: int | None  # 1..4 for candidates, None otherwise
    group_id: int | None
    candidate: bool


@dataclass(frozen=True)
class Ranking:
    entries: tuple[RankEntry, ...]  # descending final, candidates first

    def position(self, sid: int) -> int:
        for i, e in enumerate(self.entries):
            if e.statement_id == sid:
                return i
        raise KeyError(sid)

    def __len__(self) -> int:
        return len(self.entries)

    def exam_vector(self, n_statements: int) -> np.ndarray:
        """Scores for examination-position arithmetic.

        Candidates strictly precede non-candidates, so candidate scores
        are lifted by 1; ties remain only between equal fused scores
        within the same stratum.
        """
        v = np.zeros(n_statements)
        for e in self.entries:
            if e.candidate:
                v[e.statement_id] = 1.0 + e.final
        return v


@dataclass(frozen=True)
class StatementGroup:
    group_id: int
    members: tuple[int, ...]  # ascending statement ids
    representative_coef: float  # largest |beta| among members


@dataclass(frozen=True)
class CauseEffectChain:
    group_id: int
    nodes: tuple[int, ...]  # walk order; consecutive nodes share an edge
    edges: tuple[tuple[int, int, str], ...]
    disconnected: bool
    segments: tuple[tuple[int, ...], ...]  # one walk per connected part


def normalize_scores(model: EnetModel) -> dict[int, float]:
    """Dynamic suspiciousness per candidate statement, in [0,1].

    Raw score is max(0, -beta_j); min-max normalization over the candidate
    set. If every raw score is equal there is no dynamic discrimination
    and all scores collapse to 0 so fusion falls through to the static
    side.
    """
    raw = np.maximum(0.0, -model.beta)  # beta excludes the intercept
    if raw.size == 0:
        return {}
    lo = float(raw.min())
    hi = float(raw.max())
    if hi - lo <= 0.0:
        return {sid: 0.0 for sid in model.candidate_ids}
    return {
        sid: float((raw[j] - lo) / (hi - lo))
        for j, sid in enumerate(model.candidate_ids)
    }


def combine(
    dyn: float, refined_fpl: float, fault_prone: bool, tau_d: float = 0.5
) -> tuple[float, int]:
    """Fuse dynamic and static scores; returns (final score, scenario tag).

    1: prone, high dynamic -> max of the two.
    2: not prone, high dynamic -> dynamic alone.
    3: prone, low dynamic -> simple average.
    4: not prone, low dynamic -> dynamic alone.
    """
    if dyn >= tau_d:
        if fault_prone:
            return max(dyn, refined_fpl), 1
        return dyn, 2
    if fault_prone:
        return (dyn + refined_fpl) / 2.0, 3
    return dyn, 4


def group_statements(
    model: EnetModel,
    scm: Scm,
    rho_min: float = 0.9,
    eps: float = 0.05,
) -> tuple[StatementGroup, ...]:
    """Connected components over selected statements whose count columns
    correlate at rho_min or above and whose coefficients nearly agree.

    Coefficient closeness is judged on the solver's standardized scale,
    where correlated columns actually receive near-equal values.
    """
    selected = list(model.selected)
    if not selected:
        return ()
    col_idx = {sid: j for j, sid in enumerate(model.candidate_ids)}
    cols = {sid: scm.X[:, col_idx[sid] + 1] for sid in selected}
    beta = {sid: model.beta_std[col_idx[sid] + 1] for sid in selected}
    bmax = max(abs(b) for b in beta.values())

    adj: dict[int, set[int]] = {sid: set() for sid in selected}
    for i, a in enumerate(selected):
        for b in selected[i + 1 :]:
            if abs(beta[a] - beta[b]) > eps * (1.0 + bmax):
                continue
            ca, cb = cols[a], cols[b]
            sa, sb = ca.std(), cb.std()
            if sa <= 0 or sb <= 0:
                continue
            rho = float(np.corrcoef(ca, cb)[0, 1])
            if rho >= rho_min:
                adj[a].add(b)
                adj[b].add(a)

    groups = []
    seen: set[int] = set()
    for sid in sorted(selected):
        if sid in seen:
            continue
        stack = [sid]
        comp = []
        seen.add(sid)
        while stack:
            cur = stack.pop()
            comp.append(cur)
            for nxt in adj[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        members = tuple(sorted(comp))
        rep = max(abs(beta[m]) for m in members)
        groups.append((members, rep))

    return tuple(
        StatementGroup(group_id=g + 1, members=members, representative_coef=rep)
        for g, (members, rep) in enumerate(groups)
    )


def _bfs_paths(pdg: StaticPdg, sources: set[int]) -> dict[int, list[int]]:
    """Shortest direction-agnostic path from any source to each node."""
    paths: dict[int, list[int]] = {s: [s] for s in sources}
    frontier = list(sources)
    while frontier:
        nxt: list[int] = []
        for node in frontier:
            for nb in sorted(pdg.neighbors(node)):
                if nb not in paths:
                    paths[nb] = paths[node] + [nb]
                    nxt.append(nb)
        frontier = nxt
    return paths


def cause_effect_chain(group: StatementGroup, pdg: StaticPdg) -> CauseEffectChain:
    """Approximate the smallest dependence subgraph spanning the group.

    Members are attached greedily: starting from the lowest id, the member
    nearest to the growing tree joins along its shortest path. Members
    unreachable from the tree start a new segment and the chain is marked
    disconnected.
    """
    members = list(group.members)
    if len(members) == 1:
        return CauseEffectChain(
            group_id=group.group_id,
            nodes=(members[0],),
            edges=(),
            disconnected=False,
            segments=((members[0],),),
        )

    remaining = set(members)
    segments_nodes: list[set[int]] = []
    tree_edges: set[tuple[int, int]] = set()
    disconnected = False
    while remaining:
        start = min(remaining)
        remaining.discard(start)
        tree = {start}
        while True:
            paths = _bfs_paths(pdg, tree)
            reachable = [m for m in remaining if m in paths]
            if not reachable:
                break
            nearest = min(reachable, key=lambda m: (len(paths[m]), m))
            path = paths[nearest]
            for a, b in zip(path, path[1:]):
                tree_edges.add((a, b))
            tree.update(path)
            remaining.discard(nearest)
        segments_nodes.append(tree)
        if remaining:
            disconnected = True

    walks = []
    used_edges: list[tuple[int, int, str]] = []
    for tree in segments_nodes:
        adj: dict[int, list[int]] = {n: [] for n in tree}
        for a, b in tree_edges:
            if a in tree and b in tree:
                adj[a].append(b)
                adj[b].append(a)
        for n in adj:
            adj[n].sort()
        leaves = [n for n in tree if len(adj[n]) <= 1]
        start = min(leaves) if leaves else min(tree)
        # Euler-style walk: junction nodes reappear when backtracking
        walk = [start]
        visited_edges: set[tuple[int, int]] = set()
        stack = [start]
        while stack:
            cur = stack[-1]
            advanced = False
            for nb in adj[cur]:
                key = (min(cur, nb), max(cur, nb))
                if key not in visited_edges:
                    visited_edges.add(key)
                    label = pdg.edge_label(cur, nb) or "data"
                    used_edges.append((cur, nb, label))
                    stack.append(nb)
                    walk.append(nb)
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                if stack:
                    walk.append(stack[-1])
        # drop trailing backtrack steps that revisit already-listed nodes
        while len(walk) > 1 and walk[-1] in walk[:-1]:
            walk.pop()
        walks.append(tuple(walk))

    all_nodes = tuple(n for w in walks for n in w)
    return CauseEffectChain(
        group_id=group.group_id,
        nodes=all_nodes,
        edges=tuple(used_edges),
        disconnected=disconnected,
        segments=tuple(walks),
    )


def rank(
    fused: dict[int, tuple[float, int, float, float]],
    groups: tuple[StatementGroup, ...],
    program_size: int,
) -> Ranking:
    """Order candidates by final score (descending, id-ascending ties),
    then every remaining statement with score 0."""
    group_of: dict[int, int] = {}
    for g in groups:
        for sid in g.members:
            group_of[sid] = g.group_id

    entries = []
    for sid, (final, tag, dyn, refined) in fused.items():
        entries.append(
            RankEntry(
                statement_id=sid,
                final=final,
                dynamic=dyn,
                refined_fpl=refined,
                scenario=tag,
                group_id=group_of.get(sid),
                candidate=True,
            )
        )
    entries.sort(key=lambda e: (-e.final, e.statement_id))

    rest = [
        RankEntry(
            statement_id=sid,
            final=0.0,
            dynamic=0.0,
            refined_fpl=0.0,
            scenario=None,
            group_id=None,
            candidate=False,
        )
        for sid in range(program_size)
        if sid not in fused
    ]
    return Ranking(entries=tuple(entries) + tuple(rest))


def fuse_scores(
    model: EnetModel,
    fpl: FplTable,
    tau_d: float = 0.5,
) -> dict[int, tuple[float, int, float, float]]:
    """Per-candidate (final, scenario, dynamic, refined) fusion table."""
    dyn_scores = normalize_scores(model)
    fused = {}
    for sid in model.candidate_ids:
        dyn = dyn_scores[sid]
        refined = float(fpl.refined_fpl[sid])
        prone = bool(fpl.fault_prone[sid])
        final, tag = combine(dyn, refined, prone, tau_d)
        fused[sid] = (final, tag, dyn, refined)
    return fused


def export_ranking(
    ranking: Ranking,
    chains: tuple[CauseEffectChain, ...],
    program: Program | None = None,
) -> str:
    """Delimited ranking, one record per statement, chains appended.

    Columns: rank, statement id, source span, final score, scenario tag,
    group id. Chain lines read `group G: s3 -(data)-> s7`; disconnected
    segments are joined with ` -/- `.
    """
    lines = ["rank\tstatement\tspan\tscore\tscenario\tgroup"]
    for pos, e in enumerate(ranking.entries, start=1):
        if program is not None:
            st = program.stmt(e.statement_id)
            span = f"{st.line}:{st.col}"
        else:
            span = "-"
        scenario = str(e.scenario) if e.scenario is not None else "-"
        group = str(e.group_id) if e.group_id is not None else "-"
        lines.append(
            f"{pos}\ts{e.statement_id}\t{span}\t{e.final:.6f}\t{scenario}\t{group}"
        )
    for chain in chains:
        parts = []
        for segment in chain.segments:
            text = f"s{segment[0]}"
            for a, b in zip(segment, segment[1:]):
                label = _label_between(chain, a, b)
                text += f" -({label})-> s{b}"
            parts.append(text)
        lines.append(f"group {chain.group_id}: " + " -/- ".join(parts))
    return "\n".join(lines) + "\n"


def _label_between(chain: CauseEffectChain, a: int, b: int) -> str:
    for x, y, label in chain.edges:
        if (x, y) == (a, b) or (x, y) == (b, a):
            return label
    return "data"
