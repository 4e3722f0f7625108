"""Control-flow automata over basic statements, plus the deterministic-
variable analysis.

Lowering: a conditional branches through an assume(b)/assume(not b) pair and
rejoins; a while loop owns a single head node carrying the guard pair, and
the last body edge re-enters the head (so each iteration contributes exactly
one guard occurrence, matching the structured trace semantics)."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import prog
from .terms import Not, Term, base_vars, normalize


@dataclass(frozen=True)
class Edge:
    src: int
    stmt: prog.Stmt
    dst: int


@dataclass
class ControlFlowAutomaton:
    nodes: list[int]
    edges: list[Edge]
    entry: int
    exit: int
    loop_heads: dict[int, Term] = field(default_factory=dict)  # head -> guard
    back_edges: frozenset[int] = frozenset()  # indices into edges

    def out_edges(self, n: int) -> list[Edge]:
        return [e for e in self.edges if e.src == n]

    def structure_violations(self) -> list[str]:
        """Check the well-formedness conditions: exit reachability, no exit
        successors, at most two out-edges forming complementary assumes."""
        out: list[str] = []
        succ: dict[int, list[Edge]] = {n: [] for n in self.nodes}
        for e in self.edges:
            succ[e.src].append(e)
        if succ[self.exit]:
            out.append("exit node has outgoing edges")
        # reverse reachability from exit
        rev: dict[int, list[int]] = {n: [] for n in self.nodes}
        for e in self.edges:
            rev[e.dst].append(e.src)
        seen = {self.exit}
        stack = [self.exit]
        while stack:
            for m in rev[stack.pop()]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        for n in self.nodes:
            if n not in seen:
                out.append(f"node {n} cannot reach the exit")
        for n, es in succ.items():
            if len(es) > 2:
                out.append(f"node {n} has {len(es)} outgoing edges")
            elif len(es) == 2:
                a, b = es
                if not (isinstance(a.stmt, prog.Assume) and isinstance(b.stmt, prog.Assume)):
                    out.append(f"node {n} branches on non-assume statements")
                elif normalize(Not(a.stmt.cond)) != normalize(b.stmt.cond):
                    out.append(f"node {n} guards are not complementary")
            elif len(es) == 1 and isinstance(es[0].stmt, prog.Assume):
                out.append(f"assume edge from {n} lacks a complementary sibling")
        return out


def compile_cfa(p: prog.Program) -> ControlFlowAutomaton:
    nodes: list[int] = [0]
    edges: list[Edge] = []
    loop_heads: dict[int, Term] = {}
    back: set[int] = set()

    def fresh() -> int:
        n = len(nodes)
        nodes.append(n)
        return n

    def emit(src: int, st: prog.Stmt, dst: int | None) -> int:
        d = fresh() if dst is None else dst
        edges.append(Edge(src, st, d))
        return d

    def go(b: prog.Block, cur: int, target: int | None) -> int:
        match b:
            case prog.Basic(st):
                return emit(cur, st, target)
            case prog.Seq(blocks):
                if not blocks:
                    if target is not None and target != cur:
                        raise ValueError("empty block cannot bridge two nodes")
                    return cur if target is None else target
                for x in blocks[:-1]:
                    cur = go(x, cur, None)
                return go(blocks[-1], cur, target)
            case prog.If(cond, then, els):
                join = fresh() if target is None else target
                branch(cur, cond, then, join)
                branch(cur, normalize(Not(cond)), els, join)
                return join
            case prog.While(cond, body):
                head = cur
                loop_heads[head] = cond
                n_before = len(edges)
                branch(head, cond, body, head)
                for i in range(n_before, len(edges)):
                    if edges[i].dst == head:
                        back.add(i)
                out = emit(head, prog.Assume(normalize(Not(cond))), target)
                return out
        raise TypeError(f"go: {b!r}")

    def branch(src: int, guard: Term, body: prog.Block, join: int):
        if isinstance(body, prog.Seq) and not body.blocks:
            emit(src, prog.Assume(guard), join)
        else:
            b0 = emit(src, prog.Assume(guard), None)
            go(body, b0, join)

    exit_node = go(p.body, 0, None)
    auto = ControlFlowAutomaton(
        nodes=nodes, edges=edges, entry=0, exit=exit_node,
        loop_heads=loop_heads, back_edges=frozenset(back),
    )
    return auto


def enumerate_paths(cfa: ControlFlowAutomaton, max_back_uses: int):
    """All entry->exit paths using each back edge at most `max_back_uses`
    times. Yields (statements, node_sequence); deterministic DFS order."""
    out_by_node: dict[int, list[tuple[int, Edge]]] = {n: [] for n in cfa.nodes}
    for i, e in enumerate(cfa.edges):
        out_by_node[e.src].append((i, e))

    results = []

    def dfs(n: int, stmts: list, path: list, uses: dict):
        if n == cfa.exit:
            results.append((tuple(stmts), tuple(path)))
            return
        for i, e in out_by_node[n]:
            if i in cfa.back_edges:
                if uses.get(i, 0) >= max_back_uses:
                    continue
                uses[i] = uses.get(i, 0) + 1
                stmts.append(e.stmt)
                path.append(e.dst)
                dfs(e.dst, stmts, path, uses)
                path.pop()
                stmts.pop()
                uses[i] -= 1
            else:
                stmts.append(e.stmt)
                path.append(e.dst)
                dfs(e.dst, stmts, path, uses)
                path.pop()
                stmts.pop()

    dfs(cfa.entry, [], [cfa.entry], {})
    return results


def structured_traces(b: prog.Block, unroll: int) -> set[tuple]:
    """Reference trace semantics of a structured body with loops unrolled at
    most `unroll` times (oracle for compile_cfa's language)."""
    match b:
        case prog.Basic(st):
            return {(st,)}
        case prog.Seq(blocks):
            acc = {()}
            for x in blocks:
                acc = {t1 + t2 for t1 in acc for t2 in structured_traces(x, unroll)}
            return acc
        case prog.If(cond, then, els):
            pos = {(prog.Assume(cond),) + t for t in structured_traces(then, unroll)}
            neg_guard = prog.Assume(normalize(Not(cond)))
            neg = {(neg_guard,) + t for t in structured_traces(els, unroll)}
            return pos | neg
        case prog.While(cond, body):
            enter = prog.Assume(cond)
            leave = prog.Assume(normalize(Not(cond)))
            acc = {()}
            out = {(leave,)}
            for _ in range(unroll):
                acc = {t1 + (enter,) + t2 for t1 in acc for t2 in structured_traces(body, unroll)}
                out |= {t + (leave,) for t in acc}
            return out
    raise TypeError(f"structured_traces: {b!r}")


def compute_vdet(p: prog.Program) -> frozenset[str]:
    """Under-approximate the deterministically-assigned variables: start from
    all of V, remove sampling targets, then iterate removal of assignment
    targets whose right-hand side or any enclosing guard reads a removed
    variable, to a fixpoint."""
    det = set(p.var_names)

    def guard_tainted(cond: Term) -> bool:
        return any(v not in det for v in base_vars(cond))

    def walk(b: prog.Block, tainted: bool) -> bool:
        changed = False
        match b:
            case prog.Basic(prog.Sample(target, _)):
                if target.name in det:
                    det.discard(target.name)
                    changed = True
            case prog.Basic(prog.Assign(target, e)):
                reads = base_vars(e)
                if target.index is not None:
                    reads |= base_vars(target.index)
                if (tainted or any(v not in det for v in reads)) and target.name in det:
                    det.discard(target.name)
                    changed = True
            case prog.Basic(prog.Assume()):
                pass
            case prog.Seq(blocks):
                for x in blocks:
                    changed |= walk(x, tainted)
            case prog.If(cond, then, els):
                t = tainted or guard_tainted(cond)
                changed |= walk(then, t)
                changed |= walk(els, t)
            case prog.While(cond, body):
                t = tainted or guard_tainted(cond)
                changed |= walk(body, t)
        return changed

    while walk(p.body, False):
        pass
    return frozenset(det)
