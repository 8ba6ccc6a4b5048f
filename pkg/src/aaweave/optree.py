"""Operator-tree nodes for rule right-hand sides.

A tree describes what flows out of one anchor port: plain message leaves,
conditional dispatch, ordered sequences, unordered parallel fan-out, the
absorbing ``nop``, the neutral ``call`` (stands for the interaction the
anchor already had) and ``delegate`` (claims the anchor exclusively).

Leaves and conditions hold either a source-level port expression or, after
grounding, a concrete :class:`~aaweave.model.PortRef`.  Both carry a
``key()`` method so trees can be ordered canonically.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Union


@dataclass(frozen=True, slots=True)
class Leaf:
    target: Any


@dataclass(frozen=True, slots=True)
class Nop:
    pass


@dataclass(frozen=True, slots=True)
class Call:
    pass


@dataclass(frozen=True, slots=True)
class Delegate:
    child: "OperatorTree"


@dataclass(frozen=True, slots=True)
class If:
    cond: Any
    then: "OperatorTree"
    orelse: "OperatorTree"


@dataclass(frozen=True, slots=True)
class Seq:
    children: tuple["OperatorTree", ...]


@dataclass(frozen=True, slots=True)
class Par:
    children: tuple["OperatorTree", ...]


OperatorTree = Union[Leaf, Nop, Call, Delegate, If, Seq, Par]

NOP = Nop()
CALL = Call()

# Canonical variant order: Leaf < Nop < Call < Delegate < If < Seq < Par.
_RANK = {Leaf: 0, Nop: 1, Call: 2, Delegate: 3, If: 4, Seq: 5, Par: 6}


@lru_cache(maxsize=1 << 20)
def sort_key(tree: OperatorTree) -> tuple:
    """Total structural order over trees; injective on well-formed trees."""
    rank = _RANK[type(tree)]
    match tree:
        case Leaf(target=t):
            return (rank, t.key())
        case Nop() | Call():
            return (rank,)
        case Delegate(child=c):
            return (rank, sort_key(c))
        case If(cond=c, then=a, orelse=b):
            return (rank, c.key(), sort_key(a), sort_key(b))
        case Seq(children=ch) | Par(children=ch):
            return (rank, tuple(sort_key(c) for c in ch))
    raise TypeError(f"not an operator tree: {tree!r}")


def seq_of(children) -> OperatorTree:
    children = tuple(children)
    return children[0] if len(children) == 1 else Seq(children)


def par_of(children) -> OperatorTree:
    children = tuple(children)
    return children[0] if len(children) == 1 else Par(children)


def map_leaves(tree: OperatorTree, fn) -> OperatorTree:
    """Rebuild the tree with ``fn`` applied to every leaf target and condition."""
    match tree:
        case Leaf(target=t):
            return Leaf(fn(t))
        case Nop() | Call():
            return tree
        case Delegate(child=c):
            return Delegate(map_leaves(c, fn))
        case If(cond=c, then=a, orelse=b):
            return If(fn(c), map_leaves(a, fn), map_leaves(b, fn))
        case Seq(children=ch):
            return Seq(tuple(map_leaves(c, fn) for c in ch))
        case Par(children=ch):
            return Par(tuple(map_leaves(c, fn) for c in ch))
    raise TypeError(f"not an operator tree: {tree!r}")


def iter_refs(tree: OperatorTree):
    """Yield every leaf target and condition in the tree."""
    match tree:
        case Leaf(target=t):
            yield t
        case Nop() | Call():
            return
        case Delegate(child=c):
            yield from iter_refs(c)
        case If(cond=c, then=a, orelse=b):
            yield c
            yield from iter_refs(a)
            yield from iter_refs(b)
        case Seq(children=ch) | Par(children=ch):
            for c in ch:
                yield from iter_refs(c)
