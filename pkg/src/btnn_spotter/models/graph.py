"""Keyword decoding graph data models."""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from ..errors import ConfigurationError

SELF_LOOP = "self_loop"
EMISSION = "emission"
JUMP = "jump"
ARC_KINDS = (SELF_LOOP, EMISSION, JUMP)


@dataclass(frozen=True)
class Lexicon:
    """Word (or grapheme) to acoustic state sequence mapping."""

    entries: Dict[str, Tuple[int, ...]]
    num_states: int

    def __post_init__(self):
        entries = {}
        for word, states in self.entries.items():
            states = tuple(int(s) for s in states)
            if not states:
                raise ConfigurationError(f"lexicon entry {word!r} has no states")
            bad = [s for s in states if not 0 <= s < self.num_states]
            if bad:
                raise ConfigurationError(
                    f"lexicon entry {word!r} uses state {bad[0]} outside 0..{self.num_states - 1}"
                )
            entries[word] = states
        object.__setattr__(self, "entries", entries)

    def __hash__(self) -> int:
        return hash((tuple(sorted(self.entries.items())), self.num_states))

    @classmethod
    def from_graphemes(cls, alphabet: Iterable[str]) -> "Lexicon":
        """Each character becomes its own pseudo-state, numbered in order."""
        chars = list(dict.fromkeys(alphabet))
        return cls({char: (index,) for index, char in enumerate(chars)}, len(chars))


@dataclass(frozen=True)
class Arc:
    """Graph arc. `state` is None for arcs into the final node, which consume no frame."""

    src: int
    dst: int
    kind: str
    state: Optional[int]
    weight: float = 0.0


@dataclass(frozen=True)
class JumpConfig:
    """Jump-arc construction settings."""

    max_skip: int = 1
    punishment: float = 4.0

    def validate(self) -> None:
        if self.max_skip < 0:
            raise ConfigurationError(f"max_skip must be >= 0, got {self.max_skip}")
        if self.punishment < 0:
            raise ConfigurationError(f"punishment must be >= 0, got {self.punishment}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "JumpConfig":
        return cls(max_skip=int(data.get("max_skip", 1)), punishment=float(data.get("punishment", 4.0)))


@dataclass(frozen=True, eq=False)
class KeywordGraph:
    """
    Linear keyword chain.

    Node 0 is the start, nodes 1..K carry states[0..K-1], node K+1 is final.
    Hypotheses are born by entering node 1, which consumes states[0].
    """

    keyword: str
    num_nodes: int
    arcs: Tuple[Arc, ...]
    state_of_node: Dict[int, int]
    _outgoing: Dict[int, List[Arc]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple(self.arcs))
        outgoing: Dict[int, List[Arc]] = {node: [] for node in range(self.num_nodes)}
        for arc in self.arcs:
            outgoing.setdefault(arc.src, []).append(arc)
        object.__setattr__(self, "_outgoing", outgoing)

    @property
    def start_node(self) -> int:
        return 0

    @property
    def entry_node(self) -> int:
        return 1

    @property
    def final_node(self) -> int:
        return self.num_nodes - 1

    @property
    def entry_state(self) -> int:
        return self.state_of_node[self.entry_node]

    @property
    def states(self) -> List[int]:
        return [self.state_of_node[node] for node in range(1, self.final_node)]

    def outgoing(self, node: int) -> Sequence[Arc]:
        return self._outgoing.get(node, ())

    def arcs_of_kind(self, kind: str) -> List[Arc]:
        return [arc for arc in self.arcs if arc.kind == kind]
