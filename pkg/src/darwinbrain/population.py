"""Actor and game populations plus the id and key counters they share."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from .atoms import ActorAtom, GameAtom, Library, validate_actor, validate_game
from .workmem import INTERNAL, KeyMinter


@dataclass
class Population:
    atoms: dict = field(default_factory=dict)          # id -> ActorAtom
    games: dict = field(default_factory=dict)          # id -> GameAtom
    path_weights: dict = field(default_factory=dict)   # branch atom id -> {reader id: w}
    path_baselines: dict = field(default_factory=dict)
    molecules: dict = field(default_factory=dict)      # initiator id -> Molecule (last assessment)
    minter: KeyMinter = field(default_factory=KeyMinter)
    next_atom_id: int = 0
    next_game_id: int = 0

    @classmethod
    def from_atoms(cls, actors, games=()) -> "Population":
        pop = cls()
        for a in actors:
            pop.add_atom(a)
        for g in games:
            pop.add_game(g)
        return pop

    @classmethod
    def from_library(cls, lib: Library) -> "Population":
        return cls.from_atoms(copy.deepcopy(lib.actors), copy.deepcopy(lib.games))

    def to_library(self, meta: dict | None = None) -> Library:
        return Library(meta or {}, [self.atoms[i] for i in sorted(self.atoms)],
                       [self.games[i] for i in sorted(self.games)])

    def add_atom(self, a: ActorAtom) -> ActorAtom:
        if a.id in self.atoms:
            raise ValueError(f"duplicate atom id {a.id}")
        validate_actor(a)
        self.atoms[a.id] = a
        self.next_atom_id = max(self.next_atom_id, a.id + 1)
        self.minter.register(a.inputs + a.outputs)
        return a

    def add_game(self, g: GameAtom) -> GameAtom:
        if g.id in self.games:
            raise ValueError(f"duplicate game id {g.id}")
        validate_game(g)
        self.games[g.id] = g
        self.next_game_id = max(self.next_game_id, g.id + 1)
        self.minter.register(g.keys() + ([g.output_key] if g.output_key else []))
        return g

    def new_atom_id(self) -> int:
        self.next_atom_id += 1
        return self.next_atom_id - 1

    def new_game_id(self) -> int:
        self.next_game_id += 1
        return self.next_game_id - 1

    def remove_atom(self, aid: int) -> None:
        self.atoms.pop(aid, None)
        self.path_weights.pop(aid, None)
        self.path_baselines.pop(aid, None)
        for w in self.path_weights.values():
            w.pop(aid, None)

    def initiators(self) -> list:
        return sorted(a.id for a in self.atoms.values() if a.is_initiator())

    def written_keys(self) -> set:
        return {k for a in self.atoms.values() for k in a.outputs}

    def written_wm_keys(self) -> list:
        return sorted(k for k in self.written_keys() if k.startswith(INTERNAL))

    def kinds(self) -> dict:
        return {a.id: a.kind for a in self.atoms.values()}

    def copy(self) -> "Population":
        return copy.deepcopy(self)
