"""Token prefix tree over the full name set, driving constrained decoding.

Every name is inserted as its token sequence followed by the end-of-name
sentinel, which is an ordinary edge to a leaf node. allowed_next therefore
reports the sentinel exactly when the prefix spells a complete name, and a
hypothesis is finished exactly when it consumed the sentinel.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import IntegrityError
from .kb import NameIndex
from .tokens import TOKENIZER_KINDS, Tokenizer, load_vocab, save_vocab

MAGIC = b"GTRI"
FORMAT_VERSION = 1

#: Cursor handle meaning "walked off the trie".
DEAD_END = -1


@dataclass(frozen=True, slots=True)
class TrieCursor:
    node: int
    depth: int

    @property
    def alive(self) -> bool:
        return self.node != DEAD_END


class TokenTrie:
    """Arena-backed prefix tree; immutable once built, cheap cursors."""

    def __init__(self, tokenizer: Tokenizer):
        self.tokenizer = tokenizer
        self.children: list[dict[str, int]] = [{}]
        self.root = 0
        self.name_count = 0
        self.max_name_tokens = 0
        self._sorted: dict[int, tuple[str, ...]] = {}

    @property
    def node_count(self) -> int:
        """Number of nodes excluding the root."""
        return len(self.children) - 1

    @property
    def end_of_name(self) -> str:
        return self.tokenizer.specials.end_of_name

    def insert(self, name: str) -> None:
        specials = self.tokenizer.specials.as_set()
        tokens = self.tokenizer.tokenize(name)
        if not tokens:
            raise IntegrityError("cannot insert an empty name")
        bad = specials.intersection(tokens)
        if bad:
            raise IntegrityError(f"name {name!r} contains special token(s) {sorted(bad)}")
        node = self.root
        for token in tokens:
            node = self._child(node, token)
        terminal = self.children[node]
        if self.end_of_name not in terminal:
            self._child(node, self.end_of_name)
            self.name_count += 1
            self.max_name_tokens = max(self.max_name_tokens, len(tokens))
        self._sorted.clear()

    def _child(self, node: int, token: str) -> int:
        kids = self.children[node]
        nxt = kids.get(token)
        if nxt is None:
            nxt = len(self.children)
            self.children.append({})
            kids[token] = nxt
        return nxt

    def start(self) -> TrieCursor:
        return TrieCursor(node=self.root, depth=0)

    def step(self, cursor: TrieCursor, token: str) -> TrieCursor:
        """Advance one edge; returns a dead-end cursor if the edge is absent."""
        if not cursor.alive:
            return TrieCursor(DEAD_END, cursor.depth + 1)
        nxt = self.children[cursor.node].get(token, DEAD_END)
        return TrieCursor(nxt, cursor.depth + 1)

    def allowed_from(self, cursor: TrieCursor) -> tuple[str, ...]:
        """Tokens permitted after the cursor, sorted for determinism."""
        if not cursor.alive:
            return ()
        cached = self._sorted.get(cursor.node)
        if cached is None:
            cached = tuple(sorted(self.children[cursor.node]))
            self._sorted[cursor.node] = cached
        return cached

    def walk(self, prefix: Sequence[str]) -> TrieCursor:
        cursor = self.start()
        for token in prefix:
            cursor = self.step(cursor, token)
            if not cursor.alive:
                break
        return cursor

    def allowed_next(self, prefix: Sequence[str]) -> tuple[str, ...]:
        """Tokens that extend the prefix toward some complete name.

        Empty when the prefix is not a path; contains the end-of-name
        sentinel exactly when the prefix spells a complete name.
        """
        return self.allowed_from(self.walk(prefix))

    def is_complete(self, prefix: Sequence[str]) -> bool:
        cursor = self.walk(prefix)
        return cursor.alive and self.end_of_name in self.children[cursor.node]

    def iter_edges(self) -> Iterable[tuple[int, str, int]]:
        for node, kids in enumerate(self.children):
            for token, child in kids.items():
                yield node, token, child


def build_trie(index: NameIndex, tokenizer: Tokenizer) -> TokenTrie:
    """Insert every name of the index; name_count ends equal to the index size."""
    if len(index) == 0:
        raise IntegrityError("cannot build a trie over an empty name index")
    trie = TokenTrie(tokenizer)
    for name in index.names:
        trie.insert(name)
    return trie


def _vocab_path(path: Path) -> Path:
    return path.with_name(path.name + ".vocab.json")


def save_trie(trie: TokenTrie, path: str | Path) -> None:
    """Write the binary node cache plus its token vocabulary JSON sidecar.

    Layout, little-endian: magic, format version u32, tokenizer kind u8,
    name count u64, node count u64, then per node a terminal flag u8, child
    count u32, and (token id u32, child index u32) pairs sorted by token id.
    """
    path = Path(path)
    vocab = {tok: i for i, tok in enumerate(sorted({t for _, t, _ in trie.iter_edges()}))}
    save_vocab(_vocab_path(path), vocab)
    eon = trie.end_of_name
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IBQQ", FORMAT_VERSION, TOKENIZER_KINDS.index(trie.tokenizer.kind),
                             trie.name_count, len(trie.children)))
        for kids in trie.children:
            pairs = sorted((vocab[tok], child) for tok, child in kids.items())
            fh.write(struct.pack("<BI", 1 if eon in kids else 0, len(pairs)))
            for token_id, child in pairs:
                fh.write(struct.pack("<II", token_id, child))


def load_trie(path: str | Path, tokenizer: Tokenizer | None = None) -> TokenTrie:
    """Load a cached trie; the tokenizer kind must match when one is supplied."""
    path = Path(path)
    id_to_token = {i: tok for tok, i in load_vocab(_vocab_path(path)).items()}
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise IntegrityError(f"{path}: not a trie cache")
        version, kind_id, name_count, node_count = struct.unpack("<IBQQ", fh.read(21))
        if version != FORMAT_VERSION:
            raise IntegrityError(f"{path}: unsupported cache version {version}")
        kind = TOKENIZER_KINDS[kind_id]
        if tokenizer is None:
            tokenizer = Tokenizer(kind)
        elif tokenizer.kind != kind:
            raise IntegrityError(f"{path}: cache built with {kind} tokens, requested {tokenizer.kind}")
        trie = TokenTrie(tokenizer)
        trie.children = [{} for _ in range(node_count)]
        max_depth = 0
        for node in range(node_count):
            _terminal, n_pairs = struct.unpack("<BI", fh.read(5))
            for _ in range(n_pairs):
                token_id, child = struct.unpack("<II", fh.read(8))
                trie.children[node][id_to_token[token_id]] = child
        trie.name_count = name_count
        # Recover max depth for the decoder's default length cap.
        depths = [0] * node_count
        for node in range(node_count):
            for token, child in trie.children[node].items():
                depths[child] = depths[node] + 1
                if token != trie.end_of_name:
                    max_depth = max(max_depth, depths[child])
        trie.max_name_tokens = max_depth
        return trie
