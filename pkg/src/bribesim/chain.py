"""Block and block-tree data model.

Longest-chain fork choice with first-seen tie-breaking, uncle eligibility
(stale blocks referenced within a 7-height window), and fork-segment
extraction for bribery-claim proofs.

Blocks are identified by a content hash over a canonical serialization of
the header plus the uncle list: each field is length-prefixed and integers
are little-endian, so identifiers are reproducible across runs.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from functools import cached_property

UNCLE_WINDOW = 7  # max height distance between an uncle and the block citing it
MAX_UNCLES = 2
DEFAULT_GAS_LIMIT = 30_000_000  # bytes of opaque transaction payload per block

GENESIS_MINER = ""


class ChainError(ValueError):
    """Base class for block-tree errors."""


class NotAncestorError(ChainError):
    """Raised when a chain segment is requested between unrelated blocks."""


@dataclass(frozen=True)
class BlockHeader:
    parent_hash: str  # id of the parent block, "" for genesis
    miner: str  # agent identifier
    merkle_root: bytes  # opaque digest over the transaction payload
    timestamp: float  # simulation time, seconds
    difficulty: int
    nonce: int


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    uncle_refs: tuple[str, ...] = ()
    transactions: tuple[bytes, ...] = ()
    height: int = 0

    @cached_property
    def id(self) -> str:
        return block_id(self)

    @property
    def parent_id(self) -> str:
        return self.header.parent_hash

    @property
    def miner(self) -> str:
        return self.header.miner

    @property
    def timestamp(self) -> float:
        return self.header.timestamp


def _length_prefixed(raw: bytes) -> bytes:
    return struct.pack("<I", len(raw)) + raw


def canonical_bytes(block: Block) -> bytes:
    """Canonical serialization of the header plus uncle list.

    Fields appear in declaration order, each length-prefixed; integers are
    little-endian.  Transactions are deliberately excluded: they are opaque
    payload and do not contribute to identity.
    """
    h = block.header
    parts = [
        _length_prefixed(h.parent_hash.encode("ascii")),
        _length_prefixed(h.miner.encode("utf-8")),
        _length_prefixed(h.merkle_root),
        _length_prefixed(struct.pack("<d", h.timestamp)),
        _length_prefixed(struct.pack("<q", h.difficulty)),
        _length_prefixed(struct.pack("<q", h.nonce)),
        struct.pack("<I", len(block.uncle_refs)),
    ]
    parts.extend(_length_prefixed(u.encode("ascii")) for u in block.uncle_refs)
    return b"".join(parts)


def block_id(block: Block) -> str:
    # 128 bits of SHA-256 is plenty for simulation-scale uniqueness and keeps
    # CSV exports readable.
    return hashlib.sha256(canonical_bytes(block)).hexdigest()[:32]


def genesis_block() -> Block:
    """The fixed genesis: height 0, no miner, no reward."""
    return Block(header=BlockHeader("", GENESIS_MINER, b"", 0.0, 0, 0), height=0)


@dataclass(frozen=True)
class AppendResult:
    accepted: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.accepted


_ACCEPTED = AppendResult(True)


def _rejected(reason: str) -> AppendResult:
    return AppendResult(False, reason)


class BlockTree:
    """Append-only block store rooted at a fixed genesis.

    Single-writer: all mutations happen on the simulation's event thread;
    read-only snapshots may be shared for reporting.  Tracks per-block
    arrival order, the first-seen longest-chain head, and which blocks have
    already been consumed as uncles (each block may be referenced as an
    uncle at most once across the whole tree).
    """

    def __init__(self, genesis: Block | None = None, gas_limit: int = DEFAULT_GAS_LIMIT):
        self.genesis = genesis if genesis is not None else genesis_block()
        if self.genesis.height != 0 or self.genesis.parent_id != "":
            raise ChainError("genesis must sit at height 0 with no parent")
        gid = self.genesis.id
        self.genesis_id = gid
        self.gas_limit = gas_limit
        self.blocks: dict[str, Block] = {gid: self.genesis}
        self.referenced_uncles: set[str] = set()
        self.arrival_order: dict[str, int] = {gid: 0}
        self._arrival_counter = 1
        self._by_height: dict[int, list[str]] = {0: [gid]}
        self._head_id = gid

    def __contains__(self, bid: str) -> bool:
        return bid in self.blocks

    def __len__(self) -> int:
        return len(self.blocks)

    def block(self, bid: str) -> Block:
        return self.blocks[bid]

    def height_of(self, bid: str) -> int:
        return self.blocks[bid].height

    def blocks_at_height(self, height: int) -> tuple[str, ...]:
        return tuple(self._by_height.get(height, ()))

    # -- fork choice ------------------------------------------------------

    def canonical_head(self) -> str:
        """Tip of the maximal-height chain; first-seen wins among ties."""
        return self._head_id

    def canonical_chain(self) -> list[str]:
        """Block ids from genesis to the canonical head, in height order."""
        return self.chain_segment(self.genesis_id, self._head_id)

    # -- ancestry helpers -------------------------------------------------

    def is_in_branch(self, root: str, bid: str) -> bool:
        """True when `root` is `bid` or an ancestor of `bid`."""
        root_height = self.blocks[root].height
        cur = self.blocks[bid]
        while cur.height > root_height:
            cur = self.blocks[cur.parent_id]
        return cur.id == root

    def _recent_ancestors(self, bid: str, floor_height: int) -> set[str]:
        """Ids of bid's proper ancestors with height >= floor_height."""
        out: set[str] = set()
        cur = self.blocks[bid]
        while cur.parent_id and self.blocks[cur.parent_id].height >= floor_height:
            cur = self.blocks[cur.parent_id]
            out.add(cur.id)
        return out

    # -- mutation ---------------------------------------------------------

    def append_block(self, block: Block) -> AppendResult:
        """Validate and store a block; on rejection the tree is unchanged."""
        if block.id in self.blocks:
            return _rejected("duplicate-block")
        parent = self.blocks.get(block.parent_id)
        if parent is None:
            return _rejected("unknown-parent")
        if block.height != parent.height + 1:
            return _rejected("bad-height")
        if block.timestamp < parent.timestamp:
            return _rejected("timestamp-before-parent")
        if sum(len(tx) for tx in block.transactions) > self.gas_limit:
            return _rejected("gas-limit-exceeded")
        reason = self._check_uncles(block, parent)
        if reason is not None:
            return _rejected(reason)

        self.blocks[block.id] = block
        self.arrival_order[block.id] = self._arrival_counter
        self._arrival_counter += 1
        self._by_height.setdefault(block.height, []).append(block.id)
        self.referenced_uncles.update(block.uncle_refs)
        # Strictly-greater keeps the first-seen tip on height ties.
        if block.height > self.blocks[self._head_id].height:
            self._head_id = block.id
        return _ACCEPTED

    def _check_uncles(self, block: Block, parent: Block) -> str | None:
        uncles = block.uncle_refs
        if not uncles:
            return None
        if len(uncles) > MAX_UNCLES:
            return "uncle-rule-too-many"
        if len(set(uncles)) != len(uncles):
            return "uncle-rule-repeated-reference"
        floor = block.height - UNCLE_WINDOW
        # The block is not stored yet, so its ancestor set is the parent plus
        # the parent's recent ancestors.
        block_ancestors = {parent.id} | self._recent_ancestors(parent.id, floor)
        for uid in uncles:
            uncle = self.blocks.get(uid)
            if uncle is None:
                return "uncle-rule-unknown-uncle"
            if uid in self.referenced_uncles:
                return "uncle-rule-already-referenced"
            distance = block.height - uncle.height
            if distance < 1 or distance > UNCLE_WINDOW:
                return "uncle-rule-out-of-window"
            if uid in block_ancestors:
                return "uncle-rule-is-ancestor"
            if not (self._recent_ancestors(uid, floor) & block_ancestors):
                return "uncle-rule-no-recent-shared-ancestor"
        return None

    # -- queries ----------------------------------------------------------

    def eligible_uncles(self, parent_id: str) -> list[str]:
        """Uncle candidates for a child of `parent_id`.

        All unreferenced, non-ancestor blocks whose height distance from the
        prospective child lies in [1, UNCLE_WINDOW] and which share an
        ancestor with the child inside that window, ordered by height then
        arrival.  Callers truncate to MAX_UNCLES.
        """
        parent = self.blocks[parent_id]
        child_height = parent.height + 1
        floor = child_height - UNCLE_WINDOW
        child_ancestors = {parent.id} | self._recent_ancestors(parent.id, floor)
        out: list[str] = []
        for h in range(max(floor, 0), child_height):
            for bid in self._by_height.get(h, ()):
                if bid in self.referenced_uncles or bid in child_ancestors:
                    continue
                if bid == self.genesis_id:
                    continue
                if self._recent_ancestors(bid, floor) & child_ancestors:
                    out.append(bid)
        out.sort(key=lambda bid: (self.blocks[bid].height, self.arrival_order[bid]))
        return out

    def chain_segment(self, from_id: str, to_id: str) -> list[str]:
        """Block ids from `from_id` to `to_id` inclusive, in height order.

        Raises NotAncestorError unless `from_id` is `to_id` or one of its
        ancestors.
        """
        start = self.blocks[from_id]
        cur = self.blocks[to_id]
        segment = [cur.id]
        while cur.id != start.id:
            if cur.height <= start.height:
                raise NotAncestorError(f"{from_id} is not an ancestor of {to_id}")
            cur = self.blocks[cur.parent_id]
            segment.append(cur.id)
        segment.reverse()
        return segment
