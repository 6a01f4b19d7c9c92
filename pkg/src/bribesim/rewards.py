"""Reward accounting: main, uncle, and nephew block rewards plus bribe payouts.

A main block earns the full block reward.  A stale block referenced as an
uncle within 7 heights earns a partial reward that decays with the height
distance, and the referencing (nephew) block earns a bonus per uncle.  All
amounts are integer nano-units, see `units`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .chain import UNCLE_WINDOW, Block, BlockTree
from .units import format_nano, to_nano

DEFAULT_BLOCK_REWARD = to_nano(2)  # 2.0 ETH per main block
DEFAULT_NEPHEW_DIVISOR = 32  # nephew bonus is block_reward/32 per uncle

# Distance d in [1, 7] pays (8 - d)/8 of the block reward.
_UNCLE_NUMERATOR_BASE = UNCLE_WINDOW + 1


class RewardError(ValueError):
    """Base class for reward computation and settlement errors."""


class OutOfWindowError(RewardError):
    """Uncle distance outside [1, 7]; the stale block is lost."""


class DoubleSettleError(RewardError):
    """A block may be settled at most once."""


@dataclass(frozen=True)
class RewardParams:
    block_reward: int = DEFAULT_BLOCK_REWARD  # nano-ETH
    nephew_divisor: int = DEFAULT_NEPHEW_DIVISOR
    fee_per_block: int = 0  # optional flat transaction-fee income, default off


def main_reward(params: RewardParams | None = None) -> int:
    """The configured main-block reward (2.0 ETH by default)."""
    return (params or RewardParams()).block_reward


def uncle_reward(uncle_height: int, block_height: int, reward: int = DEFAULT_BLOCK_REWARD) -> int:
    """Reward for an uncle at `uncle_height` cited by a block at `block_height`.

    Pays (uncle_height + 8 - block_height)/8 of the block reward; the sooner
    an uncle is referenced, the more it earns.  Distances outside [1, 7]
    raise OutOfWindowError.
    """
    distance = block_height - uncle_height
    if distance < 1 or distance > UNCLE_WINDOW:
        raise OutOfWindowError(f"uncle distance {distance} outside [1, {UNCLE_WINDOW}]")
    return (_UNCLE_NUMERATOR_BASE - distance) * reward // _UNCLE_NUMERATOR_BASE


def nephew_reward(
    n_uncles: int,
    reward: int = DEFAULT_BLOCK_REWARD,
    divisor: int = DEFAULT_NEPHEW_DIVISOR,
) -> int:
    """Bonus paid to a main block's miner for referencing `n_uncles` uncles."""
    if n_uncles < 0 or n_uncles > 2:
        raise RewardError(f"uncle count {n_uncles} outside [0, 2]")
    return n_uncles * reward // divisor


@dataclass
class MinerBalance:
    main: int = 0
    uncle: int = 0
    nephew: int = 0
    bribe_mining: int = 0
    bribe_accept: int = 0

    def total(self) -> int:
        return self.main + self.uncle + self.nephew + self.bribe_mining + self.bribe_accept


CSV_COLUMNS = ("agent_id", "main", "uncle", "nephew", "bribe_mining", "bribe_accept", "total")


class RewardLedger:
    """Per-miner accrued rewards; mutated only on the simulation event thread."""

    def __init__(self, params: RewardParams | None = None):
        self.params = params or RewardParams()
        self.balances: dict[str, MinerBalance] = {}
        self.settled_blocks: set[str] = set()

    def balance(self, agent: str) -> MinerBalance:
        return self.balances.setdefault(agent, MinerBalance())

    def settle_block(self, block: Block, tree: BlockTree) -> None:
        """Credit a block's main/nephew reward and its uncles' rewards.

        The caller chooses which blocks to settle (typically the canonical
        chain); each block settles at most once.
        """
        if block.id in self.settled_blocks:
            raise DoubleSettleError(f"block {block.id} already settled")
        if not block.miner:
            raise RewardError("genesis carries no reward")
        r = self.params.block_reward
        miner = self.balance(block.miner)
        miner.main += r + self.params.fee_per_block
        miner.nephew += nephew_reward(len(block.uncle_refs), r, self.params.nephew_divisor)
        for uid in block.uncle_refs:
            uncle = tree.block(uid)
            self.balance(uncle.miner).uncle += uncle_reward(uncle.height, block.height, r)
        self.settled_blocks.add(block.id)

    def settle_chain(self, tree: BlockTree, tip: str | None = None) -> None:
        """Settle every block from genesis to `tip` (canonical head by default)."""
        for bid in tree.chain_segment(tree.genesis_id, tip or tree.canonical_head()):
            if bid == tree.genesis_id:
                continue
            self.settle_block(tree.block(bid), tree)

    def credit_bribe(self, agent: str, role: str, amount: int) -> None:
        """Record a verified bribe payout ("mined" or "accepted" role)."""
        bal = self.balance(agent)
        if role == "mined":
            bal.bribe_mining += amount
        elif role == "accepted":
            bal.bribe_accept += amount
        else:
            raise RewardError(f"unknown bribe role {role!r}")

    def total_minted(self) -> int:
        """Total ETH created by block settlement (bribes excluded)."""
        return sum(b.main + b.uncle + b.nephew for b in self.balances.values())

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for agent in sorted(self.balances):
                b = self.balances[agent]
                w.writerow(
                    [
                        agent,
                        format_nano(b.main),
                        format_nano(b.uncle),
                        format_nano(b.nephew),
                        format_nano(b.bribe_mining),
                        format_nano(b.bribe_accept),
                        format_nano(b.total()),
                    ]
                )
