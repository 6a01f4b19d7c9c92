"""Cross-chain bribe contract state machine.

Lifecycle: Proposed -> Funded -> Active -> Terminated.  The briber escrows
funds on a foreign chain; registered miners of the victim chain commit
fork-chain proofs and are paid per verified block they mined on, or
accepted on, the designated fork.  The simulator plays the role of a
perfect cross-chain verification oracle over the victim chain's state.

All amounts are integer nano-token-worth; escrow conservation
(payouts + remainder == deposit) is exact.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

from .chain import BlockTree
from .units import format_nano

DEFAULT_CONFIRM_DEPTH = 7  # claimed block may trail the committed tip by this many


class ContractState(Enum):
    PROPOSED = "proposed"
    FUNDED = "funded"
    ACTIVE = "active"
    TERMINATED = "terminated"


class ClaimRole(Enum):
    MINED = "mined"
    ACCEPTED = "accepted"


class ContractError(ValueError):
    """Base class for contract protocol violations (caller bugs)."""


class WrongStateError(ContractError):
    pass


class UnregisteredBribeeError(ContractError):
    pass


class MalformedSegmentError(ContractError):
    pass


# Claim rejection reasons: rejections are normal domain outcomes, returned
# rather than raised.
REJECT_DUPLICATE = "duplicate-claim"
REJECT_NOT_IN_SEGMENT = "block-not-in-segment"
REJECT_OUT_OF_WINDOW = "outside-confirmation-window"
REJECT_NOT_MINER = "not-block-miner"
REJECT_ESCROW = "escrow-exhausted"

TERMINATED_FORK_WON = "fork-won"
TERMINATED_EXPIRED = "expired"


@dataclass(frozen=True)
class ContractParams:
    contract_id: str
    creator: str  # briber's cross-chain account
    mining_bribe: int  # nano token-worth per verified fork-mined block
    accept_bribe: int  # nano token-worth per verified fork-acceptance
    fork_root: str  # id of the first block of the designated fork branch
    window: tuple[float, float]  # (start, end), simulation seconds
    confirm_depth: int = DEFAULT_CONFIRM_DEPTH


@dataclass(frozen=True)
class Claim:
    bribee: str
    role: ClaimRole
    segment: tuple[str, ...]  # block ids, fork root .. committed tip
    claimed_block: str


@dataclass(frozen=True)
class PayoutRecord:
    bribee: str
    role: ClaimRole
    block: str
    amount: int
    sim_time: float


@dataclass(frozen=True)
class ClaimResult:
    paid: bool
    reason: str | None = None
    record: PayoutRecord | None = None


@dataclass(frozen=True)
class TerminationReport:
    reason: str  # TERMINATED_FORK_WON or TERMINATED_EXPIRED
    total_paid_mined: int
    total_paid_accept: int
    refund: int

    def summary(self) -> str:
        return (
            f"reason={self.reason}"
            f" total_paid_mined={format_nano(self.total_paid_mined)}"
            f" total_paid_accept={format_nano(self.total_paid_accept)}"
            f" refund={format_nano(self.refund)}"
        )


def propose(params: ContractParams) -> "BribeContract":
    """Create a bribe contract in the Proposed state."""
    if params.mining_bribe <= 0:
        raise ContractError("mining bribe must be positive")
    if params.accept_bribe <= 0:
        raise ContractError("acceptance bribe must be positive")
    if not params.fork_root:
        raise ContractError("fork root block is required")
    start, end = params.window
    if end <= start:
        raise ContractError("window must end after it starts")
    if params.confirm_depth < 0:
        raise ContractError("confirmation depth must be >= 0")
    return BribeContract(params)


class ContractBook:
    """Registry enforcing contract-id uniqueness across proposals."""

    def __init__(self):
        self.contracts: dict[str, BribeContract] = {}

    def propose(self, params: ContractParams) -> "BribeContract":
        if params.contract_id in self.contracts:
            raise ContractError(f"duplicate contract id {params.contract_id!r}")
        contract = propose(params)
        self.contracts[params.contract_id] = contract
        return contract


class BribeContract:
    """Escrow, bribee registry, claim queue, and payout log for one attack."""

    def __init__(self, params: ContractParams):
        self.params = params
        self.state = ContractState.PROPOSED
        self.deposit_total = 0
        self.bribees: dict[str, str] = {}  # victim-chain miner id -> payout address
        self.pending: dict[int, Claim] = {}
        self.paid_claims: dict[tuple[str, str, ClaimRole], PayoutRecord] = {}
        self.payout_log: list[PayoutRecord] = []
        self.termination: TerminationReport | None = None
        self._next_claim_id = 0

    # -- escrow accounting --------------------------------------------------

    @property
    def paid_mined_total(self) -> int:
        return sum(r.amount for r in self.payout_log if r.role is ClaimRole.MINED)

    @property
    def paid_accept_total(self) -> int:
        return sum(r.amount for r in self.payout_log if r.role is ClaimRole.ACCEPTED)

    @property
    def paid_total(self) -> int:
        return sum(r.amount for r in self.payout_log)

    @property
    def remaining_escrow(self) -> int:
        return self.deposit_total - self.paid_total

    # -- lifecycle ------------------------------------------------------------

    def _require_state(self, expected: ContractState) -> None:
        if self.state is not expected:
            raise WrongStateError(f"contract is {self.state.value}, needs {expected.value}")

    def deposit(self, amount: int) -> None:
        """Lock the bribe budget; the creator cannot reclaim it before termination."""
        self._require_state(ContractState.PROPOSED)
        if amount <= 0:
            raise ContractError("deposit must be positive")
        self.deposit_total = amount
        self.state = ContractState.FUNDED

    def register_bribee(self, miner_id: str, payout_address: str) -> None:
        """Bind a victim-chain miner id to a cross-chain payout address."""
        if self.state is ContractState.TERMINATED:
            raise WrongStateError("contract already terminated")
        bound = self.bribees.get(miner_id)
        if bound is not None and bound != payout_address:
            raise ContractError(f"{miner_id} already bound to {bound}")
        self.bribees[miner_id] = payout_address

    def activate(self) -> None:
        self._require_state(ContractState.FUNDED)
        self.state = ContractState.ACTIVE

    # -- claims -----------------------------------------------------------------

    def commit_proof(self, claim: Claim, tree: BlockTree) -> int:
        """Queue a fork-chain proof for verification; no payment yet.

        The committed segment must be anchored at the contract's fork root
        and form an unbroken parent-link chain of known blocks.
        """
        self._require_state(ContractState.ACTIVE)
        if claim.bribee not in self.bribees:
            raise UnregisteredBribeeError(f"{claim.bribee} is not a registered bribee")
        self._check_segment(claim.segment, tree)
        claim_id = self._next_claim_id
        self._next_claim_id += 1
        self.pending[claim_id] = claim
        return claim_id

    def _check_segment(self, segment: tuple[str, ...], tree: BlockTree) -> None:
        if not segment:
            raise MalformedSegmentError("empty segment")
        if segment[0] != self.params.fork_root:
            raise MalformedSegmentError("segment is not anchored at the fork root")
        for bid in segment:
            if bid not in tree:
                raise MalformedSegmentError(f"unknown block {bid}")
        for parent_id, child_id in zip(segment, segment[1:]):
            if tree.block(child_id).parent_id != parent_id:
                raise MalformedSegmentError("broken parent link in segment")

    def verify_claim(self, claim_id: int, tree: BlockTree, now: float = 0.0) -> ClaimResult:
        """Verify a pending claim and pay it from escrow, or reject it.

        A claim pays out when the claimed block lies in the committed
        segment no more than `confirm_depth` blocks behind the segment tip,
        the (bribee, block, role) triple has not been paid before, and
        escrow still covers the bribe.  Mined-on-fork claims additionally
        require the claimant to be the block's miner.
        """
        self._require_state(ContractState.ACTIVE)
        claim = self.pending.pop(claim_id, None)
        if claim is None:
            raise ContractError(f"no pending claim {claim_id}")

        key = (claim.bribee, claim.claimed_block, claim.role)
        if key in self.paid_claims:
            return ClaimResult(False, REJECT_DUPLICATE)
        if claim.claimed_block not in claim.segment:
            return ClaimResult(False, REJECT_NOT_IN_SEGMENT)
        tip_height = tree.height_of(claim.segment[-1])
        if tip_height - tree.height_of(claim.claimed_block) > self.params.confirm_depth:
            return ClaimResult(False, REJECT_OUT_OF_WINDOW)
        if claim.role is ClaimRole.MINED and tree.block(claim.claimed_block).miner != claim.bribee:
            return ClaimResult(False, REJECT_NOT_MINER)
        amount = (
            self.params.mining_bribe
            if claim.role is ClaimRole.MINED
            else self.params.accept_bribe
        )
        if amount > self.remaining_escrow:
            return ClaimResult(False, REJECT_ESCROW)

        record = PayoutRecord(claim.bribee, claim.role, claim.claimed_block, amount, now)
        self.paid_claims[key] = record
        self.payout_log.append(record)
        return ClaimResult(True, None, record)

    # -- termination ------------------------------------------------------------

    def can_terminate(self, tree: BlockTree, now: float) -> str | None:
        """The termination reason that currently applies, if any.

        The fork wins when its root block is on the canonical chain; the
        contract otherwise expires at the end of its window.
        """
        if self.params.fork_root in tree and tree.is_in_branch(
            self.params.fork_root, tree.canonical_head()
        ):
            return TERMINATED_FORK_WON
        if now >= self.params.window[1]:
            return TERMINATED_EXPIRED
        return None

    def terminate(self, tree: BlockTree, now: float) -> TerminationReport:
        """Close the contract and return the unspent escrow to the creator."""
        self._require_state(ContractState.ACTIVE)
        reason = self.can_terminate(tree, now)
        if reason is None:
            raise ContractError("neither the fork has won nor the window expired")
        report = TerminationReport(
            reason=reason,
            total_paid_mined=self.paid_mined_total,
            total_paid_accept=self.paid_accept_total,
            refund=self.remaining_escrow,
        )
        self.state = ContractState.TERMINATED
        self.termination = report
        return report

    # -- reporting ---------------------------------------------------------------

    def write_settlement_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bribee", "role", "block_id", "amount", "sim_time"])
            for r in self.payout_log:
                w.writerow([r.bribee, r.role.value, r.block, format_nano(r.amount), f"{r.sim_time:.6f}"])
