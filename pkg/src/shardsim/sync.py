"""Cross-shard state propagation policies.

After every round each shard ingests remote support from the published
global block. The eager policy replicates everything (full copies of the
global ledger everywhere); the lazy policy ships a remote transaction only
to the shards where some recipient lives, which is exactly what those
shards need to keep local admissibility checks equal to global ones.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ledger import Block, GlobalBlock, Transaction
from .partition import PartitionSpec


@dataclass(frozen=True)
class RemoteSupport:
    shard: int
    round: int
    txs: frozenset[Transaction]

    def as_block(self) -> Block:
        return Block(self.txs)


def eager_collect_support(global_block: GlobalBlock, shard: int, round: int) -> RemoteSupport:
    """All transactions whose sender lives outside ``shard``."""
    spec = PartitionSpec(global_block.m)
    interval = spec.interval(shard)
    txs = frozenset(
        tx for tx in global_block.all_txs() if not interval.contains(tx.sender)
    )
    return RemoteSupport(shard, round, txs)


def lazy_collect_support(global_block: GlobalBlock, shard: int, round: int) -> RemoteSupport:
    """Remote transactions with at least one output paying into ``shard``."""
    spec = PartitionSpec(global_block.m)
    interval = spec.interval(shard)
    txs = frozenset(
        tx
        for tx in global_block.all_txs()
        if not interval.contains(tx.sender)
        and any(interval.contains(out.to) for out in tx.outputs)
    )
    return RemoteSupport(shard, round, txs)
