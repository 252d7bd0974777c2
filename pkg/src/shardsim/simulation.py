"""Round-loop driver: bootstrap, lock-step rounds, monitors, oracle runner.

Each round has two phases. Phase one: every shard's certified members run
idealized consensus over the shard's slice of the pending stream; an
honest-majority shard emits the deterministic greedy admissible block, a
compromised one lets the adversary choose. Phase two: the sub-blocks are
published as one global block, every shard ingests its remote support, and
only then does membership adjust for the next round.

Safety is watched, not assumed: monitors check per-shard legality, global
admissibility against an independently maintained full ledger, lazy
self-containment (sampled candidate blocks must verify identically under
the local and the global context), and the per-shard honest-majority
condition. A monitor breach is recorded and halts the run; it is an
observable outcome, not a crash.

The unsharded oracle replays the identical workload through the identical
greedy rule against a single full ledger; an all-honest sharded run must
reproduce its block sequence exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .crypto import oracle_hash
from .keys import KeyPair, PublicKey, SignatureScheme
from .ledger import (
    Block,
    GlobalBlock,
    LedgerContext,
    LedgerError,
    Transaction,
    build_transaction,
    greedy_admissible_block,
    verify,
)
from .membership import Membership, MembershipCertificate, evolve_shard_seed
from .partition import PartitionSpec
from .sync import RemoteSupport, eager_collect_support, lazy_collect_support
from .workload import WorkloadParams, genesis_block, round_transactions

DEFAULT_GENESIS_SEED = oracle_hash(b"shardsim/default-genesis")

_ADVERSARY_STREAM = 2
_MONITOR_STREAM = 3

SYNC_VARIANTS = ("eager", "lazy")
NEGATIVE_MODES = ("none", "conflict-partition", "broken-sync")
SIMULATOR_ADVERSARIES = ("none", "double-spend")


class ConfigError(Exception):
    """Rejected run configuration."""


@dataclass
class RunConfig:
    n: int = 40
    m: int = 2
    rounds: int = 10
    seed: int = 0
    sync: str = "eager"
    t_lease: int = 1
    t_takeover: Optional[int] = None
    byzantine_fraction: float = 0.0
    adversary: str = "none"
    h_p: float = 2 / 3
    tx_rate: int = 20
    max_amount: int = 50
    initial_balance: int = 1000
    genesis_seed: bytes = DEFAULT_GENESIS_SEED
    # None means the variant default: 20 samples per shard per round under
    # lazy sync (the monitor must run every round there), 0 under eager.
    self_containment_samples: Optional[int] = None
    negative_mode: str = "none"

    @property
    def containment_samples(self) -> int:
        if self.self_containment_samples is not None:
            return self.self_containment_samples
        return 20 if self.sync == "lazy" else 0

    def workload(self) -> WorkloadParams:
        return WorkloadParams(self.tx_rate, self.max_amount, self.initial_balance)

    def validate(self) -> None:
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if self.m < 1:
            raise ConfigError("m must be at least 1")
        if self.rounds < 0:
            raise ConfigError("rounds must be non-negative")
        if self.sync not in SYNC_VARIANTS:
            raise ConfigError(f"unknown sync variant {self.sync!r}")
        if self.t_lease < 1:
            raise ConfigError("t_lease must be at least 1")
        if self.sync == "eager" and self.t_lease != 1:
            raise ConfigError("eager sync means a one-round lease; set t_lease = 1")
        if not 0.0 <= self.byzantine_fraction < 1.0:
            raise ConfigError("byzantine_fraction must lie in [0, 1)")
        if not 0.0 < self.h_p <= 1.0:
            raise ConfigError("h_p must lie in (0, 1]")
        if self.adversary.startswith("adaptive"):
            if self.t_takeover is None:
                raise ConfigError("adaptive adversaries need t_takeover")
            if self.t_lease > self.t_takeover:
                raise ConfigError(
                    "adaptive adversaries require t_lease <= t_takeover"
                )
        if self.tx_rate < 0:
            raise ConfigError("tx_rate must be non-negative")
        if self.max_amount < 1:
            raise ConfigError("max_amount must be at least 1")
        if self.initial_balance < 0:
            raise ConfigError("initial_balance must be non-negative")
        if self.self_containment_samples is not None and self.self_containment_samples < 0:
            raise ConfigError("self_containment_samples must be non-negative")
        if self.negative_mode not in NEGATIVE_MODES:
            raise ConfigError(f"unknown negative mode {self.negative_mode!r}")


@dataclass(frozen=True)
class Participation:
    """One member's signed claim to a shard seat for a round."""

    pk: PublicKey
    sigma: bytes
    shard: int
    round: int


@dataclass(frozen=True)
class MonitorBreach:
    round: int
    shard: int  # 0 means the global ledger
    kind: str
    detail: str


@dataclass(frozen=True)
class RoundRecord:
    round: int
    shard: int
    members: int
    certified: int
    byzantine: int
    sub_block_size: int
    status: str


@dataclass
class RunResult:
    config: RunConfig
    records: list[RoundRecord] = field(default_factory=list)
    breaches: list[MonitorBreach] = field(default_factory=list)
    global_blocks: list[tuple[str, ...]] = field(default_factory=list)
    halted_round: Optional[int] = None
    local_fractions: list[float] = field(default_factory=list)
    rounds_completed: int = 0

    @property
    def admitted(self) -> int:
        return sum(len(ids) for ids in self.global_blocks[1:])

    @property
    def halted(self) -> bool:
        return self.halted_round is not None


class Simulation:
    """One sharded run. Construction bootstraps; ``run`` plays the rounds."""

    def __init__(self, cfg: RunConfig) -> None:
        cfg.validate()
        if cfg.adversary not in SIMULATOR_ADVERSARIES:
            raise ConfigError(
                f"adversary {cfg.adversary!r} is not playable in the protocol "
                "simulator; adaptive strategies live in the bins analyses"
            )
        self.cfg = cfg
        self.scheme = SignatureScheme()
        self.mint = self.scheme.keygen("mint")
        self.clients = [self.scheme.keygen(f"u{i:05d}") for i in range(cfg.n)]
        self.by_pk = {kp.pk: kp for kp in self.clients}
        self.spec = PartitionSpec(cfg.m)
        self.route = self._make_router()

        adv_rng = np.random.default_rng(
            np.random.SeedSequence([cfg.seed, _ADVERSARY_STREAM])
        )
        n_red = int(cfg.byzantine_fraction * cfg.n)
        red_idx = adv_rng.choice(cfg.n, size=n_red, replace=False) if n_red else []
        self.red: set[PublicKey] = {self.clients[int(i)].pk for i in red_idx}
        self._monitor_rng = np.random.default_rng(
            np.random.SeedSequence([cfg.seed, _MONITOR_STREAM])
        )

        self.membership = Membership.init(
            cfg.m,
            [kp.pk for kp in self.clients],
            cfg.genesis_seed,
            cfg.t_lease,
            self.scheme,
        )
        self.global_ctx = LedgerContext(self.scheme, self.mint.pk)
        self.local_ctx = [
            LedgerContext(self.scheme, self.mint.pk) for _ in range(cfg.m)
        ]
        self._clients_by_shard = [
            [kp for kp in self.clients if self.spec.interval(i).contains(kp.pk)]
            for i in range(1, cfg.m + 1)
        ]
        self.result = RunResult(cfg)
        self._candidate_counter = 0
        self._bootstrap()

    # -- construction --------------------------------------------------------

    def _make_router(self) -> Callable[[Transaction], int]:
        if self.cfg.negative_mode == "conflict-partition":
            # Deliberately broken: routes by first recipient, so two
            # transactions from one sender can land in different shards.
            return lambda tx: self.spec.shard_of_position(tx.outputs[0].to.position)
        return self.spec.which_part

    def _partition(self, txs) -> list[set[Transaction]]:
        parts: list[set[Transaction]] = [set() for _ in range(self.cfg.m)]
        for tx in txs:
            parts[self.route(tx) - 1].add(tx)
        return parts

    def _collect_support(self, gb: GlobalBlock, shard: int, r: int) -> RemoteSupport:
        if self.cfg.negative_mode == "broken-sync" and r > 0:
            return RemoteSupport(shard, r, frozenset())
        if self.cfg.sync == "eager":
            return eager_collect_support(gb, shard, r)
        return lazy_collect_support(gb, shard, r)

    def _bootstrap(self) -> None:
        # Bootstrap is always honest, even in negative modes: every shard
        # starts from a correctly partitioned and fully supported genesis
        # state, so an injected defect manifests through round behaviour
        # rather than through a corrupted initial distribution.
        b0 = genesis_block(
            self.scheme, self.mint, self.clients, self.cfg.initial_balance
        )
        parts: list[set[Transaction]] = [set() for _ in range(self.cfg.m)]
        for tx in b0:
            parts[self.spec.which_part(tx) - 1].add(tx)
        gb0 = GlobalBlock(tuple(Block.of(p) for p in parts))
        self.global_ctx.append(Block(b0.txs), round=0)
        for i in range(1, self.cfg.m + 1):
            rs = self._collect_support(gb0, i, 0)
            self.local_ctx[i - 1].append(gb0.sub_block(i), round=0)
            self.local_ctx[i - 1].append(rs.as_block(), round=0, remote=True)
        self.result.global_blocks.append(tuple(sorted(tx.tx_id for tx in b0)))

    # -- per-round machinery -------------------------------------------------

    def _participations(self, shard: int, r: int) -> list[Participation]:
        out = []
        for pk in sorted(self.membership.members_of(shard), key=lambda k: k.id):
            cert = self.membership.certificates[pk]
            out.append(Participation(pk, cert.sigma, cert.shard, r))
        return out

    def decide_sub_block(
        self,
        shard: int,
        participations: list[Participation],
        pool: set[Transaction],
        r: int,
    ) -> tuple[Block, list[PublicKey], int, Optional[MonitorBreach]]:
        """Phase-one outcome for one shard.

        Returns the sub-block, the certified member list, the Byzantine
        count among them, and an honest-majority breach if one occurred.
        Messages with invalid certificates are discarded; a shard with no
        certified members decides the empty block by default.
        """
        ctx = self.local_ctx[shard - 1]
        certified = [
            p.pk
            for p in participations
            if self.membership.verify_member(p.pk, p.sigma, p.shard, r)
            and p.shard == shard
        ]
        byz = sum(1 for pk in certified if pk in self.red)
        if not certified:
            return Block.empty(), [], 0, None
        breach = None
        if byz >= (1.0 - self.cfg.h_p) * len(certified) - 1e-12:
            breach = MonitorBreach(
                r,
                shard,
                "honest-majority",
                f"{byz} of {len(certified)} certified members are Byzantine",
            )
            block = self._adversary_block(shard, pool, ctx, r)
        else:
            block = greedy_admissible_block(pool, ctx)
        return block, certified, byz, breach

    def _adversary_block(
        self, shard: int, pool: set[Transaction], ctx: LedgerContext, r: int
    ) -> Block:
        """A compromised shard's output under the double-spend strategy."""
        if self.cfg.adversary != "double-spend":
            return greedy_admissible_block(pool, ctx)
        interval = self.spec.interval(shard)
        reds_here = [
            self.by_pk[pk]
            for pk in sorted(self.red, key=lambda k: k.id)
            if interval.contains(pk)
        ]
        victims = [
            kp for kp in reds_here if self.global_ctx.balance(kp.pk) >= 1
        ]
        base = greedy_admissible_block(pool, ctx)
        if not victims:
            return base
        spender = victims[0]
        bal = self.global_ctx.balance(spender.pk)
        others = [kp for kp in self.clients if kp.pk != spender.pk]
        pair = [
            build_transaction(
                self.scheme, spender, [(others[0].pk, bal)], f"ds-r{r:06d}a"
            ),
            build_transaction(
                self.scheme, spender, [(others[1].pk, bal)], f"ds-r{r:06d}b"
            ),
        ]
        kept = [tx for tx in base if tx.sender != spender.pk]
        return Block.of(kept + pair)

    def _sample_candidate(self, shard: int, r: int) -> Optional[Block]:
        """Random candidate block drawn from the shard's own senders."""
        rng = self._monitor_rng
        senders = self._clients_by_shard[shard - 1]
        if not senders:
            return None
        own_entries = [
            tx
            for e in self.local_ctx[shard - 1].entries
            if not e.remote
            for tx in e.block
        ]
        if own_entries and rng.random() < 0.25:
            # Replay: already-recorded transactions must fail identically.
            return Block.of([own_entries[int(rng.integers(len(own_entries)))]])
        txs = []
        for _ in range(int(rng.integers(1, 4))):
            kp = senders[int(rng.integers(len(senders)))]
            bal = self.global_ctx.balance(kp.pk)
            amount = int(rng.integers(1, max(2, 2 * bal + 1)))
            to = self.clients[int(rng.integers(len(self.clients)))].pk
            self._candidate_counter += 1
            txs.append(
                build_transaction(
                    self.scheme,
                    kp,
                    [(to, amount)],
                    f"cand{self._candidate_counter:08d}",
                )
            )
        return Block.of(txs)

    def _self_containment_breaches(self, r: int) -> list[MonitorBreach]:
        breaches = []
        for shard in range(1, self.cfg.m + 1):
            for _ in range(self.cfg.containment_samples):
                candidate = self._sample_candidate(shard, r)
                if candidate is None:
                    continue
                local = verify(candidate, self.local_ctx[shard - 1])
                globally = verify(candidate, self.global_ctx)
                if local != globally:
                    breaches.append(
                        MonitorBreach(
                            r,
                            shard,
                            "self-containment",
                            f"candidate verifies {local} locally, "
                            f"{globally} globally",
                        )
                    )
                    break
        return breaches

    def run_round(self, r: int) -> tuple[GlobalBlock, list[MonitorBreach]]:
        cfg = self.cfg
        breaches: list[MonitorBreach] = []
        pending = round_transactions(
            self.scheme, self.clients, cfg.workload(), cfg.seed, r
        )
        parts = self._partition(pending)

        sub_blocks: list[Block] = []
        certified_by_shard: list[list[PublicKey]] = []
        for shard in range(1, cfg.m + 1):
            participations = self._participations(shard, r)
            block, certified, byz, breach = self.decide_sub_block(
                shard, participations, parts[shard - 1], r
            )
            sub_blocks.append(block)
            certified_by_shard.append(certified)
            status = "ok"
            if breach is not None:
                breaches.append(breach)
                status = breach.kind
            if not verify(block, self.local_ctx[shard - 1]):
                breaches.append(
                    MonitorBreach(
                        r, shard, "shard-legality", "sub-block fails local verify"
                    )
                )
                status = "shard-legality"
            self.result.records.append(
                RoundRecord(
                    r, shard, len(participations), len(certified), byz, len(block), status
                )
            )

        gb = GlobalBlock(tuple(sub_blocks))
        try:
            union = Block.of(gb.all_txs())
            admissible = gb.tx_id_disjoint() and verify(union, self.global_ctx)
        except LedgerError:
            union = None
            admissible = False
        if not admissible:
            breaches.append(
                MonitorBreach(
                    r, 0, "global-admissibility", "global block fails full-ledger verify"
                )
            )
        if union is None:
            # Colliding tx_ids across sub-blocks: record what is recordable.
            union = Block.of({tx.tx_id: tx for sub in sub_blocks for tx in sub}.values())
        self.global_ctx.append(union, round=r)
        self.result.global_blocks.append(tuple(sorted(tx.tx_id for tx in union)))

        for shard in range(1, cfg.m + 1):
            rs = self._collect_support(gb, shard, r)
            self.local_ctx[shard - 1].append(gb.sub_block(shard), round=r)
            self.local_ctx[shard - 1].append(rs.as_block(), round=r, remote=True)

        if cfg.containment_samples > 0:
            breaches.extend(self._self_containment_breaches(r))

        new_seeds = []
        assert self.membership.seeds is not None
        for shard in range(1, cfg.m + 1):
            empty = len(gb.sub_block(shard)) == 0
            leader = None
            if not empty and certified_by_shard[shard - 1]:
                leader_pk = min(certified_by_shard[shard - 1], key=lambda k: k.id)
                leader = self.by_pk[leader_pk]
            seed = self.membership.seeds.shard_seeds[shard - 1]
            new_seeds.append(
                evolve_shard_seed(seed, r, sub_block_empty=empty or leader is None, leader=leader)
            )
        self.membership.end_of_round(r, new_seeds)
        return gb, breaches

    def run(self) -> RunResult:
        for r in range(1, self.cfg.rounds + 1):
            _, breaches = self.run_round(r)
            self.result.rounds_completed = r
            if breaches:
                self.result.breaches.extend(breaches)
                self.result.halted_round = r
                break
        total = self.global_ctx.tx_count(min_round=1)
        self.result.local_fractions = [
            (ctx.tx_count(min_round=1) / total) if total else 0.0
            for ctx in self.local_ctx
        ]
        return self.result


def run_unsharded_oracle(cfg: RunConfig) -> list[tuple[str, ...]]:
    """Reference run: same workload, same greedy rule, one full ledger.

    Kept deliberately independent of the sharded driver; it shares only
    the ledger primitives and the workload generator.
    """
    cfg.validate()
    scheme = SignatureScheme()
    mint = scheme.keygen("mint")
    clients = [scheme.keygen(f"u{i:05d}") for i in range(cfg.n)]
    ctx = LedgerContext(scheme, mint.pk)
    b0 = genesis_block(scheme, mint, clients, cfg.initial_balance)
    ctx.append(b0, round=0)
    blocks = [tuple(sorted(tx.tx_id for tx in b0))]
    for r in range(1, cfg.rounds + 1):
        pool = round_transactions(scheme, clients, cfg.workload(), cfg.seed, r)
        block = greedy_admissible_block(pool, ctx)
        ctx.append(block, round=r)
        blocks.append(tuple(sorted(tx.tx_id for tx in block)))
    return blocks


def first_divergence(
    a: list[tuple[str, ...]], b: list[tuple[str, ...]]
) -> Optional[int]:
    """Index of the first differing round over the common prefix, else None."""
    for idx in range(min(len(a), len(b))):
        if a[idx] != b[idx]:
            return idx
    return None
