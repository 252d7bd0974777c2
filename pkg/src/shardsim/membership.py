"""Seed-driven shard membership with per-node staggered leases.

Every node derives its shard by signing a public epoch seed and hashing
the signature onto the unit interval; the signature scheme's uniqueness
makes the draw unforgeable yet verifiable by anyone holding the seed.
Seeds evolve once per round per shard, folding in a leader signature
whenever the shard produced a non-empty sub-block.

Leases stagger the re-draws: each node owns a fixed shuffle slot in
[0, t_lease) and re-draws only in rounds congruent to its slot, so exactly
a 1/t_lease fraction of nodes moves per round. A lease of one round is the
fully-eager special case in which everyone re-draws every round.

The epoch a round r belongs to, for a node with slot t_shuffle, starts at

    slot = r mod t_lease
    diff = (slot - t_shuffle) mod t_lease
    r'   = r - diff        (clamped to >= 1: first epochs truncate at round 1)

and the node's certificate for the whole epoch is its signature over the
global seed of round r'.

Newly registered nodes are benched: registration at round t_join fixes the
public record immediately, but the shuffle slot is drawn from the global
seed of round t_join + t_lease (unknowable at registration time, so slots
cannot be chosen), and the node participates only from its first shuffle
slot after that round.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .crypto import be8, hash_mod, oracle_hash, shard_index, unit_hash
from .keys import KeyPair, PublicKey, SignatureScheme, sign_bytes


class MembershipError(Exception):
    """Internal membership failure (missing seed, bad registration)."""


class EligibilityError(MembershipError):
    """Certificate requested for a node that may not participate yet."""


@dataclass(frozen=True)
class SeedState:
    """Per-shard seeds for one round plus the global seed derived from them."""

    round: int
    shard_seeds: tuple[bytes, ...]
    global_seed: bytes

    @classmethod
    def derive(cls, round: int, shard_seeds: Iterable[bytes]) -> "SeedState":
        seeds = tuple(shard_seeds)
        return cls(round, seeds, oracle_hash(*seeds))

    @classmethod
    def genesis(cls, genesis_seed: bytes, m: int) -> "SeedState":
        return cls.derive(1, (oracle_hash(genesis_seed, be8(i)) for i in range(1, m + 1)))


@dataclass(frozen=True)
class MembershipCertificate:
    pk: PublicKey
    shard: int
    sigma: bytes
    round: int


@dataclass
class NodeRecord:
    pk: PublicKey
    t_join: int
    t_shuffle: Optional[int]


def evolve_shard_seed(
    seed: bytes, round: int, sub_block_empty: bool, leader: Optional[KeyPair] = None
) -> bytes:
    """Next round's seed for one shard.

    A non-empty round folds in the round leader's signature so the value
    is unpredictable until the leader is known; an empty round advances
    the seed by hashing alone, keeping the sequence alive without input.
    """
    material = seed + be8(round + 1)
    if sub_block_empty:
        return oracle_hash(material)
    if leader is None:
        raise MembershipError("non-empty round needs a leader to evolve the seed")
    return oracle_hash(sign_bytes(leader.sk, material))


def shuffle_slot(pk: PublicKey, seed: bytes, t_lease: int) -> int:
    """Public shuffle slot: hash of the key id against a future seed."""
    return hash_mod(pk.id.encode() + seed, t_lease)


class Membership:
    """Registry, seed history, and current assignment for one simulation.

    Single volume of trusted public state: node records, the last t_lease
    global seeds, and the certificates currently in force.
    """

    def __init__(self, m: int, t_lease: int, scheme: SignatureScheme) -> None:
        if m < 1 or t_lease < 1:
            raise MembershipError("m and t_lease must be at least 1")
        self.m = m
        self.t_lease = t_lease
        self.scheme = scheme
        self.records: dict[PublicKey, NodeRecord] = {}
        self.assignment: dict[PublicKey, int] = {}
        self.certificates: dict[PublicKey, MembershipCertificate] = {}
        self.seeds: Optional[SeedState] = None
        self._seed_history: dict[int, bytes] = {}

    @classmethod
    def init(
        cls,
        m: int,
        keys: Iterable[PublicKey],
        genesis_seed: bytes,
        t_lease: int,
        scheme: SignatureScheme,
    ) -> "Membership":
        """Round-1 state: genesis seeds, genesis records, full initial assignment."""
        mem = cls(m, t_lease, scheme)
        mem.seeds = SeedState.genesis(genesis_seed, m)
        mem._seed_history[1] = mem.seeds.global_seed
        for pk in sorted(keys, key=lambda k: k.id):
            if pk in mem.records:
                raise MembershipError(f"duplicate genesis key {pk.id!r}")
            mem.records[pk] = NodeRecord(
                pk, 0, shuffle_slot(pk, mem.seeds.global_seed, t_lease)
            )
        for pk in mem.records:
            cert = mem.get_membership(mem.scheme.keypair(pk.id), 1)
            mem.assignment[pk] = cert.shard
            mem.certificates[pk] = cert
        return mem

    @property
    def round(self) -> int:
        assert self.seeds is not None
        return self.seeds.round

    # -- epoch arithmetic ---------------------------------------------------

    def epoch_start(self, t_shuffle: int, r: int) -> int:
        slot = r % self.t_lease
        diff = (slot - t_shuffle) % self.t_lease
        return max(1, r - diff)

    def _first_slot_round(self, record: NodeRecord) -> int:
        if record.t_join == 0:
            return 1
        assert record.t_shuffle is not None
        base = record.t_join + self.t_lease
        return base + ((record.t_shuffle - base) % self.t_lease)

    def eligible(self, pk: PublicKey, r: int) -> bool:
        record = self.records.get(pk)
        if record is None or record.t_shuffle is None:
            return False
        return r >= self._first_slot_round(record)

    # -- certificate issue and check ----------------------------------------

    def get_membership(self, kp: KeyPair, r: int) -> MembershipCertificate:
        """The node's certificate for round ``r``.

        Deterministic within an epoch: every call between two of the
        node's shuffle slots returns the identical certificate.
        """
        record = self.records.get(kp.pk)
        if record is None:
            raise EligibilityError(f"{kp.pk.id!r} is not registered")
        if not self.eligible(kp.pk, r):
            raise EligibilityError(f"{kp.pk.id!r} may not participate at round {r}")
        assert record.t_shuffle is not None
        seed = self._seed_at(self.epoch_start(record.t_shuffle, r))
        sigma = self.scheme.sign(kp.sk, seed)
        return MembershipCertificate(kp.pk, shard_index(unit_hash(sigma), self.m), sigma, r)

    def verify_member(self, pk: PublicKey, sigma: bytes, shard: int, r: int) -> bool:
        """Public check of a claimed (pk, shard) for round ``r``; never raises."""
        record = self.records.get(pk)
        if record is None or record.t_shuffle is None:
            return False
        if record.t_join > max(0, r - self.t_lease):
            return False
        if shard_index(unit_hash(sigma), self.m) != shard:
            return False
        seed = self._seed_history.get(self.epoch_start(record.t_shuffle, r))
        if seed is None:
            return False
        return self.scheme.verify(pk, seed, sigma)

    def _seed_at(self, r: int) -> bytes:
        seed = self._seed_history.get(r)
        if seed is None:
            raise MembershipError(f"seed for round {r} is not retained")
        return seed

    # -- registration and round transition ----------------------------------

    def register_nodes(self, r: int, keys: Iterable[PublicKey]) -> list[NodeRecord]:
        """Admit new keys at round ``r``; they bench until their slot is drawn."""
        added = []
        for pk in sorted(keys, key=lambda k: k.id):
            if pk in self.records:
                raise MembershipError(f"{pk.id!r} is already registered")
            record = NodeRecord(pk, r, None)
            self.records[pk] = record
            added.append(record)
        return added

    def end_of_round(
        self, r: int, new_shard_seeds: Iterable[bytes]
    ) -> tuple[SeedState, set[PublicKey]]:
        """Advance to round r+1 and re-draw every node whose slot came up."""
        if r != self.round:
            raise MembershipError(f"end_of_round({r}) called at round {self.round}")
        seeds = tuple(new_shard_seeds)
        if len(seeds) != self.m:
            raise MembershipError(f"expected {self.m} shard seeds, got {len(seeds)}")
        self.seeds = SeedState.derive(r + 1, seeds)
        self._seed_history[r + 1] = self.seeds.global_seed
        for past in [k for k in self._seed_history if k <= r + 1 - self.t_lease]:
            del self._seed_history[past]

        for record in self.records.values():
            if record.t_shuffle is None and record.t_join + self.t_lease == r + 1:
                record.t_shuffle = shuffle_slot(
                    record.pk, self.seeds.global_seed, self.t_lease
                )

        redrawn: set[PublicKey] = set()
        slot = (r + 1) % self.t_lease
        for pk, record in self.records.items():
            if record.t_shuffle != slot:
                continue
            if not self.eligible(pk, r + 1):
                continue
            cert = self.get_membership(self.scheme.keypair(pk.id), r + 1)
            self.assignment[pk] = cert.shard
            self.certificates[pk] = cert
            redrawn.add(pk)
        return self.seeds, redrawn

    # -- views ---------------------------------------------------------------

    def members_of(self, shard: int) -> set[PublicKey]:
        return {pk for pk, s in self.assignment.items() if s == shard}

    def shard_counts(self) -> list[int]:
        counts = [0] * self.m
        for shard in self.assignment.values():
            counts[shard - 1] += 1
        return counts


def golden_vector_text(
    genesis_seed: bytes, key_ids: Iterable[str], m: int, t_lease: int, rounds: int
) -> str:
    """Reference certificate transcript for regression comparison.

    Seeds evolve along the leaderless (empty sub-block) path every round,
    so the transcript is a pure function of the four inputs. One line per
    (round, key): round, key id, shard, signature hex.
    """
    scheme = SignatureScheme()
    ids = sorted(key_ids)
    kps = {key_id: scheme.keygen(key_id) for key_id in ids}
    mem = Membership.init(m, [kp.pk for kp in kps.values()], genesis_seed, t_lease, scheme)
    lines = [
        "# membership golden vectors",
        f"genesis_seed = {genesis_seed.hex()}",
        f"m = {m}",
        f"t_lease = {t_lease}",
        f"rounds = {rounds}",
        f"keys = {','.join(ids)}",
    ]
    for r in range(1, rounds + 1):
        for key_id in ids:
            cert = mem.get_membership(kps[key_id], r)
            lines.append(
                f"round={r} key={key_id} shard={cert.shard} sigma={cert.sigma.hex()}"
            )
        assert mem.seeds is not None
        mem.end_of_round(
            r,
            (
                evolve_shard_seed(seed, r, sub_block_empty=True)
                for seed in mem.seeds.shard_seeds
            ),
        )
    return "\n".join(lines) + "\n"
