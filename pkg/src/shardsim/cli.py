"""Command-line front end.

Subcommands: simulate, oracle-compare, bins-mc, bound-table,
golden-vectors. Configuration comes from an INI file with one flat
key=value section per concern; every effective value is echoed back to
the output directory so a run is reproducible from its artifacts alone.

Exit codes: 0 success, 2 configuration or usage error, 3 monitor breach,
4 comparison mismatch.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from pathlib import Path
from typing import Optional

from .analysis import (
    bound_table,
    mc_iterated_lazy,
    mc_static_failure_rate,
)
from .membership import golden_vector_text
from .simulation import (
    ConfigError,
    RunConfig,
    Simulation,
    first_divergence,
    run_unsharded_oracle,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BREACH = 3
EXIT_MISMATCH = 4

_RUN_SECTIONS = {
    "run": {
        "n",
        "m",
        "rounds",
        "seed",
        "sync",
        "t_lease",
        "t_takeover",
        "byzantine_fraction",
        "adversary",
        "h_p",
    },
    "workload": {"tx_rate", "max_amount", "initial_balance"},
    "membership": {"genesis_seed"},
    "monitor": {"self_containment_samples"},
}

_BINS_KEYS = {
    "mode",
    "n",
    "m",
    "red_fraction",
    "seed",
    "trials",
    "t_lease",
    "rounds",
    "strategy",
    "t_takeover",
    "attack_size",
}

_TABLE_KEYS = {"rows"}
_VECTOR_KEYS = {"genesis_seed", "m", "t_lease", "num_keys", "rounds"}

_DEFAULT_TABLE_ROWS = "150000000:10000,7000000:700,6000:4"


def _read_ini(path: Optional[str]) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    if path is not None:
        target = Path(path)
        if not target.is_file():
            raise ConfigError(f"config file {path!r} does not exist")
        try:
            cp.read(target)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path!r}: {exc}") from exc
    return cp


def _check_keys(cp: configparser.ConfigParser, allowed: dict[str, set[str]]) -> None:
    for section in cp.sections():
        if section not in allowed:
            raise ConfigError(f"unknown config section [{section}]")
        for key in cp[section]:
            if key not in allowed[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")


def _get(cp, section, key, cast, default):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from exc


def _build_run_config(cp: configparser.ConfigParser, args) -> RunConfig:
    _check_keys(cp, _RUN_SECTIONS)
    cfg = RunConfig()
    t_takeover = _get(cp, "run", "t_takeover", int, None)
    cfg = RunConfig(
        n=_get(cp, "run", "n", int, cfg.n),
        m=_get(cp, "run", "m", int, cfg.m),
        rounds=_get(cp, "run", "rounds", int, cfg.rounds),
        seed=_get(cp, "run", "seed", int, cfg.seed),
        sync=_get(cp, "run", "sync", str, cfg.sync),
        t_lease=_get(cp, "run", "t_lease", int, cfg.t_lease),
        t_takeover=t_takeover,
        byzantine_fraction=_get(
            cp, "run", "byzantine_fraction", float, cfg.byzantine_fraction
        ),
        adversary=_get(cp, "run", "adversary", str, cfg.adversary),
        h_p=_get(cp, "run", "h_p", float, cfg.h_p),
        tx_rate=_get(cp, "workload", "tx_rate", int, cfg.tx_rate),
        max_amount=_get(cp, "workload", "max_amount", int, cfg.max_amount),
        initial_balance=_get(
            cp, "workload", "initial_balance", int, cfg.initial_balance
        ),
        genesis_seed=_get(cp, "membership", "genesis_seed", bytes.fromhex, cfg.genesis_seed),
        self_containment_samples=_get(
            cp, "monitor", "self_containment_samples", int, cfg.self_containment_samples
        ),
    )
    if args.seed is not None:
        cfg.seed = args.seed
    if args.rounds is not None:
        cfg.rounds = args.rounds
    if args.negative_mode is not None:
        cfg.negative_mode = args.negative_mode
    cfg.validate()
    return cfg


def _echo_run_config(cfg: RunConfig, out: Path) -> None:
    cp = configparser.ConfigParser()
    cp["run"] = {
        "n": str(cfg.n),
        "m": str(cfg.m),
        "rounds": str(cfg.rounds),
        "seed": str(cfg.seed),
        "sync": cfg.sync,
        "t_lease": str(cfg.t_lease),
        "t_takeover": "" if cfg.t_takeover is None else str(cfg.t_takeover),
        "byzantine_fraction": repr(cfg.byzantine_fraction),
        "adversary": cfg.adversary,
        "h_p": repr(cfg.h_p),
        "negative_mode": cfg.negative_mode,
    }
    cp["workload"] = {
        "tx_rate": str(cfg.tx_rate),
        "max_amount": str(cfg.max_amount),
        "initial_balance": str(cfg.initial_balance),
    }
    cp["membership"] = {"genesis_seed": cfg.genesis_seed.hex()}
    cp["monitor"] = {
        "self_containment_samples": str(cfg.containment_samples)
    }
    with open(out / "effective_config.ini", "w") as fh:
        cp.write(fh)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = _build_run_config(_read_ini(args.config), args)
    out = _out_dir(args)
    _echo_run_config(cfg, out)
    sim = Simulation(cfg)
    result = sim.run()
    _write_csv(
        out / "rounds.csv",
        ["round", "shard", "members", "certified", "byzantine", "sub_block_size", "status"],
        (
            (r.round, r.shard, r.members, r.certified, r.byzantine, r.sub_block_size, r.status)
            for r in result.records
        ),
    )
    _write_csv(
        out / "breaches.csv",
        ["round", "shard", "kind", "detail"],
        ((b.round, b.shard, b.kind, b.detail) for b in result.breaches),
    )
    summary = [
        ("rounds_completed", result.rounds_completed),
        ("halted_round", "" if result.halted_round is None else result.halted_round),
        ("admitted_txs", result.admitted),
        (
            "throughput_per_round",
            result.admitted / result.rounds_completed if result.rounds_completed else 0,
        ),
    ]
    summary.extend(
        (f"local_state_fraction_shard_{i + 1}", frac)
        for i, frac in enumerate(result.local_fractions)
    )
    _write_csv(out / "summary.csv", ["key", "value"], summary)
    if result.halted:
        breach = result.breaches[0]
        print(
            f"halted at round {breach.round}: {breach.kind} "
            f"(shard {breach.shard}): {breach.detail}"
        )
        return EXIT_BREACH
    print(
        f"completed {result.rounds_completed} rounds, "
        f"{result.admitted} transactions admitted"
    )
    return EXIT_OK


def cmd_oracle_compare(args) -> int:
    cfg = _build_run_config(_read_ini(args.config), args)
    if cfg.byzantine_fraction > 0 or cfg.adversary != "none":
        raise ConfigError("oracle-compare requires an all-honest configuration")
    out = _out_dir(args)
    _echo_run_config(cfg, out)
    sim = Simulation(cfg)
    result = sim.run()
    oracle_blocks = run_unsharded_oracle(cfg)
    divergence = first_divergence(result.global_blocks, oracle_blocks)
    rows = []
    for idx in range(min(len(result.global_blocks), len(oracle_blocks))):
        rows.append(
            (
                idx,
                len(result.global_blocks[idx]),
                len(oracle_blocks[idx]),
                result.global_blocks[idx] == oracle_blocks[idx],
            )
        )
    _write_csv(out / "compare.csv", ["round", "sharded_txs", "oracle_txs", "equal"], rows)
    if divergence is not None:
        sharded = set(result.global_blocks[divergence])
        oracle = set(oracle_blocks[divergence])
        print(
            f"mismatch at round {divergence}: "
            f"{sorted(sharded - oracle)} only sharded, "
            f"{sorted(oracle - sharded)} only oracle"
        )
        return EXIT_MISMATCH
    if result.halted:
        breach = result.breaches[0]
        print(f"halted at round {breach.round}: {breach.kind}: {breach.detail}")
        return EXIT_BREACH
    print(f"block sequences identical over {len(result.global_blocks)} rounds")
    return EXIT_OK


def cmd_bins_mc(args) -> int:
    cp = _read_ini(args.config)
    _check_keys(cp, {"bins": _BINS_KEYS})
    mode = _get(cp, "bins", "mode", str, "static")
    n = _get(cp, "bins", "n", int, 6000)
    m = _get(cp, "bins", "m", int, 4)
    red_fraction = _get(cp, "bins", "red_fraction", float, 0.25)
    seed = _get(cp, "bins", "seed", int, 0)
    if args.seed is not None:
        seed = args.seed
    out = _out_dir(args)
    echo = configparser.ConfigParser()
    if mode == "static":
        trials = _get(cp, "bins", "trials", int, 10_000)
        res = mc_static_failure_rate(n, m, red_fraction, trials, seed)
        echo["bins"] = {
            "mode": mode,
            "n": str(n),
            "m": str(m),
            "red_fraction": repr(red_fraction),
            "trials": str(trials),
            "seed": str(seed),
        }
        _write_csv(
            out / "stats.csv",
            [
                "n",
                "m",
                "trials",
                "failures",
                "rate",
                "wilson_low",
                "wilson_high",
                "analytic_bound",
                "mean_red_ratio",
            ],
            [
                (
                    res.n,
                    res.m,
                    res.trials,
                    res.failures,
                    res.rate,
                    res.wilson_low,
                    res.wilson_high,
                    res.analytic_bound,
                    res.mean_red_ratio,
                )
            ],
        )
        print(
            f"{res.failures} failing trials of {res.trials} "
            f"(rate {res.rate:.3g}, bound {res.analytic_bound:.3g})"
        )
    elif mode == "iterated":
        t_lease = _get(cp, "bins", "t_lease", int, 10)
        rounds = _get(cp, "bins", "rounds", int, args.rounds or 10_000)
        if args.rounds is not None:
            rounds = args.rounds
        strategy = _get(cp, "bins", "strategy", str, "static")
        t_takeover = _get(cp, "bins", "t_takeover", int, None)
        attack_size = _get(cp, "bins", "attack_size", int, None)
        try:
            res = mc_iterated_lazy(
                n,
                m,
                t_lease,
                rounds,
                strategy=strategy,
                red_fraction=red_fraction,
                t_takeover=t_takeover,
                attack_size=attack_size,
                seed=seed,
                stats_every=max(1, rounds // 1000),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        echo["bins"] = {
            "mode": mode,
            "n": str(n),
            "m": str(m),
            "red_fraction": repr(red_fraction),
            "t_lease": str(t_lease),
            "rounds": str(rounds),
            "strategy": strategy,
            "t_takeover": "" if t_takeover is None else str(t_takeover),
            "attack_size": "" if attack_size is None else str(attack_size),
            "seed": str(seed),
        }
        _write_csv(
            out / "stats.csv",
            [
                "n",
                "m",
                "t_lease",
                "rounds",
                "strategy",
                "failures",
                "mean_red_ratio",
                "attacks_launched",
                "attacks_completed",
                "capacity",
                "peak_capacity_used",
            ],
            [
                (
                    res.n,
                    res.m,
                    res.t_lease,
                    res.rounds,
                    res.strategy,
                    res.failures,
                    res.mean_red_ratio,
                    res.attacks_launched,
                    res.attacks_completed,
                    res.capacity,
                    res.peak_capacity_used,
                )
            ],
        )
        _write_csv(
            out / "failures.csv", ["round"], ((r,) for r in res.failure_rounds)
        )
        print(f"{res.failures} failing rounds of {res.rounds} ({strategy})")
    else:
        raise ConfigError(f"unknown bins mode {mode!r}")
    with open(out / "effective_config.ini", "w") as fh:
        echo.write(fh)
    return EXIT_OK


def _parse_table_rows(raw: str) -> list[tuple[int, int]]:
    rows = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            n_text, m_text = item.split(":")
            rows.append((int(n_text), int(m_text)))
        except ValueError as exc:
            raise ConfigError(f"bad table row {item!r}, want n:m") from exc
    if not rows:
        raise ConfigError("bound table needs at least one n:m row")
    return rows


def cmd_bound_table(args) -> int:
    cp = _read_ini(args.config)
    _check_keys(cp, {"table": _TABLE_KEYS})
    raw = _get(cp, "table", "rows", str, _DEFAULT_TABLE_ROWS)
    rows = _parse_table_rows(raw)
    out = _out_dir(args)
    table = bound_table(rows)
    header = list(table[0].keys())
    _write_csv(out / "bounds.csv", header, ([row[k] for k in header] for row in table))
    echo = configparser.ConfigParser()
    echo["table"] = {"rows": raw}
    with open(out / "effective_config.ini", "w") as fh:
        echo.write(fh)
    for row in table:
        print(
            f"n={row['n']} m={row['m']}: per-round 1e{row['log10_per_round']:.2f}, "
            f"million-year 1e{row['log10_million_year']:.2f}"
        )
    return EXIT_OK


def cmd_golden_vectors(args) -> int:
    cp = _read_ini(args.config)
    _check_keys(cp, {"vectors": _VECTOR_KEYS})
    genesis_seed = _get(
        cp, "vectors", "genesis_seed", bytes.fromhex, RunConfig().genesis_seed
    )
    m = _get(cp, "vectors", "m", int, 4)
    t_lease = _get(cp, "vectors", "t_lease", int, 5)
    num_keys = _get(cp, "vectors", "num_keys", int, 16)
    rounds = _get(cp, "vectors", "rounds", int, 3 * t_lease)
    if m < 1 or t_lease < 1 or num_keys < 1 or rounds < 1:
        raise ConfigError("vector parameters must be positive")
    out = _out_dir(args)
    key_ids = [f"k{i:02d}" for i in range(num_keys)]
    text = golden_vector_text(genesis_seed, key_ids, m, t_lease, rounds)
    (out / "vectors.txt").write_text(text)
    echo = configparser.ConfigParser()
    echo["vectors"] = {
        "genesis_seed": genesis_seed.hex(),
        "m": str(m),
        "t_lease": str(t_lease),
        "num_keys": str(num_keys),
        "rounds": str(rounds),
    }
    with open(out / "effective_config.ini", "w") as fh:
        echo.write(fh)
    print(f"wrote {num_keys} keys x {rounds} rounds to {out / 'vectors.txt'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shardsim",
        description="sharded-ledger simulator and failure analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler in (
        ("simulate", cmd_simulate),
        ("oracle-compare", cmd_oracle_compare),
        ("bins-mc", cmd_bins_mc),
        ("bound-table", cmd_bound_table),
        ("golden-vectors", cmd_golden_vectors),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="INI configuration file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override rng seed")
        p.add_argument("--rounds", type=int, default=None, help="override round count")
        p.add_argument(
            "--negative-mode",
            choices=["none", "conflict-partition", "broken-sync"],
            default=None,
            help="inject a deliberate defect",
        )
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
