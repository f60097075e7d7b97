"""Randomized width experiments and the unknown-noise-level study."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import analysis, kernels
from .bitcore import PacketIndexSet
from .channel import corrupt
from .codec import CodecParams, build_transition_table, emit_packet_subset, encode
from .decode_list import build_partition_table, decode_list
from .decode_seq import DecodeBudget, build_sorted_table, decode_sequential

CI_TRIALS = 100


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    N: int
    groups: tuple[tuple[int, float], ...]
    message_bytes: int = 1000
    trials: int = 1000
    budget_width: float = 256.0
    seed: int = 0
    decoder: str = "seq"
    W_s: int = 64
    M_table_cap: int = 20
    use_final_state: bool = True
    workers: int = 1

    def __post_init__(self):
        groups = tuple((int(c), float(e)) for c, e in self.groups)
        object.__setattr__(self, "groups", groups)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.message_bytes < 1:
            raise ValueError("message_bytes must be >= 1")
        if self.decoder not in ("seq", "list"):
            raise ValueError(f"unknown decoder {self.decoder!r}")
        if self.M > self.W_s:
            raise ValueError(f"{self.M} packets do not fit a {self.W_s}-bit state")
        if any(not 0.0 <= e <= 0.5 for _, e in groups):
            raise ValueError("group eps must lie in [0, 0.5]")

    @property
    def M(self) -> int:
        return sum(c for c, _ in self.groups)

    @property
    def eps(self) -> list[float]:
        return [e for c, e in self.groups for _ in range(c)]

    @property
    def L(self) -> int:
        return math.ceil(8 * self.message_bytes / self.N)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("scenario", "N", "groups"):
            if key not in known:
                raise ValueError(f"config is missing {key!r}")
        return cls(**known)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["groups"] = [list(g) for g in self.groups]
        return d


def preset(name: str, param: int | None = None, ci: bool = False, **overrides) -> ExperimentConfig:
    """Bundled scenarios: ``fig4`` (undamaged, M = N + 1), ``fig5`` (N - 1 clean + eps 0.05, 0.04),
    ``fig6`` (N = 3, two clean + d packets at eps 0.2)."""
    if name == "fig4":
        N = param or 8
        cfg = dict(scenario=f"fig4-N{N}", N=N, groups=((N + 1, 0.0),))
    elif name == "fig5":
        N = param or 8
        cfg = dict(scenario=f"fig5-N{N}", N=N, groups=((N - 1, 0.0), (1, 0.05), (1, 0.04)))
    elif name == "fig6":
        d = param or 6
        cfg = dict(scenario=f"fig6-d{d}", N=3, groups=((2, 0.0), (d, 0.2)))
    else:
        raise ValueError(f"unknown preset {name!r}")
    if ci:
        cfg["trials"] = CI_TRIALS
    cfg.update(overrides)
    return ExperimentConfig(**cfg)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    width: float
    success: bool
    correct: bool
    nodes: int
    censored: bool


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def run_trial(config: ExperimentConfig, trial: int) -> TrialRecord:
    rng = _trial_rng(config.seed, trial)
    L = config.L
    params = CodecParams(N=config.N, L=L, W_s=config.W_s)
    table = build_transition_table(int(rng.integers(0, 2**63)), params)
    msg_bytes = rng.integers(0, 256, size=config.message_bytes, dtype=np.uint8)
    bits = np.zeros(params.message_bits, dtype=np.uint8)
    raw = np.unpackbits(msg_bytes, bitorder="little")
    bits[: raw.size] = raw
    packets = encode(bits, params, table)
    which = PacketIndexSet.of(rng.choice(config.W_s, size=config.M, replace=False))
    eps = np.asarray(config.eps)[rng.permutation(config.M)]
    received = corrupt(emit_packet_subset(packets, which), eps, rng)
    final = packets.final_state if config.use_final_state else None
    P = params.positions
    if config.decoder == "list":
        res = decode_list(received, params, build_partition_table(table, which), final_state=final)
        correct = res.success and any(np.array_equal(m, bits) for m in res.messages)
        return TrialRecord(trial, res.width, res.success, bool(correct), res.steps, not res.success)
    budget = DecodeBudget.from_width(config.budget_width, P)
    stable = build_sorted_table(table, which, eps, M_table_cap=config.M_table_cap)
    res = decode_sequential(received, params, stable, budget, final_state=final)
    if res.success:
        return TrialRecord(trial, res.width, True, bool(np.array_equal(res.message, bits)), res.nodes, False)
    return TrialRecord(trial, budget.width_cap(P), False, False, res.nodes, True)


def _run_chunk(args):
    config, trials = args
    return [run_trial(config, t) for t in trials]


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    records: list[TrialRecord]
    predicted: analysis.ParetoResult
    fit: analysis.ParetoFit | None
    wall_time: float = 0.0
    backend: str = field(default_factory=lambda: kernels.BACKEND)

    @property
    def widths(self) -> np.ndarray:
        return np.sort(np.asarray([r.width for r in self.records], dtype=np.float64))

    @property
    def success_rate(self) -> float:
        if not self.records:
            return 0.0
        return sum(r.success and r.correct for r in self.records) / len(self.records)

    @property
    def mean_width(self) -> float:
        return float(np.mean(self.widths)) if self.records else math.nan

    @property
    def median_width(self) -> float:
        return float(np.median(self.widths)) if self.records else math.nan

    @property
    def unit_width_fraction(self) -> float:
        """Share of trials decoded with exactly one node per position."""
        if not self.records:
            return 0.0
        return float(np.mean([r.width == 1.0 for r in self.records]))

    def summary(self, include_timing: bool = False) -> dict:
        out = {
            "config": self.config.to_dict(),
            "trials": len(self.records),
            "success_rate": self.success_rate,
            "mean_width": self.mean_width,
            "median_width": self.median_width,
            "unit_width_fraction": self.unit_width_fraction,
            "censored": int(sum(r.censored for r in self.records)),
            "predicted": self.predicted.to_dict(),
            "fit": None if self.fit is None else self.fit.to_dict(),
            "sorted_widths": [float(w) for w in self.widths],
        }
        if include_timing:
            out["wall_time"] = self.wall_time
            out["backend"] = self.backend
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.summary(include_timing), indent=2, sort_keys=True, allow_nan=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "width", "success", "correct", "nodes", "censored"])
        for r in self.records:
            w.writerow([r.trial, repr(float(r.width)), int(r.success), int(r.correct), r.nodes, int(r.censored)])
        return buf.getvalue()


def run_width_experiment(config: ExperimentConfig, trial_ids=None) -> ExperimentReport:
    """Run every trial (optionally in worker processes) and collect widths."""
    t0 = time.perf_counter()
    predicted = analysis.solve_pareto_c(config.eps, config.N)
    if predicted.regime == "below_shannon":
        return ExperimentReport(config, [], predicted, None, time.perf_counter() - t0)
    ids = list(range(config.trials)) if trial_ids is None else list(trial_ids)
    if config.workers > 1 and len(ids) > 1:
        chunks = [ids[i::config.workers] for i in range(config.workers)]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = [r for part in pool.map(_run_chunk, [(config, c) for c in chunks]) for r in part]
    else:
        records = [run_trial(config, t) for t in ids]
    records.sort(key=lambda r: r.trial)
    fit = None
    if len(records) >= 50:
        fit = analysis.fit_pareto_tail([r.width for r in records], [r.censored for r in records])
    return ExperimentReport(config, records, predicted, fit, time.perf_counter() - t0)


TABLE3_N = (1, 2, 3, 4, 10, 100)


def run_unl_study(samples: int = 1_000_000, seed: int = 0, table_N=TABLE3_N) -> analysis.UnlSummary:
    seq = np.random.SeedSequence(seed)
    streams = seq.spawn(1 + len(table_N))
    eps_bar, fc_rate = analysis.unl_fcfec_optimum()
    p, _ = analysis.unl_pr_curve(2, 16, samples, np.random.default_rng(streams[0]))
    pr = {M: float(p[M - 1]) for M in range(3, 17)}
    rows = []
    for N, st in zip(table_N, streams[1:]):
        M, pr_M, rate = analysis.unl_fcjrc_optimize(N, samples, np.random.default_rng(st))
        rows.append({"N": N, "M": M, "p_r": pr_M, "rate": rate})
    return analysis.UnlSummary(
        mean_rate=analysis.unl_mean_rate(),
        sigma=analysis.unl_sigma(),
        fcfec_eps=eps_bar,
        fcfec_rate=fc_rate,
        pr_N2=pr,
        fcjrc=rows,
        samples=samples,
    )
