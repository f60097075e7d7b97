"""``jrc`` command line: encode, corrupt, decode, analyze, experiment.

Exit codes of ``decode``: 0 recovered, 2 search budget exhausted (partial
prefix written), 3 noise profile below the Shannon bound (no search), 1 any
other error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .bitcore import PacketIndexSet
from .channel import apply_bsc, check_eps
from .codec import CodecParams, ReceivedPackets, build_transition_table, encode
from .decode_list import (
    DecodeError,
    TableTooLarge,
    build_partition_table,
    decode_list,
    decode_straightforward,
)
from .decode_seq import DEFAULT_WIDTH_BUDGET, DecodeBudget, build_sorted_table, decode_sequential
from .harness import ExperimentConfig, preset, run_unl_study, run_width_experiment
from .io import FormatError, PacketFile, pad_message, read_manifest, unpad_message, write_manifest
from . import kernels

log = logging.getLogger("jrc")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BUDGET = 2
EXIT_BELOW_SHANNON = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_ERROR):
        super().__init__(message)
        self.code = code


def _int_list(text: str) -> list[int]:
    try:
        return [int(t, 0) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated integer list, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated number list, got {text!r}") from None


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


# --------------------------------------------------------------------- encode

def cmd_encode(args) -> int:
    data = Path(args.infile).read_bytes()
    if args.which is not None:
        which = PacketIndexSet.of(args.which)
    else:
        if args.packets < 1:
            raise CliError("--packets must be at least 1")
        which = PacketIndexSet.of(range(args.packets))
    if which.which[-1] >= args.state_width:
        raise CliError(f"packet id {which.which[-1]} does not fit a {args.state_width}-bit state")
    bits, L, nbits = pad_message(data, args.N)
    if args.N > 255 or L >= 1 << 32:
        raise CliError("message or block size exceeds the container format")
    params = CodecParams(N=args.N, L=L, W_s=args.state_width, S=args.phases, seed=args.seed)
    subset = None
    if args.permutation_subset is not None:
        subset = PacketIndexSet.of(args.permutation_subset)
        table = build_transition_table(params.seed, params, mode="permutation", subset=subset)
    else:
        table = build_transition_table(params.seed, params)
    packets = encode(bits, params, table)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    final = None if args.omit_final_state else packets.final_state
    entries = []
    for s in range(params.S):
        for i in which:
            pf = PacketFile(
                N=params.N, W_s=params.W_s, S=params.S, phase=s, packet_id=i, seed=params.seed,
                L=L, message_bits=nbits, bits=np.asarray(packets.bits[s, i]), final_state=final,
                seed_withheld=args.withhold_seed,
                permutation_subset=None if subset is None else subset.which,
            )
            path = out / f"packet_s{s}_{i:02d}.jrc"
            pf.write(path)
            entries.append((path, 0.0))
    write_manifest(out / "manifest.txt", entries)
    _emit({"final_state": f"{packets.final_state:#018x}", "L": L, "message_bits": nbits,
           "packets": len(entries), "manifest": str(out / "manifest.txt")})
    return EXIT_OK


# -------------------------------------------------------------------- corrupt

def cmd_corrupt(args) -> int:
    eps = check_eps(args.eps)
    pf = PacketFile.read(args.infile)
    rng = np.random.default_rng(args.seed)
    flipped = apply_bsc(pf.bits, eps, rng)
    out = PacketFile(**{**pf.__dict__, "bits": np.asarray(flipped, dtype=np.uint8)})
    out.write(args.out)
    _emit({"flipped": int(np.count_nonzero(flipped != pf.bits)), "L": pf.L, "eps": eps})
    return EXIT_OK


# --------------------------------------------------------------------- decode

def _load_group(manifest, seed_override):
    entries = read_manifest(manifest)
    if not entries:
        raise CliError("manifest lists no packets")
    files = [(PacketFile.read(p), eps, p) for p, eps in entries]
    ref = files[0][0]
    seen = set()
    for pf, _, path in files:
        if pf.shared_fields() != ref.shared_fields():
            raise CliError(f"{path}: header does not match {files[0][2]}")
        key = (pf.phase, pf.packet_id)
        if key in seen:
            raise CliError(f"{path}: duplicate packet id {pf.packet_id} in phase {pf.phase}")
        seen.add(key)
        if pf.phase >= pf.S:
            raise CliError(f"{path}: phase {pf.phase} outside S={pf.S}")
    if ref.seed_withheld:
        if seed_override is None:
            raise CliError("packets were written without their seed; pass --seed")
        seed = seed_override
    else:
        seed = ref.seed if seed_override is None else seed_override
    if ref.message_bits > ref.N * ref.L:
        raise CliError("header records more message bits than the packets carry")
    params = CodecParams(N=ref.N, L=ref.L, W_s=ref.W_s, S=ref.S, seed=seed)
    if ref.permutation_subset is not None:
        table = build_transition_table(params.seed, params, mode="permutation",
                                       subset=PacketIndexSet.of(ref.permutation_subset))
    else:
        table = build_transition_table(params.seed, params)
    whiches, rows, epss = [], [], []
    for s in range(params.S):
        group = sorted((pf.packet_id, pf, e) for pf, e, _ in files if pf.phase == s)
        whiches.append(tuple(g[0] for g in group))
        rows.append(np.stack([g[1].bits for g in group]) if group else np.zeros((0, params.L), np.uint8))
        epss.append(np.asarray([g[2] for g in group], dtype=np.float64))
    if any(not w for w in whiches):
        raise CliError("every interleaving phase needs at least one packet")
    received = ReceivedPackets(tuple(whiches), tuple(rows), tuple(epss), params.L)
    return ref, params, table, received


def _write_message(path, bits, message_bits) -> None:
    Path(path).write_bytes(unpad_message(bits, message_bits))


def cmd_decode(args) -> int:
    ref, params, table, received = _load_group(args.manifest, args.seed)
    final = ref.final_state
    if args.require_final_state and final is None:
        raise CliError("packets carry no final_state but --require-final-state was given")
    eps = received.all_eps()
    mode = args.mode
    ptable = None
    if mode == "auto":
        if np.all(eps == 0.0):
            try:
                ptable = build_partition_table(table, received.which)
            except TableTooLarge:
                mode = "seq"
            else:
                mode = "straightforward" if ptable.is_injective() else "list"
        else:
            mode = "seq"
    log.info("decoding %d packets in %s mode", received.M, mode)
    if mode in ("straightforward", "list"):
        if ptable is None:
            try:
                ptable = build_partition_table(table, received.which)
            except TableTooLarge as exc:
                raise CliError(str(exc)) from None
        if mode == "straightforward":
            try:
                msg = decode_straightforward(received, params, ptable, final_state=final)
            except DecodeError as exc:
                raise CliError(f"straightforward decoding failed: {exc}") from None
            _write_message(args.out, msg, ref.message_bits)
            _emit({"mode": mode, "success": True})
            return EXIT_OK
        res = decode_list(received, params, ptable, final_state=final)
        if not res.success:
            if res.message is not None:
                _write_message(args.out, res.message, min(ref.message_bits, _prefix_bits(res.position, params)))
            raise CliError(f"no message is consistent with the packets (reached position {res.position})")
        if res.ambiguous:
            print(f"warning: {res.survivors} candidate messages fit; writing the first", file=sys.stderr)
        _write_message(args.out, res.message, ref.message_bits)
        _emit({"mode": mode, "success": True, "width": res.width, "candidates": res.survivors})
        return EXIT_OK

    # sequential
    for s in range(params.S):
        pr = analysis.solve_pareto_c(received.eps[s], params.N_s[s])
        if pr.regime == "below_shannon":
            _emit({"mode": "seq", "success": False, "regime": pr.regime, "phase": s,
                   "required_additional_rate": pr.deficit})
            print(f"error: packets carry {pr.shannon_sum:.4f} bits per block in phase {s}, "
                  f"{pr.deficit:.4f} short of the {params.N_s[s]} needed", file=sys.stderr)
            return EXIT_BELOW_SHANNON
    try:
        stable = build_sorted_table(table, received.which, [e for e in received.eps])
    except TableTooLarge as exc:
        raise CliError(str(exc)) from None
    budget = DecodeBudget.from_width(args.budget, params.positions)
    res = decode_sequential(received, params, stable, budget, final_state=final)
    if res.success:
        _write_message(args.out, res.message, ref.message_bits)
        _emit({"mode": "seq", "success": True, "width": res.width, "nodes": res.nodes})
        return EXIT_OK
    reached_bits = min(ref.message_bits, _prefix_bits(res.position, params))
    _write_message(args.out, res.partial, reached_bits)
    _emit({"mode": "seq", "success": False, "position": res.position, "positions": params.positions,
           "nodes": res.nodes, "recovered_bits": reached_bits,
           "reason": "exhausted" if res.exhausted else "budget"})
    if res.exhausted:
        print(f"error: no path fits the packets (deepest position {res.position})", file=sys.stderr)
        return EXIT_ERROR
    print(f"budget exhausted at position {res.position} of {params.positions}; "
          f"wrote {reached_bits} recovered bits", file=sys.stderr)
    return EXIT_BUDGET


def _prefix_bits(position: int, params: CodecParams) -> int:
    k, s = divmod(position, params.S)
    return k * params.N + sum(params.N_s[:s])


# -------------------------------------------------------------------- analyze

def cmd_analyze(args) -> int:
    what = args.what
    if what == "rate":
        _emit({"c": args.c, "eps": args.eps, "rate": float(analysis.rate_c(args.c, args.eps))})
    elif what == "pareto":
        _emit(analysis.solve_pareto_c(args.eps, args.N).to_dict())
    elif what == "straightforward":
        _emit({"N": args.N, "M": args.M, "p": analysis.straightforward_prob(args.N, args.M),
               "log2_p": analysis.straightforward_log2prob(args.N, args.M)})
    elif what == "stationary":
        try:
            d = analysis.stationary_width_dist(args.N, args.M, mode=args.mode)
        except analysis.StationaryNotConverged as exc:
            raise CliError(str(exc)) from None
        _emit({"N": args.N, "M": args.M, "mode": args.mode, "p": d.head(args.head),
               "mean": d.mean, "std": d.std})
    elif what == "unl":
        _emit(run_unl_study(samples=args.samples, seed=args.seed).to_dict())
    return EXIT_OK


# ----------------------------------------------------------------- experiment

def _parse_preset(text: str):
    name, _, param = text.partition(":")
    return name, int(param) if param else None


def cmd_experiment(args) -> int:
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
            if args.ci:
                raw["trials"] = min(raw.get("trials", 1000), 100)
            config = ExperimentConfig.from_dict({**raw, **overrides})
        except (ValueError, TypeError) as exc:
            raise CliError(f"invalid experiment config: {exc}") from None
    else:
        name, param = _parse_preset(args.preset)
        try:
            config = preset(name, param, ci=args.ci, **overrides)
        except ValueError as exc:
            raise CliError(str(exc)) from None
    report = run_width_experiment(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = config.scenario
    (out / f"{stem}.csv").write_text(report.to_csv())
    (out / f"{stem}.json").write_text(report.to_json() + "\n")
    summary = report.summary()
    summary.pop("sorted_widths")
    summary["wall_time"] = round(report.wall_time, 3)
    _emit(summary)
    return EXIT_OK


# ---------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jrc", description="Joint reconstruction codes toolkit")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("encode", help="encode a file into packet files")
    e.add_argument("--in", dest="infile", required=True)
    e.add_argument("--N", type=int, required=True, help="message bits per encoding step")
    g = e.add_mutually_exclusive_group(required=True)
    g.add_argument("--packets", type=int, help="emit packets 0..k-1")
    g.add_argument("--which", type=_int_list, help="comma-separated packet ids")
    e.add_argument("--seed", type=lambda t: int(t, 0), required=True)
    e.add_argument("--permutation-subset", type=_int_list,
                   help="packet ids that alone decode by table lookup (size N/S)")
    e.add_argument("--phases", type=int, default=1, help="interleaving phases S")
    e.add_argument("--state-width", type=int, default=64)
    e.add_argument("--omit-final-state", action="store_true")
    e.add_argument("--withhold-seed", action="store_true", help="leave the seed out of the headers")
    e.add_argument("--out", required=True, help="output directory")
    e.set_defaults(func=cmd_encode)

    c = sub.add_parser("corrupt", help="pass one packet through a binary symmetric channel")
    c.add_argument("--in", dest="infile", required=True)
    c.add_argument("--eps", type=float, required=True)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_corrupt)

    d = sub.add_parser("decode", help="reconstruct a file from packets listed in a manifest")
    d.add_argument("--manifest", required=True)
    d.add_argument("--mode", choices=("auto", "straightforward", "list", "seq"), default="auto")
    d.add_argument("--budget", type=float, default=DEFAULT_WIDTH_BUDGET,
                   help="sequential search budget as a width (nodes per position)")
    d.add_argument("--require-final-state", action="store_true")
    d.add_argument("--seed", type=lambda t: int(t, 0), help="seed for packets written with --withhold-seed")
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_decode)

    a = sub.add_parser("analyze", help="closed-form and numerical predictions (JSON)")
    asub = a.add_subparsers(dest="what", required=True)
    r = asub.add_parser("rate")
    r.add_argument("--c", type=float, required=True)
    r.add_argument("--eps", type=float, required=True)
    pa = asub.add_parser("pareto")
    pa.add_argument("--N", type=float, required=True)
    pa.add_argument("--eps", type=_float_list, required=True)
    sf = asub.add_parser("straightforward")
    sf.add_argument("--N", type=int, required=True)
    sf.add_argument("--M", type=int, required=True)
    st = asub.add_parser("stationary")
    st.add_argument("--N", type=int, required=True)
    st.add_argument("--M", type=int, required=True)
    st.add_argument("--mode", choices=("asymptotic", "exact"), default="asymptotic")
    st.add_argument("--head", type=int, default=8)
    un = asub.add_parser("unl")
    un.add_argument("--samples", type=int, default=1_000_000)
    un.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_analyze)

    x = sub.add_parser("experiment", help="run a width experiment, write CSV and JSON")
    src = x.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="experiment config JSON")
    src.add_argument("--preset", help="fig4[:N], fig5[:N] or fig6[:d]")
    x.add_argument("--ci", action="store_true", help="scale down to 100 trials")
    x.add_argument("--trials", type=int)
    x.add_argument("--workers", type=int)
    x.add_argument("--out", required=True)
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    log.info("kernel backend: %s", kernels.BACKEND)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (FormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
