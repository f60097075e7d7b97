"""Joint reconstruction codes: packets that are payload and redundancy at once.

Encode a message into many packets, reconstruct it from any sufficiently
informative subset of (possibly noisy) packets, and predict decoder behavior.
"""
from .bitcore import BitSeq, PacketIndexSet, StateWord, Syndrome, extract
from .channel import NoiseProfile, RngStream, apply_bsc, corrupt, drop_packets
from .codec import (
    CodecParams,
    EncodedPacketSet,
    ReceivedPackets,
    TransitionTable,
    build_transition_table,
    emit_packet_subset,
    encode,
)
from .decode_list import (
    AmbiguousCandidates,
    InconsistentData,
    PartitionTable,
    build_partition_table,
    decode_list,
    decode_straightforward,
)
from .decode_seq import DecodeBudget, build_sorted_table, decode_sequential
from .analysis import solve_pareto_c, straightforward_prob, stationary_width_dist

__version__ = "0.1.0"

__all__ = [
    "BitSeq", "PacketIndexSet", "StateWord", "Syndrome", "extract",
    "NoiseProfile", "RngStream", "apply_bsc", "corrupt", "drop_packets",
    "CodecParams", "EncodedPacketSet", "ReceivedPackets", "TransitionTable",
    "build_transition_table", "emit_packet_subset", "encode",
    "AmbiguousCandidates", "InconsistentData", "PartitionTable",
    "build_partition_table", "decode_list", "decode_straightforward",
    "DecodeBudget", "build_sorted_table", "decode_sequential",
    "solve_pareto_c", "straightforward_prob", "stationary_width_dist",
]
