"""Desk-scale instances, encoders and verifiers for the three benchmark domains."""
from .common import Encoding, UnsupportedEncoding, instance_from_json, instance_to_json
from .wseq import WseqInstance, gen_wseq, encode_wseq, wseq_optimum
from .sched import IsInstance, gen_is, encode_is
from .folding import RfInstance, gen_rf, encode_rf
from .verify import decode, verify, verify_wseq, verify_is, verify_rf

GENERATORS = {"wseq": gen_wseq, "is": gen_is, "rf": gen_rf}


def encode(instance, encoding):
    enc = Encoding.parse(encoding)
    if isinstance(instance, WseqInstance):
        return encode_wseq(instance, enc)
    if isinstance(instance, IsInstance):
        return encode_is(instance, enc)
    return encode_rf(instance, enc)


__all__ = [
    "Encoding", "UnsupportedEncoding", "instance_from_json", "instance_to_json",
    "WseqInstance", "gen_wseq", "encode_wseq", "wseq_optimum",
    "IsInstance", "gen_is", "encode_is", "RfInstance", "gen_rf", "encode_rf",
    "decode", "verify", "verify_wseq", "verify_is", "verify_rf", "GENERATORS", "encode",
]
