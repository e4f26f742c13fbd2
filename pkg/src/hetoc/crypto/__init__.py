"""Hash kernels: scalar reference implementations and vectorized batch paths."""

from .batch import (
    ALGORITHMS,
    DIGEST_LEN,
    Digest,
    MessageBatch,
    UnknownAlgorithmError,
    batch_digest,
    digest,
    digest_sha1_accel,
    gen_messages,
    hash_batch,
)
from .md5 import md5
from .sha1 import sha1
from .sm3 import sm3

__all__ = [
    "ALGORITHMS",
    "DIGEST_LEN",
    "Digest",
    "MessageBatch",
    "UnknownAlgorithmError",
    "batch_digest",
    "digest",
    "digest_sha1_accel",
    "gen_messages",
    "hash_batch",
    "md5",
    "sha1",
    "sm3",
]
