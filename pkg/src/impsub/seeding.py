"""Named sub-seeds derived from one user seed."""

import zlib

import numpy as np

# names recorded in run manifests
CLUSTER_INIT = "cluster-init"
ISS_RECLUSTER = "iss-recluster"
SYNTH = "synth"
HOUR_SAMPLE = "hour-sample"


def sub_seed(seed: int, name: str, *extra: int) -> int:
    """Deterministic 63-bit seed for stream ``name`` under ``seed``."""
    key = (zlib.crc32(name.encode("utf-8")),) + tuple(int(e) for e in extra)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return int(ss.generate_state(2, dtype=np.uint32).view(np.uint64)[0] >> np.uint64(1))


def named_seeds(seed: int) -> dict:
    return {name: sub_seed(seed, name) for name in (CLUSTER_INIT, ISS_RECLUSTER, SYNTH, HOUR_SAMPLE)}
