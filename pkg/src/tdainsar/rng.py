"""Seed derivation.

Every random draw in the package is taken from a generator built by
``make_rng(root_seed, component, *indices)``. The component name and indices
are hashed together with the root seed, so a given draw does not depend on
how many other draws happened before it or on thread scheduling.
"""
import hashlib

import numpy as np


def derive_seed(root_seed, component, *indices):
    key = f"{int(root_seed)}|{component}|" + ",".join(str(int(i)) for i in indices)
    digest = hashlib.blake2b(key.encode(), digest_size=16).digest()
    return int.from_bytes(digest, "little")


def make_rng(root_seed, component, *indices):
    return np.random.default_rng(derive_seed(root_seed, component, *indices))
