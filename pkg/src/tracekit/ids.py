"""Entity identifier generation and validation.

Identifiers are 128 random bits rendered in the canonical lowercase
hex-with-hyphens text form (8-4-4-4-12 groups), e.g.
``ba27001f-5d28-44eb-b507-bd7b0ff0be7a``.
"""

from __future__ import annotations

import hashlib
import random
import re
import uuid
from typing import Callable

ID_PATTERN = re.compile(
    r"^[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}$"
)

IdFactory = Callable[[], str]


def new_id() -> str:
    """Return a fresh random identifier in canonical text form."""
    return str(uuid.uuid4())


def is_canonical_id(value: str) -> bool:
    """Check that ``value`` matches the canonical identifier text form."""
    return bool(ID_PATTERN.match(value))


def _format_id(bits: bytes) -> str:
    h = bits.hex()
    return f"{h[0:8]}-{h[8:12]}-{h[12:16]}-{h[16:20]}-{h[20:32]}"


def seeded_id_factory(seed_material: str) -> IdFactory:
    """Return a deterministic id generator seeded from ``seed_material``.

    Used by the CLI when a clock override is in effect so that repeated
    sessions produce byte-identical repositories.  Successive calls on the
    same factory yield distinct ids.
    """
    rng = random.Random(hashlib.sha256(seed_material.encode("utf-8")).digest())

    def factory() -> str:
        return _format_id(rng.getrandbits(128).to_bytes(16, "big"))

    return factory
