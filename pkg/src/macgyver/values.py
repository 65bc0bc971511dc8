"""Sentinel values used by scoring and ranking.

``NEG_INF`` is a dedicated bottom element for rankings. It compares below
every float but, unlike ``float('-inf')``, deliberately supports no
arithmetic: summing a score breakdown that contains it is a bug, not a NaN
waiting to happen.

``UNATTACHABLE`` marks attachment results for object tuples that cannot be
joined by any available attachment type.
"""

from __future__ import annotations


class _NegativeInfinity:
    __slots__ = ()

    def __lt__(self, other):
        return other is not NEG_INF

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return other is NEG_INF

    def __eq__(self, other):
        return other is NEG_INF

    def __ne__(self, other):
        return other is not NEG_INF

    def __hash__(self):
        return hash("macgyver.NEG_INF")

    def __repr__(self):
        return "NEG_INF"


class _Unattachable:
    __slots__ = ()

    def __repr__(self):
        return "UNATTACHABLE"


NEG_INF = _NegativeInfinity()
UNATTACHABLE = _Unattachable()


def is_finite_value(v) -> bool:
    """True for plain numbers, False for the NEG_INF / UNATTACHABLE sentinels."""
    return not (v is NEG_INF or v is UNATTACHABLE)


def rank_key(v):
    """Sort key placing NEG_INF below every finite value (descending use)."""
    if v is NEG_INF:
        return (0, 0.0)
    return (1, float(v))
