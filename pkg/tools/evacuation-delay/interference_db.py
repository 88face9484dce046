"""
Interference relation database kept by a spectrum manager.

Maps every primary user (TV receiver) to the secondary users inside its
guard zone and every secondary user to the primary users it interferes
with, together with channel state. Users are bucketed on a grid of cells
no smaller than the guard radius, so a guard-zone query only inspects the
3 x 3 block of cells around a point. Distances wrap around the region
(flat torus).
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

from models import Point2D, ScenarioValidationError, UnknownEntityError
from spatial import torus_delta, torus_distance

logger = logging.getLogger(__name__)

# Channel value of a PU whose TV is off
IDLE = 0


@dataclass
class PURecord:
    pu_id: object
    location: Point2D
    channel: int = IDLE
    guard: set = field(default_factory=set)


@dataclass
class SURecord:
    su_id: object
    location: Point2D
    channel: Optional[int] = None  # None = not operating (blocked)
    interfered: set = field(default_factory=set)


class InterferenceDB:
    """Symmetric PU <-> SU guard-zone relation with channel occupancy."""

    def __init__(self, spatial, n_channels):
        if n_channels < 1:
            raise ScenarioValidationError("n_channels must be >= 1")
        self.spatial = spatial
        self.n_channels = int(n_channels)
        self.r_p = spatial.r_p
        self.width = spatial.region_width
        self.height = spatial.region_height

        # cells at least r_p wide so one ring of neighbors covers a guard zone
        self._nx = max(1, int(self.width // self.r_p))
        self._ny = max(1, int(self.height // self.r_p))
        self._cell_w = self.width / self._nx
        self._cell_h = self.height / self._ny

        self.pus = {}
        self.sus = {}
        self._pu_cells = defaultdict(set)
        self._su_cells = defaultdict(set)

    # =========================================================================
    # Geometry
    # =========================================================================

    def _cell(self, p):
        return (int(p.x // self._cell_w) % self._nx, int(p.y // self._cell_h) % self._ny)

    def _neighborhood(self, p):
        i, j = self._cell(p)
        return {((i + di) % self._nx, (j + dj) % self._ny)
                for di in (-1, 0, 1) for dj in (-1, 0, 1)}

    def _in_range(self, p, q):
        dx = torus_delta(p.x, q.x, self.width)
        dy = torus_delta(p.y, q.y, self.height)
        return math.hypot(dx, dy) <= self.r_p

    def _check_location(self, p):
        if not (0 <= p.x <= self.width and 0 <= p.y <= self.height):
            raise ScenarioValidationError(
                f"location ({p.x:.1f}, {p.y:.1f}) lies outside the "
                f"{self.width:g} x {self.height:g} m region")

    def _check_pu_channel(self, channel):
        if not (channel == IDLE or 1 <= channel <= self.n_channels):
            raise ScenarioValidationError(
                f"PU channel must be {IDLE} (idle) or in [1, {self.n_channels}], got {channel}")

    def _check_su_channel(self, channel):
        if channel is not None and not 1 <= channel <= self.n_channels:
            raise ScenarioValidationError(
                f"SU channel must be in [1, {self.n_channels}] or None, got {channel}")

    def _pu(self, pu_id):
        try:
            return self.pus[pu_id]
        except KeyError:
            raise UnknownEntityError(f"unknown PU id {pu_id!r}") from None

    def _su(self, su_id):
        try:
            return self.sus[su_id]
        except KeyError:
            raise UnknownEntityError(f"unknown SU id {su_id!r}") from None

    # =========================================================================
    # Mutations
    # =========================================================================

    def add_pu(self, pu_id, location, channel=IDLE):
        """Register a TV receiver and link it to every SU inside its guard zone."""
        if pu_id in self.pus:
            raise ScenarioValidationError(f"duplicate PU id {pu_id!r}")
        self._check_location(location)
        self._check_pu_channel(channel)

        record = PURecord(pu_id, location, channel)
        for cell in self._neighborhood(location):
            for su_id in self._su_cells.get(cell, ()):
                su = self.sus[su_id]
                if self._in_range(location, su.location):
                    record.guard.add(su_id)
                    su.interfered.add(pu_id)

        self.pus[pu_id] = record
        self._pu_cells[self._cell(location)].add(pu_id)

    def remove_pu(self, pu_id):
        record = self._pu(pu_id)
        for su_id in record.guard:
            self.sus[su_id].interfered.discard(pu_id)
        self._pu_cells[self._cell(record.location)].discard(pu_id)
        del self.pus[pu_id]

    def add_su(self, su_id, location, channel=None):
        """Register a secondary link and link it to every PU whose guard zone holds it."""
        if su_id in self.sus:
            raise ScenarioValidationError(f"duplicate SU id {su_id!r}")
        self._check_location(location)
        self._check_su_channel(channel)

        record = SURecord(su_id, location, channel)
        for cell in self._neighborhood(location):
            for pu_id in self._pu_cells.get(cell, ()):
                pu = self.pus[pu_id]
                if self._in_range(location, pu.location):
                    record.interfered.add(pu_id)
                    pu.guard.add(su_id)

        self.sus[su_id] = record
        self._su_cells[self._cell(location)].add(su_id)

    def remove_su(self, su_id):
        record = self._su(su_id)
        for pu_id in record.interfered:
            self.pus[pu_id].guard.discard(su_id)
        self._su_cells[self._cell(record.location)].discard(su_id)
        del self.sus[su_id]

    def set_pu_channel(self, pu_id, channel):
        self._check_pu_channel(channel)
        self._pu(pu_id).channel = channel

    def set_su_channel(self, su_id, channel):
        self._check_su_channel(channel)
        self._su(su_id).channel = channel

    # =========================================================================
    # Queries
    # =========================================================================

    def guard_set(self, pu_id):
        return frozenset(self._pu(pu_id).guard)

    def interfered_set(self, su_id):
        return frozenset(self._su(su_id).interfered)

    def affected_sus(self, pu_id, channel):
        """SUs inside the PU's guard zone operating on `channel`."""
        return {su_id for su_id in self._pu(pu_id).guard if self.sus[su_id].channel == channel}

    def free_channels_for(self, su_id):
        """Channels not watched by any PU whose guard zone contains the SU."""
        watched = {self.pus[pu_id].channel for pu_id in self._su(su_id).interfered}
        return set(range(1, self.n_channels + 1)) - watched

    def relation(self):
        """All (pu_id, su_id) pairs in the guard-zone relation."""
        return {(pu_id, su_id) for pu_id, pu in self.pus.items() for su_id in pu.guard}

    def check_invariants(self):
        """
        Verify symmetry, disk membership and channel ranges.

        Returns:
            List of problem descriptions (empty when consistent)
        """
        problems = []
        for pu_id, pu in self.pus.items():
            for su_id in pu.guard:
                if su_id not in self.sus or pu_id not in self.sus[su_id].interfered:
                    problems.append(f"asymmetric pair PU {pu_id!r} / SU {su_id!r}")
        for su_id, su in self.sus.items():
            for pu_id in su.interfered:
                if pu_id not in self.pus or su_id not in self.pus[pu_id].guard:
                    problems.append(f"asymmetric pair SU {su_id!r} / PU {pu_id!r}")
                elif not self._in_range(su.location, self.pus[pu_id].location):
                    problems.append(f"SU {su_id!r} linked to out-of-range PU {pu_id!r}")
            if su.channel is not None and not 1 <= su.channel <= self.n_channels:
                problems.append(f"SU {su_id!r} on invalid channel {su.channel}")
        return problems


# =============================================================================
# Module-Level Operations
# =============================================================================

def build_interference_db(pus, sus, spatial, n_channels):
    """
    Build the relation database from user records.

    Args:
        pus: Iterable of (pu_id, Point2D, watched channel or IDLE)
        sus: Iterable of (su_id, Point2D, operating channel or None)
        spatial: SpatialParams (guard radius and region)
        n_channels: Number of TV channels

    Returns:
        InterferenceDB

    Raises:
        ScenarioValidationError: duplicate ids or locations outside the region
    """
    db = InterferenceDB(spatial, n_channels)
    # SUs first: buckets are filled before any PU scans them
    for su_id, location, channel in sus:
        db.add_su(su_id, location, channel)
    for pu_id, location, channel in pus:
        db.add_pu(pu_id, location, channel)
    logger.debug(f"Interference DB: {len(db.pus):,} PUs, {len(db.sus):,} SUs, "
                 f"{sum(len(p.guard) for p in db.pus.values()):,} guard pairs")
    return db


def affected_sus(db, pu_id, channel):
    return db.affected_sus(pu_id, channel)


def free_channels_for(db, su_id):
    return db.free_channels_for(su_id)


def brute_force_relation(pus, sus, spatial):
    """All-pairs guard-zone relation, for checking the bucketed database."""
    return {
        (pu_id, su_id)
        for pu_id, p, _ in pus
        for su_id, s, _ in sus
        if torus_distance(p, s, spatial.region_width, spatial.region_height) <= spatial.r_p
    }
