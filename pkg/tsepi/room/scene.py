#!/usr/bin/env python3
"""
Shoebox rooms and source/microphone placement.

Rooms are 3-8 m wide, 2.5-4 m high, with RT60 between 0.2 s and 0.8 s. Every
source and the microphone stay 0.8 m away from the walls, and each source sits
0.6-2.0 m from the microphone.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from tsepi.errors import InvalidArgumentError, SceneSamplingError

logger = logging.getLogger(__name__)

WIDTH_RANGE = (3.0, 8.0)
HEIGHT_RANGE = (2.5, 4.0)
RT60_RANGE = (0.2, 0.8)
WALL_MARGIN = 0.8
DISTANCE_RANGE = (0.6, 2.0)
SPEED_OF_SOUND = 343.0

# float slack for positions that land exactly on a boundary
_TOL = 1e-9


@dataclass(frozen=True)
class RoomSpec:
    dimensions: tuple
    rt60: float

    def __post_init__(self):
        dims = tuple(float(d) for d in self.dimensions)
        if len(dims) != 3:
            raise InvalidArgumentError(f"room needs three dimensions, got {dims}")
        lx, ly, lz = dims
        for name, value, (low, high) in (("Lx", lx, WIDTH_RANGE), ("Ly", ly, WIDTH_RANGE),
                                         ("Lz", lz, HEIGHT_RANGE), ("rt60", self.rt60, RT60_RANGE)):
            if not low - _TOL <= value <= high + _TOL:
                raise InvalidArgumentError(f"{name}={value} outside [{low}, {high}]")
        object.__setattr__(self, "dimensions", dims)
        object.__setattr__(self, "rt60", float(self.rt60))

    @property
    def volume(self):
        lx, ly, lz = self.dimensions
        return lx * ly * lz

    @property
    def surface(self):
        lx, ly, lz = self.dimensions
        return 2.0 * (lx * ly + lx * lz + ly * lz)

    def to_dict(self):
        return {"dimensions": list(self.dimensions), "rt60": self.rt60}

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(data["dimensions"]), data["rt60"])


@dataclass(frozen=True)
class Geometry:
    source_pos: tuple
    mic_pos: tuple

    def __post_init__(self):
        source = tuple(float(v) for v in self.source_pos)
        mic = tuple(float(v) for v in self.mic_pos)
        if len(source) != 3 or len(mic) != 3:
            raise InvalidArgumentError("positions must be (x, y, z) triples")
        object.__setattr__(self, "source_pos", source)
        object.__setattr__(self, "mic_pos", mic)

    @property
    def distance(self):
        return float(np.linalg.norm(np.subtract(self.source_pos, self.mic_pos)))

    def validate(self, room):
        """Check wall margins and source-mic distance against the room"""
        dims = np.asarray(room.dimensions)
        for name, pos in (("source", self.source_pos), ("mic", self.mic_pos)):
            pos = np.asarray(pos)
            if np.any(pos < WALL_MARGIN - _TOL) or np.any(pos > dims - WALL_MARGIN + _TOL):
                raise InvalidArgumentError(f"{name} position {tuple(pos)} is closer than {WALL_MARGIN} m to a wall")
        low, high = DISTANCE_RANGE
        if not low - _TOL <= self.distance <= high + _TOL:
            raise InvalidArgumentError(f"source-mic distance {self.distance:.3f} m outside [{low}, {high}]")
        return self

    def to_dict(self):
        return {"source_pos": list(self.source_pos), "mic_pos": list(self.mic_pos)}

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(data["source_pos"]), tuple(data["mic_pos"]))


@dataclass(frozen=True)
class Scene:
    """One room, one shared microphone, one geometry per source"""

    room: RoomSpec
    geometries: tuple = field(default_factory=tuple)
    anechoic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "geometries", tuple(self.geometries))
        for geo in self.geometries:
            geo.validate(self.room)

    def to_dict(self):
        return {
            "room": self.room.to_dict(),
            "geometries": [geo.to_dict() for geo in self.geometries],
            "anechoic": self.anechoic,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(RoomSpec.from_dict(data["room"]),
                   tuple(Geometry.from_dict(g) for g in data["geometries"]),
                   bool(data.get("anechoic", False)))


def _random_direction(rng):
    vector = rng.standard_normal(3)
    norm = np.linalg.norm(vector)
    while norm < 1e-12:
        vector = rng.standard_normal(3)
        norm = np.linalg.norm(vector)
    return vector / norm


def sample_scene(rng, n_sources=2, max_retries=100):
    """Draw a room and place a microphone plus n_sources sources in it"""
    if n_sources < 1:
        raise InvalidArgumentError(f"need at least one source, got {n_sources}")

    dims = np.array([rng.uniform(*WIDTH_RANGE), rng.uniform(*WIDTH_RANGE), rng.uniform(*HEIGHT_RANGE)])
    rt60 = rng.uniform(*RT60_RANGE)
    room = RoomSpec(tuple(dims), rt60)

    low = np.full(3, WALL_MARGIN)
    high = dims - WALL_MARGIN
    mic = rng.uniform(low, high)

    geometries = []
    for index in range(n_sources):
        for _ in range(max_retries):
            distance = rng.uniform(*DISTANCE_RANGE)
            source = mic + distance * _random_direction(rng)
            if np.all(source >= low) and np.all(source <= high):
                geometries.append(Geometry(tuple(source), tuple(mic)))
                break
        else:
            raise SceneSamplingError(
                f"could not place source {index} within {max_retries} tries in room {tuple(dims.round(2))}")

    logger.debug(f"Sampled room {tuple(dims.round(2))} rt60={rt60:.2f}s with {n_sources} sources")
    return room, tuple(geometries)
