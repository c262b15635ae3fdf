"""Hypothesis strategies and seeded samplers shared by the property tests."""

from __future__ import annotations

import random

from hypothesis import strategies as st

from scenesmith.layout import DEFAULT_MIN_AREA, LayoutSpec

ROOMS = ("living_room", "kitchen", "bedroom")


def spec_from_choices(floors: int, rooms: tuple[str, ...], width: float, slack: float) -> LayoutSpec:
    """A spec whose footprint leaves room for the requested rooms on every floor."""
    probe = LayoutSpec(rooms, floors=floors)
    per_floor = max(sum(DEFAULT_MIN_AREA[t] for t in probe.rooms_for_floor(f)) for f in range(floors))
    depth = max(4.0, min(16.0, round(per_floor * 2.2 / width * 2) / 2 + slack))
    return LayoutSpec(rooms, floors=floors, footprint=(width, depth))


@st.composite
def layout_specs(draw) -> LayoutSpec:
    floors = draw(st.sampled_from([1, 1, 1, 2, 2, 3]))
    k = draw(st.integers(floors, min(6, floors * 3)))
    rooms = tuple(draw(st.sampled_from(ROOMS)) for _ in range(k))
    width = draw(st.sampled_from([x * 0.5 for x in range(8, 33)]))
    slack = draw(st.sampled_from([0.0, 0.0, 0.5, 1.0, 2.0]))
    return spec_from_choices(floors, rooms, width, slack)


def random_layout_spec(rnd: random.Random) -> LayoutSpec:
    floors = rnd.choice([1, 1, 1, 2, 2, 3])
    k = rnd.randint(floors, min(6, floors * 3))
    rooms = tuple(rnd.choice(ROOMS) for _ in range(k))
    width = rnd.choice([x * 0.5 for x in range(8, 33)])
    return spec_from_choices(floors, rooms, width, rnd.choice([0.0, 0.0, 0.5, 1.0, 2.0]))
