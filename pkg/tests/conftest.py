"""Shared fixtures: synthetic worlds generated once per session."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import pytest

from rim.interchange import Manifest, load_manifest
from rim.synth import (
    WorldSpec,
    confusable_pair_world,
    generate_world,
    multi_modal_world,
)


@dataclass(frozen=True)
class World:
    spec: WorldSpec
    root: Path
    manifest_path: Path

    @property
    def manifest(self) -> Manifest:
        return load_manifest(self.manifest_path)


def _materialize(spec: WorldSpec, root: Path) -> World:
    manifest_path = generate_world(spec, root)
    return World(spec, root, manifest_path)


@pytest.fixture(scope="session")
def zero_noise_world(tmp_path_factory) -> World:
    """Default spec: orthogonal class means, tight modes, no noise.
    Every classifier config must solve it perfectly."""
    return _materialize(WorldSpec(), tmp_path_factory.mktemp("world_zero"))


@pytest.fixture(scope="session")
def confusable_world(tmp_path_factory) -> World:
    return _materialize(
        confusable_pair_world(), tmp_path_factory.mktemp("world_confusable")
    )


@pytest.fixture(scope="session")
def multimodal_world(tmp_path_factory) -> World:
    return _materialize(
        multi_modal_world(), tmp_path_factory.mktemp("world_multimodal")
    )


TINY_SPEC = WorldSpec(
    class_count=3,
    feature_dim=16,
    images_per_class=4,
    subcluster_count=2,
    subcluster_spread=0.1,
    canvas=(16, 16),
    regions_per_image=4,
    test_image_count=2,
    seed=7,
)


@pytest.fixture(scope="session")
def tiny_world(tmp_path_factory) -> World:
    """Small, fast world for CLI and plumbing tests."""
    return _materialize(TINY_SPEC, tmp_path_factory.mktemp("world_tiny"))
