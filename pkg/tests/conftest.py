"""Pytest configuration and fixtures for gietlab tests."""

from __future__ import annotations

from typing import TYPE_CHECKING, Callable

import pytest

if TYPE_CHECKING:
    from gietlab import Giet, RauzyLoop
    from gietlab.shadowing import ShadowingSystem


GOLDEN = ((2, 1), "bt")
HYPERELLIPTIC4 = ((4, 3, 2, 1), "ttbtbbtb")

# Bump coefficients used for perturbed GIETs: small enough to stay monotone.
BUMP_COEFFICIENTS = ((1e-3, -5e-4), (-8e-4, 3e-4), (6e-4, 6e-4), (-4e-4, -7e-4))


@pytest.fixture(scope="session")
def golden_loop() -> "RauzyLoop":
    """The rotation loop on (21) fixing the golden IET."""
    from gietlab import Permutation, RauzyLoop

    return RauzyLoop.from_code(Permutation(GOLDEN[0]), GOLDEN[1])


@pytest.fixture(scope="session")
def d4_loop() -> "RauzyLoop":
    """An admissible genus-2 loop on (4321)."""
    from gietlab import Permutation, RauzyLoop

    return RauzyLoop.from_code(Permutation(HYPERELLIPTIC4[0]), HYPERELLIPTIC4[1])


@pytest.fixture(scope="session")
def golden_T0(golden_loop: "RauzyLoop") -> "Giet":
    """The golden IET."""
    from gietlab import fixed_aiet

    return fixed_aiet(golden_loop)


@pytest.fixture(scope="session")
def d4_T0(d4_loop: "RauzyLoop") -> "Giet":
    """The fixed IET of the d=4 loop."""
    from gietlab import fixed_aiet

    return fixed_aiet(d4_loop)


def perturbed(T0: "Giet", scale: float = 1.0) -> "Giet":
    """T0 with small ∫η = 0 bumps on every branch."""
    from gietlab import Giet, bump

    profiles = tuple(
        bump([scale * c for c in BUMP_COEFFICIENTS[i]], grid=T0.profiles[0].size)
        for i in range(T0.d)
    )
    return Giet(T0.affine, profiles)


@pytest.fixture(scope="session")
def make_bumped() -> Callable[..., "Giet"]:
    """Factory for T0 with scaled bump profiles."""
    return perturbed


@pytest.fixture(scope="session")
def golden_bumped(golden_T0: "Giet") -> "Giet":
    """Golden affine part with bump profiles."""
    return perturbed(golden_T0)


@pytest.fixture(scope="session")
def d4_bumped(d4_T0: "Giet") -> "Giet":
    """d=4 affine part with bump profiles."""
    return perturbed(d4_T0)


@pytest.fixture(scope="session")
def golden_system(golden_loop: "RauzyLoop") -> "ShadowingSystem":
    """Jacobian and splitting of the golden loop, built once per session."""
    from gietlab.shadowing import build_system

    return build_system(golden_loop)


@pytest.fixture(scope="session")
def d4_system(d4_loop: "RauzyLoop") -> "ShadowingSystem":
    """Jacobian and splitting of the d=4 loop, built once per session."""
    from gietlab.shadowing import build_system

    return build_system(d4_loop)
