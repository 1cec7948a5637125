"""Shared fixtures: certificates and annuli are built once per session.

Build wall times are recorded on first construction so the acceptance
suite can check runtime budgets against the true cost even when another
test already triggered the build.
"""

from __future__ import annotations

import time

import pytest

from sparsecycles.construct import certify, discover_annuli

_CERTS: dict[tuple[int, int], object] = {}
_ANNULI: dict[int, tuple] = {}
BUILD_SECONDS: dict[tuple[int, int], float] = {}


def cached_certificate(n: int, r: int):
    key = (n, r)
    if key not in _CERTS:
        t0 = time.perf_counter()
        _CERTS[key] = certify(n, r)
        BUILD_SECONDS[key] = time.perf_counter() - t0
    return _CERTS[key]


def cached_annuli(r: int):
    if r not in _ANNULI:
        _ANNULI[r] = discover_annuli(r)
    return _ANNULI[r]


@pytest.fixture(scope="session")
def certificate():
    return cached_certificate


@pytest.fixture(scope="session")
def annuli_of():
    return cached_annuli
