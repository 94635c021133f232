"""Loaders for the bundled micro-domains and their fork-fixture variants."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .hddl import DisturbanceSpec, parse_disturbances, parse_domain, parse_problem
from .model import Domain, Problem


@dataclass
class Suite:
    domain: Domain
    problem: Problem
    disturbances: list[DisturbanceSpec]


def data_text(name: str) -> str:
    return resources.files("hrepair.data").joinpath(name).read_text()


def load_suite(stem: str) -> Suite:
    """Load ``<stem>.hddl`` / ``<stem>.problem.hddl`` / ``<stem>.dist.hddl``."""
    domain = parse_domain(data_text(f"{stem}.hddl"), f"{stem}.hddl")
    problem = parse_problem(data_text(f"{stem}.problem.hddl"), domain, f"{stem}.problem.hddl")
    disturbances = parse_disturbances(data_text(f"{stem}.dist.hddl"), domain, f"{stem}.dist.hddl")
    return Suite(domain, problem, disturbances)


def fork_suite(methods: tuple[str, ...] = ("m1", "m2", "m3")) -> Suite:
    """The delivery-fork fixture restricted to a subset of the rival methods.

    ``m0`` (the handoff expansion used by the original tree) is always
    kept; ``methods`` selects among the deliver-level alternatives.
    """
    suite = load_suite("fork")
    keep = set(methods) | {"m0"}
    domain = suite.domain
    domain.methods = tuple(m for m in domain.methods if m.name in keep)
    return suite
