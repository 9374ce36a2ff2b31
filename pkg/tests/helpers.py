"""Shared program-construction helpers for the test suite."""

from qnetsim.bmv2.builder import ProgramBuilder
from qnetsim.bmv2.ir import REQUIRED_PIPELINES


def base_builder(target: str = "classical") -> ProgramBuilder:
    """Builder pre-loaded with the target's metadata declarations."""
    b = ProgramBuilder(target=target)
    b.declare_target_metadata()
    return b


def finish(b: ProgramBuilder):
    """Fill in any missing required pipelines (empty), a parser and a deparser, then build."""
    have = {p.name for p in b._pipelines}
    for name in REQUIRED_PIPELINES[b.target]:
        if name not in have:
            b.pipeline(name)
    if not b._parsers:
        b.parser().state("start")
    if not b._deparsers:
        b.deparser("deparser", [])
    return b.build()
