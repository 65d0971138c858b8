"""Region enumeration, area estimation, alias grouping and 90-10 partitioning."""

from .alias import AliasRelation, compute_alias_sets, regions_alias
from .area import DEFAULT_TABLE, GateTable, estimate_area, estimate_ops
from .partitioner import HOT_FRACTION, PartitionResult, partition
from .platform import PlatformModel, load_platform, parse_platform
from .regions import TOP, TOP_RANGE, AddrRange, Region, enumerate_regions, footprint, hardware_suitability

__all__ = [
    "AliasRelation", "compute_alias_sets", "regions_alias",
    "DEFAULT_TABLE", "GateTable", "estimate_area", "estimate_ops",
    "HOT_FRACTION", "PartitionResult", "partition",
    "PlatformModel", "load_platform", "parse_platform",
    "TOP", "TOP_RANGE", "AddrRange", "Region", "enumerate_regions", "footprint", "hardware_suitability",
]
