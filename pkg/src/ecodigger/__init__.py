"""Mining engine for GitHub event archives.

Turns GHArchive-style hourly event logs into developer activity scores,
project influence rankings (bipartite projection + weighted PageRank),
community health metrics, and label-scoped, time-windowed queries.
"""

__version__ = "0.1.0"
