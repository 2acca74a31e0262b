"""Distributed GNN inference over simulated fog clusters.

Subsystems: graph data model and synthesis (:mod:`fogserve.graph`), GNN layer
semantics (:mod:`fogserve.gnn`), latency profiling (:mod:`fogserve.profiling`),
placement planning (:mod:`fogserve.planner`), degree-aware feature compression
(:mod:`fogserve.commopt`), the serving-pipeline simulator
(:mod:`fogserve.simulator`), the adaptive scheduler (:mod:`fogserve.scheduler`)
and the command-line front end (:mod:`fogserve.cli`).
"""

__version__ = "0.1.0"
