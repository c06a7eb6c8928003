"""Theorem-level experiments built on the core modules."""
from .correlation import CorrelationReport, correlation_decay_check, correlation_scan
from .flux import flux_flow_experiment, flux_insertion
from .goldstone import goldstone_check
from .lsm import lsm_size_scan, lsm_twist_state
from .stability import stability_bound_check
from .topo import (TopoOrderReport, pauli_family, string_operator_signature,
                   topo_order_metric, topo_order_under_evolution)

__all__ = [
    "CorrelationReport", "correlation_decay_check", "correlation_scan",
    "flux_insertion", "flux_flow_experiment", "goldstone_check",
    "lsm_twist_state", "lsm_size_scan", "stability_bound_check",
    "TopoOrderReport", "pauli_family", "topo_order_metric",
    "topo_order_under_evolution", "string_operator_signature",
]
