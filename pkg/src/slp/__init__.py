"""Weak-supervision relation extraction workbench.

Pipeline: distantly supervised alignment -> shortest-dependency-path
features -> confidence-ranked pattern annotation -> semantic label
propagation -> per-relation logistic-regression extractors.
"""

__version__ = "0.1.0"
