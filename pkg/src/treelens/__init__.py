"""treelens: BHV tree-space geometry, log maps and uncertainty sets for tree collections."""

__version__ = "0.1.0"
