"""Classification, construction and numerical verification of non-CSC HCMU
metrics with one or two conical/cusp singularities on the 2-sphere."""

__version__ = "0.1.0"
