"""Multicriteria land-use planning toolkit.

Stages: land suitability matching, rapid-appraisal sustainability ordination,
AHP weighting, weighted raster overlay and natural-breaks prioritization.
"""

__version__ = "0.1.0"
