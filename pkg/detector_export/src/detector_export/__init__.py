"""Adapter between instance-segmentation detectors and the stereo pipeline.

Produces per-frame mask-exchange manifests (JSON + one 8-bit PNG per
instance) either by running a segmentation model on images or by
rasterizing polygon annotation files. The output is consumed by the
``branchdepth`` CLI unmodified.
"""

from .export import ExportSummary, export_masks
from .polygons import load_polygon_annotation, rasterize_polygon

__version__ = "0.1.0"

__all__ = ["ExportSummary", "export_masks", "load_polygon_annotation", "rasterize_polygon"]
