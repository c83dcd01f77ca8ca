"""cardioseg: spatially consistent short-axis cardiac MRI segmentation."""

__version__ = "0.1.0"
