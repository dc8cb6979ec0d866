"""Object-centric correspondence fields for hand-object interaction
refinement: field extraction, denoising, hand fitting, noise synthesis and
interaction metrics."""

__version__ = "0.1.0"
