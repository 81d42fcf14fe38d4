"""Deterministic Voronoi grating stimuli, monocular plane inversion, 3D
scene assembly, and human-in-the-loop RSVP sessions."""

__version__ = "0.1.0"
