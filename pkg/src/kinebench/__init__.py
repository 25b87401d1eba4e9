"""Benchmark video-based 3D pose estimates against IMU joint angles."""

__version__ = "0.1.0"
