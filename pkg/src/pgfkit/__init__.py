"""Exact experiments on free products of twist groups acting on the curve
graph of a complexity-one surface."""

__version__ = "0.1.0"
