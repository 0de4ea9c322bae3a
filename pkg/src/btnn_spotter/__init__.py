"""
BTNN Spotter - streaming custom keyword spotting.

A shared feature-embedding network feeds a bank of independently trained per-state
binary "tail" classifiers. Only the tails demanded by the decoder's live tokens are
evaluated each frame, and raw tail outputs are turned into calibrated confidences
before token passing over per-keyword graphs.
"""

__version__ = "0.1.0"
