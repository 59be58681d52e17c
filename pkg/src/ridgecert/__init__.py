"""Certified ridge dimension reduction with alpha-divergences and phi-Sobolev inequalities."""
from .bounds import BoundFamily, Certificate, certify, j_basic, j_datafree, j_improved
from .diagnostic import FeatureSubspace, GradientBatch, Spectrum, eigh, estimate_h, select_features, tail_sum
from .measures import ReferenceMeasure, SobolevBudget, TargetModel

__version__ = "0.1.0"
