"""SAT-based auditing of rule-based models."""
__version__ = "0.1.0"
