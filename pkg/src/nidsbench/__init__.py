"""Anomaly-based intrusion detection benchmark on NSL-KDD.

Ingestion, PCA-loading feature selection, twelve from-scratch binary
classifiers, and the evaluation protocol (accuracy, FAR, precision, recall,
F1, ROC/AUC, timing and McNemar's paired z-test).
"""

__version__ = "0.1.0"
