"""radtext: a desk-scale radical-text detection pipeline.

Ingest and clean text records, manage dual-annotator labels with Cohen's
kappa agreement, train word embeddings and an LSTM threshold classifier,
compare against MaxEnt / SVM / random-forest baselines, and emit trend
and error reports.
"""

__version__ = "0.1.0"
