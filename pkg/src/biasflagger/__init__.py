"""Expert-in-the-loop pipeline for flagging biased sentences in medical
instructional text: label mapping, negative mining, weighted multi-task
classifiers, stratified cross-validation, and a human review service."""

__version__ = "0.1.0"
