"""Tajweed recitation scoring.

Scores Quran recitations against three binary Tajweed rules (separate
stretching / Al Mad, tight noon / Ghunnah, hide / Ikhfaa) with a
log-mel spectrogram frontend and an SE-augmented EfficientNet-B0
classifier, plus training, evaluation, and an HTTP scoring service.
"""

from tajweed.rules import RULES

__version__ = "0.1.0"

__all__ = ["RULES", "__version__"]
