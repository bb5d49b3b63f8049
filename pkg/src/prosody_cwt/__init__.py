"""Unsupervised word prominence and prosodic boundary annotation.

The prosodic signal (gap-filled f0, energy and a continuous word-duration
signal) is analysed with a Mexican hat continuous wavelet transform;
local extrema are linked across scales into lines whose strengths rate
each word.
"""

__version__ = "0.1.0"

from .annotate import analyse, annotate_words, binarize_kmeans, binarize_threshold, raw_baseline
from .config import Config, load_config
from .cwt import ScaleGrid, Scalogram, mexican_hat, reconstruct, transform
from .evaluate import CorpusReport, majority_baseline, metrics, run_corpus
from .loma import LomaLine, maxima_lines, minima_lines
from .signal import FrameSeries, Utterance, VoicingMask, WordAlignment, combine, normalize

__all__ = [
    "Config", "CorpusReport", "FrameSeries", "LomaLine", "ScaleGrid", "Scalogram",
    "Utterance", "VoicingMask", "WordAlignment", "analyse", "annotate_words",
    "binarize_kmeans", "binarize_threshold", "combine", "load_config",
    "majority_baseline", "maxima_lines", "mexican_hat", "metrics", "minima_lines",
    "normalize", "raw_baseline", "reconstruct", "run_corpus", "transform",
]
