"""Interactive spelling normalization for low-resource languages.

The package combines a persistent knowledge base with two incremental
prediction models (a character-trigram language model and a small LSTM
classifier trained on synthetically corrupted confusion sets), plus the
corpus tooling, evaluation harness, HTTP service and CLI around them.
"""

from spellnorm.labels import Label
from spellnorm.textcore import damerau_levenshtein, levenshtein, tokenize

__version__ = "0.1.0"

__all__ = ["Label", "tokenize", "levenshtein", "damerau_levenshtein", "__version__"]
