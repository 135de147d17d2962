"""Prompt-augmented generation pipeline for EARS requirement rewriting.

Subsystems: dataset handling, TF-IDF features, a random-forest
classifier, the auxiliary/composer prompt stages, a text-generation
client, ROUGE metrics, and the experiment harness tying them together.
"""

__version__ = "0.1.0"
