# Zero-shot company sector classification toolkit
__version__ = "1.0.0"
__description__ = "GICS label sets, TF-IDF label enrichment, NLI zero-shot classification and evaluation"
