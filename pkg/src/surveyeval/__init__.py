"""surveyeval: similarity-weighted evaluation of machine-generated surveys.

The pipeline decomposes survey documents into outline, content, and
reference facets, scores each facet with quantitative metrics and
judge rubrics, and fuses the scores with embedding-similarity factors
computed against a paired human-authored survey. Results come in three
configurations: vanilla (unfused), balanced (anchored to measured human
quality), and human-as-perfect (anchored to the scale maximum).
"""

__version__ = "0.1.0"
