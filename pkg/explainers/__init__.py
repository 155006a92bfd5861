# Explainers package
