# Decomposition package
