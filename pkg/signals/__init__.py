# Signals package
