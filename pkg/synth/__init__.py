# Synth package
