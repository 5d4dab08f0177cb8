# Test package for token pruning
