# Mesh package: simplicial complexes, OFF loading and direction sets
