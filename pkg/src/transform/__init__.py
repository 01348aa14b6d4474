# Transform package: exact proto-transforms in 2D and 3D
