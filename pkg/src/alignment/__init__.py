# Alignment package: SO(3) search over Euler angles
