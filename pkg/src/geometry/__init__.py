# Geometry package: spherical polygons, arrangements and height integrals
