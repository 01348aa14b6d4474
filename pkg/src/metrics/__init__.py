# Metrics package: exact and discrete ECT distances
