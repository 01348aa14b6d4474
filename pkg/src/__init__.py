# Digital ECT engine
# Main package initialization
