# Utils package for the digital ECT engine
