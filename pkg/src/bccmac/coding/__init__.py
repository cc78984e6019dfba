"""Random-coding constructions and the Monte Carlo error estimator."""
