"""Binary optimizers: CHC and binary PSO."""
