"""Published benchmark values the replication harness compares against.

Versioned data; keys are (n_subjects, n_periods, tau, estimator_label) for
tables 1-3 and (n_subjects, tau, label) for table 4.  Values are
(bias, rmse) pairs of the benchmark study at 1000 replications (400 for
the synthetic-population exercise).
"""

# table 1: chi-square errors, normal effects, dropout on covariates/effects
TABLE1 = {
    (200, 5, 0.50): {"qr": (0.172, 0.229), "wqr": (0.194, 0.244), "fe": (-0.076, 0.199),
                     "wfe": (-0.072, 0.190), "pqr": (0.115, 0.191), "wpqr": (0.045, 0.162)},
    (200, 25, 0.50): {"qr": (0.160, 0.184), "wqr": (0.172, 0.195), "fe": (-0.022, 0.104),
                      "wfe": (-0.022, 0.102), "pqr": (0.074, 0.118), "wpqr": (0.009, 0.097)},
    (500, 5, 0.50): {"qr": (0.178, 0.197), "wqr": (0.196, 0.213), "fe": (-0.070, 0.127),
                     "wfe": (-0.072, 0.124), "pqr": (0.124, 0.150), "wpqr": (0.049, 0.102)},
    (500, 25, 0.50): {"qr": (0.151, 0.162), "wqr": (0.167, 0.176), "fe": (-0.032, 0.071),
                      "wfe": (-0.031, 0.069), "pqr": (0.066, 0.088), "wpqr": (0.001, 0.061)},
    (200, 5, 0.75): {"qr": (0.165, 0.275), "wqr": (0.191, 0.283), "fe": (-0.363, 0.437),
                     "wfe": (-0.215, 0.322), "pqr": (0.088, 0.234), "wpqr": (0.022, 0.217)},
    (200, 25, 0.75): {"qr": (0.161, 0.217), "wqr": (0.172, 0.223), "fe": (-0.123, 0.199),
                      "wfe": (-0.055, 0.163), "pqr": (0.076, 0.165), "wpqr": (0.006, 0.148)},
    (500, 5, 0.75): {"qr": (0.183, 0.228), "wqr": (0.200, 0.241), "fe": (-0.335, 0.371),
                     "wfe": (-0.202, 0.254), "pqr": (0.098, 0.168), "wpqr": (0.031, 0.142)},
    (500, 25, 0.75): {"qr": (0.148, 0.177), "wqr": (0.165, 0.191), "fe": (-0.130, 0.165),
                      "wfe": (-0.055, 0.117), "pqr": (0.062, 0.113), "wpqr": (0.003, 0.101)},
    (200, 5, 0.90): {"qr": (0.146, 0.390), "wqr": (0.182, 0.375), "fe": (-1.243, 1.275),
                     "wfe": (-0.729, 0.796), "pqr": (0.029, 0.358), "wpqr": (0.020, 0.308)},
    (200, 25, 0.90): {"qr": (0.145, 0.275), "wqr": (0.155, 0.277), "fe": (-0.378, 0.460),
                      "wfe": (-0.126, 0.282), "pqr": (0.055, 0.240), "wpqr": (0.007, 0.235)},
    (500, 5, 0.90): {"qr": (0.183, 0.290), "wqr": (0.201, 0.296), "fe": (-1.216, 1.230),
                     "wfe": (-0.724, 0.752), "pqr": (0.063, 0.224), "wpqr": (0.040, 0.198)},
    (500, 25, 0.90): {"qr": (0.142, 0.211), "wqr": (0.159, 0.223), "fe": (-0.384, 0.419),
                      "wfe": (-0.122, 0.206), "pqr": (0.054, 0.158), "wpqr": (0.016, 0.159)},
}

# table 2: dropout on the lagged observed response
TABLE2 = {
    (200, 5, 0.50): {"qr": (0.219, 0.256), "wqr": (0.220, 0.256), "fe": (-0.056, 0.169),
                     "wfe": (-0.056, 0.172), "pqr": (0.160, 0.209), "wpqr": (0.110, 0.183)},
    (200, 25, 0.50): {"qr": (0.170, 0.187), "wqr": (0.172, 0.188), "fe": (-0.021, 0.090),
                      "wfe": (-0.022, 0.090), "pqr": (0.077, 0.110), "wpqr": (0.044, 0.095)},
    (500, 5, 0.50): {"qr": (0.219, 0.233), "wqr": (0.220, 0.234), "fe": (-0.054, 0.115),
                     "wfe": (-0.053, 0.115), "pqr": (0.160, 0.179), "wpqr": (0.111, 0.142)},
    (500, 25, 0.50): {"qr": (0.171, 0.179), "wqr": (0.173, 0.180), "fe": (-0.022, 0.060),
                      "wfe": (-0.022, 0.060), "pqr": (0.078, 0.094), "wpqr": (0.045, 0.071)},
    (200, 5, 0.75): {"qr": (0.209, 0.290), "wqr": (0.209, 0.291), "fe": (-0.315, 0.401),
                     "wfe": (-0.334, 0.416), "pqr": (0.123, 0.234), "wpqr": (0.012, 0.221)},
    (200, 25, 0.75): {"qr": (0.162, 0.203), "wqr": (0.164, 0.204), "fe": (-0.103, 0.170),
                      "wfe": (-0.109, 0.174), "pqr": (0.067, 0.142), "wpqr": (0.013, 0.130)},
    (500, 5, 0.75): {"qr": (0.210, 0.244), "wqr": (0.212, 0.245), "fe": (-0.314, 0.348),
                     "wfe": (-0.328, 0.361), "pqr": (0.128, 0.177), "wpqr": (0.026, 0.133)},
    (500, 25, 0.75): {"qr": (0.169, 0.188), "wqr": (0.170, 0.190), "fe": (-0.100, 0.135),
                      "wfe": (-0.106, 0.139), "pqr": (0.071, 0.108), "wpqr": (0.018, 0.089)},
    (200, 5, 0.90): {"qr": (0.194, 0.394), "wqr": (0.192, 0.394), "fe": (-1.196, 1.230),
                     "wfe": (-1.219, 1.252), "pqr": (0.075, 0.343), "wpqr": (-0.051, 0.342)},
    (200, 25, 0.90): {"qr": (0.168, 0.264), "wqr": (0.170, 0.264), "fe": (-0.296, 0.370),
                      "wfe": (-0.308, 0.379), "pqr": (0.069, 0.216), "wpqr": (-0.003, 0.208)},
    (500, 5, 0.90): {"qr": (0.204, 0.282), "wqr": (0.205, 0.282), "fe": (-1.183, 1.196),
                     "wfe": (-1.207, 1.220), "pqr": (0.083, 0.212), "wpqr": (-0.035, 0.198)},
    (500, 25, 0.90): {"qr": (0.161, 0.203), "wqr": (0.164, 0.205), "fe": (-0.303, 0.331),
                      "wfe": (-0.314, 0.340), "pqr": (0.064, 0.133), "wpqr": (-0.013, 0.130)},
}

# table 3: Gaussian location model (quantile slopes constant over tau)
TABLE3 = {
    (200, 5, 0.50): {"qr": (0.232, 0.239), "wqr": (0.258, 0.269), "fe": (0.001, 0.061),
                     "wfe": (-0.004, 0.071), "pqr": (0.124, 0.135), "wpqr": (0.046, 0.082)},
    (200, 25, 0.50): {"qr": (0.224, 0.226), "wqr": (0.256, 0.259), "fe": (0.000, 0.028),
                      "wfe": (0.001, 0.035), "pqr": (0.037, 0.045), "wpqr": (0.014, 0.037)},
    (500, 5, 0.50): {"qr": (0.229, 0.232), "wqr": (0.259, 0.263), "fe": (-0.001, 0.038),
                     "wfe": (-0.004, 0.047), "pqr": (0.124, 0.128), "wpqr": (0.047, 0.064)},
    (500, 25, 0.50): {"qr": (0.223, 0.224), "wqr": (0.254, 0.255), "fe": (0.000, 0.017),
                      "wfe": (0.001, 0.021), "pqr": (0.037, 0.040), "wpqr": (0.013, 0.025)},
    (200, 5, 0.75): {"qr": (0.216, 0.225), "wqr": (0.242, 0.254), "fe": (-0.063, 0.094),
                     "wfe": (-0.117, 0.140), "pqr": (0.102, 0.119), "wpqr": (-0.024, 0.077)},
    (200, 25, 0.75): {"qr": (0.210, 0.213), "wqr": (0.241, 0.245), "fe": (-0.011, 0.033),
                      "wfe": (-0.021, 0.042), "pqr": (0.029, 0.040), "wpqr": (-0.004, 0.036)},
    (500, 5, 0.75): {"qr": (0.217, 0.221), "wqr": (0.243, 0.248), "fe": (-0.064, 0.078),
                     "wfe": (-0.114, 0.125), "pqr": (0.103, 0.110), "wpqr": (-0.023, 0.052)},
    (500, 25, 0.75): {"qr": (0.211, 0.212), "wqr": (0.238, 0.240), "fe": (-0.011, 0.022),
                      "wfe": (-0.021, 0.031), "pqr": (0.029, 0.033), "wpqr": (-0.005, 0.023)},
    (200, 5, 0.90): {"qr": (0.202, 0.220), "wqr": (0.229, 0.249), "fe": (-0.292, 0.303),
                     "wfe": (-0.349, 0.359), "pqr": (0.070, 0.101), "wpqr": (-0.070, 0.111)},
    (200, 25, 0.90): {"qr": (0.203, 0.207), "wqr": (0.230, 0.234), "fe": (-0.038, 0.054),
                      "wfe": (-0.062, 0.077), "pqr": (0.019, 0.037), "wpqr": (-0.027, 0.053)},
    (500, 5, 0.90): {"qr": (0.207, 0.213), "wqr": (0.231, 0.237), "fe": (-0.292, 0.296),
                     "wfe": (-0.344, 0.348), "pqr": (0.075, 0.087), "wpqr": (-0.066, 0.083)},
    (500, 25, 0.90): {"qr": (0.201, 0.203), "wqr": (0.228, 0.230), "fe": (-0.039, 0.045),
                      "wfe": (-0.062, 0.068), "pqr": (0.018, 0.027), "wpqr": (-0.028, 0.038)},
}

# table 4: first-stage comparison under selection on unobservables, T = 2
TABLE4 = {
    (500, 0.10): {"unf": (-0.015, 0.115), "mar": (-0.164, 0.175), "mcar": (-0.107, 0.136), "ref": (-0.086, 0.127)},
    (500, 0.25): {"unf": (-0.010, 0.088), "mar": (-0.186, 0.194), "mcar": (-0.102, 0.123), "ref": (-0.081, 0.108)},
    (500, 0.50): {"unf": (-0.003, 0.069), "mar": (-0.211, 0.222), "mcar": (-0.089, 0.112), "ref": (-0.068, 0.099)},
    (500, 0.75): {"unf": (0.005, 0.064), "mar": (-0.240, 0.259), "mcar": (-0.079, 0.109), "ref": (-0.056, 0.091)},
    (500, 0.90): {"unf": (0.011, 0.072), "mar": (-0.245, 0.273), "mcar": (-0.073, 0.115), "ref": (-0.049, 0.096)},
    (2000, 0.10): {"unf": (-0.005, 0.059), "mar": (-0.162, 0.165), "mcar": (-0.094, 0.104), "ref": (-0.074, 0.090)},
    (2000, 0.25): {"unf": (-0.001, 0.046), "mar": (-0.184, 0.187), "mcar": (-0.091, 0.099), "ref": (-0.070, 0.082)},
    (2000, 0.50): {"unf": (0.002, 0.040), "mar": (-0.214, 0.217), "mcar": (-0.089, 0.097), "ref": (-0.068, 0.078)},
    (2000, 0.75): {"unf": (0.001, 0.037), "mar": (-0.246, 0.252), "mcar": (-0.084, 0.092), "ref": (-0.062, 0.073)},
    (2000, 0.90): {"unf": (0.002, 0.037), "mar": (-0.271, 0.283), "mcar": (-0.082, 0.094), "ref": (-0.060, 0.074)},
}

# average share of missing cells generated by the attrition designs
ATTRITION = {"d1b": 0.154, "d2b": 0.156}
