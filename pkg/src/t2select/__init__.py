"""Power comparisons between Hotelling's T^2 test and subset T^2 tests."""

from .altparams import AlternativeSpec, IntraclassSpec, SubsetMask, enumerate_subsets, lambda_subset
from .ncf import PowerQuery, alpha_star, c_coeff, g_alpha, log_miss, power, power_value
from .oracle import OracleResult, oracle, region_scan_bivariate
from .regions import RegionReport, emit_table
from .specfun import DfPair, beta_lower_quantile, f_upper_quantile, inv_reg_inc_beta, reg_inc_beta

__version__ = "0.1.0"

__all__ = [
    "AlternativeSpec", "IntraclassSpec", "SubsetMask", "enumerate_subsets", "lambda_subset",
    "PowerQuery", "alpha_star", "c_coeff", "g_alpha", "log_miss", "power", "power_value",
    "OracleResult", "oracle", "region_scan_bivariate", "RegionReport", "emit_table",
    "DfPair", "beta_lower_quantile", "f_upper_quantile", "inv_reg_inc_beta", "reg_inc_beta",
]
