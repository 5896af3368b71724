from .kernels import KernelParams, NumericalError, jittered_cholesky, kernel_matrix, median_lengthscales
from .likelihoods import LIKELIHOODS, pair_likelihood
from .model import GpplModel, SviConfig, UtilityPosterior, elbo, elbo_grad_mean, fit_svi, predict, select_inducing

__all__ = [
    "KernelParams", "NumericalError", "jittered_cholesky", "kernel_matrix", "median_lengthscales",
    "LIKELIHOODS", "pair_likelihood",
    "GpplModel", "SviConfig", "UtilityPosterior", "elbo", "elbo_grad_mean", "fit_svi", "predict",
    "select_inducing",
]
