"""Trainable kernel-mixture estimation of differential entropy and MI.

The package provides:

* ``density``     -- stable mixture log-densities and the plug-in entropy,
* ``training``    -- analytic gradients, Adam, finite-difference checks and
                     fit drivers for the adaptive / fixed-center /
                     single-Gaussian / bandwidth-only estimators,
* ``conditional`` -- conditional entropy (discrete table or conditioner
                     network) and mutual information,
* ``synth``       -- seeded generators with closed-form or quadrature
                     ground truth,
* ``bounds``      -- the finite-sample confidence bound evaluator,
* ``boost``       -- discriminator-based KL lower bounds and corrected
                     entropy estimates,
* ``harness``     -- the config-driven experiment runner behind the
                     ``entrokit`` CLI.
"""

from .density import (
    Dataset,
    KernelMixtureParams,
    entropy_plugin,
    mixture_log_density,
    parzen_log_density,
    schraudolph_log_density,
    single_gauss_log_density,
)
from .training import AdamState, FitReport, TrainConfig, adam_step, fit_entropy, gradcheck, loss_and_grad
from .conditional import (
    ConditionerNet,
    DiscreteConditionerTable,
    cond_entropy_continuous,
    cond_entropy_discrete,
    cond_log_density,
    marginal_from_conditional,
    mi_estimate,
)
from .synth import (
    GaussianSpec,
    TriangleMixtureSpec,
    UniformPairSpec,
    gauss_entropy,
    oracle_entropy_triangle,
    oracle_mi_gauss,
    oracle_mi_uniform,
    rho_for_target_mi,
    sample_correlated_gauss,
    sample_gauss,
    sample_triangle_mixture,
    sample_uniform_pair,
)
from .bounds import BoundInputs, derived_constants, epsilon_bound, lemma_pointwise_bound, scan_schedule
from .boost import (
    BoostReport,
    Discriminator,
    KLBounds,
    boost_report,
    boosted_entropy,
    kl_lower_bounds,
    relaxed_joint_fit,
    sample_mixture,
    train_discriminator,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "BoostReport",
    "BoundInputs",
    "ConditionerNet",
    "Dataset",
    "DiscreteConditionerTable",
    "Discriminator",
    "FitReport",
    "GaussianSpec",
    "KLBounds",
    "KernelMixtureParams",
    "TrainConfig",
    "TriangleMixtureSpec",
    "UniformPairSpec",
    "adam_step",
    "boost_report",
    "boosted_entropy",
    "cond_entropy_continuous",
    "cond_entropy_discrete",
    "cond_log_density",
    "derived_constants",
    "entropy_plugin",
    "epsilon_bound",
    "fit_entropy",
    "gauss_entropy",
    "gradcheck",
    "kl_lower_bounds",
    "lemma_pointwise_bound",
    "loss_and_grad",
    "marginal_from_conditional",
    "mi_estimate",
    "mixture_log_density",
    "oracle_entropy_triangle",
    "oracle_mi_gauss",
    "oracle_mi_uniform",
    "parzen_log_density",
    "relaxed_joint_fit",
    "rho_for_target_mi",
    "sample_correlated_gauss",
    "sample_gauss",
    "sample_mixture",
    "sample_triangle_mixture",
    "sample_uniform_pair",
    "scan_schedule",
    "schraudolph_log_density",
    "single_gauss_log_density",
    "train_discriminator",
]
