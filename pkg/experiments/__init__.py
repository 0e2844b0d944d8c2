from experiments import (
    approx_copula,
    bl_distance_experiment,
    brownian_check,
    gamma_mu_experiment,
    posterior_experiment,
    predictive_experiment,
    sample_data,
    sample_prior,
)
from experiments.experiment_registry import register_experiment

# Register all experiments
register_experiment("sample-prior", sample_prior.run, sample_prior.add_arguments,
                    "Draw random densities and check their marginals")
register_experiment("sample-data", sample_data.run, sample_data.add_arguments,
                    "Simulate exchangeable observations from a prior draw")
register_experiment("posterior", posterior_experiment.run, posterior_experiment.add_arguments,
                    "Exact and importance-sampling posteriors")
register_experiment("predictive", predictive_experiment.run, predictive_experiment.add_arguments,
                    "Posterior predictive rectangle probabilities")
register_experiment("approx-copula", approx_copula.run, approx_copula.add_arguments,
                    "Checkerboard approximation of a coupling and the 2√2/k bound")
register_experiment("bl-distance", bl_distance_experiment.run, bl_distance_experiment.add_arguments,
                    "Bounded-Lipschitz distance between two grid measures")
register_experiment("brownian-check", brownian_check.run, brownian_check.add_arguments,
                    "Rectangle identity of Brownian random densities")
register_experiment("gamma-mu", gamma_mu_experiment.run, gamma_mu_experiment.add_arguments,
                    "Priors on Γ(μ): predictive, finite-dimensional laws, composed cdf laws")
