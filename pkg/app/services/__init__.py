"""Computational services: offspring laws, ancestral chains, law checks and limits."""
from .offspring_service import joint_factorial_moment, sample_generation
from .ancestral_service import phi, transition_matrix, block_counting_matrix, coalescence_probability
from .genealogy_simulation import mc_transition_estimate, simulate_ancestry
from .limit_service import standard_scaling, limit_generator, kingman_rates, strong_mutation_expansion
from .xi_rates import xi_rate, complete_rates_by_consistency

__all__ = [
    'joint_factorial_moment',
    'sample_generation',
    'phi',
    'transition_matrix',
    'block_counting_matrix',
    'coalescence_probability',
    'mc_transition_estimate',
    'simulate_ancestry',
    'standard_scaling',
    'limit_generator',
    'kingman_rates',
    'strong_mutation_expansion',
    'xi_rate',
    'complete_rates_by_consistency'
]
