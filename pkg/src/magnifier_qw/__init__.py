"""Szegedy quantum walk on the magnifier graph driven by a drifted random walk."""
from .graph import Arc, SitePosition, Vertex, WindowOverflowError
from .limitlaw import LimitLaw, continuous_density, ks_distance, limit_cdf, transient_wave
from .localization import ensemble_profile, project_localized, round_trip_vector
from .rw import GROVER, RWParams, SpectralParams, spectral_params
from .spectral import Band, spectral_map_check, twisted_szegedy_unitary
from .szegedy import MIXED, Distribution, InitialEnsemble, StateVector, ensemble_distribution, evolve

__all__ = [
    "Arc", "SitePosition", "Vertex", "WindowOverflowError",
    "LimitLaw", "continuous_density", "ks_distance", "limit_cdf", "transient_wave",
    "ensemble_profile", "project_localized", "round_trip_vector",
    "GROVER", "RWParams", "SpectralParams", "spectral_params",
    "Band", "spectral_map_check", "twisted_szegedy_unitary",
    "MIXED", "Distribution", "InitialEnsemble", "StateVector", "ensemble_distribution", "evolve",
]
