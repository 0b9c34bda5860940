"""Photon-flux diagnostics of non-Markovian spontaneous emission."""

from ._nmflux import (
    EmptyRegion,
    Error,
    GridMismatch,
    InvalidBinning,
    InvalidParams,
    ModelParams,
    NoSignal,
    UnknownFigure,
    UnsupportedInitialState,
    Verdict,
    __version__,
    amplitudes,
    boundary,
    classify,
    coherent_frequency,
    estimate_flux,
    figure_datasets,
    is_nonmarkovian,
    jump_times,
    nm_measure,
    photon_flux,
    spectrum,
    splitting,
    sweep,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
