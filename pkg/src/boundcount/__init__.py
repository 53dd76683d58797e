"""Bound-state counting for half-line discrete Schrodinger operators -Delta + V."""

from .asymptotics import (
    CountingCurve,
    EnergyGrid,
    KneserClass,
    counting_curve,
    explicit_box_count,
    kneser_classify,
    node_growth_curve,
    slope_estimate,
    theoretical_slope,
    verify_splitting_inequalities,
)
from .potential import parse, format_spec
from .spectral import (
    CountOptions,
    CountResult,
    count_bound_states,
    dense_count_oracle,
    node_count,
    sturm_count,
    top_band_count,
    whole_line_count,
)

__version__ = "0.1.0"
