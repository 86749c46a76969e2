"""Wiener-Wintner averages, recurrence bounds and Gowers-Host-Kra seminorms on concrete systems."""

__version__ = "0.1.0"

from .errors import BudgetError, ConfigError, NoClosedFormError, ThresholdError, WindowError
from .fit import DecayFit, fit_decay
from .observables import (
    CenteredCoordinate,
    Const,
    PinskerFn,
    Tensor,
    TorusCharacter,
    cube_product,
    exact_integral,
)
from .recurrence import (
    CheckReport,
    RecurrenceQuery,
    bourgain_check,
    bourgain_constant,
    classical_inequality_check,
    recurrence_avg_at_point,
    recurrence_norm,
    return_times_norm,
    rt_chain_check,
)
from .sampling import SamplePlan, derive_seed, sample_batch, sample_points
from .seminorms import SeminormQuery, equivalence_probe, ghk_seminorm, inner_corr, seminorm_estimate
from .systems import Bernoulli, Product, Rotation, Skew, SymbolWord, TorusPoint, faulhaber_poly, iterate
from .trig import SupEstimate, WeightedSeq, sup_modulus, vdc_bound
from .ww import WWQuery, WWResult, uww_pointwise, ww_average

import types as _types

__all__ = sorted(k for k, v in globals().items() if not k.startswith("_") and not isinstance(v, _types.ModuleType))
