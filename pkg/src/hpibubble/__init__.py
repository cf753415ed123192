"""Bubble diagnostics, seasonality and seasonal forecasts for monthly price-index panels."""

from .errors import (DegenerateRegression, DomainError, GapError, HpiBubbleError, InsufficientData,
                     MalformedInput, NoConvergence, NoCrossoverError, NotApplicable, RangeError,
                     SingularityError)
from .fitting import FitOptions, FitResult, fit_matched_crossover, fit_model
from .forecast import (Scheme, SeasonalForecast, SignEvaluation, SignPrediction, evaluate_signs,
                       forecast_levels, predict_signs, white_noise_sign_null)
from .models import (ModelKind, RegimeClass, classify_regime, eval_model, find_crossover)
from .phase import (DEFAULT_SEGMENTATION, GrowthPriceRegression, PeriodSegmentation,
                    ode_singularity_time, phase_points, regress_growth_on_price)
from .seasonality import (Periodogram, SeasonalDecomposition, SignTable, decompose_bilinear,
                          periodogram, sign_table)
from .series import (GrowthSeries, IndexSeries, MonthProfile, MonthStamp, PricePanel,
                     compute_growth, dump_panel, load_panel, month_profile, window)
from .synth import ScenarioSpec, generate

__version__ = "0.1.0"
