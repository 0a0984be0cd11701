"""Confidence intervals for probability forecast scores.

Average losses, forecast comparisons, adjusted Brier scores, Winkler and
skill scores and reliability diagrams, with variance estimates that do not
assume independent forecast-outcome pairs.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    EstimatorError,
    ForecastValError,
    InputError,
)
from .losses import LossSpec, check_propriety, get_loss, linear_coeffs, score  # noqa: E402
from .panel import (  # noqa: E402
    BucketPartition,
    Panel,
    load_csv,
    partition_by_bins,
    partition_by_label,
    write_csv,
)
from .report import EvalReport  # noqa: E402
from .inference import (  # noqa: E402
    average_score,
    ci_average_loss,
    compare_forecasts,
    compare_general_predictands,
    skill_score,
    winkler_score,
)
from .buckets import adjusted_brier, beta_hat_sq, ci_adjusted_brier  # noqa: E402
from .reliability import reliability_diagram  # noqa: E402
from .kernels import BACKEND  # noqa: E402

__all__ = [
    "__version__",
    "BACKEND",
    "ForecastValError",
    "InputError",
    "EstimatorError",
    "LossSpec",
    "get_loss",
    "score",
    "linear_coeffs",
    "check_propriety",
    "Panel",
    "BucketPartition",
    "load_csv",
    "write_csv",
    "partition_by_label",
    "partition_by_bins",
    "EvalReport",
    "average_score",
    "ci_average_loss",
    "compare_forecasts",
    "compare_general_predictands",
    "skill_score",
    "winkler_score",
    "adjusted_brier",
    "beta_hat_sq",
    "ci_adjusted_brier",
    "reliability_diagram",
]
