# -*- coding: utf-8 -*-

"""
gyrocal package
~~~~~~~~~~~~~~~

gyrocal is a toolkit for calibrating low-cost gyroscopes. Basic usage:

   >>> import gyrocal
   >>> params = gyrocal.ErrorModelParams.create(bias=(0.01, -0.02, 0.005))
   >>> record = gyrocal.synthesize_stationary(params, duration=60.0, fs=200.0, seed=1)
   >>> gyrocal.baseline_bias(record.windows())

The simulator, Allan variance analysis, least-squares calibration, dataset
pipeline and the convolutional bias estimator are in their own modules - see
`gyrocal.noise_sim`, `gyrocal.allan`, `gyrocal.calib`, `gyrocal.dataset` and
`gyrocal.estimator`.

:license: MIT, see LICENSE for more details.
"""

import logging

from gyrocal.error_model import (  # noqa: F401
    DistortionMatrix,
    ErrorModelParams,
    apply_error_model,
    bias_residual,
    compose_distortion,
)
from gyrocal.noise_sim import (  # noqa: F401
    DisturbanceSpec,
    NoiseCoefficients,
    gen_noise,
    synthesize_constant_rate,
    synthesize_stationary,
)
from gyrocal.records import SignalRecord  # noqa: F401
from gyrocal.estimator import baseline_bias, running_mean_curve  # noqa: F401

from .__version__ import __title__, __description__, __version__  # noqa: F401
from .__version__ import __author__, __author_email__  # noqa: F401

logging.getLogger(__name__).addHandler(logging.NullHandler())
