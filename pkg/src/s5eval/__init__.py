"""Class-aware permutation-invariant evaluation of labeled source separation.

The main entry points are :func:`ca_pi_sdri` for scoring one mixture,
:func:`evaluate_manifest` for batches, and the three SDR losses in
:mod:`s5eval.losses`.
"""

__version__ = "0.1.0"

from .assignment import (Assignment, enumerate_class_permutations, enumerate_selections,
                         solve_max_assignment, solve_max_assignment_bruteforce)
from .core import NumericGuards, Waveform, energy, sdr, sdri
from .errors import *  # noqa: F401,F403
from .grouping import ClassGroup, LabeledSources, count_predictions, group_by_label
from .losses import LossResult, ca_pi_sdr_loss, ca_sdr_loss, pi_sdr_loss
from .metrics import (ClassComponent, MetricConfig, MixtureEvaluation, ca_pi_sdri,
                      ca_sdri_baseline, class_component, pi_sdri)
from .synth import Scene, SceneSpec, generate_scene, make_estimate_with_sdr
