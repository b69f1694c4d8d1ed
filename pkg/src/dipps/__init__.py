"""Locally differentially private participation-bias correction.

A one-round protocol in which non-participants report a single cluster
index through the exponential mechanism; the server inverts the softmax
distortion on the class counts, derives propensity scores, and reweights
the participant sample to approximate the unbiased data distribution.
"""

from .data import (NormalizationSpec, RecordMatrix, SplitDataset, SyntheticSpec,
                   apply_normalizer, fit_normalizer, generate_synthetic,
                   load_csv, split_by_predicate)
from .ldp import (duchi_perturb, exp_mech_distribution, exp_mech_sample,
                  hybrid_perturb, hybrid_perturb_record, laplace_perturb_record,
                  piecewise_perturb, ps_sample)
from .metrics import (DiscreteDistribution, empirical, mae, mae_per_attribute,
                      naive_estimate, stat_report, wasserstein1, weighted_mean,
                      weighted_median, weighted_variance)
from .model import (ClassAssignmentModel, EmConfig, assign, assign_batch,
                    deserialize_model, fit_gmm, fit_pca, select_k_elbow,
                    serialize_model)
from .protocol import RoundTranscript, run_round, transcript_to_counts
from .server import (ClassCounts, ClusterMassEstimate, WeightedDataset,
                     cluster_propensity, direct_counts_to_distribution,
                     invert_exponential_counts, point_propensity,
                     reweight_entire, reweight_nonparticipant, tally_reports)

__version__ = "0.1.0"
