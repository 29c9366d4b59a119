"""Local-model classification pipelines.

Cluster the training data, tune and fit one classifier per cluster, route
test points to the nearest cluster's model, and benchmark the result
against global training across a repeated cross-validation harness.
"""

from .classifiers import (InvalidKernelError, KnnConfig, SvmConfig, knn_fit,
                          knn_predict, load_model, save_model, svm_fit,
                          svm_predict)
from .clustering import (ClusterModel, GapResult, GapUndefinedError,
                         assign_many, assign_nearest, gap_statistic,
                         kmeans_fit)
from .dataset import (LINK_TYPES, Instance, LinkType, ParseError,
                      VectorDataset, load_dataset, save_dataset,
                      stratified_folds, synthetic_blobs)
from .evaluation import (EvalReport, Metrics, cliffs_delta, confusion,
                         format_paper_table, macro_f1, metrics,
                         run_experiment, scott_knott)
from .locallearn import (MODES, LocalPipelineModel, GlobalPipelineModel,
                         PipelineConfig, fit_pipeline, load_pipeline,
                         predict_pipeline, save_pipeline)
from .smo import backend as smo_backend
from .smo import have_compiled, smo_solve
from .tuner import (Candidate, DeSettings, Param, ParamSpace, TuneResult,
                    de_optimize, decode, knn_param_space, svm_param_space,
                    tune_learner, tuning_split)

__version__ = "0.1.0"
