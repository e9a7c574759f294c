"""rptsc: recurrence-plot encoding and classification of time series.

Series are delay-embedded into phase space, pairwise state distances form a
gray-level recurrence image, and a small convolutional network (or a 1-NN
baseline) classifies the result.
"""

from .baseline import (
    DtwParams,
    dtw_distance,
    dtw_metric,
    euclidean_distance,
    one_nn_classify,
    one_nn_error,
)
from .rp_encode import (
    EmbeddingParams,
    embed,
    encode_dataset,
    encode_series,
    recurrence_matrix,
    resize,
    threshold,
    to_gray_image,
    write_png,
)
from .train import (
    RunReport,
    TrainConfig,
    default_grid,
    evaluate,
    grid_evaluate,
    grid_select,
    rank_table,
    train_model,
    write_rank_csv,
)
from .ucr_data import (
    Dataset,
    TimeSeries,
    UcrFormatError,
    load_ucr_file,
    parse_ucr_file,
    serialize_ucr,
    split_validation,
    znormalize,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DtwParams",
    "EmbeddingParams",
    "RunReport",
    "TimeSeries",
    "TrainConfig",
    "UcrFormatError",
    "default_grid",
    "dtw_distance",
    "dtw_metric",
    "embed",
    "encode_dataset",
    "encode_series",
    "euclidean_distance",
    "evaluate",
    "grid_evaluate",
    "grid_select",
    "load_ucr_file",
    "one_nn_classify",
    "one_nn_error",
    "parse_ucr_file",
    "rank_table",
    "recurrence_matrix",
    "resize",
    "serialize_ucr",
    "split_validation",
    "threshold",
    "to_gray_image",
    "train_model",
    "write_rank_csv",
    "znormalize",
    "__version__",
]
