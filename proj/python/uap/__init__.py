"""Universal adversarial perturbations against small MLP classifiers.

Arrays cross the boundary as float32 numpy arrays; norm orders are given
as 2, "2", float("inf") or "inf".
"""

from ._core import (
    Dataset,
    DeepFoolResult,
    FoolingReport,
    FormatError,
    LabelGraph,
    Model,
    Perturbation,
    TrainResult,
    UapResult,
    __version__,
    build_label_graph,
    complement_indices,
    compute_uap,
    deepfool,
    dominant_labels,
    fooling_rate,
    forward,
    generate_blobs,
    input_gradient,
    load_dataset,
    load_model,
    load_perturbation,
    median_norm,
    norm_sweep,
    predict,
    project_lp_ball,
    random_perturbation,
    sample_attack_indices,
    save_dataset,
    save_model,
    save_perturbation,
    scale_to_norm,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
