"""Unsupervised multi-modal auto labeling for LiDAR point cloud sequences.

The heavy lifting lives in the compiled extension; this package re-exports
its surface.
"""

from al3d._core import (  # noqa: F401
    Box7,
    LabelRecord,
    PcaModel,
    assign_point_categories,
    autolabel,
    average_precision,
    background_mask,
    box_corners,
    cosine_distance,
    cosine_similarity,
    estimate_scene_flow,
    evaluate,
    fit_ground,
    fit_tightest_box,
    generate_preset,
    iou_3d,
    iou_bev,
    load_labels,
    mean_ap,
    nms,
    normalize_heading,
    pca_fit,
    points_in_box,
    query,
    scene_preset_names,
    st_cluster,
    transform_points,
)

__all__ = [
    "Box7",
    "LabelRecord",
    "PcaModel",
    "assign_point_categories",
    "autolabel",
    "average_precision",
    "background_mask",
    "box_corners",
    "cosine_distance",
    "cosine_similarity",
    "estimate_scene_flow",
    "evaluate",
    "fit_ground",
    "fit_tightest_box",
    "generate_preset",
    "iou_3d",
    "iou_bev",
    "load_labels",
    "mean_ap",
    "nms",
    "normalize_heading",
    "pca_fit",
    "points_in_box",
    "query",
    "scene_preset_names",
    "st_cluster",
    "transform_points",
]

__version__ = "0.1.0"
