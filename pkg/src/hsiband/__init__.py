"""Band selection for hyperspectral images by mutual information and the Fano bound."""

__version__ = "0.1.0"

from .hypercube import (BandImage, GroundTruth, HyperCube, estimate_gt_by_average, load_cube,
                        load_ground_truth, write_cube, write_ground_truth)
from .infotheory import (FanoBounds, InformationMeasures, JointHistogram, MICurve, Quantizer,
                         conditional_entropy, information_measures,
                         entropy, fano_bounds, joint_histogram, mi_curve, mutual_information,
                         quantize)
from .synthetic import SyntheticSpec, make_synthetic_cube, parse_synthetic_spec
from .classify import (ClassifierConfig, PixelDataset, SplitSpec, build_estimated_map,
                       load_model, pixel_dataset, predict, save_model, split, train)
from .selection import (FilterParams, SelectionResult, WrapperParams, select_fano,
                        select_filter, threshold_sweep)
from .evaluation import ConfusionMatrix, classify_bands, evaluate, render_map, table_report
