"""Change detection by Haar-wavelet fusion of difference maps and fuzzy c-means."""

from wavechange.raster_io import GrayRaster, PadRecord, load_raster, save_raster, pad_to_pow2, crop
from wavechange.diffmap import DifferenceMap, minus_map, ratio_map, weighted_average_fuse
from wavechange.wavelet import (
    BandSplit,
    WaveletPyramid,
    dwt2,
    idwt2,
    fuse_pyramids,
    dwt_fuse_maps,
    haar_forward_1d,
    haar_inverse_1d,
)
from wavechange.segment import (
    ChangeMap,
    FcmConfig,
    FcmResult,
    fcm,
    fcm_objective,
    kmeans,
    otsu_threshold,
    to_change_map,
    labels_to_change_map,
)
from wavechange.evaluate import ConfusionCounts, EvalReport, confusion, rates, kappa, report
from wavechange.synthgen import SceneSpec, Shape, generate_pair

__version__ = "0.1.0"
