"""Sign retrieval and sign-residual coding for block-DCT image coefficients.

The package compresses the sign information of quantized DCT
coefficients: a small convolutional network predicts AC signs from
amplitudes arranged as sub-band tensors, and only the XOR residual
between true and predicted signs is entropy coded. See README.md for
the pipeline and the ``signcodec`` command-line interface.
"""

from .blockdct import (
    BASE_LUMINANCE_TABLE,
    blockwise_forward,
    blockwise_inverse,
    dct8_forward,
    dct8_inverse,
    merge,
    quant_table_from_qf,
    split,
)
from .codec import (
    Container,
    ResidualTensor,
    apply_residual,
    decode_image,
    decode_residual,
    encode_image,
    encode_residual,
    read_container,
    residual,
    write_container,
)
from .errors import (
    FormatError,
    ModelMismatchError,
    NotFittedError,
    SignCodecError,
)
from .estimator import SignRetriever
from .metrics import (
    BitsPerSign,
    HeatMap,
    RecoveryReport,
    TimingReport,
    bits_per_sign,
    per_block_heatmap,
    pooled_recovery,
    recovery_rate,
    time_retrieval,
)
from .network import (
    ConvLayer,
    Model,
    build_model,
    build_naive_model,
    build_subband_model,
    conv_forward,
    deserialize_model,
    load_weights,
    masked_bce,
    model_backward,
    model_digest,
    model_forward,
    naive_forward,
    predict_ac_probabilities,
    predict_ac_signs,
    retrieve_signs,
    save_weights,
    serialize_model,
    threshold,
)
from .pgm import read_pgm, write_pgm
from .subband import from_plane, pack, subband_slice, to_plane, unpack
from .training import AdamState, TrainConfig, adam_step, train

__version__ = "0.1.0"
