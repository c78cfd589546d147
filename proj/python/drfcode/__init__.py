"""LSTM feedback channel codes with SNR-aware attention decoding.

C++ core exposed through pybind11: channel simulation, LMMSE channel
estimation, encoder/decoder models, training and Monte-Carlo evaluation.
"""

from ._core import (  # noqa: F401
    Model,
    __version__,
    block_length,
    correlated_noise,
    gradcheck,
    lmmse_fast,
    lmmse_slow,
    qfunc,
    rayleigh_prior,
    rayleigh_samples,
    receiver_compensate,
    snr_db_to_variance,
    spectral_efficiency,
    uncoded_baseline_ber,
    variance_to_snr_db,
)
