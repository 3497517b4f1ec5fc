"""Noncoherent decoding over correlated time-varying fading channels.

The fading between every transmit/receive antenna pair is a linear
combination of ``Q`` independent Gaussian innovations through a known
``Q x T`` matrix ``A``.  The decoders here recover the transmitted block from
the row span of the received block without estimating the fading first.
"""

from nldof.channel import (
    CorrelationProfile,
    FadingRealization,
    TransmitBlock,
    add_noise,
    apply_channel,
    sample_fading,
)
from nldof.errors import (
    DecodeFailure,
    InvalidProfileError,
    RankDeficientError,
    SingularPivotError,
)
from nldof.subspace import (
    CanonicalSubspace,
    canonical_form,
    estimate_signal_subspace,
    subspace_distance,
)
from nldof.simo import (
    RecoveryReport,
    SideInformation,
    check_recovery_conditions_simo,
    compute_side_information,
    decode_simo,
    decode_simo_reduced,
)
from nldof.mimo import (
    MimoTrainingPlan,
    build_R,
    check_recovery_conditions_mimo,
    decode_mimo,
    nonlinear_phase,
)

__all__ = [
    "CanonicalSubspace",
    "CorrelationProfile",
    "DecodeFailure",
    "FadingRealization",
    "InvalidProfileError",
    "MimoTrainingPlan",
    "RankDeficientError",
    "RecoveryReport",
    "SideInformation",
    "SingularPivotError",
    "TransmitBlock",
    "add_noise",
    "apply_channel",
    "build_R",
    "canonical_form",
    "check_recovery_conditions_mimo",
    "check_recovery_conditions_simo",
    "compute_side_information",
    "decode_mimo",
    "decode_simo",
    "decode_simo_reduced",
    "estimate_signal_subspace",
    "nonlinear_phase",
    "sample_fading",
    "subspace_distance",
]
