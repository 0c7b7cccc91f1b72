"""One-shot and asymptotic relative entropies of quantum channels, channel
entropies, and coherence and entanglement measures of channels."""
from .channels import (ChannelValidationError, KrausChannel, ParseError, Superchannel, compose,
                       depolarizing, identity, load_channel, randomize_zero, tensor, validate)
from .divergence import (DivergenceKind, DivergenceResult, channel_divergence, channel_entropy,
                         divergence_to_depolarizing, ordering_check)
from .optimizer import OptimizerConfig
from .properties import PropertyVerdict, run_table1
from .resource import (FreeSetKind, coherence_measure, entanglement_lower_bound,
                       entanglement_upper_bound, is_free)

__all__ = [
    "ChannelValidationError", "KrausChannel", "ParseError", "Superchannel", "compose", "depolarizing",
    "identity", "load_channel", "randomize_zero", "tensor", "validate",
    "DivergenceKind", "DivergenceResult", "channel_divergence", "channel_entropy",
    "divergence_to_depolarizing", "ordering_check", "OptimizerConfig", "PropertyVerdict", "run_table1",
    "FreeSetKind", "coherence_measure", "entanglement_lower_bound", "entanglement_upper_bound", "is_free",
]
