from .config import CODE_VALUES, LfqConfig
from .quantizer import (
    LookupFreeQuantizer,
    TokenGrid,
    codebook_usage,
    hard_codes,
    index_to_codes,
    indices_to_codes,
    literal_token_index,
    quantize,
    token_index,
)
from .losses import (
    binary_entropy,
    commitment_loss,
    entropy_loss,
    entropy_loss_from_probabilities,
    entropy_terms,
    entropy_weight,
    soft_code_probabilities,
)
from .factorization import defactorize_index, factorize_index, factorize_indices, factorized_head

__all__ = [
    "CODE_VALUES", "LfqConfig", "LookupFreeQuantizer", "TokenGrid",
    "quantize", "hard_codes", "token_index", "literal_token_index",
    "index_to_codes", "indices_to_codes", "codebook_usage",
    "soft_code_probabilities", "binary_entropy", "entropy_terms",
    "entropy_loss", "entropy_loss_from_probabilities", "commitment_loss", "entropy_weight",
    "factorize_index", "defactorize_index", "factorize_indices", "factorized_head",
]
