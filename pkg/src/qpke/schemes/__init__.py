from .perm import PermScheme, PermSecretKey, coset_state, sign_unitary
from .toy_gm import (BrokenScheme, GMKey, ToyGMScheme, factor, gm_ciphertext, gm_decrypt_value, is_residue,
                     smallest_y, valid_y)

__all__ = [
    "BrokenScheme",
    "GMKey",
    "PermScheme",
    "PermSecretKey",
    "ToyGMScheme",
    "coset_state",
    "factor",
    "gm_ciphertext",
    "gm_decrypt_value",
    "is_residue",
    "sign_unitary",
    "smallest_y",
    "valid_y",
]
