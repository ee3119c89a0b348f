"""Privacy-preserving remote volume rendering on Paillier-encrypted data.

A trusted client encrypts a voxel grid, an untrusted server ray-casts
directly on the ciphertexts, and the client decrypts the resulting image.
"""

from .encfloat import (
    DEFAULT_BASE,
    DEFAULT_GAMMA,
    EncFloat,
    OverflowDetectedError,
    PlainFloat,
    PrecisionExhaustedError,
    decrease_exponent_to,
    decrypt_float,
    encode_encrypt,
    encode_plain,
    equalize_exponents,
    fp_add,
    fp_div_plain,
    fp_mul_plain,
)
from .encimage import EncImage, deserialize_enc_image, serialize_enc_image
from .lut import LookupTable, build_table, encode_input, evaluate
from .paillier import (
    Ciphertext,
    CiphertextError,
    PublicKey,
    SecureKey,
    count_ops,
    decrypt,
    encrypt,
    generate_keys,
    he_add,
    he_negate,
    he_scale,
    obfuscate,
)
from .render import (
    Camera,
    RenderRequest,
    TransferNode,
    generate_rays,
    render,
    render_plaintext,
)
from .volume import (
    EncVolume,
    Volume,
    deserialize_enc_volume,
    encode_density,
    encrypt_volume,
    make_synthetic_volume,
    serialize_enc_volume,
    storage_size,
)

__version__ = "0.1.0"
