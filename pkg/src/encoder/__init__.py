from src.encoder.params import (EncoderConfig, ParamSet, init_params, load_checkpoint, param_names,
                                save_checkpoint)
from src.encoder.dual_encoder import DualEmbedding, backward, encode, encode_images, encode_single, forward
