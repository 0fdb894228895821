//! Traversability values, label maps, the map encoder, and raster outputs.

mod channels;
mod encoder;
mod io;
mod map;

pub use channels::{
    combine, patch_channels, ChannelVector, CombineWeights, CHANNELS, CHANNEL_NAMES, MEAN_CHANNELS, SIGMA_CHANNELS,
};
pub use encoder::{infer_map, train_encoder, EncoderConfig, EncoderLoss, MapEncoder};
pub use io::{
    colormap, decode_encoder, decode_tmap, encode_encoder, encode_tmap, pgm_bytes, ppm_bytes, read_encoder, read_tmap,
    write_encoder, write_tmap, TMAP_MAGIC, TMAP_VERSION,
};
pub use map::{
    build_label_map, build_label_map_strided, cell_channels, downsample, valid_mask, CostGrid, TraversabilityMap,
    DEFAULT_LABEL_STRIDE,
};
