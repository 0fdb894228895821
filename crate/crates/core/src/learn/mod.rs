//! Small dense networks and the Gaussian patch regressors built on them.

mod io;
mod mlp;
mod regressor;

pub(crate) use io::{read_header, read_params, write_header, write_params, KIND_ENCODER};
pub use io::{
    decode_regressor, encode_regressor, loss_csv, read_regressor, write_loss_csv, write_regressor, TNTM_MAGIC,
    TNTM_VERSION,
};
pub use mlp::{Activation, Arch, Optimizer, OptimizerKind, Tape};
pub use regressor::{
    analytic_gradient, grad_check, grad_check_against, nll_loss, numeric_gradient, regressor_arch, regressor_init,
    split_indices, train, ConstantBaseline, Gaussian, LossRecord, Regressor, TrainConfig, DEFAULT_HEIGHT_SCALE,
    SIGMA_FLOOR,
};
