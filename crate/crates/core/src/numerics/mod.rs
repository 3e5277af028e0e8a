//! Double-precision tensor and layer toolkit with hand-written backward passes.

pub mod conv;
pub mod dense;
pub mod gradcheck;
pub mod gru;
pub mod optim;
pub mod rng;
pub mod scalar;
pub mod softmax;
pub mod tensor;

pub use conv::{
    batchnorm_backward, batchnorm_forward, conv2d_backward, conv2d_forward, maxpool2x2_backward,
    maxpool2x2_forward, BatchNormMode, BatchNormStats,
};
pub use dense::{dense_backward, dense_forward, dropout_mask, Activation, DenseCache, DenseGrads};
pub use gradcheck::{grad_check, grad_check_at, GradCheckReport};
pub use gru::{
    gru_backward_seq, gru_cell_backward, gru_cell_forward, gru_forward_seq, GruGrads, GruParams,
    GruView,
};
pub use optim::{adam_step, AdamConfig, Param, ParamStore};
pub use rng::{stream_key, SeededRng};
pub use scalar::Scalar;
pub use softmax::{log_sum_exp, nll_from_logits, softmax, softmax_in_place};
pub use tensor::{gemm_into, Tensor};
