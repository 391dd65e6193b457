//! Reference methods the iterative feature maps are compared against: a
//! trainable quantum convolutional network, the parameter-free string-order
//! classifier for the cluster chain, classical shadows feeding a kernel SVM,
//! and a tanh network trained with the same contrastive protocol.

mod classical_net;
mod exact_qcnn;
mod qcnn;
mod shadows;
mod svm;

pub use classical_net::{
    classical_baseline_forward, evaluate_tanh_baseline, init_tanh_baseline, train_tanh_baseline,
    TanhBaseline,
};
pub use exact_qcnn::{exact_qcnn_circuit, exact_qcnn_predict};
pub use qcnn::{
    evaluate_qcnn, load_qcnn, qcnn_expectation, qcnn_forward, qcnn_param_shift_grad, qcnn_predict,
    qcnn_train, save_qcnn, QcnnModel, QcnnOutput, QcnnTrainConfig, ShotMode,
};
pub use shadows::{shadow_collect, shadow_gram, GramEstimate, MeasBasis, ShadowSet, Snapshot};
pub use svm::{kkt_violation, load_svm, save_svm, svm_train_cv, SvmModel, ALPHA_GRID};
