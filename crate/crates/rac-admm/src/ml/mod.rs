//! Specialized model fitters built on the block-descent machinery.
//!
//! Two fitters live here:
//!
//! * [`elastic_net`] — elastic-net linear regression via variable splitting:
//!   the smooth ridge part is minimized over randomly assembled coordinate
//!   blocks (dense Cholesky per block) while the non-smooth ℓ1 part is
//!   handled by a closed-form shrinkage step on the split copy.
//! * [`svm`] — kernelized soft-margin binary classification (C-parameterized
//!   support vector classification): the box-constrained dual is solved with
//!   the core multi-block solver under a deliberately loose residual
//!   protocol, then support vectors, bias, and a decision function are
//!   extracted.

pub mod elastic_net;
pub mod svm;

pub use elastic_net::{
    elastic_net_objective, fit_elastic_net, soft_threshold, update_z, ElasticNetOptions,
    ElasticNetState,
};
pub use svm::{train_csvc, SvmModel, SvmTrainOptions, SUPPORT_TOL};
