//! Doubly selective channel realizations and their time-domain,
//! DAFT-domain and effective MIMO representations.

mod daft_domain;
mod mimo;
mod paths;

pub use daft_domain::{
    apply_td_path, closed_form_entry, daft_channel_operator, daft_channel_operator_with,
    daft_channel_sparse, dirichlet, td_channel_matrix, td_row_values, SparseRows,
};
pub use mimo::{
    add_noise, add_noise_vec, path_operators, shuffle, shuffle_index, unshuffle,
    EffectiveChannel, NoiseModel,
};
pub use paths::{corrupt_csi, generate_paths, PathProfile, PathSet};
