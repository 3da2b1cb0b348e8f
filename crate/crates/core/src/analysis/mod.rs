//! Pairwise error probabilities, the union bound on BER, diversity order and
//! coding gain, and the DCMC capacity.

mod capacity;
mod pep;

pub use capacity::{dcmc_capacity, frame_codewords, CapacityResult, EXACT_CAPACITY_BITS};
pub use pep::{
    build_xi, diversity_and_coding_gain, event_eigenvalues, geometry_states,
    group_difference_table, integer_doppler_pmf, stacked_gains, union_bound_exact,
    union_bound_sampled, upep, upep_high_snr, BoundResult, DiversityResult, GeometryState,
    UpepQuadrature, EXACT_BOUND_BITS, RANK_TOL,
};

#[cfg(test)]
mod tests;
