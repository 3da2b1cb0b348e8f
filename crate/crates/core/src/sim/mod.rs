//! Monte-Carlo harness: configuration, the transmit/receive chain, BER,
//! bound, capacity and complexity sweeps, CSV and SVG output.

mod config;
mod frame;
mod output;
mod sweep;

pub use config::{parse_snr_list, SimConfig, SPEED_OF_LIGHT};
pub use frame::{FrameSample, Link};
pub use output::{analysis_rows, ber_rows, read_csv, svg_plot, write_csv, CsvHeader, CsvRow};
pub use sweep::{
    frame_rng, link_from_config, run_ber_sweep, run_bound_sweep, run_capacity_sweep,
    run_complexity, AnalysisPoint, BerCurve, BerPoint,
};
