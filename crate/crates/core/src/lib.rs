pub mod benchmarking;
pub mod calibration;
pub mod drive;
pub mod error;
pub mod noise;
pub mod quantum;
pub mod rng;
pub mod synthesis;

pub use error::{Error, Result};

// Compiles the guide's code blocks as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/conventions.md")]
    pub mod conventions {}
    #[doc = include_str!("../../../book/src/drive.md")]
    pub mod drive {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    pub mod calibration {}
    #[doc = include_str!("../../../book/src/noise.md")]
    pub mod noise {}
    #[doc = include_str!("../../../book/src/benchmarking.md")]
    pub mod benchmarking {}
    #[doc = include_str!("../../../book/src/synthesis.md")]
    pub mod synthesis {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
