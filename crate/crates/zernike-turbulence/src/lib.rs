pub mod coupling;
pub mod error;
pub mod modes;
pub mod oracle;
pub mod specfun;
pub mod turbulence;

pub use error::{Error, Result};

// The guide's code blocks run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/modes.md")]
    mod modes {}
    #[doc = include_str!("../../../book/src/coupling.md")]
    mod coupling {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/turbulence.md")]
    mod turbulence {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
