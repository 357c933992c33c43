pub mod augment;
pub mod data;
pub mod drift;
pub mod engine;
pub mod error;
pub mod eval;
pub mod io;
pub mod learners;
pub mod rng;
pub mod search_space;
pub mod synthetic;

pub use error::{Error, Result};
pub mod pseudo_label;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/loop.md")]
    mod adaptation_loop {}
    #[doc = include_str!("../../../book/src/augmentation.md")]
    mod augmentation {}
    #[doc = include_str!("../../../book/src/drift.md")]
    mod drift {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
}
