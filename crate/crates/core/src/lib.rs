//! Concentration of citation impact: percentile shares, Gini coefficients
//! and field-normalized citation scores over bibliographic corpora.
//!
//! The guide in `book/` walks through each step; its code blocks are
//! compiled as doctests of this crate.

pub mod analysis;
pub mod corpus;
pub mod inequality;
pub mod linking;
pub mod normalize;
pub mod numeric;
pub mod pipeline;
pub mod report;
pub mod synth;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/percentile-shares.md")]
    mod percentile_shares {}
    #[doc = include_str!("../../../book/src/gini.md")]
    mod gini {}
    #[doc = include_str!("../../../book/src/windows-and-linking.md")]
    mod windows_and_linking {}
    #[doc = include_str!("../../../book/src/normalization.md")]
    mod normalization {}
    #[doc = include_str!("../../../book/src/synthetic-corpora.md")]
    mod synthetic_corpora {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
