//! Transition-template multi-task reinforcement learning for tabular MDPs.

pub mod baselines;
pub mod env;
pub mod fmtemple;
pub mod learners;
pub mod mdp;
pub mod otemple;
pub mod rng;
pub mod session;
pub mod template;
pub mod harness;

// The guide's snippets run as doctests of this crate.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/mdps.md")]
    mod mdps {}
    #[doc = include_str!("../../../book/src/templates.md")]
    mod templates {}
    #[doc = include_str!("../../../book/src/learners.md")]
    mod learners {}
    #[doc = include_str!("../../../book/src/finite-models.md")]
    mod finite_models {}
    #[doc = include_str!("../../../book/src/environments.md")]
    mod environments {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
