//! Carleman weights, hypothesis checks, the conjugated operators and the
//! numerical evidence for the Carleman estimate and its lemmas.
//!
//! Every weighted quantity `e^{-2sη}` is evaluated as
//! `e^{-2s(η - η_ref)}` with `η_ref = min η₀` over the working domain, so
//! reported norms carry the common factor `e^{2sη_ref}`. Ratios and slopes
//! are unaffected.

mod family;
mod functional;
mod hypotheses;
mod lemmas;
mod weights;

pub use family::carleman_family;
pub use functional::{
    carleman_functional, conjugated_apply, verify_carleman, CarlemanReport, CarlemanRow,
    CarlemanTerms, ConjugatedOperators,
};
pub use hypotheses::{fibonacci_directions, verify_hypotheses, HypothesisReport};
pub use lemmas::{bump_alphas, check_lemma1, check_lemma2, check_lemma3, Lemma1Report, Lemma1Row, Lemma2Result, Lemma3Result, Alpha};
pub use weights::{build_weights, select_weight_point, working_domain, WeightFields, WeightMode, WeightPoint};
