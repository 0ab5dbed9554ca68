//! Verification (FMR/FNMR, EER, DET) and closed-set identification (CMC)
//! metrics over comparison scores.

mod identification;
mod verification;

pub use identification::{closed_set_identification, IdentificationReport};
pub use verification::{
    det_curve, eer, fmr_fnmr, fnmr_at_fmr, verification_report, DetPoint, EerPoint, FnmrAtFmr, SortedScores,
    VerificationReport, DET_MAX_FMR,
};
