//! Oscillation seminorms, the V-map, ellipticity checks and the mean
//! value inequalities used to pass from mean oscillations to pointwise
//! oscillation.

mod ellipticity;
mod mean_value;
mod seminorms;
mod weight;

pub use ellipticity::{hammer_ratios, random_matrix_pairs, v_map, HammerStats};
pub use mean_value::{
    check_meanit, check_means, check_osc2_lemma, check_osc_lemma, dyadic_cells,
    run_mean_value_suite, DyadicCube, LemmaOutcome, MeanValueReport, MeanitCheck, MeansCheck,
    Osc2Outcome, Tally,
};
pub use seminorms::{
    best_linear, blo_seminorm, bmo_par, bochner_bmo, evaluate_witness, john_nirenberg_check,
    mean_osc, mean_osc_about, osc, zygmund_seminorm, Affine, JohnNirenberg, Scan, ScanDensity,
    ScanDomain, SeminormKind, SeminormValue, SpatialDomain, Witness, ZygmundValue, ZygmundWitness,
};
pub use weight::{Weight, WeightKind};
