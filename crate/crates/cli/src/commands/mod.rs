pub mod fit_circular;
pub mod fit_stochcorr;
pub mod simulate;
pub mod validate;
