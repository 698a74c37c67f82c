//! The bundled model families. Each module exposes a config struct with
//! validated defaults, a `*_model` constructor producing a runnable
//! [`crate::model::ModelSpec`], and (where meaningful) an estimation-space
//! builder and closed-form reference quantities.

pub mod burgers;
pub mod heat;
pub mod lgl;
pub mod linpair;
pub mod spline;
pub mod swe;
pub mod wave;

/// Identifier and one-line description of every bundled model.
pub fn catalog() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "heat",
            "modal heat equation on (0, L) with one interior point sensor",
        ),
        (
            "wave",
            "finite-difference wave equation with a boundary flux sensor",
        ),
        (
            "burgers",
            "viscous Burgers equation with three spline-read point sensors",
        ),
        (
            "swe",
            "spectral-element shallow water over a linear beach with three depth gauges",
        ),
        (
            "linpair",
            "two-state linear system with one weakly coupled direction",
        ),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn catalog_lists_five_models_with_unique_ids() {
        let cat = super::catalog();
        assert_eq!(cat.len(), 5);
        let mut ids: Vec<&str> = cat.iter().map(|(id, _)| *id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 5);
    }
}
