pub mod error;
pub mod linalg;
pub mod model;
pub mod secular;
pub mod symmetry;
pub mod spectra;
pub mod oracle;
pub mod pseudo;
pub mod scattering;
pub mod metric;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/eigenvalues.md")]
    mod eigenvalues {}
    #[doc = include_str!("../../../book/src/symmetries.md")]
    mod symmetries {}
    #[doc = include_str!("../../../book/src/eigencurves.md")]
    mod eigencurves {}
    #[doc = include_str!("../../../book/src/enclosure.md")]
    mod enclosure {}
    #[doc = include_str!("../../../book/src/transmission.md")]
    mod transmission {}
    #[doc = include_str!("../../../book/src/metric.md")]
    mod metric {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
