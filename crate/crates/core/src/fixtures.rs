//! Bundled benchmark networks.

use nalgebra::DMatrix;

use crate::power::GeneratorNetwork;

pub const IEEE9_INERTIA: [f64; 3] = [0.1254, 0.0340, 0.0160];
pub const IEEE9_DAMPING: [f64; 3] = [0.0125, 0.0068, 0.0048];
#[rustfmt::skip]
pub const IEEE9_LAPLACIAN: [f64; 9] = [
     2.1276, -0.9498, -1.1778,
    -0.9498,  2.6715, -1.7217,
    -1.1778, -1.7217,  2.8995,
];

/// The Kron-reduced 3-generator WSCC 9-bus system.
pub fn ieee9() -> GeneratorNetwork {
    let l = DMatrix::from_row_slice(3, 3, &IEEE9_LAPLACIAN);
    GeneratorNetwork::from_raw_laplacian(IEEE9_INERTIA.to_vec(), IEEE9_DAMPING.to_vec(), l)
        .expect("bundled 9-bus data is valid")
        .0
}
