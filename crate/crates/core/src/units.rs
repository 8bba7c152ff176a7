//! Squeezing units and the cluster/source squeezing relation.

use serde::{Deserialize, Serialize};

/// `20 * log10(e)`: dB per nat of squeezing.
pub const DB_PER_NAT: f64 = 8.685_889_638_065_037;

/// A squeezing magnitude carried in nats, convertible to dB.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SqueezingValue {
    nats: f64,
}

impl SqueezingValue {
    pub fn from_nats(nats: f64) -> Self {
        Self { nats }
    }

    /// dB values are magnitudes; the sign of the input is kept on the nats side.
    pub fn from_db(db: f64) -> Self {
        Self {
            nats: db / DB_PER_NAT,
        }
    }

    pub fn nats(self) -> f64 {
        self.nats
    }

    pub fn db(self) -> f64 {
        self.nats * DB_PER_NAT
    }
}

/// Output of [`cluster_from_source`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSqueezing {
    /// Two-mode source squeezing r0.
    pub source: SqueezingValue,
    /// Effective cluster squeezing |r|.
    pub cluster: SqueezingValue,
    /// Finite-squeezing noise parameter `sech(2 r0)`.
    pub epsilon: f64,
}

/// Cluster squeezing from the two-mode source squeezing: `|r| = ln(1/sech(2 r0)) / 2`.
pub fn cluster_from_source(source: SqueezingValue) -> ClusterSqueezing {
    let r0 = source.nats().abs();
    let epsilon = 1.0 / (2.0 * r0).cosh();
    ClusterSqueezing {
        source,
        cluster: SqueezingValue::from_nats(-0.5 * epsilon.ln()),
        epsilon,
    }
}

/// Inverse of [`cluster_from_source`].
pub fn source_from_cluster(cluster: SqueezingValue) -> ClusterSqueezing {
    let r = cluster.nats().abs();
    let epsilon = (-2.0 * r).exp();
    // cosh(2 r0) = 1/epsilon
    let r0 = 0.5 * (1.0 / epsilon).acosh();
    ClusterSqueezing {
        source: SqueezingValue::from_nats(r0),
        cluster,
        epsilon,
    }
}

/// Cat amplitude corrected to zero squeezing (squeezing orientation fixed at zero).
pub fn corrected_amplitude(alpha: f64, r_prime: f64) -> f64 {
    alpha * (r_prime.cosh() + r_prime.sinh())
}
